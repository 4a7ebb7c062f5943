//! Tiny expression grammar for coefficient fields in config files.
//!
//! Grammar over the variables `x`, `y`:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := factor (('*' | '/') factor)*
//! factor  := unary ('^' factor)?          // right associative
//! unary   := '-' unary | primary
//! primary := number | 'x' | 'y' | 'pi' | fn '(' expr (',' expr)* ')' | '(' expr ')'
//! fn      := sin | cos | exp | sqrt | norm
//! ```
//!
//! `norm(e1, e2)` is the Euclidean norm `sqrt(e1^2 + e2^2)`, so the distance
//! to a center `(cx, cy)` is written `norm(x - cx, y - cy)`.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Y,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Sqrt(Box<Expr>),
    Norm(Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Parses `src`; errors carry the offending token.
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0, src };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expr(format!(
                "trailing input after expression in {src:?}"
            )));
        }
        Ok(e)
    }

    /// Evaluates at `(x, y)`. Non-finite results are the caller's concern;
    /// fields turn them into evaluation errors with a location attached.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::X => x,
            Expr::Y => y,
            Expr::Add(a, b) => a.eval(x, y) + b.eval(x, y),
            Expr::Sub(a, b) => a.eval(x, y) - b.eval(x, y),
            Expr::Mul(a, b) => a.eval(x, y) * b.eval(x, y),
            Expr::Div(a, b) => a.eval(x, y) / b.eval(x, y),
            Expr::Pow(a, b) => a.eval(x, y).powf(b.eval(x, y)),
            Expr::Neg(a) => -a.eval(x, y),
            Expr::Sin(a) => a.eval(x, y).sin(),
            Expr::Cos(a) => a.eval(x, y).cos(),
            Expr::Exp(a) => a.eval(x, y).exp(),
            Expr::Sqrt(a) => a.eval(x, y).sqrt(),
            Expr::Norm(a, b) => {
                let (u, v) = (a.eval(x, y), b.eval(x, y));
                (u * u + v * v).sqrt()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                tokens.push(Token::Plus);
                i += 1;
            }
            '-' => {
                tokens.push(Token::Minus);
                i += 1;
            }
            '*' => {
                tokens.push(Token::Star);
                i += 1;
            }
            '/' => {
                tokens.push(Token::Slash);
                i += 1;
            }
            '^' => {
                tokens.push(Token::Caret);
                i += 1;
            }
            '(' => {
                tokens.push(Token::LParen);
                i += 1;
            }
            ')' => {
                tokens.push(Token::RParen);
                i += 1;
            }
            ',' => {
                tokens.push(Token::Comma);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_digit() || d == '.' {
                        i += 1;
                    } else if (d == 'e' || d == 'E')
                        && i + 1 < bytes.len()
                        && (bytes[i + 1].is_ascii_digit()
                            || ((bytes[i + 1] == b'+' || bytes[i + 1] == b'-')
                                && i + 2 < bytes.len()
                                && bytes[i + 2].is_ascii_digit()))
                    {
                        i += 2; // consume 'e' and sign or first digit
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                        break;
                    } else {
                        break;
                    }
                }
                let text = &src[start..i];
                let v: f64 = text
                    .parse()
                    .map_err(|_| Error::Expr(format!("bad number {text:?} in {src:?}")))?;
                tokens.push(Token::Num(v));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                tokens.push(Token::Ident(src[start..i].to_string()));
            }
            other => {
                return Err(Error::Expr(format!(
                    "unexpected character {other:?} in {src:?}"
                )))
            }
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    src: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: &Token) -> Result<()> {
        match self.bump() {
            Some(ref got) if got == t => Ok(()),
            got => Err(Error::Expr(format!(
                "expected {t:?}, found {got:?} in {:?}",
                self.src
            ))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Token::Minus) => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(Token::Slash) => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        // Unary minus binds looser than '^', so -x^2 parses as -(x^2).
        if matches!(self.peek(), Some(Token::Minus)) {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.primary()?;
        if matches!(self.peek(), Some(Token::Caret)) {
            self.bump();
            let exp = self.factor()?; // right associative
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.bump() {
            Some(Token::Num(v)) => Ok(Expr::Num(v)),
            Some(Token::LParen) => {
                let e = self.expr()?;
                self.expect(&Token::RParen)?;
                Ok(e)
            }
            Some(Token::Ident(name)) => match name.as_str() {
                "x" => Ok(Expr::X),
                "y" => Ok(Expr::Y),
                "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                "sin" | "cos" | "exp" | "sqrt" => {
                    self.expect(&Token::LParen)?;
                    let arg = self.expr()?;
                    self.expect(&Token::RParen)?;
                    Ok(match name.as_str() {
                        "sin" => Expr::Sin(Box::new(arg)),
                        "cos" => Expr::Cos(Box::new(arg)),
                        "exp" => Expr::Exp(Box::new(arg)),
                        _ => Expr::Sqrt(Box::new(arg)),
                    })
                }
                "norm" => {
                    self.expect(&Token::LParen)?;
                    let a = self.expr()?;
                    self.expect(&Token::Comma)?;
                    let b = self.expr()?;
                    self.expect(&Token::RParen)?;
                    Ok(Expr::Norm(Box::new(a), Box::new(b)))
                }
                other => Err(Error::Expr(format!(
                    "unknown identifier {other:?} in {:?}",
                    self.src
                ))),
            },
            got => Err(Error::Expr(format!(
                "unexpected token {got:?} in {:?}",
                self.src
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn arithmetic_and_precedence() {
        let e = Expr::parse("1 + 2 * 3 - 4 / 2").unwrap();
        assert_relative_eq!(e.eval(0.0, 0.0), 5.0);
        let e = Expr::parse("2 ^ 3 ^ 2").unwrap(); // right associative
        assert_relative_eq!(e.eval(0.0, 0.0), 512.0);
        let e = Expr::parse("-x^2").unwrap();
        assert_relative_eq!(e.eval(3.0, 0.0), -9.0);
    }

    #[test]
    fn functions_and_variables() {
        let e = Expr::parse("sin(pi*x)*sin(pi*y)").unwrap();
        assert_relative_eq!(e.eval(0.5, 0.5), 1.0, max_relative = 1e-15);
        let e = Expr::parse("norm(x - 0.5, y - 0.5)").unwrap();
        assert_relative_eq!(e.eval(1.0, 0.5), 0.5, max_relative = 1e-15);
        let e = Expr::parse("exp(-norm(x,y)^2)").unwrap();
        assert_relative_eq!(e.eval(1.0, 0.0), (-1.0_f64).exp(), max_relative = 1e-15);
        let e = Expr::parse("sqrt(x) / y").unwrap();
        assert_relative_eq!(e.eval(4.0, 2.0), 1.0);
    }

    #[test]
    fn scientific_numbers() {
        let e = Expr::parse("1.5e-3 + 2E2").unwrap();
        assert_relative_eq!(e.eval(0.0, 0.0), 200.0015);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Expr::parse("x +").is_err());
        assert!(Expr::parse("foo(x)").is_err());
        assert!(Expr::parse("x ) y").is_err());
        assert!(Expr::parse("norm(x)").is_err());
        assert!(Expr::parse("1..2").is_err());
    }

    #[test]
    fn singular_expression_evaluates_to_non_finite() {
        let e = Expr::parse("1 / norm(x, y)").unwrap();
        assert!(!e.eval(0.0, 0.0).is_finite());
        assert!(e.eval(0.5, 0.0).is_finite());
    }
}
