//! Flat key-value run configuration.
//!
//! A config file is a list of `key = value` lines (with `#` comments).
//! Coefficient fields are expressions in the grammar of [`crate::expr`];
//! singular points are declared per field as `<name>_singular = x,y`. Every
//! config parses to a canonical text form that round-trips byte for byte, so
//! experiment manifests diff cleanly.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fields::{CoefficientSet, MatrixField, ScalarField, VectorField};
use crate::mesh::Rect;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Diffusion entries `a11, a12, a21, a22` as expressions.
    pub a: [String; 4],
    /// Drift components `b1, b2`.
    pub b: [String; 2],
    pub b_singular: Option<[f64; 2]>,
    /// Reaction coefficient `c`.
    pub c: String,
    pub c_singular: Option<[f64; 2]>,
    /// Scalar source `f`.
    pub f: String,
    pub f_singular: Option<[f64; 2]>,
    /// Flux source components `flux1, flux2`.
    pub flux: [String; 2],
    pub alpha: f64,
    pub lambda: f64,
    pub upper_bound: f64,
    pub two_star: f64,
    pub q: f64,
    /// Domain rectangle `x0,y0,x1,y1`.
    pub domain: [f64; 4],
    /// Subdivisions per side of the working mesh.
    pub mesh: usize,
    /// Mesh sizes for convergence studies.
    pub levels: Vec<usize>,
    /// Lebesgue exponents for the contraction checks (`inf` allowed).
    pub r_list: Vec<f64>,
    pub seed: u64,
    pub slack: f64,
    /// Target for trend checks (stability decay, strong continuity).
    pub threshold: f64,
    /// Mollification base radius for the stability schedule.
    pub stability_delta: f64,
    /// Schedule length for the stability sweep.
    pub stability_n: usize,
    /// Range tolerance override for sub-Markov checks; `auto` picks by tier.
    pub submarkov_tol: Option<f64>,
    /// Worker threads (0 = library default).
    pub jobs: usize,
    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            a: ["1".into(), "0".into(), "0".into(), "1".into()],
            b: ["0".into(), "0".into()],
            b_singular: None,
            c: "0".into(),
            c_singular: None,
            f: "1".into(),
            f_singular: None,
            flux: ["0".into(), "0".into()],
            alpha: 1.0,
            lambda: 1.0,
            upper_bound: 1.0,
            two_star: 1.5,
            q: 2.0,
            domain: [0.0, 0.0, 1.0, 1.0],
            mesh: 128,
            levels: vec![16, 32, 64],
            r_list: vec![1.0, 2.0, f64::INFINITY],
            seed: 1,
            slack: 0.02,
            threshold: 1e-3,
            stability_delta: 0.4,
            stability_n: 16,
            submarkov_tol: None,
            jobs: 0,
            out_dir: "out".into(),
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse()
        .map_err(|_| Error::Config(format!("key {key:?}: expected a number, got {v:?}")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse()
        .map_err(|_| Error::Config(format!("key {key:?}: expected an integer, got {v:?}")))
}

fn parse_point(key: &str, v: &str) -> Result<[f64; 2]> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(Error::Config(format!("key {key:?}: expected x,y, got {v:?}")));
    }
    Ok([parse_f64(key, parts[0])?, parse_f64(key, parts[1])?])
}

fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v}")
    }
}

impl RunConfig {
    /// Parses config text; unknown keys are rejected.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected `key = value`, got {raw:?}",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if seen.insert(key.to_string(), lineno).is_some() {
                return Err(Error::Config(format!("duplicate key {key:?}")));
            }
            match key {
                "a11" => cfg.a[0] = value.into(),
                "a12" => cfg.a[1] = value.into(),
                "a21" => cfg.a[2] = value.into(),
                "a22" => cfg.a[3] = value.into(),
                "b1" => cfg.b[0] = value.into(),
                "b2" => cfg.b[1] = value.into(),
                "b_singular" => cfg.b_singular = Some(parse_point(key, value)?),
                "c" => cfg.c = value.into(),
                "c_singular" => cfg.c_singular = Some(parse_point(key, value)?),
                "f" => cfg.f = value.into(),
                "f_singular" => cfg.f_singular = Some(parse_point(key, value)?),
                "flux1" => cfg.flux[0] = value.into(),
                "flux2" => cfg.flux[1] = value.into(),
                "alpha" => cfg.alpha = parse_f64(key, value)?,
                "lambda" => cfg.lambda = parse_f64(key, value)?,
                "upper_bound" => cfg.upper_bound = parse_f64(key, value)?,
                "two_star" => cfg.two_star = parse_f64(key, value)?,
                "q" => cfg.q = parse_f64(key, value)?,
                "domain" => {
                    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                    if parts.len() != 4 {
                        return Err(Error::Config(format!(
                            "key \"domain\": expected x0,y0,x1,y1, got {value:?}"
                        )));
                    }
                    for (slot, part) in cfg.domain.iter_mut().zip(&parts) {
                        *slot = parse_f64(key, part)?;
                    }
                }
                "mesh" => cfg.mesh = parse_usize(key, value)?,
                "levels" => {
                    cfg.levels = value
                        .split(',')
                        .map(|s| parse_usize(key, s.trim()))
                        .collect::<Result<_>>()?;
                }
                "r_list" => {
                    cfg.r_list = value
                        .split(',')
                        .map(|s| {
                            let s = s.trim();
                            if s == "inf" {
                                Ok(f64::INFINITY)
                            } else {
                                parse_f64(key, s)
                            }
                        })
                        .collect::<Result<_>>()?;
                }
                "seed" => {
                    cfg.seed = value.parse().map_err(|_| {
                        Error::Config(format!("key \"seed\": expected an integer, got {value:?}"))
                    })?;
                }
                "slack" => cfg.slack = parse_f64(key, value)?,
                "threshold" => cfg.threshold = parse_f64(key, value)?,
                "stability_delta" => cfg.stability_delta = parse_f64(key, value)?,
                "stability_n" => cfg.stability_n = parse_usize(key, value)?,
                "submarkov_tol" => {
                    cfg.submarkov_tol =
                        if value == "auto" { None } else { Some(parse_f64(key, value)?) };
                }
                "jobs" => cfg.jobs = parse_usize(key, value)?,
                "out_dir" => cfg.out_dir = value.into(),
                other => {
                    return Err(Error::Config(format!("unknown key {other:?}")));
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Admissibility checks with messages naming the violated condition.
    pub fn validate(&self) -> Result<()> {
        if self.q <= 1.0 {
            return Err(Error::Config(format!(
                "integrability exponent q = {} violates q > d/2 (d = 2)",
                self.q
            )));
        }
        if !(1.0 < self.two_star && self.two_star < 2.0) {
            return Err(Error::Config(format!(
                "lower exponent two_star = {} must lie in (1, 2) for d = 2",
                self.two_star
            )));
        }
        if self.q < self.two_star {
            return Err(Error::Config(format!(
                "integrability exponent q = {} violates q >= two_star = {}",
                self.q, self.two_star
            )));
        }
        if self.alpha < 0.0 {
            return Err(Error::Config(format!(
                "shift alpha = {} must be nonnegative",
                self.alpha
            )));
        }
        if self.lambda <= 0.0 {
            return Err(Error::Config(format!(
                "ellipticity constant lambda = {} must be positive",
                self.lambda
            )));
        }
        if self.mesh == 0 {
            return Err(Error::Config("mesh must have at least one subdivision".into()));
        }
        if !(self.domain[2] > self.domain[0] && self.domain[3] > self.domain[1]) {
            return Err(Error::Config(format!(
                "domain {:?} has non-positive side lengths",
                self.domain
            )));
        }
        if self.r_list.iter().any(|&r| r < 1.0) {
            return Err(Error::Config("contraction exponents must satisfy r >= 1".into()));
        }
        Ok(())
    }

    /// Canonical text form: sorted keys, normalized numbers, one space
    /// around `=`. Parsing the canonical form reproduces it byte for byte.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        let mut kv: Vec<(&str, String)> = vec![
            ("a11", self.a[0].clone()),
            ("a12", self.a[1].clone()),
            ("a21", self.a[2].clone()),
            ("a22", self.a[3].clone()),
            ("alpha", fmt_f64(self.alpha)),
            ("b1", self.b[0].clone()),
            ("b2", self.b[1].clone()),
            ("c", self.c.clone()),
            (
                "domain",
                self.domain.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(","),
            ),
            ("f", self.f.clone()),
            ("flux1", self.flux[0].clone()),
            ("flux2", self.flux[1].clone()),
            ("jobs", format!("{}", self.jobs)),
            ("lambda", fmt_f64(self.lambda)),
            (
                "levels",
                self.levels.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
            ),
            ("mesh", format!("{}", self.mesh)),
            ("out_dir", self.out_dir.clone()),
            ("q", fmt_f64(self.q)),
            (
                "r_list",
                self.r_list.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(","),
            ),
            ("seed", format!("{}", self.seed)),
            ("slack", fmt_f64(self.slack)),
            ("stability_delta", fmt_f64(self.stability_delta)),
            ("stability_n", format!("{}", self.stability_n)),
            (
                "submarkov_tol",
                self.submarkov_tol.map_or_else(|| "auto".into(), fmt_f64),
            ),
            ("threshold", fmt_f64(self.threshold)),
            ("two_star", fmt_f64(self.two_star)),
            ("upper_bound", fmt_f64(self.upper_bound)),
        ];
        if let Some(p) = self.b_singular {
            kv.push(("b_singular", format!("{},{}", fmt_f64(p[0]), fmt_f64(p[1]))));
        }
        if let Some(p) = self.c_singular {
            kv.push(("c_singular", format!("{},{}", fmt_f64(p[0]), fmt_f64(p[1]))));
        }
        if let Some(p) = self.f_singular {
            kv.push(("f_singular", format!("{},{}", fmt_f64(p[0]), fmt_f64(p[1]))));
        }
        kv.sort_by_key(|(k, _)| *k);
        for (k, v) in kv {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn rect(&self) -> Result<Rect> {
        Rect::new(self.domain[0], self.domain[1], self.domain[2], self.domain[3])
    }

    /// Builds the coefficient set described by the expressions.
    pub fn coefficient_set(&self) -> Result<CoefficientSet> {
        let diffusion =
            MatrixField::from_exprs([&self.a[0], &self.a[1], &self.a[2], &self.a[3]])?;
        let mut drift = VectorField::from_exprs(&self.b[0], &self.b[1])?;
        if let Some(p) = self.b_singular {
            drift = drift.with_singular_points(vec![p]);
        }
        let mut reaction = ScalarField::from_expr(&self.c)?;
        if let Some(p) = self.c_singular {
            reaction = reaction.with_singular_points(vec![p]);
        }
        let mut source = ScalarField::from_expr(&self.f)?;
        if let Some(p) = self.f_singular {
            source = source.with_singular_points(vec![p]);
        }
        let flux = VectorField::from_exprs(&self.flux[0], &self.flux[1])?;
        CoefficientSet::new(
            diffusion,
            drift,
            reaction,
            self.alpha,
            source,
            flux,
            self.lambda,
            self.upper_bound,
        )?
        .with_exponents(self.two_star, self.q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = RunConfig::default();
        let text = cfg.canonical();
        let parsed = RunConfig::parse(&text).unwrap();
        assert_eq!(parsed, cfg);
        assert_eq!(parsed.canonical(), text);
    }

    #[test]
    fn canonical_is_byte_stable() {
        let text = "mesh = 32\nalpha = 2.5\nf = sin(pi*x)*sin(pi*y)\nr_list = 1,inf\n";
        let cfg = RunConfig::parse(text).unwrap();
        let canon = cfg.canonical();
        let cfg2 = RunConfig::parse(&canon).unwrap();
        assert_eq!(cfg2.canonical(), canon);
        assert_eq!(cfg2, cfg);
        assert!(canon.contains("r_list = 1,inf\n"));
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(matches!(RunConfig::parse("bogus = 1\n"), Err(Error::Config(_))));
        assert!(matches!(
            RunConfig::parse("mesh = 8\nmesh = 16\n"),
            Err(Error::Config(_))
        ));
        assert!(matches!(RunConfig::parse("mesh 16\n"), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_inadmissible_exponents() {
        let err = RunConfig::parse("q = 0.8\n").unwrap_err();
        assert!(err.to_string().contains("q > d/2"), "{err}");
        let err = RunConfig::parse("two_star = 2.5\n").unwrap_err();
        assert!(err.to_string().contains("(1, 2)"), "{err}");
        let err = RunConfig::parse("two_star = 1.9\nq = 1.7\n").unwrap_err();
        assert!(err.to_string().contains("q >= two_star"), "{err}");
    }

    #[test]
    fn builds_coefficients_with_singular_declarations() {
        let text = "b1 = -x / norm(x, y)^1.5\nb2 = -y / norm(x, y)^1.5\nb_singular = 0,0\n";
        let cfg = RunConfig::parse(text).unwrap();
        let coeffs = cfg.coefficient_set().unwrap();
        assert_eq!(coeffs.drift.singular_points(), &[[0.0, 0.0]]);
        assert_eq!(coeffs.alpha, 1.0);
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = "# a comment\n\nmesh = 12\n  # indented comment\nseed = 7\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.mesh, 12);
        assert_eq!(cfg.seed, 7);
    }
}
