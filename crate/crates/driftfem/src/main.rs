fn main() {
    std::process::exit(driftfem::cli::run(std::env::args_os()));
}
