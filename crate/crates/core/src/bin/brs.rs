fn main() {
    std::process::exit(brs_core::cli::run(std::env::args()));
}
