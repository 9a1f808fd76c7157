fn main() {
    std::process::exit(pradial_core::cli::run(std::env::args_os()));
}
