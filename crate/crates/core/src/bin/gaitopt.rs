fn main() {
    std::process::exit(gaitopt::cli::run(std::env::args_os()));
}
