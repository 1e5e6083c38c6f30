fn main() {
    std::process::exit(bismut_cli::run(std::env::args_os()));
}
