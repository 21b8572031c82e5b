fn main() {
    std::process::exit(causalis_server::cli::run(std::env::args_os()));
}
