fn main() {
    std::process::exit(securecast::cli::run(std::env::args_os()));
}
