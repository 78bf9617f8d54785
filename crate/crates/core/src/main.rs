fn main() {
    std::process::exit(overdet::cli::run(std::env::args_os()));
}
