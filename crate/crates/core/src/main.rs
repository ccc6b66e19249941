fn main() {
    std::process::exit(chaoscomm::cli::run(std::env::args_os()));
}
