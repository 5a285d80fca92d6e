fn main() {
    std::process::exit(pfrad::cli::run(std::env::args_os()));
}
