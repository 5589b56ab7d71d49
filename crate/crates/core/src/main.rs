fn main() {
    std::process::exit(bilateral::cli::run(std::env::args_os()));
}
