fn main() {
    std::process::exit(cal::cli::run(std::env::args_os()));
}
