fn main() {
    std::process::exit(skewkurt::cli::run(std::env::args_os()));
}
