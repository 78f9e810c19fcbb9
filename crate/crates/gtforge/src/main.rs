fn main() {
    std::process::exit(gtforge::cli::run(std::env::args_os()));
}
