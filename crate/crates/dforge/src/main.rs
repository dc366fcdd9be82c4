fn main() {
    std::process::exit(dforge::cli::run(std::env::args_os()));
}
