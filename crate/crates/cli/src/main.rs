fn main() {
    std::process::exit(hetbo_cli::run(std::env::args_os()));
}
