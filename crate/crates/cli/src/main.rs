fn main() {
    std::process::exit(discloc_cli::run(std::env::args_os()));
}
