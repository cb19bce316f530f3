fn main() {
    std::process::exit(miw_cli::run(std::env::args_os()));
}
