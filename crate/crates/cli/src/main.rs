fn main() {
    std::process::exit(overcon_cli::run(std::env::args_os()));
}
