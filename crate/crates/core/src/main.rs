fn main() {
    std::process::exit(deltastencil::cli::run_cli(std::env::args_os()));
}
