fn main() {
    std::process::exit(mtp_core::cli::run_cli(std::env::args_os()));
}
