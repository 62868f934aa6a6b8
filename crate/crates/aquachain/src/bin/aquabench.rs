fn main() {
    std::process::exit(aquachain::cli::cli_main(std::env::args_os()));
}
