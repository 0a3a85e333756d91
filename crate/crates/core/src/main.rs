fn main() {
    std::process::exit(holomimo::cli::cli_main(std::env::args_os()));
}
