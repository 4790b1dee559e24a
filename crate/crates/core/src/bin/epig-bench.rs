fn main() {
    std::process::exit(epig::cli::cli_main(std::env::args_os()));
}
