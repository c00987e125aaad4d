fn main() {
    std::process::exit(partpose::cli::cli_dispatch(std::env::args_os()));
}
