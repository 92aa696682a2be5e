fn main() {
    std::process::exit(xmlbench::cli::cli_dispatch(std::env::args_os()));
}
