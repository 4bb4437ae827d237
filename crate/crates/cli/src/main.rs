fn main() {
    std::process::exit(qdarwin_cli::parse_and_dispatch(std::env::args_os()));
}
