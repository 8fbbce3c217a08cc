fn main() {
    std::process::exit(wnpg::cli::run_from_args(std::env::args_os()));
}
