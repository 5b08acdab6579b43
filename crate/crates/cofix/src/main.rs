fn main() {
    std::process::exit(cofix::cli::dispatch(std::env::args_os()));
}
