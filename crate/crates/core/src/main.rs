fn main() {
    std::process::exit(blockade::cli::dispatch(std::env::args_os()));
}
