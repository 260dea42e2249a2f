fn main() {
    std::process::exit(sa_core::cli::dispatch(std::env::args_os()));
}
