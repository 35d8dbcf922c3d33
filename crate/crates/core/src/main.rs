fn main() {
    std::process::exit(fraclat::cli::run(std::env::args_os()));
}
