fn main() {
    std::process::exit(netecon::cli::run(std::env::args_os()));
}
