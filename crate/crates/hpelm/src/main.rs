fn main() {
    std::process::exit(hpelm::cli::run(std::env::args_os()));
}
