fn main() {
    std::process::exit(arpsim::cli::run())
}
