fn main() {
    std::process::exit(slowman::cli::run());
}
