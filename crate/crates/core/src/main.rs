fn main() {
    std::process::exit(sobolev::cli::run());
}
