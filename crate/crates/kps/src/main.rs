fn main() {
    std::process::exit(kps::cli::run());
}
