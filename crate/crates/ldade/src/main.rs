fn main() {
    std::process::exit(ldade::cli::run());
}
