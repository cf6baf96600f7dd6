fn main() {
    std::process::exit(groupke::cli::run());
}
