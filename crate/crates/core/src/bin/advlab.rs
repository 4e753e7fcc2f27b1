fn main() {
    std::process::exit(advdiff_lab::cli::run());
}
