fn main() {
    std::process::exit(gsprep::cli::main_with_args(std::env::args()));
}
