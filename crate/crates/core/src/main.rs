fn main() {
    std::process::exit(rentgap::cli::run(std::env::args_os()));
}
