fn main() {
    std::process::exit(brequant::cli::run(std::env::args_os()));
}
