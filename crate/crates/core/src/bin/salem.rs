fn main() {
    std::process::exit(salem_core::cli::run(std::env::args_os()));
}
