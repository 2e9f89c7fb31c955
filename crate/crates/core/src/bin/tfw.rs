fn main() {
    tfw_core::cli::init_logging();
    std::process::exit(tfw_core::cli::run(std::env::args_os()));
}
