fn main() {
    std::process::exit(brw::cli::run(std::env::args_os()));
}
