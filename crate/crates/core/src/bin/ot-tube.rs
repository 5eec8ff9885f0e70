fn main() {
    std::process::exit(ot_tube::cli::run(std::env::args_os()));
}
