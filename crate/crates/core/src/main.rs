fn main() {
    std::process::exit(floorcheck::cli::run(std::env::args_os()));
}
