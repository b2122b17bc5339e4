fn main() {
    std::process::exit(reliefseg::cli::run(std::env::args_os()));
}
