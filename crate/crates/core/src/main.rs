fn main() {
    std::process::exit(shifts::cli::run(std::env::args_os()));
}
