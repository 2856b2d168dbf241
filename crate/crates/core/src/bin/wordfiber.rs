fn main() {
    std::process::exit(wordfiber::cli::run(std::env::args_os()));
}
