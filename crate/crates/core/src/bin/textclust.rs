fn main() {
    std::process::exit(textclust::cli::run(std::env::args_os()));
}
