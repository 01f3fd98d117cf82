fn main() {
    std::process::exit(rbnoise::cli::run(std::env::args_os()));
}
