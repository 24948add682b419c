fn main() {
    std::process::exit(wams::cli::run(std::env::args_os()));
}
