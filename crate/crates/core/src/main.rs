fn main() {
    std::process::exit(maslovflow::cli::run(std::env::args_os()));
}
