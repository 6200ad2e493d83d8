fn main() {
    std::process::exit(adkl::cli::main_with_args(std::env::args_os()));
}
