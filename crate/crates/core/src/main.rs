fn main() {
    std::process::exit(explab::cli::main_with_args(std::env::args_os()));
}
