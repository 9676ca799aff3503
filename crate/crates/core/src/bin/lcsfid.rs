fn main() {
    std::process::exit(lcsfid::cli::main_with_args(std::env::args_os()));
}
