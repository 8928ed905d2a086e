fn main() {
    std::process::exit(afvm::cli::main_with_args(std::env::args_os()));
}
