fn main() {
    std::process::exit(relu_nmd::cli::main_with_args(std::env::args_os()));
}
