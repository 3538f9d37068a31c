fn main() {
    std::process::exit(ccr_core::cli::main_with_args(std::env::args_os()));
}
