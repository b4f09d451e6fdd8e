fn main() {
    std::process::exit(forge_core::cli::main_with_args(std::env::args_os().collect()));
}
