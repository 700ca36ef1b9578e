fn main() {
    std::process::exit(modlift::cli::main_with_args(std::env::args_os()));
}
