fn main() {
    std::process::exit(fiiss_cli::main_with_args(std::env::args_os()));
}
