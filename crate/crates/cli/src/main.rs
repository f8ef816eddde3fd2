fn main() {
    std::process::exit(lambertw_cli::main_with_args(std::env::args_os()));
}
