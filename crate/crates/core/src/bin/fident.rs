fn main() -> std::process::ExitCode {
    fident::cli::main_with_args(std::env::args_os())
}
