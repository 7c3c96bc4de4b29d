fn main() -> std::process::ExitCode {
    superpix::cli::main_with_args(std::env::args_os())
}
