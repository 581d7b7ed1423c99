fn main() -> std::process::ExitCode {
    stepsim_cli::main_with_args(std::env::args_os())
}
