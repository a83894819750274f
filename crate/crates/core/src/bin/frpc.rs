fn main() -> std::process::ExitCode {
    frpc::cli::main_from(std::env::args_os())
}
