fn main() -> std::process::ExitCode {
    yamabe_lab::cli::main()
}
