fn main() -> std::process::ExitCode {
    lqrpg::cli::main()
}
