fn main() -> std::process::ExitCode {
    chartloop::cli::main()
}
