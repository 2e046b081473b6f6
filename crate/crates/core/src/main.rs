use std::process::ExitCode;

fn main() -> ExitCode {
    cellcoop::cli::main()
}
