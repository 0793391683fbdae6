use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let result = fractopo_cli::run(std::env::args_os());
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    let _ = lock.write_all(result.report.as_bytes());
    if let Some(p) = &result.porcelain {
        let _ = lock.write_all(p.as_bytes());
    }
    ExitCode::from(result.exit_code as u8)
}
