use std::process::ExitCode;

fn main() -> ExitCode {
    let mut stderr = std::io::stderr();
    if let Err(e) =
        ppt_workbench::configure_threads(std::env::var("WORKBENCH_THREADS").ok().as_deref())
    {
        eprintln!("error: {e}");
        return ExitCode::from(ppt_workbench::EXIT_USAGE as u8);
    }
    let code = ppt_workbench::run(
        std::env::args_os(),
        &mut std::io::stdout().lock(),
        &mut stderr,
    );
    ExitCode::from(code as u8)
}
