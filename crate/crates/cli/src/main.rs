use std::process::ExitCode;

use clap::Parser;
use fovnet_cli::commands::{run, worker_count, Cli};
use fovnet_cli::EXIT_INPUT;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string();
            let msg = first.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("error: BadArgument: {msg}");
            return ExitCode::from(EXIT_INPUT as u8);
        }
    };
    let env = std::env::var("FOVNET_THREADS").ok();
    if let Some(n) = worker_count(cli.workers, env.as_deref()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut stdout = std::io::stdout().lock();
    match run(cli, &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.one_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
