//! `nvol`: carve, bake, fit, render, animate, bench, serve and synth.

mod args;
mod commands;
mod report;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use report::CliError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut logger = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"));
    if cli.json_logs {
        logger.format(|buf, record| {
            use std::io::Write;
            writeln!(
                buf,
                "{}",
                serde_json::json!({"level": record.level().as_str(), "target": record.target(), "message": record.args().to_string()})
            )
        });
    }
    logger.init();

    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if cli.json_logs {
                eprintln!("{}", serde_json::json!({"error": {"category": e.category, "message": e.message}}));
            } else {
                eprintln!("error[{}]: {}", e.category, e.message);
            }
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::invalid("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::new(nvol::ErrorCategory::Io, format!("thread pool: {e}")))?;
    }
    let g = &cli.global();
    match &cli.command {
        Command::Carve(a) => commands::carve(g, a),
        Command::Bake(a) => commands::bake(g, a),
        Command::Fit(a) => commands::fit(g, a),
        Command::Render(a) => commands::render(g, a),
        Command::Animate(a) => commands::animate(g, a),
        Command::Bench(a) => commands::bench(g, a),
        Command::Serve(a) => commands::serve(g, a),
        Command::Synth(a) => commands::synth(g, a),
    }
}
