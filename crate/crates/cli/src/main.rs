use std::path::PathBuf;

use clap::Parser;
use domcert::config::Task;
use domcert::{run, Invocation};

/// Dominance and differential dissipativity certification.
#[derive(Debug, Parser)]
#[command(name = "domcert", version, about)]
struct Cli {
    /// Task to run.
    #[arg(value_enum)]
    task: Task,
    /// TOML config with [model], [task], [[subsystem]] and [output] sections.
    #[arg(long)]
    config: PathBuf,
    /// Override a config value, e.g. `--set task.lambda=2`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
    /// Write the JSON report here instead of stdout; plot data goes next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = run(&Invocation {
        task: cli.task,
        config: cli.config,
        overrides: cli.set,
        out: cli.out,
    });
    std::process::exit(code);
}
