//! Batch front end: load a config, run one task, emit a JSON report and
//! plot-ready CSV files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod plot;
pub mod report;
pub mod tasks;

use std::path::{Path, PathBuf};
use std::time::Instant;

use config::{LoadedConfig, Task};
use report::{write_atomic, Report, Status};
use tasks::{Ctx, Outcome};

#[derive(Debug, Clone)]
pub struct Invocation {
    pub task: Task,
    pub config: PathBuf,
    pub overrides: Vec<String>,
    pub out: Option<PathBuf>,
}

fn plot_base(inv: &Invocation, cfg: &LoadedConfig) -> Option<PathBuf> {
    if cfg.config.output.plotdata == Some(false) {
        return None;
    }
    let report_path = inv
        .out
        .clone()
        .or_else(|| cfg.config.output.report.as_ref().map(PathBuf::from));
    match (report_path, &cfg.config.output.dir) {
        (Some(p), _) => Some(p.with_extension("")),
        (None, Some(dir)) => Some(Path::new(dir).join(cfg.stem())),
        (None, None) => None,
    }
}

fn run_task(inv: &Invocation, cfg: &LoadedConfig, report: &mut Report) -> tasks::TaskResult {
    let mut ctx = Ctx {
        cfg,
        report,
        plot_base: plot_base(inv, cfg),
    };
    match inv.task {
        Task::Scan => tasks::scan(&mut ctx),
        Task::Analyze => tasks::analyze(&mut ctx),
        Task::Dissipate => tasks::dissipate(&mut ctx),
        Task::Gain => tasks::gain(&mut ctx),
        Task::Compose => tasks::compose(&mut ctx),
        Task::Simulate => tasks::simulate(&mut ctx),
        Task::Verify => tasks::verify(&mut ctx),
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Runs one invocation and returns its report; nothing is written.
pub fn execute(inv: &Invocation) -> (Report, Option<LoadedConfig>) {
    let start = Instant::now();
    let mut report = Report::new(&inv.task.to_string(), &inv.overrides);
    let cfg = match config::load(&inv.config, &inv.overrides) {
        Ok(c) => c,
        Err(e) => {
            report.status = Status::Error;
            report.message = Some(format!("{e:#}"));
            report.timings.total_ms = ms(start);
            return (report, None);
        }
    };
    report.config = Some(cfg.text.clone());
    report.timings.load_ms = ms(start);
    let task_start = Instant::now();
    match run_task(inv, &cfg, &mut report) {
        Ok(Outcome::Ok) => report.status = Status::Ok,
        Ok(Outcome::Infeasible(msg)) => {
            report.status = Status::Infeasible;
            report.message = Some(msg);
        }
        Err(e) => {
            report.status = Status::Error;
            report.message = Some(format!("{e:#}"));
        }
    }
    report.timings.task_ms = ms(task_start);
    report.timings.total_ms = ms(start);
    (report, Some(cfg))
}

/// Runs, writes the report to `--out`, `[output].report` or stdout, and
/// returns the process exit code.
pub fn run(inv: &Invocation) -> i32 {
    let (report, cfg) = execute(inv);
    let dest = inv.out.clone().or_else(|| {
        cfg.as_ref()
            .and_then(|c| c.config.output.report.as_ref().map(PathBuf::from))
    });
    let json = report.to_json();
    match dest {
        Some(path) => {
            if let Err(e) = write_atomic(&path, json.as_bytes()) {
                eprintln!("domcert: cannot write report {}: {e}", path.display());
                print!("{json}");
                return Status::Error.exit_code();
            }
        }
        None => print!("{json}"),
    }
    if let Some(msg) = &report.message {
        eprintln!("domcert {}: {:?}: {msg}", report.task, report.status);
    }
    report.status.exit_code()
}
