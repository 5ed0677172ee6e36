//! Analysis configuration: TOML sections `[model]`, `[task]`, `[[subsystem]]`
//! and `[output]`, with `section.key=value` overrides applied before parsing.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Scan,
    Analyze,
    Dissipate,
    Gain,
    Compose,
    Simulate,
    Verify,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Task::Scan => "scan",
            Task::Analyze => "analyze",
            Task::Dissipate => "dissipate",
            Task::Gain => "gain",
            Task::Compose => "compose",
            Task::Simulate => "simulate",
            Task::Verify => "verify",
        };
        f.write_str(s)
    }
}

/// Values used whenever a config leaves a parameter unset.
#[derive(Debug, Clone, Serialize)]
pub struct Defaults {
    pub epsilon: f64,
    pub dt: f64,
    pub norm_bound: f64,
    pub sdp_residual_tol: f64,
    pub gain_tol: f64,
    pub gamma_bracket: [f64; 2],
    pub t_end: f64,
    pub tail_fraction: f64,
    pub verify_tol: f64,
    pub decay_rel_tol: f64,
    pub cone_tol: f64,
}

pub const DEFAULTS: Defaults = Defaults {
    epsilon: 0.01,
    dt: domcert_core::models::DEFAULT_DT,
    norm_bound: domcert_core::sdp::DEFAULT_NORM_BOUND,
    sdp_residual_tol: 1e-7,
    gain_tol: domcert_core::dissipativity::DEFAULT_GAIN_TOL,
    gamma_bracket: [0.01, 10.0],
    t_end: 100.0,
    tail_fraction: 0.5,
    verify_tol: 1e-6,
    decay_rel_tol: domcert_core::models::DECAY_REL_TOL,
    cone_tol: domcert_core::models::CONE_TOL,
};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub task: TaskParams,
    #[serde(default, rename = "subsystem")]
    pub subsystems: Vec<SubsystemSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Either a builtin model (`name` + `params`) or explicit state matrices.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// Row-major state matrices, one per vertex.
    pub vertices: Option<Vec<Vec<Vec<f64>>>>,
    pub b: Option<Vec<Vec<f64>>>,
    pub c: Option<Vec<Vec<f64>>>,
    pub d: Option<Vec<Vec<f64>>>,
    pub samples: Option<SampleGrid>,
}

/// Uniform grid along one state coordinate, for Jacobian sampling.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleGrid {
    pub coordinate: usize,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub base: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl RateGrid {
    pub fn points(&self) -> anyhow::Result<Vec<f64>> {
        if !(self.step > 0.0) || !(self.hi >= self.lo) || !self.lo.is_finite() || !self.hi.is_finite() {
            bail!("task.lambda_grid: need finite lo <= hi and step > 0");
        }
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        Ok((0..=count).map(|k| self.lo + k as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SupplyKind {
    Passivity,
    Gain,
    Zero,
    Custom,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupplySpec {
    pub kind: SupplyKind,
    pub gamma: Option<f64>,
    /// Positive multiplier applied to the whole supply.
    pub tau: Option<f64>,
    pub q: Option<Vec<Vec<f64>>>,
    pub l: Option<Vec<Vec<f64>>>,
    pub r: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    UnitTrace,
    NormBound,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskParams {
    pub lambda: Option<f64>,
    pub lambda_grid: Option<RateGrid>,
    pub epsilon: Option<f64>,
    pub p: Option<usize>,
    pub norm_bound: Option<f64>,
    pub supply: Option<SupplySpec>,
    pub gamma_bracket: Option<[f64; 2]>,
    pub gain_tol: Option<f64>,
    pub normalization: Option<Normalization>,
    pub h: Option<Vec<Vec<f64>>>,
    pub x0: Option<Vec<f64>>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub tail_fraction: Option<f64>,
    /// Report whose certificates are re-verified.
    pub report: Option<String>,
    /// Single certificate record checked against `[model]`.
    pub certificate: Option<String>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsystemSpec {
    pub model: ModelSpec,
    pub supply: Option<SupplySpec>,
    pub p: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub report: Option<String>,
    pub dir: Option<String>,
    pub trajectory: Option<String>,
    pub plotdata: Option<bool>,
}

/// Effective configuration: the text echoed in reports and the typed view parsed from it.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub text: String,
    pub config: AnalysisConfig,
}

impl LoadedConfig {
    /// Resolves a path given inside the config relative to the config's directory.
    pub fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.path.parent().unwrap_or(Path::new(".")).join(p)
        }
    }

    pub fn stem(&self) -> String {
        self.path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "domcert".into())
    }
}

fn parse_override_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Applies one `section.key=value` override; the value is read as a TOML
/// literal and falls back to a plain string.
pub fn apply_override(root: &mut toml::Table, spec: &str) -> anyhow::Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| anyhow!("override `{spec}` is not of the form section.key=value"))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.len() < 2 || parts.iter().any(|p| p.is_empty()) {
        bail!("override key `{key}` must be section.key");
    }
    let mut table = root;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| anyhow!("override `{key}`: `{part}` is not a table"))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), parse_override_value(raw.trim()));
    Ok(())
}

/// Parses a config string after overrides, reporting schema errors with their field path.
pub fn parse_effective(text: &str, overrides: &[String]) -> anyhow::Result<(String, AnalysisConfig)> {
    let mut root: toml::Table = toml::from_str(text).context("config is not valid TOML")?;
    for o in overrides {
        apply_override(&mut root, o)?;
    }
    let effective = toml::to_string(&root).context("serializing effective config")?;
    let de = toml::Deserializer::parse(&effective).context("re-reading effective config")?;
    let config: AnalysisConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        anyhow!("config field `{path}`: {}", e.into_inner())
    })?;
    Ok((effective, config))
}

pub fn load(path: &Path, overrides: &[String]) -> anyhow::Result<LoadedConfig> {
    let raw = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let (text, config) = parse_effective(&raw, overrides)?;
    Ok(LoadedConfig {
        path: path.to_path_buf(),
        text,
        config,
    })
}
