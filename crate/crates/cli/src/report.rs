use std::io::Write;
use std::path::Path;

use domcert_core::dominance::CertificateRecord;
use serde::{Deserialize, Serialize};

use crate::config::{Defaults, DEFAULTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Infeasible,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Infeasible => 2,
            Status::Error => 1,
        }
    }
}

/// Matrices a certificate was checked against. `b`, `c`, `d` are present
/// for dissipativity certificates (one entry per vertex).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FamilyRecord {
    pub a: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateKind {
    Dominance,
    Dissipativity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub role: String,
    pub kind: CertificateKind,
    pub certificate: CertificateRecord,
    pub family: FamilyRecord,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub lo: f64,
    pub hi: f64,
    pub p: usize,
    pub resolution: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub load_ms: f64,
    pub task_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub task: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    /// Effective configuration text after overrides.
    pub config: Option<String>,
    pub overrides: Vec<String>,
    pub defaults: Defaults,
    pub certificates: Vec<CertificateEntry>,
    pub intervals: Vec<IntervalRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attractor: Option<serde_json::Value>,
    pub details: serde_json::Map<String, serde_json::Value>,
    pub artifacts: Vec<String>,
    pub timings: Timings,
}

impl Report {
    pub fn new(task: &str, overrides: &[String]) -> Self {
        Self {
            task: task.into(),
            status: Status::Ok,
            message: None,
            config: None,
            overrides: overrides.to_vec(),
            defaults: DEFAULTS,
            certificates: Vec::new(),
            intervals: Vec::new(),
            attractor: None,
            details: serde_json::Map::new(),
            artifacts: Vec::new(),
            timings: Timings::default(),
        }
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.details.insert(key.into(), v);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Writes `contents` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_status() {
        assert_eq!(Status::Ok.exit_code(), 0);
        assert_eq!(Status::Infeasible.exit_code(), 2);
        assert_eq!(Status::Error.exit_code(), 1);
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("r.json");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        let names: Vec<_> = std::fs::read_dir(path.parent().unwrap()).unwrap().collect();
        assert_eq!(names.len(), 1);
    }

    #[test]
    fn report_status_serializes_lowercase() {
        let mut r = Report::new("analyze", &[]);
        r.status = Status::Infeasible;
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["status"], "infeasible");
        assert_eq!(v["defaults"]["epsilon"], 0.01);
    }
}
