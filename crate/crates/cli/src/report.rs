//! Report artifact written by every subcommand.

use std::fs;
use std::io::Write;
use std::path::Path;

use seqnorm::verify::InvariantResult;
use seqnorm::{BoundDirection, Witnessed};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub name: String,
    pub value: f64,
    pub bound_direction: BoundDirection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    pub converged: bool,
    pub elapsed_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violations: Option<usize>,
}

impl ReportEntry {
    pub fn from_witnessed<W: Serialize>(
        name: impl Into<String>,
        w: &Witnessed<W>,
        elapsed_ms: u64,
    ) -> Self {
        Self {
            name: name.into(),
            value: w.value,
            bound_direction: w.bound_direction,
            witness: w
                .witness
                .as_ref()
                .and_then(|x| serde_json::to_value(x).ok()),
            converged: w.converged,
            elapsed_ms,
            trials: None,
            violations: None,
        }
    }

    pub fn exact(name: impl Into<String>, value: f64, elapsed_ms: u64) -> Self {
        Self::from_witnessed::<()>(name, &Witnessed::exact(value), elapsed_ms)
    }

    pub fn from_invariant(r: &InvariantResult) -> Self {
        Self {
            name: r.name.clone(),
            value: r.worst_excess,
            bound_direction: BoundDirection::Invariant,
            witness: None,
            converged: r.passed(),
            elapsed_ms: r.elapsed_ms,
            trials: Some(r.trials),
            violations: Some(r.violations),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub config: Value,
    pub results: Vec<ReportEntry>,
}

impl Report {
    pub fn new(config: Value, results: Vec<ReportEntry>) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            results,
        }
    }

    pub fn violations(&self) -> usize {
        self.results.iter().filter_map(|r| r.violations).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// One row per result; witnesses are dropped.
    pub fn to_csv(&self) -> String {
        let mut out = csv::Writer::from_writer(Vec::new());
        out.write_record([
            "name",
            "value",
            "bound_direction",
            "converged",
            "elapsed_ms",
            "trials",
            "violations",
        ])
        .expect("in-memory write");
        for r in &self.results {
            let direction = serde_json::to_value(r.bound_direction).expect("enum serialises");
            let opt = |v: Option<usize>| v.map(|n| n.to_string()).unwrap_or_default();
            out.write_record([
                r.name.clone(),
                r.value.to_string(),
                direction.as_str().unwrap_or_default().to_string(),
                r.converged.to_string(),
                r.elapsed_ms.to_string(),
                opt(r.trials),
                opt(r.violations),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(out.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }

    pub fn write(&self, path: &Path, format: Format) -> std::io::Result<()> {
        let mut file = fs::File::create(path)?;
        file.write_all(self.render(format).as_bytes())?;
        file.write_all(b"\n")
    }
}

/// The report as JSON with every `elapsed_ms` removed.
pub fn without_timing(report: &Report) -> Value {
    let mut value = serde_json::to_value(report).expect("report serialises");
    if let Some(results) = value.get_mut("results").and_then(Value::as_array_mut) {
        for r in results {
            if let Some(obj) = r.as_object_mut() {
                obj.remove("elapsed_ms");
            }
        }
    }
    value
}
