//! Report files. JSON and CSV bytes depend only on (config, seeds); wall-clock
//! times go to the manifest alone.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde_json::{json, Value};

use crate::config::Format;
use crate::exec::{csv_columns, num, Entry};

pub const VERSION_HASH: &str = env!("GIBBSLAB_SOURCE_HASH");

pub struct ExperimentReport {
    pub name: String,
    pub kind: &'static str,
    pub entries: Vec<Entry>,
}

impl ExperimentReport {
    pub fn violated(&self) -> bool {
        self.entries.iter().any(|e| e.violated)
    }

    pub fn to_json(&self, config: &Value, seeds: &[u64]) -> Value {
        let entries: Vec<Value> = self
            .entries
            .iter()
            .map(|e| json!({"seed": e.seed, "beta": e.beta, "violated": e.violated, "result": e.result}))
            .collect();
        json!({
            "name": self.name,
            "kind": self.kind,
            "version": VERSION_HASH,
            "package_version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "seeds": seeds,
            "violated": self.violated(),
            "entries": entries,
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w =
            csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
        let mut header = vec!["seed", "beta"];
        header.extend_from_slice(csv_columns(self.kind));
        w.write_record(&header)?;
        for e in &self.entries {
            let beta = e.beta.map(num).unwrap_or_default();
            for row in &e.rows {
                let mut rec = vec![e.seed.to_string(), beta.clone()];
                rec.extend(row.iter().cloned());
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Writes every report and the manifest; returns the manifest path.
pub fn write_all(
    dir: &Path,
    format: Format,
    reports: &[ExperimentReport],
    config: &Value,
    seeds: &[u64],
    command: &str,
    started: f64,
) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut listed = Vec::new();
    for r in reports {
        let mut files = Vec::new();
        if matches!(format, Format::Json | Format::Both) {
            let f = format!("{}.json", r.name);
            let mut text = serde_json::to_string_pretty(&r.to_json(config, seeds))?;
            text.push('\n');
            fs::write(dir.join(&f), text).with_context(|| format!("writing {f}"))?;
            files.push(f);
        }
        if matches!(format, Format::Csv | Format::Both) {
            let f = format!("{}.csv", r.name);
            r.write_csv(&dir.join(&f))?;
            files.push(f);
        }
        listed.push(
            json!({"name": r.name, "kind": r.kind, "files": files, "violated": r.violated()}),
        );
    }
    let manifest = json!({
        "command": command,
        "version": VERSION_HASH,
        "started_unix": started,
        "finished_unix": unix_now(),
        "reports": listed,
    });
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join("manifest.json"), text)?;
    Ok(())
}
