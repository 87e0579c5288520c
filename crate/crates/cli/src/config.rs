//! Config files and parameter resolution: flags > environment > config > defaults.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::Failure;

pub const SUBCOMMANDS: [&str; 9] = [
    "bracket", "spectra", "scan", "ground", "zeeman", "evolve", "excite", "scatter", "verify",
];

#[derive(Debug, Default)]
pub struct FileConfig {
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    /// Parameter table for the running subcommand.
    pub table: Option<Value>,
}

/// Reads a TOML config, or a JSON manifest from an earlier run.
pub fn load(path: &Path, subcommand: &str) -> Result<FileConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::domain(format!("cannot read config {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        return load_manifest(&text, path, subcommand);
    }
    let table: toml::Table = toml::from_str(&text)
        .map_err(|e| Failure::domain(format!("config {}: {e}", path.display())))?;
    let mut cfg = FileConfig::default();
    for (key, value) in table {
        match key.as_str() {
            "threads" => {
                let n = value
                    .as_integer()
                    .filter(|n| *n >= 0)
                    .ok_or_else(|| Failure::domain("config key `threads` must be a nonnegative integer"))?;
                cfg.threads = Some(n as usize);
            }
            "out_dir" => {
                let s = value.as_str().ok_or_else(|| Failure::domain("config key `out_dir` must be a string"))?;
                cfg.out_dir = Some(PathBuf::from(s));
            }
            k if SUBCOMMANDS.contains(&k) => {
                if !value.is_table() {
                    return Err(Failure::domain(format!("config key `{k}` must be a table")));
                }
                if k == subcommand {
                    cfg.table = Some(serde_json::to_value(value).map_err(Failure::domain)?);
                }
            }
            other => {
                return Err(Failure::domain(format!(
                    "unknown config key `{other}`; expected `threads`, `out_dir` or a subcommand table ({})",
                    SUBCOMMANDS.join(", ")
                )))
            }
        }
    }
    Ok(cfg)
}

fn load_manifest(text: &str, path: &Path, subcommand: &str) -> Result<FileConfig, Failure> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| Failure::domain(format!("manifest {}: {e}", path.display())))?;
    let recorded = v.get("subcommand").and_then(Value::as_str).ok_or_else(|| {
        Failure::domain(format!(
            "manifest {} is missing the `subcommand` key",
            path.display()
        ))
    })?;
    if recorded != subcommand {
        return Err(Failure::domain(format!(
            "manifest {} was written by `{recorded}`, not `{subcommand}`",
            path.display()
        )));
    }
    let table = v.get("params").cloned().ok_or_else(|| {
        Failure::domain(format!(
            "manifest {} is missing the `params` key",
            path.display()
        ))
    })?;
    let threads = v.get("threads").and_then(Value::as_u64).map(|n| n as usize);
    Ok(FileConfig {
        threads,
        out_dir: None,
        table: Some(table),
    })
}

fn overlay(base: &mut Map<String, Value>, top: &Map<String, Value>) {
    for (k, v) in top {
        if !v.is_null() {
            base.insert(k.clone(), v.clone());
        }
    }
}

/// Defaults, then the config table, then any flags that were given.
pub fn resolve<A: Serialize, P: Serialize + DeserializeOwned + Default>(
    flags: &A,
    table: Option<&Value>,
) -> Result<P, Failure> {
    let Value::Object(mut merged) = serde_json::to_value(P::default()).map_err(Failure::domain)?
    else {
        unreachable!("parameter structs serialize to objects")
    };
    if let Some(t) = table {
        let obj = t
            .as_object()
            .ok_or_else(|| Failure::domain("subcommand config must be a table"))?;
        // keep explicit nulls from manifests meaning "unset"
        for (k, v) in obj {
            merged.insert(k.clone(), v.clone());
        }
    }
    if let Value::Object(f) = serde_json::to_value(flags).map_err(Failure::domain)? {
        overlay(&mut merged, &f);
    }
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| Failure::domain(format!("invalid parameters: {e}")))
}
