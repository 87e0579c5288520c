//! Output files and run manifests.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::Failure;

/// One CSV field.
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

/// 17 significant digits, independent of locale.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct RunContext {
    pub name: &'static str,
    pub out_dir: PathBuf,
    pub threads: usize,
    outputs: Vec<String>,
}

fn io_fail(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::domain(format!("cannot write {}: {e}", path.display()))
}

impl RunContext {
    pub fn new(name: &'static str, out_dir: PathBuf, threads: usize) -> Result<Self, Failure> {
        std::fs::create_dir_all(&out_dir).map_err(|e| io_fail(&out_dir, e))?;
        Ok(RunContext {
            name,
            out_dir,
            threads,
            outputs: Vec::new(),
        })
    }

    fn create(&mut self, file: &str) -> Result<(PathBuf, BufWriter<File>), Failure> {
        let path = self.out_dir.join(file);
        let f = File::create(&path).map_err(|e| io_fail(&path, e))?;
        self.outputs.push(file.to_string());
        Ok((path, BufWriter::new(f)))
    }

    pub fn csv(
        &mut self,
        file: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = Vec<Cell>>,
    ) -> Result<(), Failure> {
        let (path, w) = self.create(file)?;
        let mut out = csv::Writer::from_writer(w);
        out.write_record(header).map_err(|e| io_fail(&path, e))?;
        for row in rows {
            let fields: Vec<String> = row
                .into_iter()
                .map(|c| match c {
                    Cell::Num(x) => num(x),
                    Cell::Int(i) => i.to_string(),
                    Cell::Text(s) => s,
                })
                .collect();
            out.write_record(&fields).map_err(|e| io_fail(&path, e))?;
        }
        out.flush().map_err(|e| io_fail(&path, e))
    }

    pub fn json(&mut self, file: &str, value: &Value) -> Result<(), Failure> {
        let (path, mut w) = self.create(file)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_fail(&path, e))?;
        writeln!(w)
            .and_then(|_| w.flush())
            .map_err(|e| io_fail(&path, e))
    }

    pub fn binary(
        &mut self,
        file: &str,
        write: impl FnOnce(&mut BufWriter<File>) -> Result<(), String>,
    ) -> Result<(), Failure> {
        let (path, mut w) = self.create(file)?;
        write(&mut w).map_err(|e| io_fail(&path, e))?;
        w.flush().map_err(|e| io_fail(&path, e))
    }

    /// Writes `<name>.manifest.json` with the resolved parameters.
    pub fn manifest(&mut self, params: &impl Serialize, seed: Option<u64>) -> Result<(), Failure> {
        let file = format!("{}.manifest.json", self.name);
        let m = json!({
            "tool": "phasespace",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": self.name,
            "threads": self.threads,
            "seed": seed,
            "params": serde_json::to_value(params).map_err(Failure::domain)?,
            "outputs": self.outputs.clone(),
        });
        self.json(&file, &m)
    }
}
