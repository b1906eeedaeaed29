//! Output files and their provenance record.

use crate::scenario::ScenarioFile;
use serde::Serialize;
use std::io::{self, Write};
use std::path::Path;

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    /// The scenario after seed resolution.
    pub scenario: ScenarioFile,
}

impl Provenance {
    pub fn new(command: &'static str, scenario: &ScenarioFile) -> Self {
        Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed: scenario.seed.unwrap_or(0),
            scenario: scenario.clone(),
        }
    }
}

pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Files produced by a command; the first is printed to stdout when no
/// output directory is given.
#[derive(Default)]
pub struct Outputs {
    pub files: Vec<Artifact>,
}

impl Outputs {
    pub fn csv(&mut self, name: impl Into<String>, table: Table) {
        self.files.push(Artifact { name: name.into(), bytes: table.into_bytes() });
    }

    pub fn json<T: Serialize>(&mut self, name: impl Into<String>, provenance: &Provenance, results: &T) {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            provenance: &'a Provenance,
            results: &'a T,
        }
        let mut bytes = serde_json::to_vec_pretty(&Doc { provenance, results }).expect("results serialize");
        bytes.push(b'\n');
        self.files.push(Artifact { name: name.into(), bytes });
    }

    pub fn write(&self, dir: Option<&Path>, provenance: &Provenance) -> io::Result<()> {
        let Some(dir) = dir else {
            let mut out = io::stdout().lock();
            if let Some(first) = self.files.first() {
                out.write_all(&first.bytes)?;
            }
            return out.flush();
        };
        std::fs::create_dir_all(dir)?;
        for f in &self.files {
            std::fs::write(dir.join(&f.name), &f.bytes)?;
        }
        #[derive(Serialize)]
        struct Manifest<'a> {
            #[serde(flatten)]
            provenance: &'a Provenance,
            files: Vec<&'a str>,
        }
        let manifest = Manifest { provenance, files: self.files.iter().map(|f| f.name.as_str()).collect() };
        let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(io::Error::other)?;
        bytes.push(b'\n');
        std::fs::write(dir.join("manifest.json"), bytes)?;
        log::info!("wrote {} files to {}", self.files.len() + 1, dir.display());
        Ok(())
    }
}

/// A CSV table with a mandatory header.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    fn into_bytes(self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Shortest representation that parses back to the same value.
pub fn num(x: f64) -> String {
    x.to_string()
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}
