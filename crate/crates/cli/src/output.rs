use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{DateTime, Utc};
use serde::Serialize;

use crate::args::Format;

/// Where a command's records go. Rows are written as they arrive in CSV
/// mode, so a failure part-way through still leaves the rows produced so far.
pub struct Sink {
    inner: Inner,
}

enum Inner {
    Csv(Box<csv::Writer<Box<dyn Write>>>),
    Json {
        out: Box<dyn Write>,
        rows: Vec<serde_json::Value>,
        single: bool,
    },
}

impl Sink {
    pub fn open(format: Format, output: Option<&Path>) -> Result<Self> {
        let out: Box<dyn Write> = match output {
            Some(path) => Box::new(BufWriter::new(
                File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
            )),
            None => Box::new(io::stdout().lock()),
        };
        let inner = match format {
            Format::Csv => Inner::Csv(Box::new(
                csv::WriterBuilder::new()
                    .terminator(csv::Terminator::Any(b'\n'))
                    .from_writer(out),
            )),
            Format::Json => Inner::Json { out, rows: Vec::new(), single: false },
        };
        Ok(Self { inner })
    }

    /// In JSON mode, emit the lone record as an object instead of an array.
    pub fn single_record(mut self) -> Self {
        if let Inner::Json { single, .. } = &mut self.inner {
            *single = true;
        }
        self
    }

    pub fn push<R: Serialize>(&mut self, row: &R) -> Result<()> {
        match &mut self.inner {
            Inner::Csv(w) => {
                w.serialize(row)?;
                w.flush()?;
            }
            Inner::Json { rows, .. } => rows.push(serde_json::to_value(row)?),
        }
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        match self.inner {
            Inner::Csv(mut w) => w.flush()?,
            Inner::Json { mut out, rows, single } => {
                if single && rows.len() == 1 {
                    serde_json::to_writer_pretty(&mut out, &rows[0])?;
                } else {
                    serde_json::to_writer_pretty(&mut out, &rows)?;
                }
                writeln!(out)?;
                out.flush()?;
            }
        }
        Ok(())
    }
}

/// Everything needed to regenerate an output file.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    pub seed: u64,
    pub tool_version: String,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

impl RunManifest {
    pub fn write_next_to(&self, output: &Path) -> Result<()> {
        let path = manifest_path(output);
        let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}
