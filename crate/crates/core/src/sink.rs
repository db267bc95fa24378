//! File-backed [`RunSink`]s.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::Result;
use crate::model::TcmState;
use crate::snapshot::Snapshot;
use crate::stepper::{Checkpoint, RunSink};

/// Writes records as CSV rows; the header is written on creation.
pub struct CsvSink<W: Write> {
    out: W,
}

impl<W: Write> CsvSink<W> {
    pub fn new(mut out: W, sobolev: &[f64]) -> Result<Self> {
        writeln!(out, "{}", DiagnosticsRecord::csv_header(sobolev))?;
        Ok(CsvSink { out })
    }

    /// Continues an existing file without repeating the header.
    pub fn append(out: W) -> Self {
        CsvSink { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> RunSink for CsvSink<W> {
    fn record(&mut self, record: &DiagnosticsRecord) -> Result<()> {
        writeln!(self.out, "{}", record.csv_row())?;
        self.out.flush()?;
        Ok(())
    }

    fn snapshot(&mut self, _: &TcmState, _: &Checkpoint) -> Result<()> {
        Ok(())
    }
}

/// `diagnostics.csv` plus `snapshot_<step>.bin` files in one directory.
pub struct DirectorySink {
    dir: PathBuf,
    csv: CsvSink<BufWriter<File>>,
    dissipation: String,
    config: serde_json::Value,
    /// Every snapshot written, in order.
    pub written: Vec<PathBuf>,
}

impl DirectorySink {
    pub fn create(
        dir: &Path,
        sobolev: &[f64],
        dissipation: impl Into<String>,
        config: serde_json::Value,
    ) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let csv = CsvSink::new(BufWriter::new(File::create(dir.join("diagnostics.csv"))?), sobolev)?;
        Ok(DirectorySink {
            dir: dir.to_path_buf(),
            csv,
            dissipation: dissipation.into(),
            config,
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn snapshot_path(dir: &Path, step: u64) -> PathBuf {
        dir.join(format!("snapshot_{step:08}.bin"))
    }
}

impl RunSink for DirectorySink {
    fn record(&mut self, record: &DiagnosticsRecord) -> Result<()> {
        self.csv.record(record)
    }

    fn snapshot(&mut self, state: &TcmState, checkpoint: &Checkpoint) -> Result<()> {
        let path = Self::snapshot_path(&self.dir, checkpoint.step);
        Snapshot::new(state, checkpoint, self.dissipation.clone(), self.config.clone()).save(&path)?;
        self.written.push(path);
        Ok(())
    }
}
