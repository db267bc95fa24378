//! Self-describing state snapshots.
//!
//! Layout: one line of compact JSON (the [`SnapshotHeader`]), a `\n`, then
//! `components * n * n` little-endian `f64` values. Each component is the
//! physical field in row-major order (`x1` fastest), in the order listed in
//! `field_names`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::model::TcmState;
use crate::stepper::Checkpoint;

pub const FORMAT: &str = "tcm-snapshot";
pub const VERSION: u32 = 1;
pub const FIELD_NAMES: [&str; 5] = ["u1", "u2", "v1", "v2", "theta"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub format: String,
    pub version: u32,
    pub n: usize,
    pub domain_length: f64,
    pub components: usize,
    pub field_names: Vec<String>,
    pub byte_order: String,
    pub dtype: String,
    pub time: f64,
    pub step: u64,
    /// Human-readable dissipation description of the producing run.
    pub dissipation: String,
    /// Producing run's configuration, opaque to this crate.
    #[serde(default)]
    pub config: serde_json::Value,
    pub checkpoint: Checkpoint,
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub state: TcmState,
}

impl Snapshot {
    pub fn new(
        state: &TcmState,
        checkpoint: &Checkpoint,
        dissipation: impl Into<String>,
        config: serde_json::Value,
    ) -> Snapshot {
        let g = state.grid();
        Snapshot {
            header: SnapshotHeader {
                format: FORMAT.into(),
                version: VERSION,
                n: g.n(),
                domain_length: g.length(),
                components: FIELD_NAMES.len(),
                field_names: FIELD_NAMES.iter().map(|s| s.to_string()).collect(),
                byte_order: "little-endian".into(),
                dtype: "f64".into(),
                time: state.time,
                step: checkpoint.step,
                dissipation: dissipation.into(),
                config,
                checkpoint: checkpoint.clone(),
            },
            state: state.clone(),
        }
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        serde_json::to_writer(&mut *w, &self.header)?;
        w.write_all(b"\n")?;
        let s = &self.state;
        for field in [&s.u, &s.v, &s.theta] {
            for comp in field.to_physical() {
                for x in comp {
                    w.write_all(&x.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl BufRead) -> Result<Snapshot> {
        let mut line = Vec::new();
        r.read_until(b'\n', &mut line)?;
        if line.last() != Some(&b'\n') {
            return Err(Error::Format("snapshot header is not newline-terminated".into()));
        }
        let header: SnapshotHeader = serde_json::from_slice(&line)?;
        header.check()?;
        let grid = Grid::new(header.n, header.domain_length)?;
        let npts = grid.len();
        let mut comps = Vec::with_capacity(header.components);
        let mut buf = vec![0u8; npts * 8];
        for name in &header.field_names {
            r.read_exact(&mut buf)
                .map_err(|e| Error::Format(format!("truncated data in component {name}: {e}")))?;
            comps.push(
                buf.chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8")))
                    .collect::<Vec<f64>>(),
            );
        }
        if r.read(&mut [0u8; 1])? != 0 {
            return Err(Error::Format("trailing bytes after snapshot data".into()));
        }
        let state = TcmState {
            u: SpectralField::from_physical(&grid, &comps[0..2])?,
            v: SpectralField::from_physical(&grid, &comps[2..4])?,
            theta: SpectralField::from_physical(&grid, &comps[4..5])?,
            time: header.time,
        };
        Ok(Snapshot { header, state })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Snapshot> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }

    /// The state on `grid`, refusing a snapshot taken on another grid.
    pub fn state_on(&self, grid: &Arc<Grid>) -> Result<TcmState> {
        if !grid.same_as(self.state.grid()) {
            return Err(Error::Config(format!(
                "snapshot grid n={} L={} does not match n={} L={}",
                self.header.n,
                self.header.domain_length,
                grid.n(),
                grid.length()
            )));
        }
        let mut s = self.state.clone();
        s.u = SpectralField::from_coeffs(grid, s.u.into_components())?;
        s.v = SpectralField::from_coeffs(grid, s.v.into_components())?;
        s.theta = SpectralField::from_coeffs(grid, s.theta.into_components())?;
        Ok(s)
    }
}

impl SnapshotHeader {
    fn check(&self) -> Result<()> {
        if self.format != FORMAT {
            return Err(Error::Format(format!("not a snapshot (format '{}')", self.format)));
        }
        if self.version != VERSION {
            return Err(Error::Format(format!("unsupported snapshot version {}", self.version)));
        }
        if self.byte_order != "little-endian" || self.dtype != "f64" {
            return Err(Error::Format(format!(
                "unsupported encoding {} {}",
                self.byte_order, self.dtype
            )));
        }
        if self.field_names != FIELD_NAMES || self.components != FIELD_NAMES.len() {
            return Err(Error::Format(format!(
                "unexpected components {:?}",
                self.field_names
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::random_state;

    #[test]
    fn round_trip_preserves_state_and_checkpoint() {
        let g = Grid::new(16, 3.0).unwrap();
        let mut s = random_state(&g, 9);
        s.time = 0.375;
        let cp = Checkpoint {
            step: 12,
            ..Checkpoint::default()
        };
        let snap = Snapshot::new(&s, &cp, "none", serde_json::json!({"a": 1}));
        let mut bytes = Vec::new();
        snap.write_to(&mut bytes).unwrap();
        let back = Snapshot::read_from(&mut bytes.as_slice()).unwrap();
        assert_eq!(back.header, snap.header);
        assert!(back.state.max_abs_diff(&s) < 1e-15);
        assert_eq!(back.state.time, 0.375);
        let header_len = bytes.iter().position(|&b| b == b'\n').unwrap() + 1;
        assert_eq!(bytes.len() - header_len, 5 * 16 * 16 * 8);
    }

    #[test]
    fn damaged_files_are_rejected() {
        let g = Grid::with_size(8).unwrap();
        let snap = Snapshot::new(&random_state(&g, 1), &Checkpoint::default(), "none", Default::default());
        let mut bytes = Vec::new();
        snap.write_to(&mut bytes).unwrap();
        let short = &bytes[..bytes.len() - 8];
        assert!(matches!(Snapshot::read_from(&mut &short[..]), Err(Error::Format(_))));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(Snapshot::read_from(&mut long.as_slice()), Err(Error::Format(_))));
        assert!(Snapshot::read_from(&mut &b"{}\n"[..]).is_err());
        let other = Grid::with_size(16).unwrap();
        assert!(matches!(snap.state_on(&other), Err(Error::Config(_))));
    }
}
