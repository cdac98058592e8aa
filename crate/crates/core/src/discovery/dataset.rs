use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{GridField, ProblemSpec};
use crate::noise::ChannelKind;

/// Descriptive metadata carried alongside a snapshot series.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strength: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct MetaFile {
    spec: ProblemSpec,
    t0: f64,
    snapshots: usize,
    #[serde(default)]
    meta: DatasetMeta,
}

/// Equally spaced snapshots `u(t0 + iΔt, x_j)`, `i = 0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotDataset {
    pub spec: ProblemSpec,
    pub t0: f64,
    pub snapshots: Vec<Vec<f64>>,
    pub meta: DatasetMeta,
}

impl SnapshotDataset {
    pub fn new(spec: ProblemSpec, t0: f64, snapshots: Vec<Vec<f64>>, meta: DatasetMeta) -> Result<Self> {
        spec.validate()?;
        if let Some(row) = snapshots.iter().find(|r| r.len() != spec.points) {
            return Err(Error::DimensionMismatch {
                expected: spec.points,
                actual: row.len(),
            });
        }
        if snapshots.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("snapshot contains non-finite samples".into()));
        }
        Ok(Self {
            spec,
            t0,
            snapshots,
            meta,
        })
    }

    /// Builds a dataset from consecutive fields one `Δt` apart.
    pub fn from_fields(fields: &[GridField], meta: DatasetMeta) -> Result<Self> {
        let first = fields.first().ok_or(Error::TooFewSnapshots(0))?;
        let spec = first.spec;
        for (i, f) in fields.iter().enumerate() {
            if f.spec != spec {
                return Err(Error::GridMismatch(format!("snapshot {i} has a different grid")));
            }
        }
        Self::new(
            spec,
            first.time,
            fields.iter().map(|f| f.values.clone()).collect(),
            meta,
        )
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.spec.dt
    }

    pub fn field(&self, i: usize) -> Result<GridField> {
        GridField::new(self.snapshots[i].clone(), self.time(i), self.spec)
    }

    /// Writes `u.csv` (header `t,u0,…`) and `meta.toml` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut w = std::io::BufWriter::new(fs::File::create(dir.join("u.csv"))?);
        write!(w, "t")?;
        for j in 0..self.spec.points {
            write!(w, ",u{j}")?;
        }
        writeln!(w)?;
        for (i, row) in self.snapshots.iter().enumerate() {
            write!(w, "{:.17e}", self.time(i))?;
            for v in row {
                write!(w, ",{v:.17e}")?;
            }
            writeln!(w)?;
        }
        w.flush()?;
        let meta = MetaFile {
            spec: self.spec,
            t0: self.t0,
            snapshots: self.len(),
            meta: self.meta.clone(),
        };
        let text = toml::to_string(&meta).map_err(|e| Error::Parse(e.to_string()))?;
        fs::write(dir.join("meta.toml"), text)?;
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let meta: MetaFile = toml::from_str(&fs::read_to_string(dir.join("meta.toml"))?)
            .map_err(|e| Error::Parse(format!("{}: {e}", dir.join("meta.toml").display())))?;
        let reader = BufReader::new(fs::File::open(dir.join("u.csv"))?);
        let mut snapshots = Vec::with_capacity(meta.snapshots);
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if lineno == 0 || line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split(',');
            let t: f64 = parse_num(cols.next(), lineno)?;
            let expected = meta.t0 + snapshots.len() as f64 * meta.spec.dt;
            if (t - expected).abs() > 1e-9 * (1.0 + expected.abs()) {
                return Err(Error::Parse(format!(
                    "line {}: time {t} does not match t0 + i·dt = {expected}",
                    lineno + 1
                )));
            }
            let row = cols
                .map(|c| parse_num(Some(c), lineno))
                .collect::<Result<Vec<f64>>>()?;
            snapshots.push(row);
        }
        if snapshots.len() != meta.snapshots {
            return Err(Error::Parse(format!(
                "expected {} snapshots, found {}",
                meta.snapshots,
                snapshots.len()
            )));
        }
        Self::new(meta.spec, meta.t0, snapshots, meta.meta)
    }
}

fn parse_num(s: Option<&str>, lineno: usize) -> Result<f64> {
    s.ok_or_else(|| Error::Parse(format!("line {}: missing value", lineno + 1)))?
        .trim()
        .parse()
        .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
}
