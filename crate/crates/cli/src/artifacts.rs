//! On-disk formats: JSON for structured artifacts, CSV for plot-ready tables.
//!
//! Floats go through `serde_json` / `csv`, which print the shortest decimal
//! that parses back to the same `f64`, so write → read → write is
//! byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use curvlens::lanczos::SeedKind;
use curvlens::{DiracMixture, RitzDecomposition};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Tolerance on the total atom weight of a spectrum file.
const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFile {
    pub schema_version: u32,
    pub operator: OperatorInfo,
    pub lanczos: LanczosInfo,
    /// Ascending by value.
    pub atoms: Vec<AtomRecord>,
    pub analysis: Analysis,
    /// Ritz vector file, relative to the spectrum file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ritz_vectors: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorInfo {
    pub kind: String,
    pub dim: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanczosInfo {
    pub steps: usize,
    pub seeds: usize,
    pub probe_kind: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub value: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub lambda_b: BulkEstimates,
    pub outliers: Option<OutlierSummary>,
    pub mp_fit: Option<MpFit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BulkEstimates {
    /// Weighted bulk mean of the probe-seeded mixture.
    pub random_vector_weighted: Option<f64>,
    /// Median of gradient-seeded Ritz values.
    pub gradient_median: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierSummary {
    pub gap_threshold: f64,
    pub count: usize,
    /// Descending.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpFit {
    pub variance: f64,
    pub ratio: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub zero_mass: f64,
}

impl SpectrumFile {
    pub fn mixture(&self) -> CliResult<DiracMixture<f64>> {
        Ok(DiracMixture::from_atoms(
            self.atoms.iter().map(|a| (a.value, a.weight)),
        )?)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "unsupported schema_version {}",
                self.schema_version
            ));
        }
        if self.atoms.is_empty() {
            return Err("no atoms".into());
        }
        if self
            .atoms
            .iter()
            .any(|a| !a.value.is_finite() || !a.weight.is_finite() || a.weight < 0.0)
        {
            return Err("atoms must be finite with nonnegative weights".into());
        }
        if self.atoms.windows(2).any(|w| w[0].value > w[1].value) {
            return Err("atoms are not sorted ascending".into());
        }
        let mass: f64 = self.atoms.iter().map(|a| a.weight).sum();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(format!("atom weights sum to {mass}, not 1"));
        }
        Ok(())
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let file: Self = read_json(path)?;
        file.validate().map_err(|m| CliError::format(path, m))?;
        Ok(file)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        self.validate().map_err(|m| CliError::format(path, m))?;
        write_json(path, self)
    }

    /// Loads the Ritz vectors referenced by the file at `path`.
    pub fn load_ritz(&self, path: &Path) -> CliResult<RitzDecomposition<f64>> {
        let name = self
            .ritz_vectors
            .as_ref()
            .ok_or(curvlens::Error::MissingRitzVectors)?;
        let full = path.parent().unwrap_or(Path::new(".")).join(name);
        let v: RitzVectorsFile = read_json(&full)?;
        if v.values.len() != v.vectors.len() || v.values.len() != v.weights.len() {
            return Err(CliError::format(
                &full,
                "values, weights and vectors differ in length",
            ));
        }
        Ok(RitzDecomposition {
            values: v.values,
            weights: v.weights,
            vectors: Some(v.vectors),
            steps: v.steps,
            seed_kind: v.seed_kind,
        })
    }
}

pub fn atoms_of(d: &DiracMixture<f64>) -> Vec<AtomRecord> {
    d.atoms()
        .iter()
        .map(|a| AtomRecord {
            value: a.value,
            weight: a.weight,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RitzVectorsFile {
    pub schema_version: u32,
    pub steps: usize,
    pub seed_kind: SeedKind,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl RitzVectorsFile {
    pub fn from_ritz(r: &RitzDecomposition<f64>) -> Option<Self> {
        Some(Self {
            schema_version: SCHEMA_VERSION,
            steps: r.steps,
            seed_kind: r.seed_kind,
            values: r.values.clone(),
            weights: r.weights.clone(),
            vectors: r.vectors.clone()?,
        })
    }
}

/// Model parameters with enough shape information to rebuild the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    /// `logreg`, `mlp` or `quadratic`.
    pub kind: String,
    /// `[d_in, n_c]`, the MLP layer widths, or `[P]`.
    pub shape: Vec<usize>,
    pub weight_decay: f64,
    pub params: Vec<f64>,
    /// Row-major curvature of a quadratic model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centre: Option<Vec<f64>>,
}

impl Checkpoint {
    pub fn read(path: &Path) -> CliResult<Self> {
        read_json(path)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        write_json(path, self)
    }
}

/// Everything needed to re-run a command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub argv: Vec<String>,
    /// Parsed flags, global ones included.
    pub flags: serde_json::Value,
    pub seed: u64,
    pub wall_time_seconds: f64,
    pub artifacts: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diverged: Option<bool>,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::format(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::format(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(CliError::io(path))
}

/// Writes serializable rows with a header taken from the field names.
pub fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::format(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::format(path, e))?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn read_csv<R: DeserializeOwned>(path: &Path) -> CliResult<Vec<R>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::format(path, e))?;
    r.deserialize()
        .collect::<Result<Vec<R>, _>>()
        .map_err(|e| CliError::format(path, e))
}

/// Output directory bookkeeping: creates the directory and records the
/// artifacts written into it.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(CliError::io(root))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: vec![],
        })
    }

    /// Path of artifact `name`, recorded for the manifest.
    pub fn file(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.root.join(name)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}
