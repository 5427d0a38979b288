//! Checkpointable models behind one type, plus the toy problem.

use curvlens::models::{Dataset, DatasetSpec, LogisticRegression, Mlp, Model, QuadraticModel};
use curvlens::{DenseSymmetric, SeedStream};

use crate::args::{DataOpts, ModelKind, ModelOpts};
use crate::artifacts::{read_json, Checkpoint, SCHEMA_VERSION};
use crate::error::{usage, CliError, CliResult};

/// Gaussian blobs used when no dataset spec is given: three well separated
/// classes in 20 dimensions.
pub fn toy_dataset(seed: u64) -> DatasetSpec {
    DatasetSpec {
        n_samples: 2000,
        d_in: 20,
        n_c: 3,
        blob_separation: 15.0,
        seed,
    }
}

/// Offset between the data seed and the stream of a fresh model's weights.
const INIT_SEED_OFFSET: u64 = 100;

#[derive(Debug, Clone)]
pub enum AnyModel {
    Logreg(LogisticRegression<f64>),
    Mlp(Mlp<f64>),
    Quadratic(QuadraticModel<f64>),
}

macro_rules! delegate {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            AnyModel::Logreg($m) => $e,
            AnyModel::Mlp($m) => $e,
            AnyModel::Quadratic($m) => $e,
        }
    };
}

impl Model<f64> for AnyModel {
    fn param_count(&self) -> usize {
        delegate!(self, m => m.param_count())
    }
    fn params(&self) -> &[f64] {
        delegate!(self, m => m.params())
    }
    fn params_mut(&mut self) -> &mut [f64] {
        delegate!(self, m => m.params_mut())
    }
    fn layer_count(&self) -> usize {
        delegate!(self, m => m.layer_count())
    }
    fn weight_decay(&self) -> f64 {
        delegate!(self, m => m.weight_decay())
    }
    fn kind(&self) -> &'static str {
        delegate!(self, m => m.kind())
    }
    fn shape(&self) -> Vec<usize> {
        delegate!(self, m => m.shape())
    }
    fn uses_data(&self) -> bool {
        delegate!(self, m => m.uses_data())
    }
    fn eval(&self, batch: &Dataset<f64>, grad: Option<&mut [f64]>) -> f64 {
        delegate!(self, m => m.eval(batch, grad))
    }
    fn hvp_unchecked(&self, batch: &Dataset<f64>, v: &[f64], out: &mut [f64]) {
        delegate!(self, m => m.hvp_unchecked(batch, v, out))
    }
    fn ggn_unchecked(&self, batch: &Dataset<f64>, v: &[f64], out: &mut [f64]) {
        delegate!(self, m => m.ggn_unchecked(batch, v, out))
    }
}

impl AnyModel {
    pub fn from_checkpoint(c: &Checkpoint) -> CliResult<Self> {
        let mut model = match c.kind.as_str() {
            "logreg" => match c.shape[..] {
                [d_in, n_c] => {
                    AnyModel::Logreg(LogisticRegression::zeros(d_in, n_c, c.weight_decay)?)
                }
                _ => return Err(usage("logreg checkpoint shape must be [d_in, n_c]")),
            },
            "mlp" => AnyModel::Mlp(Mlp::zeros(&c.shape, c.weight_decay)?),
            "quadratic" => {
                let n = c.params.len();
                let a = c
                    .curvature
                    .clone()
                    .ok_or_else(|| usage("quadratic checkpoint lacks its curvature"))?;
                let centre = c.centre.clone().unwrap_or_else(|| vec![0.0; n]);
                AnyModel::Quadratic(QuadraticModel::new(
                    DenseSymmetric::new(n, a)?,
                    centre,
                    c.params.clone(),
                )?)
            }
            other => return Err(usage(format!("unknown checkpoint kind '{other}'"))),
        };
        model.set_params(&c.params)?;
        Ok(model)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let (curvature, centre) = match self {
            AnyModel::Quadratic(q) => (
                Some(q.curvature().entries().to_vec()),
                Some(q.centre().to_vec()),
            ),
            _ => (None, None),
        };
        Checkpoint {
            schema_version: SCHEMA_VERSION,
            kind: self.kind().to_string(),
            shape: self.shape(),
            weight_decay: self.weight_decay(),
            params: self.params().to_vec(),
            curvature,
            centre,
        }
    }

    /// Loads `opts.checkpoint`, or builds a fresh model sized for `data`.
    pub fn load_or_init(opts: &ModelOpts, data: &DatasetSpec, seed: u64) -> CliResult<Self> {
        if let Some(path) = &opts.checkpoint {
            return Self::from_checkpoint(&read_json(path)?);
        }
        let mut stream = SeedStream::new(seed.wrapping_add(INIT_SEED_OFFSET));
        Ok(match opts.model {
            ModelKind::Logreg => AnyModel::Logreg(LogisticRegression::random(
                data.d_in,
                data.n_c,
                opts.weight_decay,
                opts.init_scale,
                &mut stream,
            )?),
            ModelKind::Mlp => {
                let mut sizes = vec![data.d_in];
                sizes.extend(opts.hidden.iter().copied().filter(|&h| h > 0));
                sizes.push(data.n_c);
                AnyModel::Mlp(Mlp::new(&sizes, opts.weight_decay, &mut stream)?)
            }
        })
    }
}

/// The dataset spec of `opts`, or the toy problem seeded with `seed`.
pub fn dataset_spec(opts: &DataOpts, seed: u64) -> CliResult<DatasetSpec> {
    match &opts.dataset {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
            DatasetSpec::from_json(&text).map_err(|e| CliError::format(path, e))
        }
        None => Ok(toy_dataset(seed)),
    }
}

/// Training set and, when requested, a held-out set.
pub fn load_data(
    spec: &DatasetSpec,
    test_samples: usize,
) -> CliResult<(Dataset<f64>, Option<Dataset<f64>>)> {
    let (train, test) = spec.generate_split::<f64>(test_samples)?;
    Ok((train, (test_samples > 0).then_some(test)))
}
