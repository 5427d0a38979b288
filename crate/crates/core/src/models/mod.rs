//! Small differentiable models with exact gradient, Hessian-vector and
//! Gauss-Newton-vector products.
//!
//! All losses are means over the batch plus `γ‖p‖²`. Products are computed
//! analytically (logistic regression) or with the R-operator through
//! hand-written backpropagation (MLP); there is no autodiff dependency.

mod dataset;
mod logreg;
mod mlp;
mod quadratic;

pub use dataset::{Dataset, DatasetSpec};
pub use logreg::LogisticRegression;
pub use mlp::Mlp;
pub use quadratic::QuadraticModel;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{all_finite, axpy, dot, Mat};
use crate::operator::{DenseSymmetric, SymmetricOperator};
use crate::rng::SeedStream;
use crate::Real;

/// Largest parameter count for which the absolute Hessian is assembled.
pub const ABS_HESSIAN_MAX_PARAMS: usize = 2000;

pub trait Model<T: Real>: Clone + Send + Sync {
    fn param_count(&self) -> usize;
    fn params(&self) -> &[T];
    fn params_mut(&mut self) -> &mut [T];
    /// Number of weight layers, the `l` of the bulk estimators.
    fn layer_count(&self) -> usize;
    fn weight_decay(&self) -> T;
    /// Short model name used in checkpoints.
    fn kind(&self) -> &'static str;
    /// Layer widths (input first) or, for models without layers, the
    /// parameter count.
    fn shape(&self) -> Vec<usize>;
    /// Whether the loss depends on the batch at all.
    fn uses_data(&self) -> bool {
        true
    }

    /// Loss, and its gradient when `grad` is given. Inputs are already
    /// validated.
    fn eval(&self, batch: &Dataset<T>, grad: Option<&mut [T]>) -> T;
    fn hvp_unchecked(&self, batch: &Dataset<T>, v: &[T], out: &mut [T]);
    fn ggn_unchecked(&self, batch: &Dataset<T>, v: &[T], out: &mut [T]);

    fn set_params(&mut self, p: &[T]) -> Result<()> {
        check_dim(self.param_count(), p.len())?;
        if !all_finite(p) {
            return Err(Error::NonFinite("parameters"));
        }
        self.params_mut().copy_from_slice(p);
        Ok(())
    }

    fn check_batch(&self, batch: &Dataset<T>) -> Result<()> {
        if self.uses_data() {
            if batch.is_empty() {
                return Err(Error::Empty("batch"));
            }
            check_dim(self.shape()[0], batch.d_in)?;
        }
        Ok(())
    }

    fn loss(&self, batch: &Dataset<T>) -> Result<T> {
        self.check_batch(batch)?;
        let l = self.eval(batch, None);
        if !l.is_finite() {
            return Err(Error::NonFinite("forward pass"));
        }
        Ok(l)
    }

    fn loss_and_gradient(&self, batch: &Dataset<T>) -> Result<(T, Vec<T>)> {
        self.check_batch(batch)?;
        let mut g = vec![T::zero(); self.param_count()];
        let l = self.eval(batch, Some(&mut g));
        if !l.is_finite() || !all_finite(&g) {
            return Err(Error::NonFinite("forward pass"));
        }
        Ok((l, g))
    }

    fn hessian_vector_product(&self, batch: &Dataset<T>, v: &[T]) -> Result<Vec<T>> {
        self.check_batch(batch)?;
        check_dim(self.param_count(), v.len())?;
        let mut out = vec![T::zero(); v.len()];
        self.hvp_unchecked(batch, v, &mut out);
        Ok(out)
    }

    /// `Jᵀ H_ℓ J v + 2γ v`: the Gauss-Newton matrix of the data term plus the
    /// regularizer's (exact) Hessian.
    fn ggn_vector_product(&self, batch: &Dataset<T>, v: &[T]) -> Result<Vec<T>> {
        self.check_batch(batch)?;
        check_dim(self.param_count(), v.len())?;
        let mut out = vec![T::zero(); v.len()];
        self.ggn_unchecked(batch, v, &mut out);
        Ok(out)
    }
}

/// Softmax of `z` in place; returns `log Σ exp z`.
pub(crate) fn softmax_in_place<T: Real>(z: &mut [T]) -> T {
    let m = z.iter().copied().fold(T::neg_infinity(), T::max);
    let mut s = T::zero();
    for x in z.iter_mut() {
        *x = (*x - m).exp();
        s += *x;
    }
    for x in z.iter_mut() {
        *x /= s;
    }
    m + s.ln()
}

/// `(diag(s) − s sᵀ) u`, the cross-entropy Hessian with respect to logits.
pub(crate) fn softmax_hessian_apply<T: Real>(s: &[T], u: &[T], out: &mut [T]) {
    let su = dot(s, u);
    for ((o, &si), &ui) in out.iter_mut().zip(s).zip(u) {
        *o = si * (ui - su);
    }
}

/// Softmax probabilities (rows of `logits`, overwritten) and mean
/// cross-entropy.
pub(crate) fn softmax_cross_entropy<T: Real>(logits: &mut Mat<T>, labels: &[usize]) -> T {
    let n = logits.rows;
    let mut total = T::zero();
    for (i, &y) in labels.iter().enumerate() {
        let zy = logits.get(i, y);
        let lse = softmax_in_place(logits.row_mut(i));
        total += lse - zy;
    }
    total / T::from_usize_lossy(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureKind {
    Hessian,
    #[default]
    Ggn,
    AbsHessian,
}

impl CurvatureKind {
    pub fn name(self) -> &'static str {
        match self {
            CurvatureKind::Hessian => "hessian",
            CurvatureKind::Ggn => "ggn",
            CurvatureKind::AbsHessian => "abs_hessian",
        }
    }

    pub fn is_positive_semidefinite(self) -> bool {
        !matches!(self, CurvatureKind::Hessian)
    }
}

impl std::str::FromStr for CurvatureKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "hessian" => Ok(CurvatureKind::Hessian),
            "ggn" => Ok(CurvatureKind::Ggn),
            "abs_hessian" | "abs-hessian" => Ok(CurvatureKind::AbsHessian),
            other => Err(format!("unknown curvature kind '{other}'")),
        }
    }
}

/// A curvature matrix of a model at its current parameters on a fixed batch.
pub enum CurvatureOperator<'a, T: Real, M: Model<T>> {
    Hessian { model: &'a M, batch: &'a Dataset<T> },
    Ggn { model: &'a M, batch: &'a Dataset<T> },
    Dense(DenseSymmetric<T>),
}

impl<T: Real, M: Model<T>> SymmetricOperator<T> for CurvatureOperator<'_, T, M> {
    fn dim(&self) -> usize {
        match self {
            CurvatureOperator::Hessian { model, .. } | CurvatureOperator::Ggn { model, .. } => {
                model.param_count()
            }
            CurvatureOperator::Dense(d) => d.n(),
        }
    }

    fn apply_into(&self, v: &[T], out: &mut [T]) {
        match self {
            CurvatureOperator::Hessian { model, batch } => model.hvp_unchecked(batch, v, out),
            CurvatureOperator::Ggn { model, batch } => model.ggn_unchecked(batch, v, out),
            CurvatureOperator::Dense(d) => d.apply_into(v, out),
        }
    }

    fn label(&self) -> String {
        match self {
            CurvatureOperator::Hessian { model, .. } => format!("{}-hessian", model.kind()),
            CurvatureOperator::Ggn { model, .. } => format!("{}-ggn", model.kind()),
            CurvatureOperator::Dense(d) => d.label(),
        }
    }
}

/// Wraps the requested curvature product. The absolute Hessian
/// `Σ |λ_i| φ_i φ_iᵀ` is assembled densely from an eigendecomposition.
pub fn curvature_operator<'a, T: Real, M: Model<T>>(
    model: &'a M,
    batch: &'a Dataset<T>,
    kind: CurvatureKind,
) -> Result<CurvatureOperator<'a, T, M>> {
    model.check_batch(batch)?;
    Ok(match kind {
        CurvatureKind::Hessian => CurvatureOperator::Hessian { model, batch },
        CurvatureKind::Ggn => CurvatureOperator::Ggn { model, batch },
        CurvatureKind::AbsHessian => {
            let p = model.param_count();
            if p > ABS_HESSIAN_MAX_PARAMS {
                return Err(Error::OracleScale {
                    dim: p,
                    cap: ABS_HESSIAN_MAX_PARAMS,
                });
            }
            let h = DenseSymmetric::from_operator(&CurvatureOperator::Hessian { model, batch });
            CurvatureOperator::Dense(
                absolute_value(&h)?.with_label(format!("{}-abs-hessian", model.kind())),
            )
        }
    })
}

/// `Σ |λ_i| φ_i φ_iᵀ` from the eigendecomposition of `h`.
pub fn absolute_value<T: Real>(h: &DenseSymmetric<T>) -> Result<DenseSymmetric<T>> {
    let e = h.eigen()?;
    let n = h.n();
    // rows of `basis` are eigenvectors; the column-major storage is exactly that
    let basis = Mat {
        rows: n,
        cols: n,
        data: e.vectors.clone(),
    };
    let mut scaled = basis.clone();
    for (i, &l) in e.values.iter().enumerate() {
        crate::linalg::scale(l.abs(), scaled.row_mut(i));
    }
    DenseSymmetric::symmetrized(n, basis.matmul(true, &scaled, false).data)
}

/// Curvature bounds of the regularized logistic loss:
/// `L = ½ λ_max(XᵀX)/N + 2γ` and `μ = 2γ`.
///
/// The `½` bounds the largest eigenvalue of the softmax Hessian
/// `diag(s) − s sᵀ`; the division by `N` matches the mean-normalized loss.
pub fn lipschitz_bounds_logreg<T: Real>(data: &Dataset<T>, weight_decay: T) -> Result<(T, T)> {
    if data.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    if weight_decay < T::zero() {
        return Err(invalid("weight decay must be nonnegative"));
    }
    let x = Mat {
        rows: data.len(),
        cols: data.d_in,
        data: data.inputs.clone(),
    };
    let gram = DenseSymmetric::symmetrized(data.d_in, x.matmul(true, &x, false).data)?;
    let top = gram
        .eigenvalues()?
        .last()
        .copied()
        .unwrap_or(T::zero())
        .max(T::zero());
    let two_gamma = T::lit(2.0) * weight_decay;
    Ok((
        T::lit(0.5) * top / T::from_usize_lossy(data.len()) + two_gamma,
        two_gamma,
    ))
}

/// Monte Carlo statistics of the minibatch gradient error
/// `ε = ∇L_full − ∇L_batch`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradientNoiseStats<T> {
    pub batch_size: usize,
    pub trials: usize,
    pub mean_norm: T,
    pub mean_sq_norm: T,
    /// Per-sample gradient variance of each coordinate.
    pub per_coordinate_variance: Vec<T>,
    /// `⟨σ_j²⟩` over coordinates.
    pub mean_variance: T,
    /// `P ⟨σ_j²⟩ / T · (N − T)/(N − 1)`, the expected `‖ε‖²` for batches
    /// drawn without replacement.
    pub predicted_sq_norm: T,
}

pub fn gradient_noise_stats<T: Real, M: Model<T>>(
    model: &M,
    data: &Dataset<T>,
    batch_size: usize,
    trials: usize,
    stream: &mut SeedStream,
) -> Result<GradientNoiseStats<T>> {
    let n = data.len();
    if batch_size == 0 || batch_size >= n {
        return Err(invalid(format!(
            "batch size must lie in 1..{n}, got {batch_size}"
        )));
    }
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let p = model.param_count();
    let (_, full) = model.loss_and_gradient(data)?;

    let mut var = vec![T::zero(); p];
    for i in 0..n {
        let (_, g) = model.loss_and_gradient(&data.subset(&[i]))?;
        for ((v, gi), fi) in var.iter_mut().zip(&g).zip(&full) {
            *v += (*gi - *fi) * (*gi - *fi);
        }
    }
    let nt = T::from_usize_lossy(n);
    var.iter_mut().for_each(|v| *v /= nt);
    let mean_variance = var.iter().copied().sum::<T>() / T::from_usize_lossy(p);

    let mut sum_norm = T::zero();
    let mut sum_sq = T::zero();
    for _ in 0..trials {
        let idx = stream.sample_without_replacement(n, batch_size);
        let (_, g) = model.loss_and_gradient(&data.subset(&idx))?;
        let mut eps = full.clone();
        axpy(-T::one(), &g, &mut eps);
        let sq = dot(&eps, &eps);
        sum_sq += sq;
        sum_norm += sq.sqrt();
    }
    let tt = T::from_usize_lossy(trials);
    let bt = T::from_usize_lossy(batch_size);
    let fpc = (nt - bt) / (nt - T::one());
    Ok(GradientNoiseStats {
        batch_size,
        trials,
        mean_norm: sum_norm / tt,
        mean_sq_norm: sum_sq / tt,
        predicted_sq_norm: T::from_usize_lossy(p) * mean_variance / bt * fpc,
        per_coordinate_variance: var,
        mean_variance,
    })
}
