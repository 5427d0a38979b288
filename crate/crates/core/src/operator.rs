//! Symmetric linear operators exposed through matrix-vector products.
//!
//! Lanczos and the trace estimators only ever see a [`SymmetricOperator`].
//! [`DenseSymmetric`] is the explicit representation used for random-matrix
//! samples and as the brute-force oracle at desk scale.

use crate::error::{check_dim, invalid, Result};
use crate::linalg::{self, dot, Mat, SymmetricEigen};
use crate::rng::{ProbeKind, SeedStream};
use crate::Real;

/// Largest dimension the dense eigen oracle accepts.
pub const ORACLE_MAX_DIM: usize = 4000;

/// A dimension-`P` symmetric map `v ↦ Hv`.
///
/// Implementations must be deterministic and safe to call concurrently.
pub trait SymmetricOperator<T: Real>: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `H v` into `out`. Both slices have length [`dim`](Self::dim).
    fn apply_into(&self, v: &[T], out: &mut [T]);

    fn apply(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim()];
        self.apply_into(v, &mut out);
        out
    }

    /// Applies the operator to `block.len() / dim` vectors stored back to back.
    fn apply_block(&self, block: &[T], out: &mut [T]) {
        let n = self.dim();
        for (v, o) in block.chunks_exact(n).zip(out.chunks_exact_mut(n)) {
            self.apply_into(v, o);
        }
    }

    fn label(&self) -> String {
        "operator".to_string()
    }
}

impl<T: Real, O: SymmetricOperator<T> + ?Sized> SymmetricOperator<T> for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply_into(&self, v: &[T], out: &mut [T]) {
        (**self).apply_into(v, out)
    }
    fn apply_block(&self, block: &[T], out: &mut [T]) {
        (**self).apply_block(block, out)
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

impl<T: Real, O: SymmetricOperator<T> + ?Sized> SymmetricOperator<T> for Box<O> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply_into(&self, v: &[T], out: &mut [T]) {
        (**self).apply_into(v, out)
    }
    fn apply_block(&self, block: &[T], out: &mut [T]) {
        (**self).apply_block(block, out)
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

/// Explicit symmetric matrix, row-major, exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetric<T> {
    n: usize,
    entries: Vec<T>,
    label: String,
}

impl<T: Real> DenseSymmetric<T> {
    /// Fails unless `entries[i][j] == entries[j][i]` bit-for-bit.
    pub fn new(n: usize, entries: Vec<T>) -> Result<Self> {
        check_dim(n * n, entries.len())?;
        for i in 0..n {
            for j in 0..i {
                if entries[i * n + j] != entries[j * n + i] {
                    return Err(invalid(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self {
            n,
            entries,
            label: "dense".into(),
        })
    }

    /// Averages `A` with its transpose; the result is exactly symmetric.
    pub fn symmetrized(n: usize, mut entries: Vec<T>) -> Result<Self> {
        check_dim(n * n, entries.len())?;
        let half = T::lit(0.5);
        for i in 0..n {
            for j in 0..i {
                let avg = (entries[i * n + j] + entries[j * n + i]) * half;
                entries[i * n + j] = avg;
                entries[j * n + i] = avg;
            }
        }
        Ok(Self {
            n,
            entries,
            label: "dense".into(),
        })
    }

    pub fn from_mat(m: Mat<T>) -> Result<Self> {
        if m.rows != m.cols {
            return Err(invalid("matrix is not square"));
        }
        Self::symmetrized(m.rows, m.data)
    }

    pub fn diagonal(values: &[T]) -> Self {
        let n = values.len();
        let mut entries = vec![T::zero(); n * n];
        for (i, &v) in values.iter().enumerate() {
            entries[i * n + i] = v;
        }
        Self {
            n,
            entries,
            label: "diagonal".into(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![T::one(); n]).with_label("identity")
    }

    /// Assembles the matrix column by column from an operator (`P` applies).
    pub fn from_operator<O: SymmetricOperator<T> + ?Sized>(op: &O) -> Self {
        let n = op.dim();
        let mut entries = vec![T::zero(); n * n];
        let mut e = vec![T::zero(); n];
        let mut col = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            op.apply_into(&e, &mut col);
            e[j] = T::zero();
            for i in 0..n {
                entries[i * n + j] = col[i];
            }
        }
        Self::symmetrized(n, entries)
            .expect("square by construction")
            .with_label(op.label())
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.n + j]
    }

    pub fn diagonal_entries(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> T {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// `Tr(HᵀH)`, the squared Frobenius norm.
    pub fn frobenius_sq(&self) -> T {
        dot(&self.entries, &self.entries)
    }

    pub fn to_mat(&self) -> Mat<T> {
        Mat {
            rows: self.n,
            cols: self.n,
            data: self.entries.clone(),
        }
    }

    fn oracle_guard(&self) -> Result<()> {
        if self.n > ORACLE_MAX_DIM {
            Err(crate::Error::OracleScale {
                dim: self.n,
                cap: ORACLE_MAX_DIM,
            })
        } else {
            Ok(())
        }
    }

    /// Ascending eigenvalues and orthonormal eigenvectors (brute force).
    pub fn eigen(&self) -> Result<SymmetricEigen<T>> {
        self.oracle_guard()?;
        linalg::symmetric_eigen(self.n, &self.entries)
    }

    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        self.oracle_guard()?;
        linalg::symmetric_eigenvalues(self.n, &self.entries)
    }
}

impl<T: Real> SymmetricOperator<T> for DenseSymmetric<T> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, v: &[T], out: &mut [T]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(&self.entries[i * self.n..(i + 1) * self.n], v);
        }
    }

    fn apply_block(&self, block: &[T], out: &mut [T]) {
        let n = self.n;
        let k = block.len() / n;
        if k <= 1 {
            if k == 1 {
                self.apply_into(block, out);
            }
            return;
        }
        // Rows of `out` are (H v_r)ᵀ = v_rᵀ H since H is symmetric.
        T::gemm(k, n, n, block, n, 1, &self.entries, n, 1, out, n, 1);
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// Diagonal operator stored as its diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagonal<T>(pub Vec<T>);

impl<T: Real> SymmetricOperator<T> for Diagonal<T> {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn apply_into(&self, v: &[T], out: &mut [T]) {
        for ((o, d), x) in out.iter_mut().zip(&self.0).zip(v) {
            *o = *d * *x;
        }
    }
    fn label(&self) -> String {
        "diagonal".into()
    }
}

/// `v ↦ ±Hv + μv`.
#[derive(Debug, Clone)]
pub struct Shifted<O> {
    inner: O,
    shift: f64,
    negate: bool,
}

impl<O> Shifted<O> {
    pub fn inner(&self) -> &O {
        &self.inner
    }
}

/// Wraps `op` as `v ↦ ±Hv + μv`; `negate = true` gives `−H + μI`.
pub fn apply_shifted<T: Real, O: SymmetricOperator<T>>(
    op: O,
    shift: T,
    negate: bool,
) -> Shifted<O> {
    Shifted {
        inner: op,
        shift: shift.as_f64(),
        negate,
    }
}

impl<T: Real, O: SymmetricOperator<T>> SymmetricOperator<T> for Shifted<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply_into(&self, v: &[T], out: &mut [T]) {
        self.inner.apply_into(v, out);
        let mu = T::lit(self.shift);
        for (o, x) in out.iter_mut().zip(v) {
            *o = if self.negate {
                mu * *x - *o
            } else {
                *o + mu * *x
            };
        }
    }

    fn label(&self) -> String {
        let sign = if self.negate { "-" } else { "" };
        format!("{sign}({})+{}I", self.inner.label(), self.shift)
    }
}

/// Operator backed by a closure.
pub struct FnOperator<F> {
    dim: usize,
    f: F,
    label: String,
}

impl<F> FnOperator<F> {
    pub fn new(dim: usize, label: impl Into<String>, f: F) -> Self {
        Self {
            dim,
            f,
            label: label.into(),
        }
    }
}

impl<T: Real, F: Fn(&[T], &mut [T]) + Send + Sync> SymmetricOperator<T> for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply_into(&self, v: &[T], out: &mut [T]) {
        (self.f)(v, out)
    }
    fn label(&self) -> String {
        self.label.clone()
    }
}

/// Result of [`symmetry_probe`].
#[derive(Debug, Clone, Copy)]
pub struct SymmetryReport<T> {
    /// max over probe pairs of |uᵀHv − vᵀHu| / (‖u‖‖v‖‖H‖_est)
    pub relative_asymmetry: T,
    pub norm_estimate: T,
}

impl<T: Real> SymmetryReport<T> {
    pub fn passes(&self) -> bool {
        self.relative_asymmetry <= T::lit(1e-8)
    }
}

/// Checks `uᵀ(Hv) = vᵀ(Hu)` on random probe pairs.
pub fn symmetry_probe<T: Real, O: SymmetricOperator<T> + ?Sized>(
    op: &O,
    stream: &mut SeedStream,
    pairs: usize,
) -> Result<SymmetryReport<T>> {
    if pairs == 0 {
        return Err(invalid("symmetry probe needs at least one pair"));
    }
    let n = op.dim();
    let mut worst = T::zero();
    let mut norm_est = T::zero();
    let mut records = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let u: Vec<T> = stream.probe_vector(n, ProbeKind::Gaussian);
        let v: Vec<T> = stream.probe_vector(n, ProbeKind::Gaussian);
        let hu = op.apply(&u);
        let hv = op.apply(&v);
        if !linalg::all_finite(&hu) || !linalg::all_finite(&hv) {
            return Err(crate::Error::NonFinite("operator output"));
        }
        let nu = linalg::norm(&u);
        let nv = linalg::norm(&v);
        norm_est = norm_est
            .max(linalg::norm(&hu) / nu)
            .max(linalg::norm(&hv) / nv);
        records.push(((dot(&u, &hv) - dot(&v, &hu)).abs(), nu * nv));
    }
    let scale = if norm_est > T::zero() {
        norm_est
    } else {
        T::one()
    };
    for (diff, nn) in records {
        worst = worst.max(diff / (nn * scale));
    }
    Ok(SymmetryReport {
        relative_asymmetry: worst,
        norm_estimate: norm_est,
    })
}
