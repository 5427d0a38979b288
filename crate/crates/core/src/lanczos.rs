//! m-step Lanczos tridiagonalization with full reorthogonalization, the Ritz
//! / Gauss-quadrature decomposition of the resulting tridiagonal matrix, and
//! the Lanczos-versus-power-iteration convergence bound calculator.
//!
//! For a unit seed `v`, the tridiagonal `T` produced after `m` steps defines a
//! Gauss quadrature rule whose nodes are the eigenvalues `θ_k` of `T` and whose
//! weights are the squared first components `τ_k²` of its normalized
//! eigenvectors. The rule reproduces `vᵀHʲv` exactly for `j ≤ 2m − 1`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{self, axpy, dot, norm};
use crate::operator::SymmetricOperator;
use crate::rng::ProbeKind;
use crate::Real;

/// Relative size of `β` below which the Krylov space is declared invariant.
pub const BREAKDOWN_TOLERANCE: f64 = 1e-12;

/// Symmetric tridiagonal matrix `T` built by the recurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal<T> {
    pub alphas: Vec<T>,
    /// `betas[i]` couples rows `i` and `i + 1`.
    pub betas: Vec<T>,
}

impl<T: Real> Tridiagonal<T> {
    pub fn steps(&self) -> usize {
        self.alphas.len()
    }

    pub fn to_dense(&self) -> Vec<T> {
        let m = self.steps();
        let mut out = vec![T::zero(); m * m];
        for i in 0..m {
            out[i * m + i] = self.alphas[i];
        }
        for (i, &b) in self.betas.iter().enumerate() {
            out[i * m + i + 1] = b;
            out[(i + 1) * m + i] = b;
        }
        out
    }
}

/// Output of [`lanczos_run`].
#[derive(Debug, Clone)]
pub struct LanczosRun<T> {
    pub tridiagonal: Tridiagonal<T>,
    /// Orthonormal Lanczos vectors, one per completed step.
    pub basis: Vec<Vec<T>>,
    /// Requested number of steps.
    pub requested_steps: usize,
    /// True when an invariant subspace terminated the recurrence early.
    pub breakdown: bool,
}

impl<T: Real> LanczosRun<T> {
    /// `max |VᵀV − I|` over the stored basis.
    pub fn orthogonality_loss(&self) -> T {
        orthogonality_loss(&self.basis)
    }

    pub fn into_ritz(self, keep_vectors: bool) -> Result<RitzDecomposition<T>> {
        let basis = if keep_vectors {
            Some(self.basis.as_slice())
        } else {
            None
        };
        ritz_decompose(&self.tridiagonal, basis)
    }
}

pub fn orthogonality_loss<T: Real>(basis: &[Vec<T>]) -> T {
    let mut worst = T::zero();
    for i in 0..basis.len() {
        for j in 0..=i {
            let d = dot(&basis[i], &basis[j]);
            let target = if i == j { T::one() } else { T::zero() };
            worst = worst.max((d - target).abs());
        }
    }
    worst
}

/// Per-seed recurrence state, shared by the single and batched drivers.
struct LanczosState<T> {
    basis: Vec<Vec<T>>,
    alphas: Vec<T>,
    betas: Vec<T>,
    steps: usize,
    reorthogonalize: bool,
    scale: T,
    done: bool,
    breakdown: bool,
}

impl<T: Real> LanczosState<T> {
    fn new(seed: &[T], steps: usize, reorthogonalize: bool) -> Result<Self> {
        if !linalg::all_finite(seed) {
            return Err(Error::NonFinite("seed vector"));
        }
        let nrm = norm(seed);
        if nrm == T::zero() {
            return Err(Error::ZeroSeed);
        }
        let v: Vec<T> = seed.iter().map(|&x| x / nrm).collect();
        let mut basis = Vec::with_capacity(steps);
        basis.push(v);
        Ok(Self {
            basis,
            alphas: Vec::with_capacity(steps),
            betas: Vec::with_capacity(steps),
            steps,
            reorthogonalize,
            scale: T::zero(),
            done: false,
            breakdown: false,
        })
    }

    fn current(&self) -> &[T] {
        self.basis.last().expect("basis is never empty")
    }

    /// Consumes `w = H v_j` and produces `v_{j+1}`.
    fn advance(&mut self, mut w: Vec<T>) -> Result<()> {
        if !linalg::all_finite(&w) {
            return Err(Error::NonFinite("operator output"));
        }
        let j = self.alphas.len();
        if j > 0 {
            let beta = self.betas[j - 1];
            axpy(-beta, &self.basis[j - 1], &mut w);
        }
        let alpha = dot(&w, &self.basis[j]);
        axpy(-alpha, &self.basis[j], &mut w);
        if self.reorthogonalize {
            // two classical Gram-Schmidt passes against every stored vector
            for _ in 0..2 {
                let coeffs: Vec<T> = self.basis.iter().map(|q| dot(q, &w)).collect();
                for (q, c) in self.basis.iter().zip(coeffs) {
                    axpy(-c, q, &mut w);
                }
            }
        }
        self.alphas.push(alpha);
        self.scale = self.scale.max(alpha.abs());
        if self.alphas.len() == self.steps {
            self.done = true;
            return Ok(());
        }
        let beta = norm(&w);
        self.scale = self.scale.max(beta);
        if beta <= T::lit(BREAKDOWN_TOLERANCE) * self.scale || beta == T::zero() {
            self.done = true;
            self.breakdown = true;
            return Ok(());
        }
        let inv = T::one() / beta;
        linalg::scale(inv, &mut w);
        self.betas.push(beta);
        self.basis.push(w);
        Ok(())
    }

    fn finish(self) -> LanczosRun<T> {
        LanczosRun {
            tridiagonal: Tridiagonal {
                alphas: self.alphas,
                betas: self.betas,
            },
            basis: self.basis,
            requested_steps: self.steps,
            breakdown: self.breakdown,
        }
    }
}

fn validate<T: Real, O: SymmetricOperator<T> + ?Sized>(
    op: &O,
    steps: usize,
    seed: &[T],
) -> Result<()> {
    check_dim(op.dim(), seed.len())?;
    if steps == 0 || steps > op.dim() {
        return Err(invalid(format!(
            "steps must lie in 1..={}, got {steps}",
            op.dim()
        )));
    }
    Ok(())
}

/// Runs `steps` Lanczos iterations from `seed`.
///
/// With `reorthogonalize`, each new vector is projected against all previous
/// ones (two Gram-Schmidt passes). If `β` drops below
/// [`BREAKDOWN_TOLERANCE`] times the running magnitude of the recurrence
/// coefficients, the run is truncated to the completed steps.
pub fn lanczos_run<T: Real, O: SymmetricOperator<T> + ?Sized>(
    op: &O,
    steps: usize,
    seed: &[T],
    reorthogonalize: bool,
) -> Result<LanczosRun<T>> {
    validate(op, steps, seed)?;
    let mut state = LanczosState::new(seed, steps, reorthogonalize)?;
    let mut w = vec![T::zero(); op.dim()];
    while !state.done {
        op.apply_into(state.current(), &mut w);
        state.advance(w.clone())?;
    }
    Ok(state.finish())
}

/// Runs independent Lanczos recurrences in lock-step so that each step costs
/// one block application of the operator.
pub fn lanczos_run_batch<T: Real, O: SymmetricOperator<T> + ?Sized>(
    op: &O,
    steps: usize,
    seeds: &[Vec<T>],
    reorthogonalize: bool,
) -> Result<Vec<LanczosRun<T>>> {
    for s in seeds {
        validate(op, steps, s)?;
    }
    let n = op.dim();
    let mut states = seeds
        .iter()
        .map(|s| LanczosState::new(s, steps, reorthogonalize))
        .collect::<Result<Vec<_>>>()?;
    let mut block = Vec::with_capacity(n * seeds.len());
    let mut out = Vec::new();
    loop {
        let active: Vec<usize> = (0..states.len()).filter(|&i| !states[i].done).collect();
        if active.is_empty() {
            break;
        }
        block.clear();
        for &i in &active {
            block.extend_from_slice(states[i].current());
        }
        out.clear();
        out.resize(block.len(), T::zero());
        op.apply_block(&block, &mut out);
        for (slot, &i) in active.iter().enumerate() {
            states[i].advance(out[slot * n..(slot + 1) * n].to_vec())?;
        }
    }
    Ok(states.into_iter().map(LanczosState::finish).collect())
}

/// Where a Lanczos seed came from; recorded for provenance only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SeedKind {
    Rademacher,
    Gaussian,
    Gradient,
    #[default]
    Custom,
}

impl From<ProbeKind> for SeedKind {
    fn from(k: ProbeKind) -> Self {
        match k {
            ProbeKind::Rademacher => SeedKind::Rademacher,
            ProbeKind::Gaussian => SeedKind::Gaussian,
        }
    }
}

/// Ritz values, quadrature weights and (optionally) Ritz vectors.
#[derive(Debug, Clone)]
pub struct RitzDecomposition<T> {
    /// Ascending Ritz values θ.
    pub values: Vec<T>,
    /// Quadrature weights τ², summing to one.
    pub weights: Vec<T>,
    /// Ritz vectors `u_i = V e_i`, aligned with `values`.
    pub vectors: Option<Vec<Vec<T>>>,
    pub steps: usize,
    pub seed_kind: SeedKind,
}

impl<T: Real> RitzDecomposition<T> {
    pub fn with_seed_kind(mut self, kind: SeedKind) -> Self {
        self.seed_kind = kind;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_value(&self) -> T {
        *self.values.last().expect("non-empty decomposition")
    }

    pub fn min_value(&self) -> T {
        self.values[0]
    }

    /// Σ τ²θᵏ
    pub fn quadrature_moment(&self, k: u32) -> T {
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * t.powi(k as i32))
            .sum()
    }
}

/// Eigen-decomposes `T`; weights are the squared first components of its
/// normalized eigenvectors, vectors are back-projected through `basis`.
pub fn ritz_decompose<T: Real>(
    tri: &Tridiagonal<T>,
    basis: Option<&[Vec<T>]>,
) -> Result<RitzDecomposition<T>> {
    let m = tri.steps();
    if m == 0 {
        return Err(Error::Empty("tridiagonal matrix"));
    }
    let eig = linalg::tridiagonal_eigen(&tri.alphas, &tri.betas)?;
    let mut weights: Vec<T> = (0..m).map(|i| eig.vector(i)[0].powi(2)).collect();
    let total: T = weights.iter().copied().sum();
    for w in &mut weights {
        *w /= total;
    }
    let vectors = match basis {
        None => None,
        Some(b) => {
            check_dim(m, b.len())?;
            let p = b[0].len();
            let mut out = Vec::with_capacity(m);
            for i in 0..m {
                let e = eig.vector(i);
                let mut u = vec![T::zero(); p];
                for (coef, v) in e.iter().zip(b) {
                    axpy(*coef, v, &mut u);
                }
                out.push(u);
            }
            Some(out)
        }
    };
    Ok(RitzDecomposition {
        values: eig.values,
        weights,
        vectors,
        steps: m,
        seed_kind: SeedKind::Custom,
    })
}

/// `|Σ τ²θᵏ − v̂ᵀHᵏv̂| / max(1, |v̂ᵀHᵏv̂|)` for the unit seed `v̂`, with the
/// right side computed by repeated application of `op`.
pub fn moment_match_check<T: Real, O: SymmetricOperator<T> + ?Sized>(
    op: &O,
    decomposition: &RitzDecomposition<T>,
    seed: &[T],
    order: u32,
) -> Result<T> {
    check_dim(op.dim(), seed.len())?;
    let exact_degree = 2 * decomposition.steps - 1;
    if order as usize > exact_degree {
        return Err(invalid(format!(
            "order {order} exceeds the quadrature exactness degree {exact_degree}"
        )));
    }
    let nrm = norm(seed);
    if nrm == T::zero() {
        return Err(Error::ZeroSeed);
    }
    let v: Vec<T> = seed.iter().map(|&x| x / nrm).collect();
    // vᵀHᵏv = (H^a v)ᵀ(H^b v) with a + b = k, keeping the powers balanced
    let half = order / 2;
    let mut left = v.clone();
    for _ in 0..half {
        left = op.apply(&left);
    }
    let right = if order % 2 == 1 {
        op.apply(&left)
    } else {
        left.clone()
    };
    let exact = dot(&left, &right);
    let approx = decomposition.quadrature_moment(order);
    Ok((approx - exact).abs() / T::one().max(exact.abs()))
}

/// Chebyshev polynomial of the first kind via the three-term recurrence.
pub fn chebyshev_t<T: Real>(order: usize, x: T) -> T {
    let two = T::lit(2.0);
    let (mut prev, mut cur) = (T::one(), x);
    if order == 0 {
        return prev;
    }
    for _ in 1..order {
        let next = two * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Non-shared factors of the Lanczos and power-iteration lower bounds on the
/// top eigenvalue after `steps` iterations, for spectral gap `λ₁/λ₂`.
///
/// With `λ₂ = 1` and `λ_n = 0`, `ρ = gap − 1`, the Lanczos factor is
/// `1 / c_{m−1}(1 + 2ρ)²` and the power-iteration factor is `gap^{−2(m−1)}`.
pub fn chebyshev_bound_ratio<T: Real>(gap: T, steps: usize) -> Result<(T, T)> {
    if !(gap > T::one()) {
        return Err(invalid(format!("spectral gap must exceed 1, got {gap}")));
    }
    if steps < 2 {
        return Err(invalid(format!("need at least 2 steps, got {steps}")));
    }
    let rho = gap - T::one();
    let c = chebyshev_t(steps - 1, T::one() + T::lit(2.0) * rho);
    let lanczos = T::one() / (c * c);
    let power = gap.recip().powi(2 * (steps as i32 - 1));
    Ok((lanczos, power))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::DenseSymmetric;

    #[test]
    fn identity_breaks_down_after_one_step() {
        let id = DenseSymmetric::<f64>::identity(5);
        let run = lanczos_run(&id, 4, &[1.0, 2.0, 0.0, -1.0, 3.0], true).unwrap();
        assert!(run.breakdown);
        assert_eq!(run.tridiagonal.alphas.len(), 1);
        assert!((run.tridiagonal.alphas[0] - 1.0).abs() < 1e-15);
        let ritz = run.into_ritz(false).unwrap();
        assert_eq!(ritz.weights, vec![1.0]);
    }

    #[test]
    fn diag_123_equal_overlap_seed() {
        let d = DenseSymmetric::diagonal(&[1.0f64, 2.0, 3.0]);
        let s = 1.0 / 3f64.sqrt();
        let ritz = lanczos_run(&d, 3, &[s, s, s], true)
            .unwrap()
            .into_ritz(true)
            .unwrap();
        for (v, want) in ritz.values.iter().zip([1.0, 2.0, 3.0]) {
            assert!((v - want).abs() < 1e-12);
        }
        for w in &ritz.weights {
            assert!((w - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_step_tridiagonal_is_trivial() {
        let tri = Tridiagonal {
            alphas: vec![1.0f64],
            betas: vec![],
        };
        let r = ritz_decompose(&tri, None).unwrap();
        assert_eq!(r.values, vec![1.0]);
        assert_eq!(r.weights, vec![1.0]);
    }

    #[test]
    fn zero_seed_and_bad_steps_are_rejected() {
        let d = DenseSymmetric::diagonal(&[1.0f64, 2.0]);
        assert_eq!(
            lanczos_run(&d, 2, &[0.0, 0.0], true).unwrap_err(),
            Error::ZeroSeed
        );
        assert!(lanczos_run(&d, 3, &[1.0, 0.0], true).is_err());
        assert!(lanczos_run(&d, 0, &[1.0, 0.0], true).is_err());
        assert!(lanczos_run(&d, 1, &[1.0], true).is_err());
    }

    #[test]
    fn nan_operator_output_is_an_error() {
        let bad = crate::operator::FnOperator::new(2, "nan", |_: &[f64], o: &mut [f64]| {
            o[0] = f64::NAN;
            o[1] = 0.0;
        });
        assert_eq!(
            lanczos_run(&bad, 2, &[1.0, 1.0], true).unwrap_err(),
            Error::NonFinite("operator output")
        );
    }

    #[test]
    fn moment_order_beyond_exactness_is_rejected() {
        let d = DenseSymmetric::diagonal(&[1.0f64, 2.0, 3.0]);
        let seed = [1.0, 1.0, 1.0];
        let r = lanczos_run(&d, 2, &seed, true)
            .unwrap()
            .into_ritz(false)
            .unwrap();
        assert!(moment_match_check(&d, &r, &seed, 3).is_ok());
        assert!(moment_match_check(&d, &r, &seed, 4).is_err());
        assert!(moment_match_check(&d, &r, &seed, 0).unwrap() < 1e-14);
    }

    #[test]
    fn chebyshev_values() {
        assert_eq!(chebyshev_t(9, 2.0f64), 70226.0);
        assert_eq!(chebyshev_t(0, 0.3f64), 1.0);
        assert_eq!(chebyshev_t(1, 0.3f64), 0.3);
        assert!(chebyshev_bound_ratio(1.0f64, 5).is_err());
        assert!(chebyshev_bound_ratio(1.5f64, 1).is_err());
    }

    #[test]
    fn batch_matches_single_runs() {
        let mut s = crate::rng::SeedStream::new(9);
        let n = 30;
        let raw: Vec<f64> = s.gaussian_vec(n * n);
        let m = DenseSymmetric::symmetrized(n, raw).unwrap();
        let seeds: Vec<Vec<f64>> = (0..3).map(|_| s.gaussian_vec(n)).collect();
        let batch = lanczos_run_batch(&m, 12, &seeds, true).unwrap();
        for (seed, b) in seeds.iter().zip(&batch) {
            let single = lanczos_run(&m, 12, seed, true).unwrap();
            for (x, y) in single.tridiagonal.alphas.iter().zip(&b.tridiagonal.alphas) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }
}
