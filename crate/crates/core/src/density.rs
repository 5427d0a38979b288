//! Discrete spectral densities (Dirac mixtures), multi-seed averaging,
//! stochastic trace estimation and the effect of kernel smoothing on moments.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::lanczos::RitzDecomposition;
use crate::linalg::dot;
use crate::operator::SymmetricOperator;
use crate::rng::{ProbeKind, SeedStream};
use crate::Real;

/// Atoms closer than this are merged when mixtures are combined.
pub const MERGE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom<T> {
    pub value: T,
    pub weight: T,
}

/// Normalized discrete spectral density `Σ w_i δ(λ − λ_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracMixture<T> {
    atoms: Vec<Atom<T>>,
    pub seeds: usize,
    pub steps: usize,
    pub label: String,
}

impl<T: Real> DiracMixture<T> {
    /// Sorts, merges near-duplicate locations and renormalizes the weights.
    pub fn from_atoms(atoms: impl IntoIterator<Item = (T, T)>) -> Result<Self> {
        let mut raw: Vec<Atom<T>> = atoms
            .into_iter()
            .map(|(value, weight)| Atom { value, weight })
            .collect();
        if raw.is_empty() {
            return Err(Error::Empty("atom list"));
        }
        for a in &raw {
            if !a.value.is_finite() || !a.weight.is_finite() {
                return Err(Error::NonFinite("mixture atom"));
            }
            if a.weight < T::zero() {
                return Err(invalid("atom weights must be nonnegative"));
            }
        }
        raw.sort_by(|a, b| a.value.partial_cmp(&b.value).expect("finite"));
        let tol = T::lit(MERGE_TOLERANCE);
        let mut merged: Vec<Atom<T>> = Vec::with_capacity(raw.len());
        for a in raw {
            match merged.last_mut() {
                Some(last) if (a.value - last.value).abs() <= tol => last.weight += a.weight,
                _ => merged.push(a),
            }
        }
        let total: T = merged.iter().map(|a| a.weight).sum();
        if !(total > T::zero()) {
            return Err(invalid("mixture has zero total weight"));
        }
        for a in &mut merged {
            a.weight /= total;
        }
        Ok(Self {
            atoms: merged,
            seeds: 1,
            steps: 0,
            label: String::new(),
        })
    }

    /// The empirical spectrum of `values`, each with weight `1/P`.
    pub fn uniform(values: &[T]) -> Result<Self> {
        let w = T::one() / T::from_usize_lossy(values.len().max(1));
        Self::from_atoms(values.iter().map(|&v| (v, w)))
    }

    pub fn from_ritz(r: &RitzDecomposition<T>) -> Result<Self> {
        let mut d = Self::from_atoms(r.values.iter().copied().zip(r.weights.iter().copied()))?;
        d.steps = r.steps;
        Ok(d)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn values(&self) -> Vec<T> {
        self.atoms.iter().map(|a| a.value).collect()
    }

    pub fn weights(&self) -> Vec<T> {
        self.atoms.iter().map(|a| a.weight).collect()
    }

    pub fn max_value(&self) -> T {
        self.atoms.last().expect("non-empty").value
    }

    pub fn min_value(&self) -> T {
        self.atoms[0].value
    }

    /// Total weight of atoms with `|λ| ≤ tol`.
    pub fn mass_near_zero(&self, tol: T) -> T {
        self.atoms
            .iter()
            .filter(|a| a.value.abs() <= tol)
            .map(|a| a.weight)
            .sum()
    }

    pub fn moment(&self, k: u32) -> T {
        mixture_moment(self, k)
    }
}

/// Averages per-seed quadrature rules into one mixture: atom `(θ_k^(l), τ_k^(l)²/n_v)`.
pub fn average_over_seeds<T: Real>(
    decompositions: &[RitzDecomposition<T>],
) -> Result<DiracMixture<T>> {
    let first = decompositions
        .first()
        .ok_or(Error::Empty("decomposition list"))?;
    let nv = T::from_usize_lossy(decompositions.len());
    let atoms = decompositions.iter().flat_map(|r| {
        r.values
            .iter()
            .zip(&r.weights)
            .map(move |(&v, &w)| (v, w / nv))
    });
    let mut d = DiracMixture::from_atoms(atoms)?;
    d.seeds = decompositions.len();
    d.steps = first.steps;
    Ok(d)
}

/// `Σ w_i λ_iᵏ`
pub fn mixture_moment<T: Real>(d: &DiracMixture<T>, k: u32) -> T {
    d.atoms
        .iter()
        .map(|a| a.weight * a.value.powi(k as i32))
        .sum()
}

/// Result of [`stochastic_trace`].
#[derive(Debug, Clone)]
pub struct TraceEstimate<T> {
    pub value: T,
    pub per_probe: Vec<T>,
    pub probes: usize,
    /// `(2 + m₄) Tr((Hᵏ)ᵀHᵏ)`, with the trace itself estimated from one extra probe.
    pub variance_bound: T,
}

impl<T: Real> TraceEstimate<T> {
    /// Unbiased sample variance of the per-probe values.
    pub fn sample_variance(&self) -> T {
        let n = self.per_probe.len();
        if n < 2 {
            return T::zero();
        }
        let mean = self.value;
        let ss: T = self.per_probe.iter().map(|&x| (x - mean).powi(2)).sum();
        ss / T::from_usize_lossy(n - 1)
    }
}

fn apply_power<T: Real, O: SymmetricOperator<T> + ?Sized>(op: &O, v: &[T], k: u32) -> Vec<T> {
    let mut out = v.to_vec();
    for _ in 0..k {
        out = op.apply(&out);
    }
    out
}

/// Hutchinson estimate of `Tr Hᵏ` from `probes` zero-mean, unit-variance vectors.
///
/// Probe vectors are drawn sequentially from `stream`; the quadratic forms are
/// evaluated in parallel and reduced in probe order.
pub fn stochastic_trace<T: Real, O: SymmetricOperator<T> + ?Sized>(
    op: &O,
    power: u32,
    probes: usize,
    kind: ProbeKind,
    stream: &mut SeedStream,
) -> Result<TraceEstimate<T>> {
    if power == 0 {
        return Err(invalid("trace power must be at least 1"));
    }
    if probes == 0 {
        return Err(invalid("need at least one probe"));
    }
    let n = op.dim();
    let vectors: Vec<Vec<T>> = (0..probes).map(|_| stream.probe_vector(n, kind)).collect();
    let half = power / 2;
    let per_probe: Vec<T> = vectors
        .par_iter()
        .map(|v| {
            let left = apply_power(op, v, half);
            let right = if power % 2 == 1 {
                op.apply(&left)
            } else {
                left.clone()
            };
            dot(&left, &right)
        })
        .collect();
    if per_probe.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("operator output"));
    }
    let extra: Vec<T> = stream.probe_vector(n, kind);
    let hk = apply_power(op, &extra, power);
    let frob_sq = dot(&hk, &hk);
    let m4 = T::lit(kind.fourth_moment());
    let value = per_probe.iter().copied().sum::<T>() / T::from_usize_lossy(probes);
    Ok(TraceEstimate {
        value,
        per_probe,
        probes,
        variance_bound: (T::lit(2.0) + m4) * frob_sq,
    })
}

/// Smoothing kernel. Only the Gaussian family is provided.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec<T> {
    bandwidth: T,
}

impl<T: Real> KernelSpec<T> {
    pub fn gaussian(bandwidth: T) -> Result<Self> {
        if !(bandwidth > T::zero()) || !bandwidth.is_finite() {
            return Err(invalid(format!(
                "kernel bandwidth must be positive, got {bandwidth}"
            )));
        }
        Ok(Self { bandwidth })
    }

    pub fn bandwidth(&self) -> T {
        self.bandwidth
    }

    /// Kernel density at offset `x`.
    pub fn density(&self, x: T) -> T {
        let s = self.bandwidth;
        let z = x / s;
        (-(z * z) / T::lit(2.0)).exp() / (s * (T::lit(2.0) * T::PI()).sqrt())
    }

    /// `E[x^{2j}] = σ^{2j} (2j − 1)!!`
    pub fn even_moment(&self, j: u32) -> T {
        let mut dfact = T::one();
        let mut k = 2 * j as i64 - 1;
        while k > 1 {
            dfact *= T::lit(k as f64);
            k -= 2;
        }
        self.bandwidth.powi(2 * j as i32) * dfact
    }
}

fn binomial<T: Real>(n: u32, k: u32) -> T {
    let mut out = T::one();
    for i in 0..k {
        out = out * T::lit((n - i) as f64) / T::lit((i + 1) as f64);
    }
    out
}

/// `m`-th moment of the mixture convolved with the kernel, in closed form:
/// `Σ w_i Σ_{j=0}^{⌊m/2⌋} C(m, 2j) E[x^{2j}] λ_i^{m−2j}`.
pub fn smoothed_moment<T: Real>(d: &DiracMixture<T>, kernel: &KernelSpec<T>, m: u32) -> T {
    mixture_moment(d, m) + smoothing_bias(d, kernel, m)
}

/// Difference between the smoothed and raw `m`-th moments. Odd kernel moments
/// vanish, so only even terms contribute.
pub fn smoothing_bias<T: Real>(d: &DiracMixture<T>, kernel: &KernelSpec<T>, m: u32) -> T {
    let mut total = T::zero();
    for j in 1..=(m / 2) {
        let coeff = binomial::<T>(m, 2 * j) * kernel.even_moment(j);
        let inner: T = d
            .atoms
            .iter()
            .map(|a| a.weight * a.value.powi((m - 2 * j) as i32))
            .sum();
        total += coeff * inner;
    }
    total
}
