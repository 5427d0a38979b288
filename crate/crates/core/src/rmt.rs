//! Random-matrix ensembles and their limiting spectral laws.
//!
//! Wigner and Wishart samples validate the Lanczos density estimates against
//! the semicircle and Marcenko-Pastur laws; planted spectra (a chosen
//! eigenvalue list rotated by a Haar-random basis) give operators with a known
//! ground truth for the bulk and outlier estimators.

use serde::{Deserialize, Serialize};

use crate::density::DiracMixture;
use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{axpy, dot, norm, scale, Mat};
use crate::operator::{DenseSymmetric, ORACLE_MAX_DIM};
use crate::rng::SeedStream;
use crate::Real;

/// Symmetric matrix with i.i.d. `N(0, 1)` entries on and above the diagonal.
/// With `normalized`, entries are divided by `√P` so the spectrum converges to
/// the semicircle on `[−2, 2]`.
pub fn sample_wigner<T: Real>(
    dim: usize,
    stream: &mut SeedStream,
    normalized: bool,
) -> Result<DenseSymmetric<T>> {
    if dim < 2 {
        return Err(invalid("Wigner samples need dim >= 2"));
    }
    let s = if normalized {
        T::one() / T::from_usize_lossy(dim).sqrt()
    } else {
        T::one()
    };
    let mut a = vec![T::zero(); dim * dim];
    for i in 0..dim {
        for j in i..dim {
            let x = stream.gaussian::<T>() * s;
            a[i * dim + j] = x;
            a[j * dim + i] = x;
        }
    }
    Ok(DenseSymmetric::new(dim, a)?.with_label(if normalized {
        "wigner-normalized"
    } else {
        "wigner"
    }))
}

/// Sample covariance `Y = X Xᵀ / T` with `X ∈ R^{P×T}` standard normal.
pub fn sample_wishart<T: Real>(
    dim: usize,
    samples: usize,
    stream: &mut SeedStream,
) -> Result<DenseSymmetric<T>> {
    if dim == 0 || samples == 0 {
        return Err(invalid("Wishart samples need positive dimensions"));
    }
    let x = Mat {
        rows: dim,
        cols: samples,
        data: stream.gaussian_vec::<T>(dim * samples),
    };
    let mut y = x.matmul(false, &x, true);
    scale(T::one() / T::from_usize_lossy(samples), &mut y.data);
    Ok(DenseSymmetric::from_mat(y)?.with_label("wishart"))
}

/// Marcenko-Pastur parameters: variance `σ²` and ratio `q = P / T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpParams<T> {
    pub variance: T,
    pub ratio: T,
}

impl<T: Real> MpParams<T> {
    pub fn new(variance: T, ratio: T) -> Result<Self> {
        if !(variance > T::zero()) {
            return Err(invalid(format!(
                "MP variance must be positive, got {variance}"
            )));
        }
        if !(ratio >= T::zero()) || !ratio.is_finite() {
            return Err(invalid(format!(
                "MP ratio must be nonnegative, got {ratio}"
            )));
        }
        Ok(Self { variance, ratio })
    }

    pub fn lambda_minus(&self) -> T {
        self.variance * (T::one() - self.ratio.sqrt()).powi(2)
    }

    pub fn lambda_plus(&self) -> T {
        self.variance * (T::one() + self.ratio.sqrt()).powi(2)
    }

    /// Point mass at zero, `max(0, 1 − 1/q)`.
    pub fn zero_mass(&self) -> T {
        if self.ratio > T::one() {
            T::one() - self.ratio.recip()
        } else {
            T::zero()
        }
    }
}

/// Continuous part of the Marcenko-Pastur law,
/// `√((λ₊ − x)(x − λ₋)) / (2π σ² q x)` on `[λ₋, λ₊]`. It integrates to
/// `1 − zero_mass`.
pub fn mp_density<T: Real>(x: T, params: &MpParams<T>) -> T {
    let (lo, hi) = (params.lambda_minus(), params.lambda_plus());
    if !(x > lo && x < hi) || x <= T::zero() || params.ratio == T::zero() {
        return T::zero();
    }
    ((hi - x) * (x - lo)).sqrt() / (T::lit(2.0) * T::PI() * params.variance * params.ratio * x)
}

/// Semicircle density `√(4 − x²) / 2π` on `[−2, 2]`.
pub fn wigner_density<T: Real>(x: T) -> T {
    let four = T::lit(4.0);
    if x.abs() >= T::lit(2.0) {
        T::zero()
    } else {
        (four - x * x).sqrt() / (T::lit(2.0) * T::PI())
    }
}

/// Eigenvalue distribution of one group of a planted spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupDist {
    Uniform,
    Const,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedGroup {
    pub count: usize,
    pub dist: GroupDist,
    pub lo: f64,
    #[serde(default)]
    pub hi: f64,
}

impl PlantedGroup {
    pub fn uniform(count: usize, lo: f64, hi: f64) -> Self {
        Self {
            count,
            dist: GroupDist::Uniform,
            lo,
            hi,
        }
    }

    pub fn constant(count: usize, value: f64) -> Self {
        Self {
            count,
            dist: GroupDist::Const,
            lo: value,
            hi: value,
        }
    }
}

/// `{dim, groups: [{count, dist: "uniform" | "const", lo, hi}], seed}`;
/// `seed` drives the rotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpectrumSpec {
    pub dim: usize,
    pub groups: Vec<PlantedGroup>,
    #[serde(default)]
    pub seed: u64,
}

impl PlantedSpectrumSpec {
    pub fn new(groups: Vec<PlantedGroup>, seed: u64) -> Self {
        let dim = groups.iter().map(|g| g.count).sum();
        Self { dim, groups, seed }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let total: usize = self.groups.iter().map(|g| g.count).sum();
        if total != self.dim {
            return Err(invalid(format!(
                "group counts sum to {total}, dim is {}",
                self.dim
            )));
        }
        if self.dim > ORACLE_MAX_DIM {
            return Err(Error::OracleScale {
                dim: self.dim,
                cap: ORACLE_MAX_DIM,
            });
        }
        for g in &self.groups {
            if g.dist == GroupDist::Uniform && !(g.hi >= g.lo) {
                return Err(invalid(format!(
                    "uniform group has hi < lo ({} < {})",
                    g.hi, g.lo
                )));
            }
        }
        Ok(())
    }

    /// The 1000-dimensional three-band example: 500 zeros, 470 on `[0, 15]`,
    /// 20 on `[0, 60]` and 10 on `[−10, 0]`.
    pub fn three_band_1000(seed: u64) -> Self {
        Self::new(
            vec![
                PlantedGroup::constant(500, 0.0),
                PlantedGroup::uniform(470, 0.0, 15.0),
                PlantedGroup::uniform(20, 0.0, 60.0),
                PlantedGroup::uniform(10, -10.0, 0.0),
            ],
            seed,
        )
    }

    /// The 3000-dimensional bulk-mean example: 2500 zeros, 480 on `[0, 10]`
    /// and 20 on `[0, 300]`; the bulk mean is 5.
    pub fn bulk_mean_3000(seed: u64) -> Self {
        Self::new(
            vec![
                PlantedGroup::constant(2500, 0.0),
                PlantedGroup::uniform(480, 0.0, 10.0),
                PlantedGroup::uniform(20, 0.0, 300.0),
            ],
            seed,
        )
    }
}

/// Draws the eigenvalues of a planted spectrum in group order.
pub fn draw_spectrum<T: Real>(
    spec: &PlantedSpectrumSpec,
    stream: &mut SeedStream,
) -> Result<Vec<T>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.dim);
    for g in &spec.groups {
        for _ in 0..g.count {
            out.push(match g.dist {
                GroupDist::Const => T::lit(g.lo),
                GroupDist::Uniform => stream.uniform(T::lit(g.lo), T::lit(g.hi)),
            });
        }
    }
    Ok(out)
}

const GS_BLOCK: usize = 64;

/// Haar-distributed orthogonal matrix from Gram-Schmidt on Gaussian vectors.
/// Rows of the result are orthonormal.
pub fn haar_orthogonal<T: Real>(dim: usize, stream: &mut SeedStream) -> Mat<T> {
    let mut q = Mat {
        rows: dim,
        cols: dim,
        data: stream.gaussian_vec::<T>(dim * dim),
    };
    let mut start = 0;
    while start < dim {
        let end = (start + GS_BLOCK).min(dim);
        for _ in 0..2 {
            project_out_previous(&mut q, start, end);
            orthonormalize_block(&mut q, start, end, stream);
        }
        start = end;
    }
    q
}

/// Rows `start..end` minus their projection on rows `0..start`, via two GEMMs.
fn project_out_previous<T: Real>(q: &mut Mat<T>, start: usize, end: usize) {
    if start == 0 {
        return;
    }
    let n = q.cols;
    let b = end - start;
    let (prev, rest) = q.data.split_at_mut(start * n);
    let block = &mut rest[..b * n];
    let mut coeffs = vec![T::zero(); b * start];
    T::gemm(b, n, start, block, n, 1, prev, 1, n, &mut coeffs, start, 1);
    let mut proj = vec![T::zero(); b * n];
    T::gemm(b, start, n, &coeffs, start, 1, prev, n, 1, &mut proj, n, 1);
    for (x, p) in block.iter_mut().zip(&proj) {
        *x -= *p;
    }
}

fn orthonormalize_block<T: Real>(
    q: &mut Mat<T>,
    start: usize,
    end: usize,
    stream: &mut SeedStream,
) {
    let n = q.cols;
    let mut r = start;
    while r < end {
        let original = norm(q.row(r));
        for _ in 0..2 {
            for s in start..r {
                let (head, tail) = q.data.split_at_mut(r * n);
                let prev = &head[s * n..(s + 1) * n];
                let row = &mut tail[..n];
                let c = dot(prev, row);
                axpy(-c, prev, row);
            }
        }
        let nr = norm(q.row(r));
        if !(nr > T::lit(1e-8) * original) {
            // numerically dependent draw: replace the row and retry
            let fresh: Vec<T> = stream.gaussian_vec(n);
            q.row_mut(r).copy_from_slice(&fresh);
            let (head, tail) = q.data.split_at_mut(r * n);
            let row = &mut tail[..n];
            for s in 0..start {
                let prev = &head[s * n..(s + 1) * n];
                let c = dot(prev, row);
                axpy(-c, prev, row);
            }
            continue;
        }
        scale(T::one() / nr, q.row_mut(r));
        r += 1;
    }
}

/// `H = Σ_i d_i q_i q_iᵀ` for the orthonormal rows `q_i` of `basis`.
pub fn rotate_spectrum<T: Real>(eigenvalues: &[T], basis: &Mat<T>) -> Result<DenseSymmetric<T>> {
    let n = eigenvalues.len();
    check_dim(n, basis.rows)?;
    check_dim(n, basis.cols)?;
    let mut scaled = basis.clone();
    for (i, &d) in eigenvalues.iter().enumerate() {
        scale(d, scaled.row_mut(i));
    }
    let h = basis.matmul(true, &scaled, false);
    DenseSymmetric::from_mat(h)
}

/// Planted operator `U D Uᵀ` together with its true spectrum (ascending).
/// Eigenvalues come from `stream`; the rotation from `spec.seed`.
pub fn planted_matrix<T: Real>(
    spec: &PlantedSpectrumSpec,
    stream: &mut SeedStream,
) -> Result<(DenseSymmetric<T>, Vec<T>)> {
    let eigenvalues: Vec<T> = draw_spectrum(spec, stream)?;
    let u = haar_orthogonal::<T>(spec.dim, &mut SeedStream::new(spec.seed));
    let h = rotate_spectrum(&eigenvalues, &u)?.with_label("planted");
    let mut sorted = eigenvalues;
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Ok((h, sorted))
}

/// Fits Marcenko-Pastur parameters to the bulk of a mixture.
///
/// Drops the `excluded_zero_modes` atoms of smallest magnitude and the
/// `excluded_outliers` largest atoms. `σ²` is the weighted mean of what
/// remains, and `q` solves `λ₊ = σ²(1 + √q)²` with `λ₊` the largest remaining
/// atom. When the bulk came from a rank-deficient sample covariance the fit
/// describes the nonzero part of its spectrum.
pub fn fit_mp_to_bulk<T: Real>(
    d: &DiracMixture<T>,
    excluded_outliers: usize,
    excluded_zero_modes: usize,
) -> Result<MpParams<T>> {
    let atoms = d.atoms();
    let mut keep = vec![true; atoms.len()];
    let mut by_magnitude: Vec<usize> = (0..atoms.len()).collect();
    by_magnitude.sort_by(|&a, &b| {
        atoms[a]
            .value
            .abs()
            .partial_cmp(&atoms[b].value.abs())
            .expect("finite")
    });
    for &i in by_magnitude.iter().take(excluded_zero_modes) {
        keep[i] = false;
    }
    let mut dropped = 0;
    for i in (0..atoms.len()).rev() {
        if dropped == excluded_outliers {
            break;
        }
        if keep[i] {
            keep[i] = false;
            dropped += 1;
        }
    }
    let bulk: Vec<_> = atoms
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(a, _)| *a)
        .collect();
    let total: T = bulk.iter().map(|a| a.weight).sum();
    if bulk.is_empty() || !(total > T::zero()) {
        return Err(Error::TooFew { needed: 1, got: 0 });
    }
    let mean = bulk.iter().map(|a| a.weight * a.value).sum::<T>() / total;
    let top = bulk.iter().map(|a| a.value).fold(T::neg_infinity(), T::max);
    let root = ((top / mean).sqrt() - T::one()).max(T::zero());
    MpParams::new(mean, root * root)
}

/// Overlap-based eigenvalue cleaning.
#[derive(Debug, Clone)]
pub struct OverlapCleaning<T> {
    /// `ξ̂_i` aligned with the ascending true eigenvalues.
    pub cleaned: Vec<T>,
    pub true_values: Vec<T>,
    pub empirical_values: Vec<T>,
    /// `overlaps.get(i, j) = ⟨u_i | û_j⟩²`.
    pub overlaps: Mat<T>,
}

const RIE_MAX_DIM: usize = 500;

/// `ξ̂_i = Σ_j ⟨u_i|û_j⟩² λ̂_j`, with `u_i` the eigenvectors of `truth` and
/// `(û_j, λ̂_j)` the eigenpairs of `empirical`.
pub fn rie_clean<T: Real>(
    truth: &DenseSymmetric<T>,
    empirical: &DenseSymmetric<T>,
) -> Result<OverlapCleaning<T>> {
    check_dim(truth.n(), empirical.n())?;
    if truth.n() > RIE_MAX_DIM {
        return Err(Error::OracleScale {
            dim: truth.n(),
            cap: RIE_MAX_DIM,
        });
    }
    let n = truth.n();
    let te = truth.eigen()?;
    let ee = empirical.eigen()?;
    let mut overlaps = Mat::zeros(n, n);
    // column-major eigenvector storage: Uᵀ Û is a GEMM on the raw buffers
    T::gemm(
        n,
        n,
        n,
        &te.vectors,
        n,
        1,
        &ee.vectors,
        1,
        n,
        &mut overlaps.data,
        n,
        1,
    );
    for x in &mut overlaps.data {
        *x = *x * *x;
    }
    let cleaned = (0..n).map(|i| dot(overlaps.row(i), &ee.values)).collect();
    Ok(OverlapCleaning {
        cleaned,
        true_values: te.values,
        empirical_values: ee.values,
        overlaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mp_edges_closed_form() {
        let p = MpParams::new(1.0f64, 2.0).unwrap();
        assert!((p.lambda_minus() - (1.0 - 2f64.sqrt()).powi(2)).abs() < 1e-15);
        assert!((p.lambda_minus() - 0.171_572_875).abs() < 1e-8);
        assert!((p.lambda_plus() - 5.828_427_125).abs() < 1e-8);
        assert_eq!(p.zero_mass(), 0.5);
        assert_eq!(MpParams::new(1.0f64, 0.5).unwrap().zero_mass(), 0.0);
        assert!(MpParams::new(0.0f64, 0.5).is_err());
    }

    #[test]
    fn semicircle_values() {
        assert!((wigner_density(0.0f64) - 1.0 / std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(wigner_density(3.0f64), 0.0);
    }

    #[test]
    fn planted_spec_json() {
        let text = r#"{"dim": 4, "groups": [{"count": 2, "dist": "const", "lo": 0.0},
                       {"count": 2, "dist": "uniform", "lo": 1.0, "hi": 3.0}], "seed": 9}"#;
        let spec = PlantedSpectrumSpec::from_json(text).unwrap();
        assert_eq!(spec.dim, 4);
        assert_eq!(spec.seed, 9);
        let bad = r#"{"dim": 5, "groups": [{"count": 2, "dist": "const", "lo": 0.0}]}"#;
        assert!(PlantedSpectrumSpec::from_json(bad).is_err());
    }

    #[test]
    fn identity_rotation_gives_diagonal() {
        let d = [3.0f64, -1.0, 2.0];
        let h = rotate_spectrum(&d, &Mat::identity(3)).unwrap();
        assert_eq!(h.entries(), DenseSymmetric::diagonal(&d).entries());
    }

    #[test]
    fn haar_rows_are_orthonormal() {
        let q = haar_orthogonal::<f64>(150, &mut SeedStream::new(4));
        let g = q.matmul(false, &q, true);
        let dev = (0..150)
            .flat_map(|i| (0..150).map(move |j| (i, j)))
            .map(|(i, j)| (g.get(i, j) - if i == j { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        assert!(dev < 1e-12, "{dev}");
    }

    #[test]
    fn single_atom_bulk_fit_degenerates() {
        let d = DiracMixture::from_atoms(vec![(4.0f64, 1.0)]).unwrap();
        let p = fit_mp_to_bulk(&d, 0, 0).unwrap();
        assert_eq!(p.variance, 4.0);
        assert_eq!(p.ratio, 0.0);
        assert!(fit_mp_to_bulk(&d, 1, 0).is_err());
    }

    #[test]
    fn rie_dimension_mismatch() {
        let a = DenseSymmetric::<f64>::identity(2);
        let b = DenseSymmetric::<f64>::identity(3);
        assert!(rie_clean(&a, &b).is_err());
    }
}
