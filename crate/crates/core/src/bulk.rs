//! Estimators for the bulk mean and the outliers of a finite-sample spectrum.

use serde::{Deserialize, Serialize};

use crate::density::DiracMixture;
use crate::error::{invalid, Error, Result};
use crate::operator::DenseSymmetric;
use crate::rng::SeedStream;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BulkMethod {
    RandomVectorWeighted,
    GradientMedian,
}

impl std::str::FromStr for BulkMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "random_vector_weighted" | "weighted" => Ok(BulkMethod::RandomVectorWeighted),
            "gradient_median" | "median" => Ok(BulkMethod::GradientMedian),
            other => Err(format!("unknown bulk method '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BulkEstimate<T> {
    pub lambda_b: T,
    pub removed_zero_modes: usize,
    pub removed_outliers: usize,
    pub method: BulkMethod,
}

/// Index of the entry with the smallest magnitude (first one on ties).
fn smallest_magnitude<T: Real>(values: impl Iterator<Item = T>) -> usize {
    let mut best = 0;
    let mut best_abs = T::infinity();
    for (i, v) in values.enumerate() {
        if v.abs() < best_abs {
            best_abs = v.abs();
            best = i;
        }
    }
    best
}

/// Weighted bulk mean of a mixture: drop the smallest-magnitude atom (the
/// spurious zero spike), drop the `layers` largest atoms (one outlier per
/// layer), renormalize, and average.
pub fn bulk_mean_random_vector<T: Real>(
    d: &DiracMixture<T>,
    layers: usize,
) -> Result<BulkEstimate<T>> {
    let atoms = d.atoms();
    if atoms.len() < layers + 2 {
        return Err(Error::TooFew {
            needed: layers + 2,
            got: atoms.len(),
        });
    }
    // atoms are sorted ascending, so the top `layers` are the tail
    let mut kept = atoms[..atoms.len() - layers].to_vec();
    kept.remove(smallest_magnitude(kept.iter().map(|a| a.value)));
    let total: T = kept.iter().map(|a| a.weight).sum();
    if !(total > T::zero()) {
        return Err(invalid(
            "no bulk mass left after removing outliers and the zero spike",
        ));
    }
    let lambda_b = kept.iter().map(|a| a.weight * a.value).sum::<T>() / total;
    Ok(BulkEstimate {
        lambda_b,
        removed_zero_modes: 1,
        removed_outliers: layers,
        method: BulkMethod::RandomVectorWeighted,
    })
}

/// Median bulk estimate for gradient-seeded Ritz values, which carry no
/// usable quadrature weights. Same removals as [`bulk_mean_random_vector`].
pub fn bulk_median_gradient<T: Real>(ritz_values: &[T], layers: usize) -> Result<BulkEstimate<T>> {
    if ritz_values.len() < layers + 2 {
        return Err(Error::TooFew {
            needed: layers + 2,
            got: ritz_values.len(),
        });
    }
    if ritz_values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ritz values"));
    }
    let mut v = ritz_values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    v.truncate(v.len() - layers);
    let z = smallest_magnitude(v.iter().copied());
    v.remove(z);
    let n = v.len();
    let lambda_b = if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) * T::lit(0.5)
    };
    Ok(BulkEstimate {
        lambda_b,
        removed_zero_modes: 1,
        removed_outliers: layers,
        method: BulkMethod::GradientMedian,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport<T> {
    pub count: usize,
    /// Descending.
    pub predicted: Vec<T>,
    pub gap_threshold: Option<T>,
    /// `false` when the block heuristic's separation condition fails.
    pub separation_ok: bool,
}

/// Outlier count from relative gaps `Δ_i = (λ_i − λ_{i+1}) / λ_1` of the
/// descending Ritz values: the largest `i` with `Δ_i ≥ c`, or 0.
pub fn count_outliers_gap<T: Real>(ritz_values: &[T], threshold: T) -> Result<OutlierReport<T>> {
    if !(threshold > T::zero() && threshold < T::one()) {
        return Err(invalid(format!(
            "gap threshold must lie in (0, 1), got {threshold}"
        )));
    }
    if ritz_values.is_empty() {
        return Err(Error::Empty("ritz values"));
    }
    if ritz_values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ritz values"));
    }
    let mut v = ritz_values.to_vec();
    v.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let top = v[0];
    if !(top > T::zero()) {
        return Err(invalid(
            "largest Ritz value must be positive for relative gaps",
        ));
    }
    let count = v
        .windows(2)
        .enumerate()
        .filter(|(_, w)| (w[0] - w[1]) / top >= threshold)
        .map(|(i, _)| i + 1)
        .max()
        .unwrap_or(0);
    Ok(OutlierReport {
        count,
        predicted: v[..count].to_vec(),
        gap_threshold: Some(threshold),
        separation_ok: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerBlock {
    pub size: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerBlockSpec {
    pub blocks: Vec<LayerBlock>,
}

impl LayerBlockSpec {
    pub fn new(blocks: &[(usize, f64, f64)]) -> Self {
        Self {
            blocks: blocks
                .iter()
                .map(|&(size, mean, std)| LayerBlock { size, mean, std })
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.size).sum()
    }

    fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::Empty("layer blocks"));
        }
        for b in &self.blocks {
            if b.size == 0 {
                return Err(invalid("block size must be at least 1"));
            }
            if !(b.std >= 0.0) {
                return Err(invalid(format!(
                    "block std must be nonnegative, got {}",
                    b.std
                )));
            }
            if !(b.mean > 0.0) {
                return Err(invalid(format!(
                    "block means must be positive, got {}",
                    b.mean
                )));
            }
        }
        Ok(())
    }
}

/// One outlier `n_l μ_l` per block, counted only when the noise edges
/// `2σ_l√n_l` all sit below the smallest predicted outlier.
pub fn predict_outliers_from_blocks<T: Real>(spec: &LayerBlockSpec) -> Result<OutlierReport<T>> {
    spec.validate()?;
    let noise = spec
        .blocks
        .iter()
        .map(|b| 2.0 * b.std * (b.size as f64).sqrt())
        .fold(0.0, f64::max);
    let mut predicted: Vec<f64> = spec.blocks.iter().map(|b| b.size as f64 * b.mean).collect();
    let smallest = predicted.iter().copied().fold(f64::INFINITY, f64::min);
    let separation_ok = noise < smallest;
    predicted.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    Ok(OutlierReport {
        count: if separation_ok { predicted.len() } else { 0 },
        predicted: predicted.into_iter().map(T::lit).collect(),
        gap_threshold: None,
        separation_ok,
    })
}

/// Block-diagonal matrix whose block `l` has entries `μ_l + σ_l ξ`, with `ξ`
/// symmetric standard normal noise.
pub fn sample_block_matrix<T: Real>(
    spec: &LayerBlockSpec,
    stream: &mut SeedStream,
) -> Result<DenseSymmetric<T>> {
    spec.validate()?;
    let n = spec.dim();
    let mut a = vec![T::zero(); n * n];
    let mut offset = 0;
    for b in &spec.blocks {
        let (mu, sigma) = (T::lit(b.mean), T::lit(b.std));
        for i in 0..b.size {
            for j in i..b.size {
                let x = mu + sigma * stream.gaussian::<T>();
                a[(offset + i) * n + offset + j] = x;
                a[(offset + j) * n + offset + i] = x;
            }
        }
        offset += b.size;
    }
    Ok(DenseSymmetric::new(n, a)?.with_label("layer-blocks"))
}
