use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::lanczos::RitzDecomposition;
use crate::linalg::axpy;
use crate::models::{Dataset, Model};
use crate::Real;

/// Number of top and of bottom Ritz directions traversed by default.
pub const DEFAULT_LANDSCAPE_DIRECTIONS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandscapeCell<T> {
    pub direction_index: usize,
    pub eigenvalue: T,
    pub t: T,
    pub train_loss: T,
    pub test_loss: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossLandscape<T> {
    /// `(Ritz index, Ritz value)` of each traversed direction.
    pub directions: Vec<(usize, T)>,
    pub distances: Vec<T>,
    /// Direction-major: all distances of the first direction come first.
    pub cells: Vec<LandscapeCell<T>>,
}

impl<T: Real> LossLandscape<T> {
    pub fn row(&self, direction: usize) -> &[LandscapeCell<T>] {
        let n = self.distances.len();
        &self.cells[direction * n..(direction + 1) * n]
    }
}

/// Loss at `p + t·u_i` for the `per_side` smallest and largest Ritz directions
/// and `t` on a symmetric grid of `n_points` (odd) values in `[−dist, dist]`.
pub fn loss_landscape<T: Real, M: Model<T>>(
    model: &M,
    train: &Dataset<T>,
    test: Option<&Dataset<T>>,
    ritz: &RitzDecomposition<T>,
    dist: T,
    n_points: usize,
    per_side: usize,
) -> Result<LossLandscape<T>> {
    let vectors = ritz.vectors.as_ref().ok_or(Error::MissingRitzVectors)?;
    if n_points % 2 == 0 {
        return Err(invalid(format!(
            "n_points must be odd so that t = 0 is on the grid, got {n_points}"
        )));
    }
    if !(dist >= T::zero()) {
        return Err(invalid("distance must be nonnegative"));
    }
    for u in vectors {
        check_dim(model.param_count(), u.len())?;
    }
    let k = ritz.len();
    let mut chosen: Vec<usize> = (0..per_side.min(k)).collect();
    chosen.extend(k.saturating_sub(per_side)..k);
    chosen.sort_unstable();
    chosen.dedup();

    let half = (n_points - 1) / 2;
    let distances: Vec<T> = (0..n_points)
        .map(|j| {
            if j == half {
                T::zero()
            } else {
                dist * (T::lit(2.0) * T::from_usize_lossy(j) / T::from_usize_lossy(n_points - 1)
                    - T::one())
            }
        })
        .collect();

    let base_train = model.loss(train)?;
    let base_test = test.map(|d| model.loss(d)).transpose()?;
    let cells: Vec<(usize, usize)> = chosen
        .iter()
        .flat_map(|&i| (0..n_points).map(move |j| (i, j)))
        .collect();
    let cells = cells
        .par_iter()
        .map(|&(i, j)| {
            let t = distances[j];
            let (train_loss, test_loss) = if j == half {
                (base_train, base_test)
            } else {
                let mut moved = model.clone();
                let mut p = model.params().to_vec();
                axpy(t, &vectors[i], &mut p);
                moved.set_params(&p)?;
                (moved.loss(train)?, test.map(|d| moved.loss(d)).transpose()?)
            };
            Ok(LandscapeCell {
                direction_index: i,
                eigenvalue: ritz.values[i],
                t,
                train_loss,
                test_loss,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(LossLandscape {
        directions: chosen.iter().map(|&i| (i, ritz.values[i])).collect(),
        distances,
        cells,
    })
}
