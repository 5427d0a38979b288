//! Learning-rate and momentum schedules driven by estimated curvature,
//! the heavy-ball training loop, a damped Lanczos-Newton direction, and loss
//! landscape traversal along Ritz directions.

mod landscape;
mod newton;
mod train;

pub use landscape::{loss_landscape, LandscapeCell, LossLandscape, DEFAULT_LANDSCAPE_DIRECTIONS};
pub use newton::lanczos_newton_direction;
pub use train::{
    spectral_refresh, train, EvalRecord, Refresh, StepRecord, TrainConfig, TrainTrace, Variant,
};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleSource {
    Ssgd,
    Ssgdm,
    Theoretical,
    Fixed,
}

/// Step size `α` and heavy-ball momentum `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralSchedule<T> {
    pub alpha: T,
    pub beta: T,
    pub source: ScheduleSource,
}

impl<T: Real> SpectralSchedule<T> {
    pub fn fixed(alpha: T, beta: T) -> Result<Self> {
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(invalid(format!(
                "learning rate must be positive, got {alpha}"
            )));
        }
        if !(beta >= T::zero() && beta < T::one()) {
            return Err(invalid(format!("momentum must lie in [0, 1), got {beta}")));
        }
        Ok(Self {
            alpha,
            beta,
            source: ScheduleSource::Fixed,
        })
    }
}

fn check_extremes<T: Real>(top: T, bottom: T) -> Result<()> {
    if !(bottom > T::zero()) {
        return Err(invalid(format!(
            "the smallest curvature must be positive, got {bottom}"
        )));
    }
    if !(top >= bottom) || !top.is_finite() {
        return Err(invalid(format!(
            "largest curvature {top} is below the smallest {bottom}"
        )));
    }
    Ok(())
}

fn plain<T: Real>(top: T, bottom: T) -> (T, T) {
    (T::lit(2.0) / (top + bottom), T::zero())
}

fn heavy_ball<T: Real>(top: T, bottom: T) -> (T, T) {
    let (a, b) = (top.sqrt(), bottom.sqrt());
    let alpha = (T::lit(2.0) / (a + b)).powi(2);
    let beta = ((a - b) / (a + b)).powi(2);
    (alpha, beta)
}

/// `α = 2/(λ_max + λ_b)`, `β = 0`.
pub fn ssgd_schedule<T: Real>(lambda_max: T, lambda_b: T) -> Result<SpectralSchedule<T>> {
    check_extremes(lambda_max, lambda_b)?;
    let (alpha, beta) = plain(lambda_max, lambda_b);
    Ok(SpectralSchedule {
        alpha,
        beta,
        source: ScheduleSource::Ssgd,
    })
}

/// `α = (2/(√λ_max + √λ_b))²`, `β = ((√λ_max − √λ_b)/(√λ_max + √λ_b))²`.
pub fn ssgdm_schedule<T: Real>(lambda_max: T, lambda_b: T) -> Result<SpectralSchedule<T>> {
    check_extremes(lambda_max, lambda_b)?;
    let (alpha, beta) = heavy_ball(lambda_max, lambda_b);
    Ok(SpectralSchedule {
        alpha,
        beta,
        source: ScheduleSource::Ssgdm,
    })
}

/// The same formulas fed with the global smoothness `L` and strong
/// convexity `μ`.
pub fn theoretical_schedule<T: Real>(
    l: T,
    mu: T,
    with_momentum: bool,
) -> Result<SpectralSchedule<T>> {
    check_extremes(l, mu)?;
    let (alpha, beta) = if with_momentum {
        heavy_ball(l, mu)
    } else {
        plain(l, mu)
    };
    Ok(SpectralSchedule {
        alpha,
        beta,
        source: ScheduleSource::Theoretical,
    })
}
