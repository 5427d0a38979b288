use crate::error::{check_dim, invalid, Error, Result};
use crate::lanczos::RitzDecomposition;
use crate::linalg::{axpy, dot, scale};
use crate::Real;

/// Damped Newton direction from a Ritz decomposition:
/// `d = Σ_i u_i(u_iᵀg)/(θ_i + δ) + (g − Σ_i u_i u_iᵀ g)/δ`.
///
/// Inside the Krylov subspace the curvature is inverted; on its orthogonal
/// complement only the damping acts. The caller steps along `−d`.
pub fn lanczos_newton_direction<T: Real>(
    ritz: &RitzDecomposition<T>,
    gradient: &[T],
    damping: T,
) -> Result<Vec<T>> {
    let vectors = ritz.vectors.as_ref().ok_or(Error::MissingRitzVectors)?;
    if !(damping > T::zero()) {
        return Err(invalid(format!("damping must be positive, got {damping}")));
    }
    let mut inside = vec![T::zero(); gradient.len()];
    let mut d = vec![T::zero(); gradient.len()];
    for (u, &theta) in vectors.iter().zip(&ritz.values) {
        check_dim(gradient.len(), u.len())?;
        let denom = theta + damping;
        if !(denom > T::zero()) {
            return Err(invalid(format!(
                "Ritz value {theta} plus damping is not positive"
            )));
        }
        let c = dot(u, gradient);
        axpy(c, u, &mut inside);
        axpy(c / denom, u, &mut d);
    }
    let mut complement = gradient.to_vec();
    axpy(-T::one(), &inside, &mut complement);
    scale(damping.recip(), &mut complement);
    axpy(T::one(), &complement, &mut d);
    Ok(d)
}
