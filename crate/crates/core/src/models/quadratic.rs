use crate::error::{check_dim, Result};
use crate::linalg::dot;
use crate::models::{Dataset, Model};
use crate::operator::{DenseSymmetric, SymmetricOperator};
use crate::Real;

/// `L(p) = ½ (p − c)ᵀ A (p − c)`, independent of the data.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticModel<T> {
    curvature: DenseSymmetric<T>,
    centre: Vec<T>,
    params: Vec<T>,
}

impl<T: Real> QuadraticModel<T> {
    pub fn new(curvature: DenseSymmetric<T>, centre: Vec<T>, start: Vec<T>) -> Result<Self> {
        check_dim(curvature.n(), centre.len())?;
        check_dim(curvature.n(), start.len())?;
        Ok(Self {
            curvature,
            centre,
            params: start,
        })
    }

    /// Diagonal quadratic centred at the origin.
    pub fn diagonal(eigenvalues: &[T], start: Vec<T>) -> Result<Self> {
        Self::new(
            DenseSymmetric::diagonal(eigenvalues),
            vec![T::zero(); eigenvalues.len()],
            start,
        )
    }

    pub fn curvature(&self) -> &DenseSymmetric<T> {
        &self.curvature
    }

    pub fn centre(&self) -> &[T] {
        &self.centre
    }

    /// Distance of the parameters from the minimiser.
    pub fn error_norm(&self) -> T {
        self.params
            .iter()
            .zip(&self.centre)
            .map(|(&p, &c)| (p - c) * (p - c))
            .sum::<T>()
            .sqrt()
    }
}

impl<T: Real> Model<T> for QuadraticModel<T> {
    fn param_count(&self) -> usize {
        self.params.len()
    }

    fn params(&self) -> &[T] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    fn layer_count(&self) -> usize {
        1
    }

    fn weight_decay(&self) -> T {
        T::zero()
    }

    fn kind(&self) -> &'static str {
        "quadratic"
    }

    fn shape(&self) -> Vec<usize> {
        vec![self.params.len()]
    }

    fn uses_data(&self) -> bool {
        false
    }

    fn eval(&self, _batch: &Dataset<T>, grad: Option<&mut [T]>) -> T {
        let diff: Vec<T> = self
            .params
            .iter()
            .zip(&self.centre)
            .map(|(&p, &c)| p - c)
            .collect();
        let ad = self.curvature.apply(&diff);
        let loss = T::lit(0.5) * dot(&diff, &ad);
        if let Some(g) = grad {
            g.copy_from_slice(&ad);
        }
        loss
    }

    fn hvp_unchecked(&self, _batch: &Dataset<T>, v: &[T], out: &mut [T]) {
        self.curvature.apply_into(v, out)
    }

    fn ggn_unchecked(&self, _batch: &Dataset<T>, v: &[T], out: &mut [T]) {
        self.curvature.apply_into(v, out)
    }
}
