use crate::error::{invalid, Result};
use crate::linalg::{axpy, Mat};
use crate::models::{softmax_cross_entropy, softmax_hessian_apply, Dataset, Model};
use crate::rng::SeedStream;
use crate::Real;

/// Multinomial logistic regression without bias: `z = Wᵀx`, with
/// `W ∈ R^{d_in × n_c}` stored row-major (`p[i·n_c + c] = W_ic`).
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression<T> {
    pub d_in: usize,
    pub n_c: usize,
    weight_decay: T,
    params: Vec<T>,
}

impl<T: Real> LogisticRegression<T> {
    pub fn zeros(d_in: usize, n_c: usize, weight_decay: T) -> Result<Self> {
        if d_in == 0 || n_c < 2 {
            return Err(invalid("logistic regression needs d_in >= 1 and n_c >= 2"));
        }
        if !(weight_decay >= T::zero()) {
            return Err(invalid("weight decay must be nonnegative"));
        }
        Ok(Self {
            d_in,
            n_c,
            weight_decay,
            params: vec![T::zero(); d_in * n_c],
        })
    }

    /// Small Gaussian initialisation with standard deviation `scale`.
    pub fn random(
        d_in: usize,
        n_c: usize,
        weight_decay: T,
        scale: T,
        stream: &mut SeedStream,
    ) -> Result<Self> {
        let mut m = Self::zeros(d_in, n_c, weight_decay)?;
        for p in &mut m.params {
            *p = scale * stream.gaussian::<T>();
        }
        Ok(m)
    }

    fn weights(&self) -> Mat<T> {
        Mat {
            rows: self.d_in,
            cols: self.n_c,
            data: self.params.clone(),
        }
    }

    fn inputs(batch: &Dataset<T>) -> Mat<T> {
        Mat {
            rows: batch.len(),
            cols: batch.d_in,
            data: batch.inputs.clone(),
        }
    }

    /// Softmax probabilities per sample (N × n_c).
    fn probabilities(&self, x: &Mat<T>, labels: &[usize]) -> (Mat<T>, T) {
        let mut z = x.matmul(false, &self.weights(), false);
        let loss = softmax_cross_entropy(&mut z, labels);
        (z, loss)
    }

    /// `(1/N) Xᵀ [(diag s − ssᵀ)(Vᵀx)]_rows + 2γ v`; shared by the Hessian and
    /// the GGN, which coincide for a linear model.
    fn curvature_apply(&self, batch: &Dataset<T>, v: &[T], out: &mut [T]) {
        let x = Self::inputs(batch);
        let (s, _) = self.probabilities(&x, &batch.labels);
        let vm = Mat {
            rows: self.d_in,
            cols: self.n_c,
            data: v.to_vec(),
        };
        let u = x.matmul(false, &vm, false);
        let mut r = Mat::zeros(batch.len(), self.n_c);
        for i in 0..batch.len() {
            softmax_hessian_apply(s.row(i), u.row(i), r.row_mut(i));
        }
        let g = x.matmul(true, &r, false);
        let inv_n = T::one() / T::from_usize_lossy(batch.len());
        for ((o, &gi), &vi) in out.iter_mut().zip(&g.data).zip(v) {
            *o = gi * inv_n + T::lit(2.0) * self.weight_decay * vi;
        }
    }
}

impl<T: Real> Model<T> for LogisticRegression<T> {
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
        self.weight_decay
    }

    fn kind(&self) -> &'static str {
        "logreg"
    }

    fn shape(&self) -> Vec<usize> {
        vec![self.d_in, self.n_c]
    }

    fn eval(&self, batch: &Dataset<T>, grad: Option<&mut [T]>) -> T {
        let x = Self::inputs(batch);
        let (mut s, data_loss) = self.probabilities(&x, &batch.labels);
        let reg = self.weight_decay * self.params.iter().map(|&p| p * p).sum::<T>();
        if let Some(g) = grad {
            let inv_n = T::one() / T::from_usize_lossy(batch.len());
            for (i, &y) in batch.labels.iter().enumerate() {
                let row = s.row_mut(i);
                row[y] -= T::one();
                row.iter_mut().for_each(|r| *r *= inv_n);
            }
            let dw = x.matmul(true, &s, false);
            g.copy_from_slice(&dw.data);
            axpy(T::lit(2.0) * self.weight_decay, &self.params, g);
        }
        data_loss + reg
    }

    fn hvp_unchecked(&self, batch: &Dataset<T>, v: &[T], out: &mut [T]) {
        self.curvature_apply(batch, v, out)
    }

    fn ggn_unchecked(&self, batch: &Dataset<T>, v: &[T], out: &mut [T]) {
        self.curvature_apply(batch, v, out)
    }
}
