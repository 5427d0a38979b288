use crate::error::{invalid, Result};
use crate::linalg::{axpy, Mat};
use crate::models::{softmax_cross_entropy, softmax_hessian_apply, Dataset, Model};
use crate::rng::SeedStream;
use crate::Real;

/// Fully connected ReLU network with a softmax cross-entropy head.
///
/// Each layer stores `W` (out × in, row-major) followed by its bias `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    sizes: Vec<usize>,
    weight_decay: T,
    params: Vec<T>,
}

struct Forward<T> {
    /// Layer inputs `A_0 = X, A_1, …, A_{L−1}`.
    acts: Vec<Mat<T>>,
    /// Pre-activations `Z_1, …, Z_L`; the last one holds the logits.
    pre: Vec<Mat<T>>,
}

fn relu_mask<T: Real>(z: &Mat<T>, m: &mut Mat<T>) {
    for (x, &zi) in m.data.iter_mut().zip(&z.data) {
        if zi <= T::zero() {
            *x = T::zero();
        }
    }
}

fn add_bias<T: Real>(z: &mut Mat<T>, b: &[T]) {
    for i in 0..z.rows {
        for (x, &bi) in z.row_mut(i).iter_mut().zip(b) {
            *x += bi;
        }
    }
}

fn column_sums<T: Real>(m: &Mat<T>, out: &mut [T]) {
    out.iter_mut().for_each(|o| *o = T::zero());
    for i in 0..m.rows {
        for (o, &x) in out.iter_mut().zip(m.row(i)) {
            *o += x;
        }
    }
}

impl<T: Real> Mlp<T> {
    /// He-initialised weights `N(0, 2/fan_in)` and zero biases.
    pub fn new(sizes: &[usize], weight_decay: T, stream: &mut SeedStream) -> Result<Self> {
        let mut m = Self::zeros(sizes, weight_decay)?;
        for k in 0..m.layers() {
            let (off, _) = m.offsets(k);
            let fan_in = sizes[k];
            let sd = (T::lit(2.0) / T::from_usize_lossy(fan_in)).sqrt();
            for p in &mut m.params[off..off + sizes[k] * sizes[k + 1]] {
                *p = sd * stream.gaussian::<T>();
            }
        }
        Ok(m)
    }

    pub fn zeros(sizes: &[usize], weight_decay: T) -> Result<Self> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
            return Err(invalid(
                "an MLP needs at least an input and an output width, all positive",
            ));
        }
        if *sizes.last().expect("nonempty") < 2 {
            return Err(invalid("the output layer needs at least two classes"));
        }
        if !(weight_decay >= T::zero()) {
            return Err(invalid("weight decay must be nonnegative"));
        }
        let count = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Ok(Self {
            sizes: sizes.to_vec(),
            weight_decay,
            params: vec![T::zero(); count],
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    fn layers(&self) -> usize {
        self.sizes.len() - 1
    }

    /// Offsets of `W_k` and `b_k` in the parameter vector.
    fn offsets(&self, k: usize) -> (usize, usize) {
        let w: usize = self
            .sizes
            .windows(2)
            .take(k)
            .map(|w| w[0] * w[1] + w[1])
            .sum();
        (w, w + self.sizes[k] * self.sizes[k + 1])
    }

    fn slice_weight(&self, p: &[T], k: usize) -> Mat<T> {
        let (w, b) = self.offsets(k);
        Mat {
            rows: self.sizes[k + 1],
            cols: self.sizes[k],
            data: p[w..b].to_vec(),
        }
    }

    fn slice_bias<'a>(&self, p: &'a [T], k: usize) -> &'a [T] {
        let (_, b) = self.offsets(k);
        &p[b..b + self.sizes[k + 1]]
    }

    fn forward(&self, batch: &Dataset<T>) -> Forward<T> {
        let mut acts = Vec::with_capacity(self.layers());
        let mut pre = Vec::with_capacity(self.layers());
        let mut a = Mat {
            rows: batch.len(),
            cols: batch.d_in,
            data: batch.inputs.clone(),
        };
        for k in 0..self.layers() {
            let mut z = a.matmul(false, &self.slice_weight(&self.params, k), true);
            add_bias(&mut z, self.slice_bias(&self.params, k));
            acts.push(a);
            if k + 1 < self.layers() {
                let mut next = z.clone();
                next.data.iter_mut().for_each(|x| *x = x.max(T::zero()));
                a = next;
            } else {
                a = Mat::zeros(0, 0);
            }
            pre.push(z);
        }
        Forward { acts, pre }
    }

    /// Softmax probabilities of the output layer and the mean data loss.
    fn probabilities(&self, fwd: &Forward<T>, labels: &[usize]) -> (Mat<T>, T) {
        let mut s = fwd.pre.last().expect("at least one layer").clone();
        let loss = softmax_cross_entropy(&mut s, labels);
        (s, loss)
    }

    /// Backpropagates an output-layer signal `g = ∂ℓ/∂Z_L` into parameter
    /// space (no regularizer).
    fn backward(&self, fwd: &Forward<T>, mut g: Mat<T>, out: &mut [T]) {
        for k in (0..self.layers()).rev() {
            let (w, b) = self.offsets(k);
            let dw = g.matmul(true, &fwd.acts[k], false);
            out[w..b].copy_from_slice(&dw.data);
            column_sums(&g, &mut out[b..b + self.sizes[k + 1]]);
            if k > 0 {
                let mut prev = g.matmul(false, &self.slice_weight(&self.params, k), false);
                relu_mask(&fwd.pre[k - 1], &mut prev);
                g = prev;
            }
        }
    }

    /// Directional derivatives `R(A_k)` and `R(Z_k)` along `v`.
    fn r_forward(&self, fwd: &Forward<T>, v: &[T]) -> (Vec<Option<Mat<T>>>, Vec<Mat<T>>) {
        let mut ra: Vec<Option<Mat<T>>> = vec![None];
        let mut rz = Vec::with_capacity(self.layers());
        for k in 0..self.layers() {
            let mut z = fwd.acts[k].matmul(false, &self.slice_weight(v, k), true);
            add_bias(&mut z, self.slice_bias(v, k));
            if let Some(r) = &ra[k] {
                let extra = r.matmul(false, &self.slice_weight(&self.params, k), true);
                axpy(T::one(), &extra.data, &mut z.data);
            }
            if k + 1 < self.layers() {
                let mut next = z.clone();
                relu_mask(&fwd.pre[k], &mut next);
                ra.push(Some(next));
            }
            rz.push(z);
        }
        (ra, rz)
    }

    /// `(1/N)(diag s − ssᵀ) u` row by row.
    fn output_curvature(s: &Mat<T>, u: &Mat<T>) -> Mat<T> {
        let inv_n = T::one() / T::from_usize_lossy(s.rows);
        let mut r = Mat::zeros(s.rows, s.cols);
        for i in 0..s.rows {
            softmax_hessian_apply(s.row(i), u.row(i), r.row_mut(i));
        }
        r.data.iter_mut().for_each(|x| *x *= inv_n);
        r
    }
}

impl<T: Real> Model<T> for Mlp<T> {
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
        self.layers()
    }

    fn weight_decay(&self) -> T {
        self.weight_decay
    }

    fn kind(&self) -> &'static str {
        "mlp"
    }

    fn shape(&self) -> Vec<usize> {
        self.sizes.clone()
    }

    fn eval(&self, batch: &Dataset<T>, grad: Option<&mut [T]>) -> T {
        let fwd = self.forward(batch);
        let (mut s, data_loss) = self.probabilities(&fwd, &batch.labels);
        let reg = self.weight_decay * self.params.iter().map(|&p| p * p).sum::<T>();
        if let Some(g) = grad {
            let inv_n = T::one() / T::from_usize_lossy(batch.len());
            for (i, &y) in batch.labels.iter().enumerate() {
                let row = s.row_mut(i);
                row[y] -= T::one();
                row.iter_mut().for_each(|r| *r *= inv_n);
            }
            self.backward(&fwd, s, g);
            axpy(T::lit(2.0) * self.weight_decay, &self.params, g);
        }
        data_loss + reg
    }

    fn hvp_unchecked(&self, batch: &Dataset<T>, v: &[T], out: &mut [T]) {
        let fwd = self.forward(batch);
        let (s, _) = self.probabilities(&fwd, &batch.labels);
        let inv_n = T::one() / T::from_usize_lossy(batch.len());
        let mut g = s.clone();
        for (i, &y) in batch.labels.iter().enumerate() {
            let row = g.row_mut(i);
            row[y] -= T::one();
            row.iter_mut().for_each(|r| *r *= inv_n);
        }
        let (ra, rz) = self.r_forward(&fwd, v);
        let mut rg = Self::output_curvature(&s, rz.last().expect("at least one layer"));

        for k in (0..self.layers()).rev() {
            let (w, b) = self.offsets(k);
            let mut dw = rg.matmul(true, &fwd.acts[k], false);
            if let Some(r) = &ra[k] {
                let extra = g.matmul(true, r, false);
                axpy(T::one(), &extra.data, &mut dw.data);
            }
            out[w..b].copy_from_slice(&dw.data);
            column_sums(&rg, &mut out[b..b + self.sizes[k + 1]]);
            if k > 0 {
                let wk = self.slice_weight(&self.params, k);
                let mut rprev = rg.matmul(false, &wk, false);
                let extra = g.matmul(false, &self.slice_weight(v, k), false);
                axpy(T::one(), &extra.data, &mut rprev.data);
                let mut prev = g.matmul(false, &wk, false);
                // ReLU'' = 0, so both signals see the same mask
                relu_mask(&fwd.pre[k - 1], &mut rprev);
                relu_mask(&fwd.pre[k - 1], &mut prev);
                rg = rprev;
                g = prev;
            }
        }
        axpy(T::lit(2.0) * self.weight_decay, v, out);
    }

    fn ggn_unchecked(&self, batch: &Dataset<T>, v: &[T], out: &mut [T]) {
        let fwd = self.forward(batch);
        let (s, _) = self.probabilities(&fwd, &batch.labels);
        let (_, rz) = self.r_forward(&fwd, v);
        let rg = Self::output_curvature(&s, rz.last().expect("at least one layer"));
        self.backward(&fwd, rg, out);
        axpy(T::lit(2.0) * self.weight_decay, v, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_layout() {
        let m = Mlp::<f64>::zeros(&[3, 4, 2], 0.0).unwrap();
        assert_eq!(m.param_count(), 3 * 4 + 4 + 4 * 2 + 2);
        assert_eq!(m.offsets(1), (16, 24));
        assert_eq!(m.layer_count(), 2);
        assert!(Mlp::<f64>::zeros(&[3], 0.0).is_err());
    }

    #[test]
    fn zero_network_is_uniform() {
        let d = Dataset::new(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], vec![0, 2], 3, 3).unwrap();
        let m = Mlp::<f64>::zeros(&[3, 5, 3], 0.0).unwrap();
        assert!((m.loss(&d).unwrap() - 3f64.ln()).abs() < 1e-14);
    }
}
