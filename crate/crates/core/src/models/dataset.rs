use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::all_finite;
use crate::rng::SeedStream;
use crate::Real;

/// Row-major inputs with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub inputs: Vec<T>,
    pub labels: Vec<usize>,
    pub d_in: usize,
    pub n_c: usize,
}

impl<T: Real> Dataset<T> {
    pub fn new(inputs: Vec<T>, labels: Vec<usize>, d_in: usize, n_c: usize) -> Result<Self> {
        check_dim(labels.len() * d_in, inputs.len())?;
        if n_c < 2 {
            return Err(invalid("need at least two classes"));
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= n_c) {
            return Err(invalid(format!("label {y} out of range for {n_c} classes")));
        }
        if !all_finite(&inputs) {
            return Err(Error::NonFinite("dataset inputs"));
        }
        Ok(Self {
            inputs,
            labels,
            d_in,
            n_c,
        })
    }

    /// A batch placeholder for models whose loss ignores data.
    pub fn empty(d_in: usize) -> Self {
        Self {
            inputs: vec![],
            labels: vec![],
            d_in,
            n_c: 2,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input(&self, i: usize) -> &[T] {
        &self.inputs[i * self.d_in..(i + 1) * self.d_in]
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut inputs = Vec::with_capacity(indices.len() * self.d_in);
        for &i in indices {
            inputs.extend_from_slice(self.input(i));
        }
        Self {
            inputs,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            d_in: self.d_in,
            n_c: self.n_c,
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_c];
        for &y in &self.labels {
            c[y] += 1;
        }
        c
    }
}

/// Gaussian-blob classification data: class `c` has centre
/// `separation · z_c` with `z_c ~ N(0, I/d_in)` and unit isotropic noise.
/// Sample `i` belongs to class `i mod n_c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub n_samples: usize,
    pub d_in: usize,
    pub n_c: usize,
    pub blob_separation: f64,
    #[serde(default)]
    pub seed: u64,
}

impl DatasetSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Training set of `n_samples` points.
    pub fn generate<T: Real>(&self) -> Result<Dataset<T>> {
        Ok(self.generate_split(0)?.0)
    }

    /// Training set plus an independent held-out set of `n_test` points drawn
    /// from the same blobs.
    pub fn generate_split<T: Real>(&self, n_test: usize) -> Result<(Dataset<T>, Dataset<T>)> {
        if self.n_samples < self.n_c {
            return Err(invalid("need at least one sample per class"));
        }
        if self.d_in == 0 {
            return Err(invalid("input dimension must be positive"));
        }
        let mut stream = SeedStream::new(self.seed);
        let spread = T::lit(self.blob_separation) / T::from_usize_lossy(self.d_in).sqrt();
        let centres: Vec<Vec<T>> = (0..self.n_c)
            .map(|_| {
                stream
                    .gaussian_vec::<T>(self.d_in)
                    .into_iter()
                    .map(|x| x * spread)
                    .collect()
            })
            .collect();
        let mut train_stream = stream.fork();
        let mut test_stream = stream.fork();
        let draw = |n: usize, s: &mut SeedStream| {
            let mut inputs = Vec::with_capacity(n * self.d_in);
            let labels: Vec<usize> = (0..n).map(|i| i % self.n_c).collect();
            for &y in &labels {
                for &c in &centres[y] {
                    inputs.push(c + s.gaussian::<T>());
                }
            }
            Dataset::new(inputs, labels, self.d_in, self.n_c)
        };
        let train = draw(self.n_samples, &mut train_stream)?;
        let test = if n_test == 0 {
            Dataset::empty(self.d_in)
        } else {
            draw(n_test, &mut test_stream)?
        };
        Ok((train, test))
    }
}
