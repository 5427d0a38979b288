// Householder tridiagonalization followed by implicit QL with Wilkinson-style
// shifts (the EISPACK tred2/tql2 pair). Eigenvectors are stored column-major so
// that the inner loops of both phases walk contiguous memory.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::Real;

const MAX_SWEEPS: usize = 60;

/// Ascending eigenvalues with matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    /// Column-major: eigenvector `i` occupies `vectors[i * n .. (i + 1) * n]`.
    pub vectors: Vec<T>,
    pub dim: usize,
}

impl<T: Real> SymmetricEigen<T> {
    pub fn vector(&self, i: usize) -> &[T] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    /// Eigenvectors as the columns of a row-major matrix.
    pub fn vector_matrix(&self) -> Mat<T> {
        Mat::from_fn(self.dim, self.dim, |r, c| self.vectors[c * self.dim + r])
    }
}

/// Full eigendecomposition of a symmetric matrix given in row-major order.
/// Only the lower triangle is read.
pub fn symmetric_eigen<T: Real>(n: usize, entries: &[T]) -> Result<SymmetricEigen<T>> {
    assert_eq!(entries.len(), n * n);
    if n == 0 {
        return Ok(SymmetricEigen {
            values: vec![],
            vectors: vec![],
            dim: 0,
        });
    }
    let mut z = entries.to_vec();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    householder_tridiagonalize(n, &mut z, &mut d, &mut e, true);
    implicit_ql(n, &mut d, &mut e, Some(&mut z))?;
    let (values, vectors) = sort_pairs(n, d, Some(z));
    Ok(SymmetricEigen {
        values,
        vectors: vectors.unwrap_or_default(),
        dim: n,
    })
}

/// Eigenvalues only; skips the O(n³) accumulation of the transformations.
pub fn symmetric_eigenvalues<T: Real>(n: usize, entries: &[T]) -> Result<Vec<T>> {
    assert_eq!(entries.len(), n * n);
    if n == 0 {
        return Ok(vec![]);
    }
    let mut z = entries.to_vec();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    householder_tridiagonalize(n, &mut z, &mut d, &mut e, false);
    implicit_ql(n, &mut d, &mut e, None)?;
    Ok(sort_pairs(n, d, None).0)
}

/// Eigen-decomposition of the symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `off` (`off.len() == diag.len() - 1`).
pub fn tridiagonal_eigen<T: Real>(diag: &[T], off: &[T]) -> Result<SymmetricEigen<T>> {
    let n = diag.len();
    assert!(n == 0 && off.is_empty() || off.len() + 1 == n);
    let mut d = diag.to_vec();
    let mut e = vec![T::zero(); n];
    e[..off.len()].copy_from_slice(off);
    let mut z = vec![T::zero(); n * n];
    for i in 0..n {
        z[i * n + i] = T::one();
    }
    implicit_ql(n, &mut d, &mut e, Some(&mut z))?;
    let (values, vectors) = sort_pairs(n, d, Some(z));
    Ok(SymmetricEigen {
        values,
        vectors: vectors.unwrap_or_default(),
        dim: n,
    })
}

fn sort_pairs<T: Real>(n: usize, d: Vec<T>, z: Option<Vec<T>>) -> (Vec<T>, Option<Vec<T>>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = z.map(|z| {
        let mut out = Vec::with_capacity(n * n);
        for &i in &order {
            out.extend_from_slice(&z[i * n..(i + 1) * n]);
        }
        out
    });
    (values, vectors)
}

/// On exit `d` holds the diagonal and `e[i]` the coupling between rows `i`
/// and `i + 1` (`e[n - 1] = 0`). With `accumulate`, `z` holds the orthogonal
/// transformation column-major; otherwise its content is scratch.
fn householder_tridiagonalize<T: Real>(
    n: usize,
    z: &mut [T],
    d: &mut [T],
    e: &mut [T],
    accumulate: bool,
) {
    // z[c * n + r] is element (r, c). The input is symmetric so row-major and
    // column-major coincide.
    macro_rules! v {
        ($r:expr, $c:expr) => {
            z[($c) * n + ($r)]
        };
    }

    for j in 0..n {
        d[j] = v!(n - 1, j);
    }

    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v!(i - 1, j);
                v!(i, j) = T::zero();
                v!(j, i) = T::zero();
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = T::zero();
            }

            for j in 0..i {
                f = d[j];
                v!(j, i) = f;
                g = e[j] + v!(j, j) * f;
                let col = &z[j * n..j * n + i];
                for k in (j + 1)..i {
                    g += col[k] * d[k];
                    e[k] += col[k] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                let col = &mut z[j * n..j * n + i];
                for k in j..i {
                    col[k] -= f * e[k] + g * d[k];
                }
                d[j] = v!(i - 1, j);
                v!(i, j) = T::zero();
            }
        }
        d[i] = h;
    }

    if accumulate {
        for i in 0..n - 1 {
            v!(n - 1, i) = v!(i, i);
            v!(i, i) = T::one();
            let h = d[i + 1];
            if h != T::zero() {
                for k in 0..=i {
                    d[k] = v!(k, i + 1) / h;
                }
                for j in 0..=i {
                    let (head, tail) = z.split_at_mut((i + 1) * n);
                    let target = &tail[..i + 1];
                    let colj = &mut head[j * n..j * n + i + 1];
                    let mut g = T::zero();
                    for k in 0..=i {
                        g += target[k] * colj[k];
                    }
                    for k in 0..=i {
                        colj[k] -= g * d[k];
                    }
                }
            }
            for k in 0..=i {
                v!(k, i + 1) = T::zero();
            }
        }
        for j in 0..n {
            d[j] = v!(n - 1, j);
            v!(n - 1, j) = T::zero();
        }
        v!(n - 1, n - 1) = T::one();
    } else {
        for j in 0..n {
            d[j] = v!(j, j);
        }
    }

    // Shift the sub-diagonal so e[i] couples i and i + 1.
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
}

fn implicit_ql<T: Real>(n: usize, d: &mut [T], e: &mut [T], mut z: Option<&mut [T]>) -> Result<()> {
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = T::zero();
    let eps = T::epsilon();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_SWEEPS {
                    return Err(Error::NoConvergence {
                        index: l,
                        iterations: MAX_SWEEPS,
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (e[l] + e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        let (lo, hi) = z.split_at_mut((i + 1) * n);
                        let ci = &mut lo[i * n..];
                        let ci1 = &mut hi[..n];
                        for k in 0..n {
                            let hk = ci1[k];
                            ci1[k] = s * ci[k] + c * hk;
                            ci[k] = c * ci[k] - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    Ok(())
}
