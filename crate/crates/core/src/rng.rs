//! Deterministic random streams.
//!
//! Everything random in the crate is drawn from a [`SeedStream`], a ChaCha
//! generator whose output depends only on the 64-bit seed, so results repeat
//! bit-for-bit across runs and platforms.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::Real;

/// Distribution of probe-vector entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKind {
    /// Entries uniform on {−1, +1}; fourth moment 1.
    #[default]
    Rademacher,
    /// Standard normal entries; fourth moment 3.
    Gaussian,
}

impl ProbeKind {
    /// Fourth moment E[u⁴] of a single entry.
    pub fn fourth_moment(self) -> f64 {
        match self {
            ProbeKind::Rademacher => 1.0,
            ProbeKind::Gaussian => 3.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProbeKind::Rademacher => "rademacher",
            ProbeKind::Gaussian => "gaussian",
        }
    }
}

impl std::str::FromStr for ProbeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rademacher" => Ok(ProbeKind::Rademacher),
            "gaussian" => Ok(ProbeKind::Gaussian),
            other => Err(format!("unknown probe kind '{other}'")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SeedStream {
    seed: u64,
    rng: ChaCha12Rng,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream; advances this stream by one draw.
    pub fn fork(&mut self) -> SeedStream {
        SeedStream::new(self.rng.next_u64())
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn gaussian<T: Real>(&mut self) -> T {
        let x: f64 = self.rng.sample(StandardNormal);
        T::lit(x)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform<T: Real>(&mut self, lo: T, hi: T) -> T {
        let u: f64 = self.rng.random();
        lo + (hi - lo) * T::lit(u)
    }

    pub fn rademacher<T: Real>(&mut self) -> T {
        if self.rng.random::<bool>() {
            T::one()
        } else {
            -T::one()
        }
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn gaussian_vec<T: Real>(&mut self, n: usize) -> Vec<T> {
        (0..n).map(|_| self.gaussian()).collect()
    }

    /// Zero-mean, unit-variance probe of length `dim`.
    pub fn probe_vector<T: Real>(&mut self, dim: usize, kind: ProbeKind) -> Vec<T> {
        match kind {
            ProbeKind::Rademacher => (0..dim).map(|_| self.rademacher()).collect(),
            ProbeKind::Gaussian => self.gaussian_vec(dim),
        }
    }

    /// `k` distinct indices drawn uniformly from `0..n`, in draw order.
    pub fn sample_without_replacement(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n);
        // partial Fisher-Yates
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.index(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}

/// Convenience wrapper matching the operator-level contract.
pub fn probe_vector<T: Real>(stream: &mut SeedStream, dim: usize, kind: ProbeKind) -> Vec<T> {
    stream.probe_vector(dim, kind)
}
