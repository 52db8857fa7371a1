//! Seeded randomness. ChaCha20 is counter based, so a seed gives the same
//! stream on every platform.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha20Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { seed, inner: ChaCha20Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Standard circularly-symmetric complex Gaussian, E|z|^2 = 1.
    pub fn complex_normal(&mut self) -> Complex64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(s * self.normal(), s * self.normal())
    }

    pub fn gaussian_vector(&mut self, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| self.normal())
    }

    /// Filled column by column.
    pub fn gaussian_matrix(&mut self, rows: usize, cols: usize) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| self.normal())
    }

    pub fn unit_sphere(&mut self, n: usize) -> DVector<f64> {
        loop {
            let v = self.gaussian_vector(n);
            let nv = v.norm();
            if nv > 0.0 {
                return v / nv;
            }
        }
    }

    /// `k` distinct indices from `0..n`, in draw order (partial Fisher-Yates).
    pub fn sample_without_replacement(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n);
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            idx.swap(i, j);
        }
        idx.truncate(k);
        idx
    }

    pub fn inner_mut(&mut self) -> &mut ChaCha20Rng {
        &mut self.inner
    }
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `trial` of grid cell `cell` under `master`.
pub fn derive_seed(master: u64, cell: u64, trial: u64) -> u64 {
    mix(mix(mix(master) ^ cell) ^ trial.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Rng::new(42);
        let mut b = Rng::new(42);
        for _ in 0..100 {
            assert_eq!(a.normal().to_bits(), b.normal().to_bits());
        }
    }

    #[test]
    fn derived_seeds_differ() {
        let s: std::collections::BTreeSet<u64> =
            (0..50).flat_map(|c| (0..50).map(move |t| derive_seed(1, c, t))).collect();
        assert_eq!(s.len(), 2500);
    }

    #[test]
    fn without_replacement_is_distinct() {
        let mut r = Rng::new(3);
        let mut v = r.sample_without_replacement(20, 12);
        v.sort();
        v.dedup();
        assert_eq!(v.len(), 12);
    }
}
