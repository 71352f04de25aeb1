//! Seeded random inputs for the identity sweeps.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::symfunc::Sums;

/// Relative margin kept from the cone boundary when sampling `Γ_m`:
/// every `S_l`, `l <= m`, exceeds `CONE_MARGIN · S_l(|λ|)`.
pub const CONE_MARGIN: f64 = 1e-3;

const MAX_TRIES: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn index(&mut self, lo: usize, hi_inclusive: usize) -> usize {
        self.rng.gen_range(lo..=hi_inclusive)
    }

    pub fn vector(&mut self, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| self.uniform(lo, hi)).collect()
    }

    /// Log-uniform overall scale in `[10⁻², 10²]`.
    pub fn scale(&mut self) -> f64 {
        10f64.powf(self.uniform(-2.0, 2.0))
    }

    /// A vector in `Γ_m` (with [`CONE_MARGIN`]) by rejection from a shifted
    /// box, times a random scale. `m = 0` accepts anything.
    pub fn cone_vector(&mut self, n: usize, m: usize) -> Vec<f64> {
        for _ in 0..MAX_TRIES {
            let shift = self.uniform(0.0, 1.5);
            let v: Vec<f64> = (0..n).map(|_| self.uniform(-1.0, 1.0) + shift).collect();
            if in_cone_with_margin(&v, m, CONE_MARGIN) {
                let s = self.scale();
                return v.into_iter().map(|x| x * s).collect();
            }
        }
        panic!("cone sampler failed for n={n}, m={m}");
    }

    pub fn symmetric_matrix(&mut self, n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.uniform(-1.0, 1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    /// Orthogonal factor of the QR decomposition of a random matrix.
    pub fn orthogonal(&mut self, n: usize) -> DMatrix<f64> {
        let m = DMatrix::from_fn(n, n, |_, _| self.uniform(-1.0, 1.0));
        m.qr().q()
    }

    /// Arrowhead matrix with negative corner `A_11`, couplings in the first
    /// row/column only and eigenvalues in `Γ_m`. Needs `m <= n - 1`.
    pub fn arrowhead(&mut self, n: usize, m: usize) -> DMatrix<f64> {
        assert!(m < n, "an arrowhead with negative corner cannot lie in Γ_{n}");
        for _ in 0..MAX_TRIES {
            let mut a = DMatrix::zeros(n, n);
            let diag: Vec<f64> = (1..n).map(|_| self.uniform(0.2, 2.0)).collect();
            let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
            a[(0, 0)] = -self.uniform(0.01, 1.0) * dmin;
            for (i, d) in diag.iter().enumerate() {
                a[(i + 1, i + 1)] = *d;
                let b = self.uniform(-0.5, 0.5) * dmin;
                a[(0, i + 1)] = b;
                a[(i + 1, 0)] = b;
            }
            let Ok(eig) = crate::symfunc::symmetric_eigenvalues(&a) else { continue };
            if in_cone_with_margin(&eig, m, CONE_MARGIN) {
                return a * self.scale();
            }
        }
        panic!("arrowhead sampler failed for n={n}, m={m}");
    }
}

/// `S_l(v) > margin · S_l(|v|)` for `l = 1..m`.
pub fn in_cone_with_margin(v: &[f64], m: usize, margin: f64) -> bool {
    let sums = Sums::of(v);
    (1..=m.min(v.len())).all(|l| sums.s[l] > margin * sums.abs[l])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_streams() {
        let a = Sampler::new(7).vector(5, -1.0, 1.0);
        let b = Sampler::new(7).vector(5, -1.0, 1.0);
        assert_eq!(a, b);
        assert_ne!(a, Sampler::new(8).vector(5, -1.0, 1.0));
    }

    #[test]
    fn cone_samples_satisfy_margin() {
        let mut s = Sampler::new(1);
        for n in 1..=6 {
            for m in 0..=n {
                let v = s.cone_vector(n, m);
                assert!(in_cone_with_margin(&v, m, CONE_MARGIN));
            }
        }
    }

    #[test]
    fn arrowhead_shape() {
        let mut s = Sampler::new(3);
        let a = s.arrowhead(4, 2);
        assert!(a[(0, 0)] < 0.0);
        assert_eq!(a[(1, 2)], 0.0);
        assert!(crate::symfunc::check_arrowhead(&a).is_ok());
    }

    #[test]
    fn orthogonal_is_orthogonal() {
        let q = Sampler::new(5).orthogonal(4);
        let e = (&q.transpose() * &q - DMatrix::<f64>::identity(4, 4)).amax();
        assert!(e < 1e-14);
    }
}
