//! Named analytic initial and boundary data.

use crate::flow::BoundaryProvider;

/// Lower cap of a sphere shrinking under the flow:
/// `u = c - √(R(t)² - |x|²)` with `R(t)² = R₀² - 2((n-k)/(k+1)) t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrinkingCap {
    pub n: usize,
    pub k: usize,
    pub r0: f64,
    pub height: f64,
}

impl ShrinkingCap {
    pub fn new(n: usize, k: usize, r0: f64, height: f64) -> Self {
        Self { n, k, r0, height }
    }

    /// `(n-k)/(k+1)`, the quotient at unit equal curvatures.
    pub fn rate(&self) -> f64 {
        (self.n - self.k) as f64 / (self.k + 1) as f64
    }

    pub fn radius_sq(&self, t: f64) -> f64 {
        self.r0 * self.r0 - 2.0 * self.rate() * t
    }

    /// Time at which the sphere collapses.
    pub fn extinction_time(&self) -> f64 {
        self.r0 * self.r0 / (2.0 * self.rate())
    }

    pub fn height(&self, x: &[f64], t: f64) -> f64 {
        let rho: f64 = x.iter().map(|v| v * v).sum();
        self.height - (self.radius_sq(t) - rho).sqrt()
    }

    /// `∂_t u`, which equals `Q_k·w` on the exact solution.
    pub fn speed(&self, x: &[f64], t: f64) -> f64 {
        let rho: f64 = x[..self.n].iter().map(|v| v * v).sum();
        self.rate() / (self.radius_sq(t) - rho).sqrt()
    }

    /// Lowest point of the sphere at time zero, as an ambient point.
    pub fn bottom(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.n + 1];
        p[self.n] = self.height - self.r0;
        p
    }
}

impl BoundaryProvider for ShrinkingCap {
    fn value(&self, x: &[f64], t: f64) -> f64 {
        self.height(x, t)
    }
}

/// `u = c |x|² / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Paraboloid {
    pub curvature: f64,
}

impl Paraboloid {
    pub fn height(&self, x: &[f64]) -> f64 {
        0.5 * self.curvature * x.iter().map(|v| v * v).sum::<f64>()
    }
}

/// `u = a · Π sin(m x_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sine {
    pub amplitude: f64,
    pub wavenumber: f64,
}

impl Sine {
    pub fn height(&self, x: &[f64]) -> f64 {
        self.amplitude * x.iter().map(|v| (self.wavenumber * v).sin()).product::<f64>()
    }
}
