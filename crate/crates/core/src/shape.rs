//! Second fundamental form of a graph `x_{n+1} = u(x)`.
//!
//! The symmetrized Weingarten matrix is
//! `A = w⁻¹ (D²u - (Du ⊗ v + v ⊗ Du)/(w(1+w)) + Du ⊗ Du (Duᵀ D²u Du)/(w²(1+w)²))`
//! with `v = D²u Du` and `w = √(1 + |Du|²)`. The normal points upward, so a
//! convex graph has positive curvatures.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::symfunc::{self, ConeClass, CurvatureVector, Sums, SymError, Tolerance, MAX_DIM};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShapeError {
    #[error("gradient has {grad} entries but the Hessian holds {hess}")]
    DimensionMismatch { grad: usize, hess: usize },
    #[error("Hessian is not symmetric: |u_{i}{j} - u_{j}{i}| = {gap:e}")]
    NotSymmetric { i: usize, j: usize, gap: f64 },
    #[error(transparent)]
    Sym(#[from] SymError),
}

/// First and second derivatives of `u` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct JetPoint {
    grad: Vec<f64>,
    /// Row-major `n×n`.
    hess: Vec<f64>,
}

impl JetPoint {
    pub fn new(grad: Vec<f64>, hess: Vec<f64>) -> Result<Self, ShapeError> {
        let n = grad.len();
        if n == 0 || hess.len() != n * n {
            return Err(ShapeError::DimensionMismatch {
                grad: n,
                hess: hess.len(),
            });
        }
        if n > MAX_DIM {
            return Err(SymError::DimensionOverflow(n).into());
        }
        let scale = hess.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for i in 0..n {
            for j in 0..i {
                let gap = (hess[i * n + j] - hess[j * n + i]).abs();
                if gap > 1e-14 * scale {
                    return Err(ShapeError::NotSymmetric { i, j, gap });
                }
            }
        }
        Ok(Self { grad, hess })
    }

    /// Jets of a radial function `u(|x|)` at the point `(r, 0, …, 0)`:
    /// `Du = u′ e_1`, `D²u = diag(u″, u′/r, …, u′/r)`.
    pub fn radial(n: usize, r: f64, up: f64, upp: f64) -> Result<Self, ShapeError> {
        let mut grad = vec![0.0; n];
        grad[0] = up;
        let mut hess = vec![0.0; n * n];
        hess[0] = upp;
        for i in 1..n {
            hess[i * n + i] = up / r;
        }
        Self::new(grad, hess)
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn hess(&self) -> &[f64] {
        &self.hess
    }
}

/// Symmetrized shape operator together with the gradient factor `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeMatrix {
    n: usize,
    a: Vec<f64>,
    w: f64,
}

impl ShapeMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.a
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    /// `√(1 + |Du|²)`, which is also the gradient function `v = ⟨ν, e_{n+1}⟩⁻¹`.
    pub fn w(&self) -> f64 {
        self.w
    }

    /// Vertical component `⟨ν, e_{n+1}⟩ = 1/w` of the upward unit normal.
    pub fn nu_vertical(&self) -> f64 {
        1.0 / self.w
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.a)
    }
}

/// Allocation-free kernel behind [`weingarten`]; writes the row-major matrix
/// into `out[..n*n]` and returns `w`.
#[inline]
pub fn weingarten_into(grad: &[f64], hess: &[f64], out: &mut [f64]) -> f64 {
    let n = grad.len();
    let norm_sq: f64 = grad.iter().map(|g| g * g).sum();
    let w = (1.0 + norm_sq).sqrt();
    let c1 = 1.0 / (w * (1.0 + w));
    let mut v = [0.0; MAX_DIM];
    let mut quad = 0.0;
    for i in 0..n {
        let row = &hess[i * n..(i + 1) * n];
        v[i] = row.iter().zip(grad).map(|(h, g)| h * g).sum();
        quad += grad[i] * v[i];
    }
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = (hess[i * n + j] - c1 * (grad[i] * v[j] + grad[j] * v[i])
                + c1 * c1 * grad[i] * grad[j] * quad)
                / w;
        }
    }
    w
}

pub fn weingarten(jet: &JetPoint) -> ShapeMatrix {
    let n = jet.dim();
    let mut a = vec![0.0; n * n];
    let w = weingarten_into(&jet.grad, &jet.hess, &mut a);
    ShapeMatrix { n, a, w }
}

/// Eigenvalues of a row-major symmetric matrix, sorted descending, written
/// into `out[..n]`. Closed form for `n <= 2`.
#[inline]
pub fn sym_eigenvalues_into(a: &[f64], n: usize, out: &mut [f64]) -> Result<(), SymError> {
    match n {
        1 => out[0] = a[0],
        2 => {
            let mean = 0.5 * (a[0] + a[3]);
            let half = 0.5 * (a[0] - a[3]);
            let off = 0.5 * (a[1] + a[2]);
            let rad = (half * half + off * off).sqrt();
            out[0] = mean + rad;
            out[1] = mean - rad;
        }
        _ => {
            let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (a[i * n + j] + a[j * n + i]));
            let eig = symfunc::symmetric_eigenvalues(&m)?;
            out[..n].copy_from_slice(&eig);
        }
    }
    if out[..n].iter().any(|x| !x.is_finite()) {
        return Err(SymError::EigenFailure);
    }
    Ok(())
}

/// Principal curvatures of the graph, descending.
pub fn principal_curvatures(s: &ShapeMatrix) -> Result<CurvatureVector, SymError> {
    let mut out = vec![0.0; s.n];
    sym_eigenvalues_into(&s.a, s.n, &mut out)?;
    CurvatureVector::new(out)
}

/// Pointwise geometric quantities derived from the curvatures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointGeometry {
    /// Mean curvature `H = Σ λ_i`.
    pub h: f64,
    /// `|A|² = Σ λ_i²`.
    pub norm_sq_a: f64,
    /// `Q_k`, absent where `S_k` is not positive.
    pub qk: Option<f64>,
    /// Classification against `Γ_{k+1}`.
    pub cone: ConeClass,
    /// `|A|² <= H²` within tolerance.
    pub pinch_ok: bool,
}

impl PointGeometry {
    /// `H² - |A|² = 2 S_2`.
    pub fn pinching_gap(&self) -> f64 {
        self.h * self.h - self.norm_sq_a
    }
}

pub fn geometry_from_curvatures(lambda: &[f64], k: usize) -> PointGeometry {
    let tol = Tolerance::default();
    let h: f64 = lambda.iter().sum();
    let norm_sq_a: f64 = lambda.iter().map(|x| x * x).sum();
    let qk = Sums::of(lambda).quotient(k, tol).ok();
    let cone = symfunc::cone_classify_with(lambda, k + 1, tol);
    let pinch_ok = norm_sq_a <= h * h + tol.rel * norm_sq_a;
    PointGeometry {
        h,
        norm_sq_a,
        qk,
        cone,
        pinch_ok,
    }
}

pub fn pointwise_geometry(s: &ShapeMatrix, k: usize) -> Result<PointGeometry, SymError> {
    let lambda = principal_curvatures(s)?;
    Ok(geometry_from_curvatures(lambda.as_slice(), k))
}
