//! Elementary symmetric polynomials of a curvature vector and the curvature
//! quotients `Q_k = S_{k+1} / S_k` built from them.
//!
//! All `S_l` are evaluated with the incremental product recurrence
//! `e_l^(m) = e_l^(m-1) + λ_m e_{l-1}^(m-1)`. Deleted sums (`S_{l,i}`, the
//! terms of `S_l` free of `λ_i`) rerun the recurrence with the entry skipped
//! instead of dividing it out, which stays accurate when `λ_i` is near zero.
//!
//! Positivity tests are relative: `S_l` counts as positive when it exceeds
//! `rel * S_l(|λ|)`, where `S_l(|λ|)` bounds the magnitude of every product
//! that enters the sum and hence the cancellation error.

use nalgebra::DMatrix;
use thiserror::Error;

/// Largest supported number of curvatures.
pub const MAX_DIM: usize = 16;

/// Default relative tolerance for cone and positivity tests.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

const STACK: usize = MAX_DIM + 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymError {
    #[error("dimension {0} exceeds the supported maximum of {MAX_DIM}")]
    DimensionOverflow(usize),
    #[error("curvature vector must have at least one entry")]
    Empty,
    #[error("curvature entry {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("quotient index k={k} out of range for n={n}")]
    IndexOutOfRange { k: usize, n: usize },
    #[error("S_{k} = {value:e} is not positive; Q_{k} is undefined here")]
    Domain { k: usize, value: f64 },
    #[error("curvatures are not in the open cone Gamma_{cone}")]
    OutsideCone { cone: usize },
    #[error("symmetric eigensolver did not converge")]
    EigenFailure,
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix has the wrong shape: {0}")]
    Shape(String),
}

/// Relative tolerance used for positivity and cone membership.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel: DEFAULT_REL_TOL,
        }
    }
}

impl Tolerance {
    pub fn new(rel: f64) -> Self {
        Self { rel }
    }

    #[inline]
    pub fn positive(&self, value: f64, scale: f64) -> bool {
        value > self.rel * scale
    }

    #[inline]
    pub fn negligible(&self, value: f64, scale: f64) -> bool {
        value.abs() <= self.rel * scale
    }
}

/// Ordered principal curvatures `λ_1..λ_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureVector(Vec<f64>);

impl CurvatureVector {
    pub fn new(entries: Vec<f64>) -> Result<Self, SymError> {
        if entries.is_empty() {
            return Err(SymError::Empty);
        }
        if entries.len() > MAX_DIM {
            return Err(SymError::DimensionOverflow(entries.len()));
        }
        if let Some((index, &value)) = entries.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(SymError::NonFinite { index, value });
        }
        Ok(Self(entries))
    }

    /// `n` copies of `c`.
    pub fn equal(n: usize, c: f64) -> Result<Self, SymError> {
        Self::new(vec![c; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn scaled(&self, t: f64) -> Result<Self, SymError> {
        Self::new(self.0.iter().map(|x| t * x).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl TryFrom<&[f64]> for CurvatureVector {
    type Error = SymError;

    fn try_from(value: &[f64]) -> Result<Self, Self::Error> {
        Self::new(value.to_vec())
    }
}

/// Writes `S_0..S_n` of `values` into `out[..=n]`. `out` must hold `n + 1` slots.
#[inline]
pub fn esym_into(values: &[f64], out: &mut [f64]) {
    let n = values.len();
    out[0] = 1.0;
    for slot in out.iter_mut().take(n + 1).skip(1) {
        *slot = 0.0;
    }
    for (m, &v) in values.iter().enumerate() {
        for l in (1..=m + 1).rev() {
            out[l] += v * out[l - 1];
        }
    }
}

/// Same recurrence with the entries listed in `skip` left out.
fn esym_skipping_into(values: &[f64], skip: &[usize], out: &mut [f64]) {
    let n = values.len();
    for slot in out.iter_mut().take(n + 1) {
        *slot = 0.0;
    }
    out[0] = 1.0;
    let mut m = 0;
    for (idx, &v) in values.iter().enumerate() {
        if skip.contains(&idx) {
            continue;
        }
        m += 1;
        for l in (1..=m).rev() {
            out[l] += v * out[l - 1];
        }
    }
}

/// `S_0..S_n` of a plain slice (no validation).
pub fn elementary(values: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; values.len() + 1];
    esym_into(values, &mut out);
    out
}

/// Stack-allocated `S_l(λ)` and `S_l(|λ|)` with `S_l = 0` for `l > n`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Sums {
    pub n: usize,
    pub s: [f64; STACK],
    pub abs: [f64; STACK],
}

impl Sums {
    #[inline]
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        debug_assert!(n <= MAX_DIM);
        let mut s = [0.0; STACK];
        let mut abs = [0.0; STACK];
        esym_into(values, &mut s);
        let mut magnitudes = [0.0; MAX_DIM];
        for (m, v) in magnitudes.iter_mut().zip(values) {
            *m = v.abs();
        }
        esym_into(&magnitudes[..n], &mut abs);
        Self { n, s, abs }
    }

    #[inline]
    pub fn get(&self, l: usize) -> f64 {
        if l <= self.n {
            self.s[l]
        } else {
            0.0
        }
    }

    #[inline]
    pub fn positive(&self, l: usize, tol: Tolerance) -> bool {
        l <= self.n && tol.positive(self.s[l], self.abs[l])
    }

    /// Largest `d` with `S_1..S_d` all positive.
    #[inline]
    pub fn depth(&self, tol: Tolerance) -> usize {
        let mut d = 0;
        while d < self.n && self.positive(d + 1, tol) {
            d += 1;
        }
        d
    }

    #[inline]
    pub fn quotient(&self, k: usize, tol: Tolerance) -> Result<f64, SymError> {
        if k >= self.n {
            return Err(SymError::IndexOutOfRange { k, n: self.n });
        }
        if !self.positive(k, tol) {
            return Err(SymError::Domain { k, value: self.s[k] });
        }
        Ok(self.s[k + 1] / self.s[k])
    }

    /// `Σ_i ∂Q_k/∂λ_i = ((n-k) S_k² - (n-k+1) S_{k-1} S_{k+1}) / S_k²`.
    #[inline]
    pub fn quotient_trace(&self, k: usize) -> f64 {
        let n = self.n as f64;
        let kf = k as f64;
        if k == 0 {
            return n;
        }
        let sk = self.s[k];
        ((n - kf) * sk * sk - (n - kf + 1.0) * self.s[k - 1] * self.get(k + 1)) / (sk * sk)
    }
}

/// All `S_l` of a curvature vector together with the once- and twice-deleted
/// tables `S_{l,i}` and `S_{l,i;j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTable {
    n: usize,
    s: Vec<f64>,
    s_abs: Vec<f64>,
    deleted1: Vec<f64>,
    deleted2: Vec<f64>,
}

impl SymTable {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// `S_l`, zero for `l > n`.
    pub fn s(&self, l: usize) -> f64 {
        self.s.get(l).copied().unwrap_or(0.0)
    }

    /// `S_l(|λ|)`, the magnitude scale of `S_l`.
    pub fn s_abs(&self, l: usize) -> f64 {
        self.s_abs.get(l).copied().unwrap_or(0.0)
    }

    pub fn all(&self) -> &[f64] {
        &self.s
    }

    /// `S_{l,i}`: terms of `S_l` without the factor `λ_i`.
    pub fn without(&self, l: usize, i: usize) -> f64 {
        if l > self.n {
            return 0.0;
        }
        self.deleted1[l * self.n + i]
    }

    /// `S_{l,i;j}`: terms of `S_l` containing neither `λ_i` nor `λ_j`.
    /// For `i == j` this is `S_{l,i}`.
    pub fn without2(&self, l: usize, i: usize, j: usize) -> f64 {
        if l > self.n {
            return 0.0;
        }
        self.deleted2[(l * self.n + i) * self.n + j]
    }
}

/// Full symmetric-function table of `λ`.
pub fn sym_all(lambda: &CurvatureVector) -> SymTable {
    let values = lambda.as_slice();
    let n = values.len();
    let s = elementary(values);
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let s_abs = elementary(&abs);

    let mut deleted1 = vec![0.0; (n + 1) * n];
    let mut deleted2 = vec![0.0; (n + 1) * n * n];
    let mut buf = [0.0; STACK];
    for i in 0..n {
        esym_skipping_into(values, &[i], &mut buf);
        for l in 0..=n {
            deleted1[l * n + i] = if l < n { buf[l] } else { 0.0 };
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                for l in 0..=n {
                    deleted2[(l * n + i) * n + j] = deleted1[l * n + i];
                }
                continue;
            }
            esym_skipping_into(values, &[i, j], &mut buf);
            for l in 0..=n {
                deleted2[(l * n + i) * n + j] = if l + 1 < n { buf[l] } else { 0.0 };
            }
        }
    }
    SymTable {
        n,
        s,
        s_abs,
        deleted1,
        deleted2,
    }
}

/// `Q_k(λ) = S_{k+1}/S_k` with the default tolerance.
pub fn qk(lambda: &CurvatureVector, k: usize) -> Result<f64, SymError> {
    qk_with(lambda, k, Tolerance::default())
}

pub fn qk_with(lambda: &CurvatureVector, k: usize, tol: Tolerance) -> Result<f64, SymError> {
    Sums::of(lambda.as_slice()).quotient(k, tol)
}

/// Gradient of `Q_k` with respect to the curvatures:
/// `∂_i Q_k = (S_{k,i} S_k - S_{k+1} S_{k-1,i}) / S_k²`.
pub fn qk_gradient(lambda: &CurvatureVector, k: usize) -> Result<Vec<f64>, SymError> {
    qk_gradient_with(lambda, k, Tolerance::default())
}

pub fn qk_gradient_with(
    lambda: &CurvatureVector,
    k: usize,
    tol: Tolerance,
) -> Result<Vec<f64>, SymError> {
    let values = lambda.as_slice();
    let sums = Sums::of(values);
    sums.quotient(k, tol)?;
    let sk = sums.s[k];
    let sk1 = sums.get(k + 1);
    let mut buf = [0.0; STACK];
    let grad = (0..values.len())
        .map(|i| {
            esym_skipping_into(values, &[i], &mut buf);
            let d_k = buf[k];
            let d_km1 = if k == 0 { 0.0 } else { buf[k - 1] };
            (d_k * sk - sk1 * d_km1) / (sk * sk)
        })
        .collect();
    Ok(grad)
}

/// Both sides of `Σ λ_i² ∂_i Q_k = (k+1) Q_k² - (k+2) Q_{k+1} Q_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondMoment {
    pub lhs: f64,
    /// Absent when `S_{k+1}` is not positive, so `Q_{k+1}` is undefined.
    pub rhs: Option<f64>,
}

impl SecondMoment {
    pub fn agrees(&self, rel: f64) -> Option<bool> {
        self.rhs.map(|r| {
            let scale = self.lhs.abs().max(r.abs()).max(f64::MIN_POSITIVE);
            (self.lhs - r).abs() <= rel * scale
        })
    }
}

pub fn qk_second_moment(lambda: &CurvatureVector, k: usize) -> Result<SecondMoment, SymError> {
    let grad = qk_gradient(lambda, k)?;
    let lhs = lambda
        .as_slice()
        .iter()
        .zip(&grad)
        .map(|(l, g)| l * l * g)
        .sum();
    let tol = Tolerance::default();
    let sums = Sums::of(lambda.as_slice());
    let rhs = if sums.positive(k + 1, tol) {
        let q = sums.s[k + 1] / sums.s[k];
        let q_next = sums.get(k + 2) / sums.s[k + 1];
        Some((k as f64 + 1.0) * q * q - (k as f64 + 2.0) * q_next * q)
    } else {
        None
    };
    Ok(SecondMoment { lhs, rhs })
}

/// `k(n-k) S_k² - (k+1)(n-k+1) S_{k-1} S_{k+1}`, nonnegative for all real `λ`.
pub fn newton_defect(lambda: &CurvatureVector, k: usize) -> Result<f64, SymError> {
    let n = lambda.dim();
    if k == 0 || k >= n {
        return Err(SymError::IndexOutOfRange { k, n });
    }
    let sums = Sums::of(lambda.as_slice());
    let (kf, nf) = (k as f64, n as f64);
    Ok(kf * (nf - kf) * sums.s[k] * sums.s[k]
        - (kf + 1.0) * (nf - kf + 1.0) * sums.s[k - 1] * sums.get(k + 1))
}

/// Magnitude against which the Newton defect's rounding error is measured:
/// the same expression evaluated at `|λ|` with both terms added.
pub fn newton_defect_scale(lambda: &CurvatureVector, k: usize) -> f64 {
    let n = lambda.dim();
    let sums = Sums::of(lambda.as_slice());
    let (kf, nf) = (k as f64, n as f64);
    let a = sums.abs[k];
    let prev = if k == 0 { 0.0 } else { sums.abs[k - 1] };
    let next = if k < n { sums.abs[k + 1] } else { 0.0 };
    kf * (nf - kf) * a * a + (kf + 1.0) * (nf - kf + 1.0) * prev * next
}

/// Maclaurin-type quotient bound `Q_k <= (l+1)(n-k) / ((k+1)(n-l)) · Q_l`.
pub fn maclaurin_quotient_check(
    lambda: &CurvatureVector,
    l: usize,
    k: usize,
) -> Result<bool, SymError> {
    let n = lambda.dim();
    if l > k || k >= n {
        return Err(SymError::IndexOutOfRange { k, n });
    }
    let tol = Tolerance::default();
    let sums = Sums::of(lambda.as_slice());
    if sums.depth(tol) < k + 1 {
        return Err(SymError::OutsideCone { cone: k + 1 });
    }
    let q_k = sums.quotient(k, tol)?;
    let q_l = sums.quotient(l, tol)?;
    let (lf, kf, nf) = (l as f64, k as f64, n as f64);
    let bound = (lf + 1.0) * (nf - kf) / ((kf + 1.0) * (nf - lf)) * q_l;
    let slack = tol.rel * q_k.abs().max(bound.abs());
    Ok(q_k <= bound + slack)
}

/// Where `λ` sits relative to a requested Gårding cone `Γ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeTag {
    /// `S_1..S_k` all positive.
    Interior,
    /// In the closure but not the interior: the first failing `S_l` is zero
    /// within tolerance and no `S_l`, `l <= k`, is clearly negative.
    Boundary,
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConeClass {
    pub tag: ConeTag,
    /// The cone index that was asked about.
    pub requested: usize,
    /// Largest `d` with `S_1..S_d` all positive.
    pub depth: usize,
}

impl ConeClass {
    /// `λ ∈ Γ_m`.
    pub fn admits(&self, m: usize) -> bool {
        self.depth >= m
    }

    pub fn is_interior(&self) -> bool {
        self.tag == ConeTag::Interior
    }
}

pub fn cone_classify(lambda: &CurvatureVector, k: usize) -> ConeClass {
    cone_classify_with(lambda.as_slice(), k, Tolerance::default())
}

pub fn cone_classify_with(values: &[f64], k: usize, tol: Tolerance) -> ConeClass {
    let sums = Sums::of(values);
    let depth = sums.depth(tol);
    let tag = if depth >= k {
        ConeTag::Interior
    } else {
        let top = k.min(sums.n);
        let closed = (1..=top).all(|l| sums.s[l] >= -tol.rel * sums.abs[l]);
        if closed && tol.negligible(sums.s[depth + 1], sums.abs[depth + 1]) {
            ConeTag::Boundary
        } else {
            ConeTag::Outside
        }
    };
    ConeClass {
        tag,
        requested: k,
        depth,
    }
}

fn check_square(b: &DMatrix<f64>) -> Result<usize, SymError> {
    if b.nrows() != b.ncols() {
        return Err(SymError::Shape(format!("{}x{} is not square", b.nrows(), b.ncols())));
    }
    let n = b.nrows();
    if n == 0 {
        return Err(SymError::Empty);
    }
    if n > MAX_DIM {
        return Err(SymError::DimensionOverflow(n));
    }
    Ok(n)
}

fn check_symmetric(b: &DMatrix<f64>) -> Result<usize, SymError> {
    let n = check_square(b)?;
    let scale = b.amax().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            if (b[(i, j)] - b[(j, i)]).abs() > 1e-12 * scale {
                return Err(SymError::NotSymmetric);
            }
        }
    }
    Ok(n)
}

/// Eigenvalues of a symmetric matrix, sorted descending.
pub fn symmetric_eigenvalues(b: &DMatrix<f64>) -> Result<Vec<f64>, SymError> {
    check_symmetric(b)?;
    let eig = nalgebra::SymmetricEigen::try_new(b.clone(), f64::EPSILON, 10_000)
        .ok_or(SymError::EigenFailure)?;
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(SymError::EigenFailure);
    }
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// `S_k(B)` through the spectrum of the symmetric matrix `B`.
pub fn matrix_sym(b: &DMatrix<f64>, k: usize) -> Result<f64, SymError> {
    let eig = symmetric_eigenvalues(b)?;
    Ok(elementary(&eig).get(k).copied().unwrap_or(0.0))
}

/// `Σ_{|α|=k} det B[α]`, the unnormalized principal-minor sum. Exponential
/// in `n`; this is the second route used to cross-check [`matrix_sym`].
pub fn principal_minor_sum(b: &DMatrix<f64>, k: usize) -> Result<f64, SymError> {
    let n = check_square(b)?;
    if k == 0 {
        return Ok(1.0);
    }
    if k > n {
        return Ok(0.0);
    }
    let mut total = 0.0;
    let mut idx = Vec::with_capacity(k);
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        idx.clear();
        idx.extend((0..n).filter(|i| mask & (1 << i) != 0));
        let sub = DMatrix::from_fn(k, k, |r, c| b[(idx[r], idx[c])]);
        total += sub.determinant();
    }
    Ok(total)
}

fn matrix_qk(a: &DMatrix<f64>, k: usize, tol: Tolerance) -> Result<f64, SymError> {
    let eig = symmetric_eigenvalues(a)?;
    Sums::of(&eig).quotient(k, tol)
}

/// Finite-difference derivatives `∂Q_k/∂A_ij` at an arrowhead matrix and the
/// structured inequalities they satisfy there.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredReport {
    pub q: f64,
    /// Row-major `n×n` matrix of `∂Q_k/∂A_ij`.
    pub derivative: Vec<f64>,
    pub n: usize,
    pub d11: f64,
    pub d11_lower_bound: f64,
    pub diagonal_sum: f64,
    pub euler_sum: f64,
    pub tol: f64,
    pub lower_bound_ok: bool,
    pub diagonal_ok: bool,
    pub trace_ratio_ok: bool,
    pub euler_ok: bool,
}

impl StructuredReport {
    pub fn all_pass(&self) -> bool {
        self.lower_bound_ok && self.diagonal_ok && self.trace_ratio_ok && self.euler_ok
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.derivative[i * self.n + j]
    }
}

/// Checks the first-row/column arrowhead structure with a negative corner.
pub fn check_arrowhead(a: &DMatrix<f64>) -> Result<usize, SymError> {
    let n = check_symmetric(a)?;
    if a[(0, 0)] >= 0.0 {
        return Err(SymError::Shape(format!("A_11 = {} is not negative", a[(0, 0)])));
    }
    for i in 1..n {
        for j in 1..n {
            if i != j && a[(i, j)] != 0.0 {
                return Err(SymError::Shape(format!(
                    "off-diagonal entry ({i},{j}) outside the first row/column"
                )));
            }
        }
    }
    Ok(n)
}

/// Derivatives of `Q_k` in the matrix entries by central differences along
/// symmetric perturbations `(e_i e_jᵀ + e_j e_iᵀ)/2`.
pub fn matrix_qk_derivative(
    a: &DMatrix<f64>,
    k: usize,
    tol: Tolerance,
) -> Result<Vec<f64>, SymError> {
    let n = check_symmetric(a)?;
    let step = 1e-5 * a.amax().max(f64::MIN_POSITIVE);
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let mut plus = a.clone();
            let mut minus = a.clone();
            if i == j {
                plus[(i, i)] += step;
                minus[(i, i)] -= step;
            } else {
                for (r, c) in [(i, j), (j, i)] {
                    plus[(r, c)] += 0.5 * step;
                    minus[(r, c)] -= 0.5 * step;
                }
            }
            let d = (matrix_qk(&plus, k, tol)? - matrix_qk(&minus, k, tol)?) / (2.0 * step);
            out[i * n + j] = d;
            out[j * n + i] = d;
        }
    }
    Ok(out)
}

/// Verifies at an arrowhead matrix with spectrum in `Γ_{k+1}`:
/// `∂Q/∂A_11 >= n/((k+1)(n-k))`, `∂Q/∂A_ii > 0` for `i > 1`,
/// `∂Q/∂A_11 >= n/((n-k)²(k+1)) Σ_i ∂Q/∂A_ii` and `Σ_ij ∂Q/∂A_ij A_ij = Q_k`.
pub fn structured_derivative_check(
    a: &DMatrix<f64>,
    k: usize,
) -> Result<StructuredReport, SymError> {
    let n = check_arrowhead(a)?;
    if k >= n {
        return Err(SymError::IndexOutOfRange { k, n });
    }
    let tol = Tolerance::default();
    let eig = symmetric_eigenvalues(a)?;
    let cone = cone_classify_with(&eig, k + 1, tol);
    if !cone.admits(k + 1) {
        return Err(SymError::OutsideCone { cone: k + 1 });
    }
    let q = Sums::of(&eig).quotient(k, tol)?;
    let derivative = matrix_qk_derivative(a, k, tol)?;

    let (nf, kf) = (n as f64, k as f64);
    let d11 = derivative[0];
    let diagonal_sum: f64 = (0..n).map(|i| derivative[i * n + i]).sum();
    let euler_sum: f64 = (0..n * n).map(|idx| derivative[idx] * a[(idx / n, idx % n)]).sum();
    let d11_lower_bound = nf / ((kf + 1.0) * (nf - kf));
    let trace_bound = nf / ((nf - kf) * (nf - kf) * (kf + 1.0)) * diagonal_sum;

    // Finite-difference error budget: central differences with a 1e-5
    // relative step carry ~1e-10 truncation and ~1e-11 rounding error.
    let dscale = derivative.iter().fold(1.0f64, |m, d| m.max(d.abs()));
    let ftol = 1e-7 * dscale;
    let qscale = q.abs().max(a.amax() * dscale);

    Ok(StructuredReport {
        q,
        n,
        d11,
        d11_lower_bound,
        diagonal_sum,
        euler_sum,
        tol: ftol,
        lower_bound_ok: d11 >= d11_lower_bound - ftol,
        diagonal_ok: (1..n).all(|i| derivative[i * n + i] > -ftol),
        trace_ratio_ok: d11 >= trace_bound - ftol,
        euler_ok: (euler_sum - q).abs() <= 1e-7 * qscale,
        derivative,
    })
}

/// Largest eigenvalue of the Hessian of `Q_k` at `λ ∈ Γ_{k+1}`, obtained by
/// central differences of the analytic gradient. Concavity means this is
/// nonpositive up to discretization error.
pub fn concavity_probe(lambda: &CurvatureVector, k: usize) -> Result<f64, SymError> {
    Ok(concavity_spectrum(lambda, k)?[0])
}

/// Full spectrum (descending) of the finite-difference Hessian behind
/// [`concavity_probe`].
pub fn concavity_spectrum(lambda: &CurvatureVector, k: usize) -> Result<Vec<f64>, SymError> {
    let n = lambda.dim();
    let tol = Tolerance::default();
    if !cone_classify_with(lambda.as_slice(), k + 1, tol).admits(k + 1) {
        return Err(SymError::OutsideCone { cone: k + 1 });
    }
    let step = 1e-5 * lambda.max_abs().max(f64::MIN_POSITIVE);
    let mut hess = DMatrix::zeros(n, n);
    let mut shifted = lambda.as_slice().to_vec();
    for j in 0..n {
        let base = shifted[j];
        shifted[j] = base + step;
        let gp = qk_gradient_with(&CurvatureVector::new(shifted.clone())?, k, tol)?;
        shifted[j] = base - step;
        let gm = qk_gradient_with(&CurvatureVector::new(shifted.clone())?, k, tol)?;
        shifted[j] = base;
        for i in 0..n {
            hess[(i, j)] = (gp[i] - gm[i]) / (2.0 * step);
        }
    }
    let sym = (&hess + hess.transpose()) * 0.5;
    symmetric_eigenvalues(&sym)
}
