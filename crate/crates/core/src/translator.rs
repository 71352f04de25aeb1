//! Rotationally symmetric translators `Q_k(A)·w = 1` and relaxation of the
//! graph equation to its translating steady state.
//!
//! For `u(|x|)` the principal curvatures are `κ_rad = u″/w³` and
//! `κ_ang = u′/(r w)` (multiplicity `n-1`). Every `S_l` of that vector is
//! affine in `κ_rad`, `S_l = a_l + κ_rad a_{l-1}` with
//! `a_l = C(n-1, l) κ_ang^l`, so the equation `S_{k+1} = S_k / w` is solved
//! for `κ_rad` in closed form.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::{
    evaluate, step, Boundary, BoundaryProvider, ConePolicy, FlowError, FlowState, GraphPatch, Grid,
    Scheme, StepParams,
};
use crate::monitors::MonitorReport;
use crate::shape::{principal_curvatures, weingarten, JetPoint, ShapeError};
use crate::symfunc::{self, CurvatureVector, Sums, SymError, Tolerance};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TranslatorError {
    #[error("curvatures left Gamma_{cone} at r = {r}")]
    Domain { r: f64, cone: usize },
    #[error("radial equation degenerates at r = {r}")]
    Solve { r: f64 },
    #[error("profile blew up at r = {r}")]
    BlowUp { r: f64 },
    #[error("range error: {0}")]
    Range(String),
    #[error("invalid translator setup: {0}")]
    Config(String),
    #[error("no steady state after {steps} steps (residual {residual:e})")]
    NonConvergence { steps: usize, residual: f64 },
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

fn check_index(k: usize, n: usize) -> Result<(), TranslatorError> {
    if n == 0 || n > symfunc::MAX_DIM || k >= n {
        return Err(TranslatorError::Config(format!("k={k} is not admissible for n={n}")));
    }
    Ok(())
}

fn binomial(n: usize, l: usize) -> f64 {
    if l > n {
        return 0.0;
    }
    (0..l).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Curvature of the bowl at its vertex: `Q_k(a,…,a) = 1` gives
/// `a = (k+1)/(n-k)`.
pub fn vertex_curvature(k: usize, n: usize) -> f64 {
    (k + 1) as f64 / (n - k) as f64
}

/// Solves the translator equation for `κ_rad` at fixed `κ_ang` and `w`.
fn solve_radial(r: f64, kappa_ang: f64, w: f64, k: usize, n: usize) -> Result<f64, TranslatorError> {
    let a = |l: isize| -> f64 {
        if l < 0 {
            0.0
        } else {
            binomial(n - 1, l as usize) * kappa_ang.powi(l as i32)
        }
    };
    let k = k as isize;
    let num = a(k) - w * a(k + 1);
    let den = w * a(k) - a(k - 1);
    let scale = (w * a(k)).abs() + a(k - 1).abs();
    if !(den.abs() > 1e-14 * scale) || !num.is_finite() {
        return Err(TranslatorError::Solve { r });
    }
    Ok(num / den)
}

/// `u″` of the rotational translator at `(r, u′)`.
pub fn radial_rhs(r: f64, up: f64, k: usize, n: usize) -> Result<f64, TranslatorError> {
    check_index(k, n)?;
    if !(r > 0.0) {
        return Err(TranslatorError::Range(format!("radius {r} must be positive")));
    }
    let w = (1.0 + up * up).sqrt();
    let kappa_ang = up / (r * w);
    let kappa_rad = solve_radial(r, kappa_ang, w, k, n)?;
    let mut lam = [kappa_ang; symfunc::MAX_DIM];
    lam[0] = kappa_rad;
    let sums = Sums::of(&lam[..n]);
    if sums.depth(Tolerance::default()) <= k {
        return Err(TranslatorError::Domain { r, cone: k + 1 });
    }
    let upp = kappa_rad * w * w * w;
    if !upp.is_finite() {
        return Err(TranslatorError::BlowUp { r });
    }
    Ok(upp)
}

/// Sampled rotational translator `x_{n+1} = u(|x|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslatorProfile {
    pub n: usize,
    pub k: usize,
    pub h: f64,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub up: Vec<f64>,
    pub upp: Vec<f64>,
}

impl TranslatorProfile {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap_or(&0.0)
    }

    pub fn kappa_rad(&self, i: usize) -> f64 {
        self.upp[i] / (1.0 + self.up[i] * self.up[i]).powf(1.5)
    }

    pub fn kappa_ang(&self, i: usize) -> f64 {
        if self.r[i] == 0.0 {
            return self.kappa_rad(i);
        }
        self.up[i] / (self.r[i] * (1.0 + self.up[i] * self.up[i]).sqrt())
    }

    /// Principal curvature vector at node `i`, radial slot first.
    pub fn curvatures(&self, i: usize) -> Vec<f64> {
        let mut lam = vec![self.kappa_ang(i); self.n];
        lam[0] = self.kappa_rad(i);
        lam
    }

    /// `|Q_k·w - 1|` at node `i`, assembled through the full shape operator
    /// rather than the radial reduction.
    pub fn round_trip_residual(&self, i: usize) -> Result<f64, TranslatorError> {
        let jet = if self.r[i] == 0.0 {
            let mut hess = vec![0.0; self.n * self.n];
            for d in 0..self.n {
                hess[d * self.n + d] = self.upp[i];
            }
            JetPoint::new(vec![0.0; self.n], hess)?
        } else {
            JetPoint::radial(self.n, self.r[i], self.up[i], self.upp[i])?
        };
        let shape = weingarten(&jet);
        let lam = principal_curvatures(&shape)?;
        let q = symfunc::qk(&lam, self.k)?;
        Ok((q * shape.w() - 1.0).abs())
    }

    pub fn max_round_trip_residual(&self) -> Result<f64, TranslatorError> {
        (0..self.len()).try_fold(0.0f64, |m, i| Ok(m.max(self.round_trip_residual(i)?)))
    }

    /// Translator residual of jets obtained by central differences of the
    /// stored heights; converges at second order in `h`.
    pub fn discrete_residual(&self) -> Result<f64, TranslatorError> {
        let mut worst = 0.0f64;
        for i in 1..self.len().saturating_sub(1) {
            let (up, upp) = self.fd_derivatives(i);
            let jet = JetPoint::radial(self.n, self.r[i], up, upp)?;
            let shape = weingarten(&jet);
            let lam = principal_curvatures(&shape)?;
            let q = symfunc::qk(&lam, self.k)?;
            worst = worst.max((q * shape.w() - 1.0).abs());
        }
        Ok(worst)
    }

    fn fd_derivatives(&self, i: usize) -> (f64, f64) {
        let h = self.r[i + 1] - self.r[i];
        let up = (self.u[i + 1] - self.u[i - 1]) / (2.0 * h);
        let upp = (self.u[i + 1] - 2.0 * self.u[i] + self.u[i - 1]) / (h * h);
        (up, upp)
    }

    /// Richardson extrapolation of `u″(h)` and `u″(2h)` from the radial
    /// equation to `r = 0`.
    pub fn vertex_curvature_estimate(&self) -> Result<f64, TranslatorError> {
        if self.len() < 3 {
            return Err(TranslatorError::Range("profile too short".into()));
        }
        let a1 = radial_rhs(self.r[1], self.up[1], self.k, self.n)?;
        let a2 = radial_rhs(self.r[2], self.up[2], self.k, self.n)?;
        Ok((4.0 * a1 - a2) / 3.0)
    }

    /// Whether `u′` is non-decreasing on the computed range.
    pub fn is_convex(&self) -> bool {
        self.up.windows(2).all(|p| p[1] >= p[0])
    }

    /// Height at radius `r` by cubic Hermite interpolation of `(u, u′)`.
    pub fn eval(&self, r: f64) -> Option<f64> {
        let r = r.abs();
        if r > self.r_max() || self.len() < 2 {
            return None;
        }
        let h = self.r[1] - self.r[0];
        let i = ((r / h).floor() as usize).min(self.len() - 2);
        let s = (r - self.r[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Some(h00 * self.u[i] + h10 * h * self.up[i] + h01 * self.u[i + 1] + h11 * h * self.up[i + 1])
    }

    /// `u′` at radius `r` from the derivative of the Hermite interpolant.
    pub fn eval_slope(&self, r: f64) -> Option<f64> {
        if r > self.r_max() || self.len() < 2 {
            return None;
        }
        let h = self.r[1] - self.r[0];
        let i = ((r / h).floor() as usize).min(self.len() - 2);
        let s = (r - self.r[i]) / h;
        let s2 = s * s;
        let d00 = (6.0 * s2 - 6.0 * s) / h;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = (-6.0 * s2 + 6.0 * s) / h;
        let d11 = 3.0 * s2 - 2.0 * s;
        Some(d00 * self.u[i] + d10 * self.up[i] + d01 * self.u[i + 1] + d11 * self.up[i + 1])
    }
}

fn rk4_increment(
    f: &impl Fn(f64, f64) -> Result<f64, TranslatorError>,
    r: f64,
    up: f64,
    h: f64,
) -> Result<(f64, f64), TranslatorError> {
    let k1 = (up, f(r, up)?);
    let k2 = (up + 0.5 * h * k1.1, f(r + 0.5 * h, up + 0.5 * h * k1.1)?);
    let k3 = (up + 0.5 * h * k2.1, f(r + 0.5 * h, up + 0.5 * h * k2.1)?);
    let k4 = (up + h * k3.1, f(r + h, up + h * k3.1)?);
    Ok((
        h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    ))
}

/// Integrates the radial translator ODE with RK4 from `r = h`, starting from
/// the vertex expansion `u′ = a r + b r³`, `b = a³/(n+2)`.
pub fn integrate_profile(k: usize, n: usize, r_max: f64, h: f64) -> Result<TranslatorProfile, TranslatorError> {
    integrate(k, n, r_max, h, false).map(|p| p.0)
}

/// Slope beyond which a truncated profile counts as vertical. Curvatures
/// recovered from a graph jet lose about `w²·ε` to cancellation, so steeper
/// nodes carry no usable information.
pub const MAX_SLOPE: f64 = 1e4;

/// Like [`integrate_profile`], but stops at the last good node when the
/// radial equation degenerates, the slope passes [`MAX_SLOPE`] or the
/// solution blows up, returning the radius where
/// integration failed. Profiles with `k = n - 1` end this way.
pub fn integrate_maximal(
    k: usize,
    n: usize,
    r_max: f64,
    h: f64,
) -> Result<(TranslatorProfile, Option<f64>), TranslatorError> {
    integrate(k, n, r_max, h, true)
}

fn integrate(
    k: usize,
    n: usize,
    r_max: f64,
    h: f64,
    truncate: bool,
) -> Result<(TranslatorProfile, Option<f64>), TranslatorError> {
    check_index(k, n)?;
    if !(h > 0.0) || !(r_max > 10.0 * h) {
        return Err(TranslatorError::Range(format!(
            "need h > 0 and r_max > 10 h (h = {h}, r_max = {r_max})"
        )));
    }
    let a = vertex_curvature(k, n);
    let b = a * a * a / (n + 2) as f64;
    let steps = (r_max / h).ceil() as usize;
    let mut profile = TranslatorProfile {
        n,
        k,
        h,
        r: Vec::with_capacity(steps + 1),
        u: Vec::with_capacity(steps + 1),
        up: Vec::with_capacity(steps + 1),
        upp: Vec::with_capacity(steps + 1),
    };
    profile.r.push(0.0);
    profile.u.push(0.0);
    profile.up.push(0.0);
    profile.upp.push(a);

    let f = |r: f64, up: f64| radial_rhs(r, up, k, n);
    let mut r = h;
    let mut u = 0.5 * a * h * h + 0.25 * b * h.powi(4);
    let mut up = a * h + b * h * h * h;
    for i in 1..=steps {
        let upp = match f(r, up) {
            Ok(v) => v,
            Err(_) if truncate && profile.len() > 1 => return Ok((profile, Some(r))),
            Err(e) => return Err(e),
        };
        profile.r.push(r);
        profile.u.push(u);
        profile.up.push(up);
        profile.upp.push(upp);
        if i == steps {
            break;
        }
        // ∂u″/∂u′ grows like 1/r near the axis, so early intervals are
        // split into substeps no longer than r/16.
        let subs = ((16.0 * h / r).ceil() as usize).max(1);
        let dr = h / subs as f64;
        let mut rs = r;
        let mut failed = None;
        for _ in 0..subs {
            match rk4_increment(&f, rs, up, dr) {
                Ok((du, dup)) => {
                    u += du;
                    up += dup;
                    rs += dr;
                }
                Err(e) => {
                    failed = Some(e);
                    break;
                }
            }
        }
        if failed.is_none() && !(u.is_finite() && up.is_finite() && (!truncate || up.abs() <= MAX_SLOPE)) {
            failed = Some(TranslatorError::BlowUp { r: (i + 1) as f64 * h });
        }
        if let Some(e) = failed {
            if truncate {
                return Ok((profile, Some(rs)));
            }
            return Err(e);
        }
        r = (i + 1) as f64 * h;
    }
    Ok((profile, None))
}

/// Least-squares slope of `ln u` against `ln r` over nodes in `[r_lo, r_hi]`.
pub fn growth_exponent(profile: &TranslatorProfile, r_lo: f64, r_hi: f64) -> Result<f64, TranslatorError> {
    if !(r_lo > 0.0) || !(r_hi > 2.0 * r_lo) || r_hi > profile.r_max() {
        return Err(TranslatorError::Range(format!(
            "window [{r_lo}, {r_hi}] invalid for a profile on [0, {}]",
            profile.r_max()
        )));
    }
    let pts: Vec<(f64, f64)> = profile
        .r
        .iter()
        .zip(&profile.u)
        .filter(|(r, _)| **r >= r_lo && **r <= r_hi)
        .map(|(r, u)| (r.ln(), u.ln()))
        .collect();
    if pts.len() < 2 || pts.iter().any(|p| !p.1.is_finite()) {
        return Err(TranslatorError::Range("profile must be positive on the window".into()));
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / m, sy / m);
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx) * (p.0 - mx)));
    Ok(sxy / sxx)
}

/// `sup |□_k u - Q_k⟨ν, e_{n+1}⟩|` along the profile. The covariant Hessian
/// of the height in the principal frame is `(u″/w⁴, u′/(r w²), …)`, taken
/// here from central differences of the stored heights, while the weights
/// `∂Q_k/∂λ_i` and the right side use the integrated curvatures.
pub fn intrinsic_height_identity(profile: &TranslatorProfile, k: usize) -> Result<f64, TranslatorError> {
    check_index(k, profile.n)?;
    let n = profile.n;
    let mut worst = 0.0f64;
    for i in 1..profile.len().saturating_sub(1) {
        let lam = CurvatureVector::new(profile.curvatures(i))?;
        let grad = symfunc::qk_gradient(&lam, k)?;
        let q = symfunc::qk(&lam, k)?;
        let w = (1.0 + profile.up[i] * profile.up[i]).sqrt();

        let (up, upp) = profile.fd_derivatives(i);
        let wf2 = 1.0 + up * up;
        let hess_rad = upp / (wf2 * wf2);
        let hess_ang = up / (profile.r[i] * wf2);
        let lhs = grad[0] * hess_rad + grad[1..n].iter().sum::<f64>() * hess_ang;
        worst = worst.max((lhs - q / w).abs());
    }
    Ok(worst)
}

/// Dirichlet data `u(|x|)` from a profile.
#[derive(Debug, Clone)]
pub struct RadialData {
    profile: Arc<TranslatorProfile>,
    offset: f64,
}

impl RadialData {
    pub fn new(profile: Arc<TranslatorProfile>) -> Self {
        Self { profile, offset: 0.0 }
    }

    pub fn height(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.profile.eval(r).unwrap_or(f64::NAN) + self.offset
    }
}

impl BoundaryProvider for RadialData {
    fn value(&self, x: &[f64], _t: f64) -> f64 {
        self.height(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RelaxStart {
    /// Grid samples of the profile itself.
    Profile,
    /// `c|x|²/2` shifted to meet the profile on the inscribed circle.
    Paraboloid { curvature: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxConfig {
    pub half_width: f64,
    pub h: f64,
    pub start: RelaxStart,
    pub rtol: f64,
    pub max_steps: usize,
    pub safety: f64,
    pub scheme: Scheme,
    /// Policy while relaxing. Mismatched initial data can leave the cone in
    /// a thin layer along the boundary before the interior settles; the
    /// converged state is always required to lie inside it.
    pub policy: ConePolicy,
    /// Steps between residual checks.
    pub check_every: usize,
}

impl Default for RelaxConfig {
    fn default() -> Self {
        Self {
            half_width: 1.0,
            h: 1.0 / 32.0,
            start: RelaxStart::Paraboloid { curvature: 1.0 },
            rtol: 1e-8,
            max_steps: 200_000,
            safety: 0.3,
            scheme: Scheme::Euler,
            policy: ConePolicy::Flag,
            check_every: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Relaxation {
    pub patch: GraphPatch,
    pub report: MonitorReport,
    pub steps: usize,
    pub residual: f64,
    /// Max-norm distance to the grid samples of the profile.
    pub profile_error: f64,
}

/// `sup |Q_k·w - 1|` over active nodes.
pub fn steady_residual(patch: &GraphPatch, k: usize) -> Result<f64, TranslatorError> {
    let (residual, violations) = residual_and_violations(patch, k)?;
    if !violations.is_empty() {
        return Err(FlowError::ConeViolation {
            cone: k + 1,
            points: violations,
        }
        .into());
    }
    Ok(residual)
}

fn residual_and_violations(patch: &GraphPatch, k: usize) -> Result<(f64, Vec<usize>), TranslatorError> {
    let e = evaluate(patch, k, Tolerance::default())?;
    let grid = patch.grid();
    let residual = grid
        .active_nodes()
        .map(|idx| (e.speed[idx] - 1.0).abs())
        .fold(0.0, f64::max);
    Ok((residual, e.violations))
}

/// Evolves `u_t = Q_k·w - 1` on a square with profile Dirichlet data until
/// `sup |Q_k·w - 1| <= rtol`.
pub fn relax_to_translator(profile: &TranslatorProfile, config: &RelaxConfig) -> Result<Relaxation, TranslatorError> {
    let (n, k) = (profile.n, profile.k);
    check_index(k, n)?;
    if n != 2 {
        return Err(TranslatorError::Config(format!("relaxation runs on planar grids, got n = {n}")));
    }
    let corner = config.half_width * 2f64.sqrt();
    if corner > profile.r_max() {
        return Err(TranslatorError::Range(format!(
            "box corner radius {corner} exceeds the profile range {}",
            profile.r_max()
        )));
    }
    if !(config.rtol > 0.0) {
        return Err(TranslatorError::Config("rtol must be positive".into()));
    }
    let data = RadialData::new(Arc::new(profile.clone()));
    let grid = Grid::centered_box(2, config.half_width, config.h)?;
    let exact = GraphPatch::from_fn(grid.clone(), |x| data.height(x), Boundary::Frozen)?;
    let bc = Boundary::Dirichlet(Arc::new(data.clone()));
    let initial = match config.start {
        RelaxStart::Profile => exact.values().to_vec(),
        RelaxStart::Paraboloid { curvature } => {
            let l = config.half_width;
            let shift = profile.eval(l).unwrap_or(0.0) - 0.5 * curvature * l * l;
            (0..grid.len())
                .map(|idx| {
                    let [x, y] = grid.coord(idx);
                    0.5 * curvature * (x * x + y * y) + shift
                })
                .collect()
        }
    };
    let patch = GraphPatch::new(grid, initial, bc)?;
    let mut params = StepParams::new(k);
    params.scheme = config.scheme;
    params.safety = config.safety;
    params.source = -1.0;
    params.policy = config.policy;

    let mut state = FlowState::new(patch, k);
    let mut report = MonitorReport::default();
    let check_every = config.check_every.max(1);
    loop {
        let (residual, violations) = residual_and_violations(&state.patch, k)?;
        report.push("residual", state.t, residual);
        report.push("cone_violations", state.t, violations.len() as f64);
        if !violations.is_empty() && config.policy == ConePolicy::Abort {
            return Err(FlowError::ConeViolation {
                cone: k + 1,
                points: violations,
            }
            .into());
        }
        if residual <= config.rtol && violations.is_empty() {
            let profile_error = state
                .patch
                .values()
                .iter()
                .zip(exact.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            report.set_flag("converged", true, format!("residual {residual:e} after {} steps", state.steps));
            return Ok(Relaxation {
                patch: state.patch,
                report,
                steps: state.steps,
                residual,
                profile_error,
            });
        }
        if state.steps >= config.max_steps {
            return Err(TranslatorError::NonConvergence {
                steps: state.steps,
                residual,
            });
        }
        for _ in 0..check_every {
            state = step(&state, &params)?;
        }
    }
}
