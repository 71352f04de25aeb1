//! Diagnostics evaluated on immutable snapshots: test-function maxima,
//! gradient and curvature estimate fits, the sphere radius law, pinching
//! and the `φ₊·v` maximum principle.
//!
//! The constants in the estimates are not explicit, so every estimate check
//! reports the smallest constant that fits the whole sweep; a check passes
//! when that constant is finite and below its configured ceiling.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::{Grid, Snapshot};
use crate::shape::geometry_from_curvatures;
use crate::translator::TranslatorProfile;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonitorError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("sphere fit failed at t = {t}: rms {rms:e} exceeds {limit:e}")]
    FitFailure { t: f64, rms: f64, limit: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub pass: bool,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MonitorReport {
    pub times: Vec<f64>,
    pub series: BTreeMap<String, Vec<(f64, f64)>>,
    pub flags: BTreeMap<String, Flag>,
}

impl MonitorReport {
    /// Appends `(t, value)`; a repeated time replaces the last value so the
    /// axis stays strictly increasing.
    pub fn push(&mut self, name: &str, t: f64, value: f64) {
        let s = self.series.entry(name.to_string()).or_default();
        match s.last_mut() {
            Some(last) if last.0 == t => last.1 = value,
            Some(last) if last.0 > t => panic!("series {name}: time {t} after {}", last.0),
            _ => s.push((t, value)),
        }
    }

    pub fn set_flag(&mut self, name: &str, pass: bool, message: impl Into<String>) {
        self.flags.insert(
            name.to_string(),
            Flag {
                pass,
                message: message.into(),
            },
        );
    }

    pub fn all_pass(&self) -> bool {
        self.flags.values().all(|f| f.pass)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.flags
            .iter()
            .filter(|(_, f)| !f.pass)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    pub fn values(&self, name: &str) -> Vec<f64> {
        self.series
            .get(name)
            .map(|s| s.iter().map(|p| p.1).collect())
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateMode {
    Parabolic,
    Elliptic,
}

/// Curvatures and `w` at an active node.
fn node_geometry(grid: &Grid, u: &[f64], idx: usize) -> Option<([f64; 2], f64)> {
    if grid.is_boundary(idx) {
        return None;
    }
    grid.jet(u, idx).curvatures().ok()
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Parameters of the gradient test functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalParams {
    pub xi: Vec<f64>,
    pub radius: f64,
    pub center: Vec<f64>,
    pub mode: EstimateMode,
}

/// `max t·ρ·φ·ln u_ξ` (parabolic, `ρ = 1 - |x|²/r²`) or `max ρ·φ·ln u_ξ`
/// (elliptic, `ρ = r² - |x|²`) over the ball, with `φ = 1 + u/M` and
/// `M = sup u`. Nodes with `u_ξ <= 1` contribute zero. Heights are shifted
/// so that the minimum over the ball is zero.
pub fn gradient_test_functional(snap: &Snapshot, p: &FunctionalParams) -> f64 {
    let grid = &snap.grid;
    let n = grid.n();
    let r2 = p.radius * p.radius;
    let ball: Vec<usize> = grid
        .active_nodes()
        .filter(|&idx| dist_sq(&grid.coord(idx)[..n], &p.center[..n]) < r2)
        .collect();
    if ball.is_empty() {
        return 0.0;
    }
    let lo = ball.iter().map(|&i| snap.u[i]).fold(f64::INFINITY, f64::min);
    let m = ball.iter().map(|&i| snap.u[i] - lo).fold(0.0, f64::max);
    let mut best = 0.0f64;
    for &idx in &ball {
        let jet = grid.jet(&snap.u, idx);
        let u_xi: f64 = jet.grad().iter().zip(&p.xi).map(|(g, x)| g * x).sum();
        if u_xi <= 1.0 {
            continue;
        }
        let d2 = dist_sq(&grid.coord(idx)[..n], &p.center[..n]);
        let phi = if m > 0.0 { 1.0 + (snap.u[idx] - lo) / m } else { 1.0 };
        let value = match p.mode {
            EstimateMode::Parabolic => snap.t * (1.0 - d2 / r2) * phi * u_xi.ln(),
            EstimateMode::Elliptic => (r2 - d2) * phi * u_xi.ln(),
        };
        best = best.max(value);
    }
    best
}

/// One ball of the gradient-estimate sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatePanel {
    /// Oscillation of `u` over the ball, i.e. `sup u` after shifting the
    /// minimum to zero.
    pub m: f64,
    pub r: f64,
    /// `|Du|` at the ball center.
    pub grad0: f64,
    /// `ln grad0 / (M/r + M²/r²)`.
    pub fitted_c: f64,
}

impl EstimatePanel {
    pub fn new(m: f64, r: f64, grad0: f64) -> Self {
        let form = m / r + m * m / (r * r);
        let fitted_c = if grad0 <= 1.0 { 0.0 } else { grad0.ln() / form };
        Self { m, r, grad0, fitted_c }
    }

    /// Builds a panel from grid data, with the gradient from fourth-order
    /// central differences at the center node.
    pub fn from_grid(grid: &Grid, u: &[f64], center: &[f64], r: f64) -> Result<Self, MonitorError> {
        let n = grid.n();
        let c = grid
            .nearest(center)
            .ok_or_else(|| MonitorError::InsufficientData("ball center off the grid".into()))?;
        let g = grid
            .gradient4(u, c)
            .ok_or_else(|| MonitorError::InsufficientData("no room for the gradient stencil".into()))?;
        let centre = grid.coord(c);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for idx in 0..grid.len() {
            if dist_sq(&grid.coord(idx)[..n], &centre[..n]) <= r * r {
                lo = lo.min(u[idx]);
                hi = hi.max(u[idx]);
            }
        }
        let grad0 = g[..n].iter().map(|x| x * x).sum::<f64>().sqrt();
        Ok(Self::new(hi - lo, r, grad0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientFit {
    pub fitted_c: f64,
    pub used: usize,
    pub pass: bool,
}

/// Smallest `C` with `ln grad0 <= C (M/r + M²/r²)` on every panel. Panels
/// with `grad0 <= 1` hold for any `C >= 0` and are left out of the fit.
pub fn elliptic_gradient_bound_check(panels: &[EstimatePanel], ceiling: f64) -> Result<GradientFit, MonitorError> {
    if panels.len() < 5 {
        return Err(MonitorError::InsufficientData(format!(
            "{} panels, need at least 5",
            panels.len()
        )));
    }
    let mut fitted_c = 0.0f64;
    let mut used = 0;
    for p in panels.iter().filter(|p| !(p.grad0 <= 1.0)) {
        used += 1;
        let c = p.grad0.ln() / (p.m / p.r + p.m * p.m / (p.r * p.r));
        fitted_c = if c.is_nan() { f64::INFINITY } else { fitted_c.max(c) };
    }
    Ok(GradientFit {
        fitted_c,
        used,
        pass: fitted_c.is_finite() && fitted_c <= ceiling,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereFit {
    pub center: Vec<f64>,
    pub radius: f64,
    pub rms: f64,
}

/// Algebraic least-squares sphere through the graph points `(x, u(x))`.
pub fn fit_sphere(snap: &Snapshot) -> Result<SphereFit, MonitorError> {
    let grid = &snap.grid;
    let n = grid.n();
    let d = n + 1;
    let m = grid.len();
    if m < d + 2 {
        return Err(MonitorError::InsufficientData("too few points for a sphere".into()));
    }
    let point = |idx: usize| -> Vec<f64> {
        let mut p = grid.coord(idx)[..n].to_vec();
        p.push(snap.u[idx]);
        p
    };
    let mut a = DMatrix::<f64>::zeros(m, d + 1);
    let mut b = DVector::<f64>::zeros(m);
    for idx in 0..m {
        let p = point(idx);
        for j in 0..d {
            a[(idx, j)] = 2.0 * p[j];
        }
        a[(idx, d)] = 1.0;
        b[idx] = p.iter().map(|x| x * x).sum();
    }
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| MonitorError::InsufficientData(e.to_string()))?;
    let center: Vec<f64> = sol.iter().take(d).copied().collect();
    let radius = (sol[d] + center.iter().map(|c| c * c).sum::<f64>()).sqrt();
    let ss: f64 = (0..m)
        .map(|idx| {
            let e = dist_sq(&point(idx), &center).sqrt() - radius;
            e * e
        })
        .sum();
    Ok(SphereFit {
        center,
        radius,
        rms: (ss / m as f64).sqrt(),
    })
}

/// `|R(t)² + 2((n-k)/(k+1)) t - R₀²|` per snapshot, with `R(t)` from a
/// sphere fit.
pub fn sphere_radius_law(
    snapshots: &[Snapshot],
    k: usize,
    r0: f64,
    rms_max: f64,
) -> Result<Vec<(f64, f64)>, MonitorError> {
    snapshots
        .iter()
        .map(|s| {
            let n = s.grid.n();
            let fit = fit_sphere(s)?;
            if !(fit.rms <= rms_max) {
                return Err(MonitorError::FitFailure {
                    t: s.t,
                    rms: fit.rms,
                    limit: rms_max,
                });
            }
            let rate = (n - k) as f64 / (k + 1) as f64;
            Ok((s.t, (fit.radius * fit.radius + 2.0 * rate * s.t - r0 * r0).abs()))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinchResult {
    /// `min (H² - |A|²)` over nodes in `Γ_{k+1}`; `None` if there are none.
    pub worst_gap: Option<f64>,
    pub checked: usize,
    pub pass: bool,
}

/// Minimum of `H² - |A|²` over active nodes whose curvatures lie in
/// `Γ_{k+1}`.
pub fn pinching_monitor(snap: &Snapshot, k: usize, tol: f64) -> PinchResult {
    let grid = &snap.grid;
    let n = grid.n();
    let mut worst: Option<f64> = None;
    let mut checked = 0;
    let mut pass = true;
    for idx in 0..grid.len() {
        let Some((lam, _)) = node_geometry(grid, &snap.u, idx) else { continue };
        let g = geometry_from_curvatures(&lam[..n], k);
        if !g.cone.admits(k + 1) {
            continue;
        }
        checked += 1;
        let gap = g.pinching_gap();
        worst = Some(worst.map_or(gap, |w: f64| w.min(gap)));
        if gap < -tol * g.norm_sq_a.max(f64::MIN_POSITIVE) {
            pass = false;
        }
    }
    PinchResult {
        worst_gap: worst,
        checked,
        pass,
    }
}

/// `sup φ₊·w` with `φ = R² - |X - x0|² - 2((n-k)/(k+1)) t`, where
/// `X = (x, u(x))` is the ambient point and `x0` an ambient center.
pub fn max_phi_v(snap: &Snapshot, k: usize, radius: f64, x0: &[f64]) -> f64 {
    let grid = &snap.grid;
    let n = grid.n();
    let rate = (n - k) as f64 / (k + 1) as f64;
    let mut best = 0.0f64;
    for idx in grid.active_nodes() {
        let c = grid.coord(idx);
        let mut d2 = dist_sq(&c[..n], &x0[..n]);
        d2 += (snap.u[idx] - x0[n]).powi(2);
        let phi = radius * radius - d2 - 2.0 * rate * snap.t;
        if phi <= 0.0 {
            continue;
        }
        let g = grid.jet(&snap.u, idx);
        let w = (1.0 + g.grad().iter().map(|x| x * x).sum::<f64>()).sqrt();
        best = best.max(phi * w);
    }
    best
}

/// Series of `sup φ₊·w`; passes iff no value exceeds the first by more
/// than `tol`.
pub fn max_v_monitor(snapshots: &[Snapshot], k: usize, radius: f64, x0: &[f64], tol: f64) -> (Vec<(f64, f64)>, bool) {
    let series: Vec<(f64, f64)> = snapshots.iter().map(|s| (s.t, max_phi_v(s, k, radius, x0))).collect();
    let first = series.first().map_or(0.0, |p| p.1);
    let pass = series.iter().all(|p| p.1 <= first + tol);
    (series, pass)
}

/// Geometric data at one sample point of a curvature sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureSample {
    /// Squared horizontal distance to the sweep center.
    pub dist_sq: f64,
    pub h_sq: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureFit {
    pub fitted_c: f64,
    /// `(R, smallest c for that R)`.
    pub per_radius: Vec<(f64, f64)>,
    pub pass: bool,
}

/// Smallest `c` with
/// `sup H² <= c/(1-θ)² · F · sup v⁴` over `{dist² <= θR²}` for every `R`
/// and every time slice, where `F = 1/t + 1/R²` (parabolic) or
/// `1 + 1/R²` (elliptic). Parabolic slices at `t = 0` are skipped.
pub fn fit_curvature_constant(
    slices: &[(f64, Vec<CurvatureSample>)],
    theta: f64,
    radii: &[f64],
    mode: EstimateMode,
    ceiling: f64,
) -> Result<CurvatureFit, MonitorError> {
    if radii.is_empty() || !(0.0..1.0).contains(&theta) {
        return Err(MonitorError::InsufficientData("need radii and theta in [0, 1)".into()));
    }
    let mut per_radius = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut c_r = 0.0f64;
        let mut seen = false;
        for (t, samples) in slices {
            let factor = match mode {
                EstimateMode::Parabolic if *t <= 0.0 => continue,
                EstimateMode::Parabolic => 1.0 / t + 1.0 / (r * r),
                EstimateMode::Elliptic => 1.0 + 1.0 / (r * r),
            };
            let region = samples.iter().filter(|s| s.dist_sq <= theta * r * r);
            let (mut h2, mut v4) = (0.0f64, 0.0f64);
            for s in region {
                seen = true;
                h2 = h2.max(s.h_sq);
                v4 = v4.max(s.v.powi(4));
            }
            if v4 > 0.0 {
                c_r = c_r.max(h2 * (1.0 - theta).powi(2) / (factor * v4));
            }
        }
        if !seen {
            return Err(MonitorError::InsufficientData(format!("no samples within radius {r}")));
        }
        per_radius.push((r, c_r));
    }
    let fitted_c = per_radius.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(CurvatureFit {
        fitted_c,
        per_radius,
        pass: fitted_c.is_finite() && fitted_c <= ceiling,
    })
}

/// Samples from the active nodes of a snapshot.
pub fn snapshot_samples(snap: &Snapshot, center: &[f64]) -> Vec<CurvatureSample> {
    let grid = &snap.grid;
    let n = grid.n();
    (0..grid.len())
        .filter_map(|idx| {
            let (lam, w) = node_geometry(grid, &snap.u, idx)?;
            let h: f64 = lam[..n].iter().sum();
            Some(CurvatureSample {
                dist_sq: dist_sq(&grid.coord(idx)[..n], &center[..n]),
                h_sq: h * h,
                v: w,
            })
        })
        .collect()
}

/// Samples along a rotational profile, centered on its axis.
pub fn profile_samples(profile: &TranslatorProfile) -> Vec<CurvatureSample> {
    (0..profile.len())
        .map(|i| {
            let h: f64 = profile.curvatures(i).iter().sum();
            CurvatureSample {
                dist_sq: profile.r[i] * profile.r[i],
                h_sq: h * h,
                v: (1.0 + profile.up[i] * profile.up[i]).sqrt(),
            }
        })
        .collect()
}

/// Curvature estimate over a run (parabolic) or a single translator
/// snapshot (elliptic).
pub fn curvature_estimate_check(
    snapshots: &[Snapshot],
    theta: f64,
    radii: &[f64],
    mode: EstimateMode,
    center: &[f64],
    ceiling: f64,
) -> Result<CurvatureFit, MonitorError> {
    let slices: Vec<(f64, Vec<CurvatureSample>)> = snapshots
        .iter()
        .map(|s| (s.t, snapshot_samples(s, center)))
        .collect();
    fit_curvature_constant(&slices, theta, radii, mode, ceiling)
}

/// A diagnostic attached to a flow run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "monitor", rename_all = "snake_case")]
pub enum MonitorSpec {
    /// `sup H²` and `sup w` series.
    SupCurvature,
    RadiusLaw { r0: f64, rms_max: f64, tol: f64 },
    Pinching { tol: f64 },
    MaxV { radius: f64, x0: Vec<f64>, tol: f64 },
    GradientFunctional(FunctionalParams),
    CurvatureEstimate {
        theta: f64,
        radii: Vec<f64>,
        center: Vec<f64>,
        ceiling: f64,
    },
}

impl MonitorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MonitorSpec::SupCurvature => "sup_curvature",
            MonitorSpec::RadiusLaw { .. } => "radius_law",
            MonitorSpec::Pinching { .. } => "pinching",
            MonitorSpec::MaxV { .. } => "max_v",
            MonitorSpec::GradientFunctional(_) => "gradient_functional",
            MonitorSpec::CurvatureEstimate { .. } => "curvature_estimate",
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| format!("{x:e}"))
}

/// Runs every monitor over the snapshots. Pure in its inputs.
pub fn run_monitors(specs: &[MonitorSpec], snapshots: &[Snapshot], k: usize) -> MonitorReport {
    let mut report = MonitorReport {
        times: snapshots.iter().map(|s| s.t).collect(),
        ..Default::default()
    };
    for m in specs {
        match m {
            MonitorSpec::SupCurvature => {
                for s in snapshots {
                    let samples = snapshot_samples(s, &[0.0, 0.0]);
                    let h2 = samples.iter().map(|p| p.h_sq).fold(0.0, f64::max);
                    let v = samples.iter().map(|p| p.v).fold(0.0, f64::max);
                    report.push("sup_H2", s.t, h2);
                    report.push("sup_w", s.t, v);
                }
            }
            MonitorSpec::RadiusLaw { r0, rms_max, tol } => {
                match sphere_radius_law(snapshots, k, *r0, *rms_max) {
                    Ok(series) => {
                        let worst = series.iter().map(|p| p.1).fold(0.0, f64::max);
                        for (t, v) in series {
                            report.push("radius_law", t, v);
                        }
                        report.set_flag("radius_law", worst <= *tol, format!("max residual {worst:e}, tolerance {tol:e}"));
                    }
                    Err(e) => report.set_flag("radius_law", false, e.to_string()),
                }
            }
            MonitorSpec::Pinching { tol } => {
                let mut pass = true;
                let mut worst: Option<f64> = None;
                for s in snapshots {
                    let p = pinching_monitor(s, k, *tol);
                    if let Some(g) = p.worst_gap {
                        report.push("pinching_gap", s.t, g);
                        worst = Some(worst.map_or(g, |w: f64| w.min(g)));
                    }
                    pass &= p.pass;
                }
                report.set_flag("pinching", pass, format!("min H^2 - |A|^2 = {}", fmt_opt(worst)));
            }
            MonitorSpec::MaxV { radius, x0, tol } => {
                let (series, pass) = max_v_monitor(snapshots, k, *radius, x0, *tol);
                let first = series.first().map_or(0.0, |p| p.1);
                let peak = series.iter().map(|p| p.1).fold(0.0, f64::max);
                for (t, v) in series {
                    report.push("max_phi_v", t, v);
                }
                report.set_flag("max_v", pass, format!("initial {first:e}, peak {peak:e}, tolerance {tol:e}"));
            }
            MonitorSpec::GradientFunctional(p) => {
                let mut values = Vec::new();
                for s in snapshots {
                    let v = gradient_test_functional(s, p);
                    values.push(v);
                    report.push("gradient_functional", s.t, v);
                }
                let ok = values.iter().all(|v| v.is_finite());
                report.set_flag("gradient_functional", ok, "finite on every snapshot");
            }
            MonitorSpec::CurvatureEstimate {
                theta,
                radii,
                center,
                ceiling,
            } => match curvature_estimate_check(snapshots, *theta, radii, EstimateMode::Parabolic, center, *ceiling) {
                Ok(fit) => {
                    for &(r, c) in &fit.per_radius {
                        report.push("curvature_c", r, c);
                    }
                    report.set_flag(
                        "curvature_estimate",
                        fit.pass,
                        format!("fitted c {:e}, ceiling {ceiling:e}", fit.fitted_c),
                    );
                }
                Err(e) => report.set_flag("curvature_estimate", false, e.to_string()),
            },
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::Grid;

    fn snap(grid: Grid, t: f64, f: impl Fn(&[f64]) -> f64) -> Snapshot {
        let n = grid.n();
        let u = (0..grid.len()).map(|i| f(&grid.coord(i)[..n])).collect();
        Snapshot { t, grid, u }
    }

    #[test]
    fn functional_clamps() {
        let grid = Grid::centered_box(2, 1.0, 0.125).unwrap();
        let p = FunctionalParams {
            xi: vec![1.0, 0.0],
            radius: 0.9,
            center: vec![0.0, 0.0],
            mode: EstimateMode::Parabolic,
        };
        let gentle = snap(grid.clone(), 1.0, |x| 0.5 * x[0]);
        assert_eq!(gradient_test_functional(&gentle, &p), 0.0);
        let steep = snap(grid.clone(), 0.0, |x| 3.0 * x[0] + x[1] * x[1]);
        assert_eq!(gradient_test_functional(&steep, &p), 0.0);
        let steep = snap(grid, 0.5, |x| 3.0 * x[0] + x[1] * x[1]);
        assert!(gradient_test_functional(&steep, &p) > 0.0);
    }

    #[test]
    fn gradient_fit() {
        let good: Vec<EstimatePanel> = (1..=5).map(|i| EstimatePanel::new(i as f64, i as f64, 2.0)).collect();
        let fit = elliptic_gradient_bound_check(&good, 100.0).unwrap();
        assert!(fit.pass && (fit.fitted_c - 2f64.ln() / 2.0).abs() < 1e-15);

        let mut flat = good.clone();
        flat.push(EstimatePanel::new(1.0, 1.0, 0.0));
        assert_eq!(elliptic_gradient_bound_check(&flat, 100.0).unwrap().used, 5);

        let mut bad = good.clone();
        let (m, r) = (0.5, 1.0);
        bad.push(EstimatePanel::new(m, r, (1e3 * m / r).exp()));
        assert!(!elliptic_gradient_bound_check(&bad, 100.0).unwrap().pass);
        assert!(elliptic_gradient_bound_check(&good[..4], 100.0).is_err());
    }

    #[test]
    fn sphere_fit_recovers_radius() {
        let grid = Grid::centered_box(2, 0.5, 1.0 / 16.0).unwrap();
        let s = snap(grid, 0.0, |x| 0.3 - (0.81 - x[0] * x[0] - x[1] * x[1]).sqrt());
        let fit = fit_sphere(&s).unwrap();
        assert!((fit.radius - 0.9).abs() < 1e-10);
        assert!((fit.center[2] - 0.3).abs() < 1e-10);
        assert!(fit.rms < 1e-10);
    }

    #[test]
    fn radius_law_rejects_non_spherical_data() {
        let grid = Grid::centered_box(2, 0.5, 1.0 / 16.0).unwrap();
        let s = snap(grid, 0.0, |x| x[0].powi(4) + 0.3 * x[1]);
        assert!(matches!(
            sphere_radius_law(&[s], 1, 1.0, 1e-4),
            Err(MonitorError::FitFailure { .. })
        ));
    }

    #[test]
    fn pinching_examples() {
        let g = geometry_from_curvatures(&[0.7, 0.7], 1);
        assert!((g.pinching_gap() - 2.0 * 0.49).abs() < 1e-15);
        let grid = Grid::centered_box(2, 1.0, 0.125).unwrap();
        let saddle = snap(grid.clone(), 0.0, |x| x[0] * x[0] - x[1] * x[1]);
        let p = pinching_monitor(&saddle, 1, 1e-9);
        assert_eq!((p.checked, p.pass, p.worst_gap), (0, true, None));
        let bowl = snap(grid, 0.0, |x| x[0] * x[0] + 0.5 * x[1] * x[1]);
        let p = pinching_monitor(&bowl, 1, 1e-9);
        assert!(p.checked > 0 && p.pass && p.worst_gap.unwrap() > 0.0);
    }

    #[test]
    fn max_v_on_flat_data() {
        // u = 0, x0 = origin, k = 0: sup φ₊ w = (R² - 2 n t)₊.
        let grid = Grid::centered_box(2, 1.0, 0.125).unwrap();
        let snaps: Vec<Snapshot> = [0.0, 0.1, 0.2, 0.6]
            .iter()
            .map(|&t| snap(grid.clone(), t, |_| 0.0))
            .collect();
        let (series, pass) = max_v_monitor(&snaps, 0, 0.8, &[0.0, 0.0, 0.0], 0.0);
        assert!(pass);
        for (t, v) in series {
            assert!((v - (0.64 - 4.0 * t).max(0.0)).abs() < 1e-15, "t={t}");
        }
    }

    #[test]
    fn curvature_fit_on_flat_data() {
        let grid = Grid::centered_box(2, 1.0, 0.125).unwrap();
        let s = snap(grid, 1.0, |x| 0.2 * x[0]);
        let fit = curvature_estimate_check(&[s], 0.5, &[1.0], EstimateMode::Elliptic, &[0.0, 0.0], 1.0).unwrap();
        assert!(fit.fitted_c < 1e-24);
        assert!(fit.pass);
    }

    #[test]
    fn report_axes() {
        let mut r = MonitorReport::default();
        r.push("a", 0.0, 1.0);
        r.push("a", 0.0, 2.0);
        r.push("a", 1.0, 3.0);
        assert_eq!(r.values("a"), vec![2.0, 3.0]);
        r.set_flag("x", false, "no");
        assert_eq!(r.failures(), vec!["x"]);
        let empty = run_monitors(&[], &[], 0);
        assert!(empty.series.is_empty() && empty.flags.is_empty());
    }
}
