//! Explicit finite-difference integration of the graphical flow
//! `u_t = Q_k(A) · √(1 + |Du|²)` on uniform grids in one or two dimensions.
//!
//! Jets come from second-order central differences. Interior points are
//! evaluated independently in parallel and every reduction runs in index
//! order afterwards, so a run is bit-identical for any worker count.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::monitors::{self, MonitorReport, MonitorSpec};
use crate::shape::{sym_eigenvalues_into, weingarten_into};
use crate::symfunc::{Sums, SymError, Tolerance};

/// Minimum nodes per axis.
pub const MIN_NODES: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("{count} grid points left the cone Gamma_{cone} (first at index {first})", count = points.len(), first = points[0])]
    ConeViolation { cone: usize, points: Vec<usize> },
    #[error("solution became non-finite at grid index {index}")]
    NonFinite { index: usize },
    #[error("quotient index k={k} is not admissible for n={n}")]
    BadIndex { k: usize, n: usize },
    #[error(transparent)]
    Sym(#[from] SymError),
}

/// A failure during [`evolve`], tagged with where it happened.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("at t = {t} after {steps} steps: {error}")]
pub struct EvolveError {
    pub t: f64,
    pub steps: usize,
    pub error: FlowError,
}

/// Uniform tensor grid in one or two dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dims: Vec<usize>,
    h: f64,
    origin: Vec<f64>,
    periodic: bool,
}

impl Grid {
    pub fn new(dims: Vec<usize>, h: f64, origin: Vec<f64>, periodic: bool) -> Result<Self, FlowError> {
        if dims.is_empty() || dims.len() > 2 {
            return Err(FlowError::Grid(format!(
                "only 1 or 2 dimensions are supported, got {}",
                dims.len()
            )));
        }
        if origin.len() != dims.len() {
            return Err(FlowError::Grid("origin and dims disagree in length".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < MIN_NODES) {
            return Err(FlowError::Grid(format!("{d} nodes per axis, need at least {MIN_NODES}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(FlowError::Grid(format!("spacing {h} must be positive")));
        }
        Ok(Self {
            dims,
            h,
            origin,
            periodic,
        })
    }

    /// Nodes `-half_width, …, half_width` on every axis with spacing `h`;
    /// `2·half_width / h` must be an integer (to 1e-9).
    pub fn centered_box(n: usize, half_width: f64, h: f64) -> Result<Self, FlowError> {
        let cells = 2.0 * half_width / h;
        let rounded = cells.round();
        if (cells - rounded).abs() > 1e-9 * cells.max(1.0) {
            return Err(FlowError::Grid(format!(
                "half width {half_width} is not a multiple of h/2 = {}",
                h / 2.0
            )));
        }
        Self::new(vec![rounded as usize + 1; n], h, vec![-half_width; n], false)
    }

    /// `cells` nodes per axis on `[0, length)` with periodic wrap.
    pub fn periodic_box(n: usize, length: f64, cells: usize) -> Result<Self, FlowError> {
        Self::new(vec![cells; n], length / cells as f64, vec![0.0; n], true)
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.dims[0] * j
    }

    #[inline]
    pub fn cell(&self, idx: usize) -> (usize, usize) {
        (idx % self.dims[0], idx / self.dims[0])
    }

    /// Coordinates of node `idx`; the second entry is 0 in one dimension.
    #[inline]
    pub fn coord(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.cell(idx);
        let x = self.origin[0] + i as f64 * self.h;
        let y = if self.n() == 2 {
            self.origin[1] + j as f64 * self.h
        } else {
            0.0
        };
        [x, y]
    }

    #[inline]
    pub fn is_boundary(&self, idx: usize) -> bool {
        if self.periodic {
            return false;
        }
        let (i, j) = self.cell(idx);
        let edge_x = i == 0 || i + 1 == self.dims[0];
        let edge_y = self.n() == 2 && (j == 0 || j + 1 == self.dims[1]);
        edge_x || edge_y
    }

    /// Whether the `±reach` stencil around `idx` stays on the grid.
    #[inline]
    pub fn has_reach(&self, idx: usize, reach: usize) -> bool {
        if self.periodic {
            return true;
        }
        let (i, j) = self.cell(idx);
        let ok_x = i >= reach && i + reach < self.dims[0];
        let ok_y = self.n() == 1 || (j >= reach && j + reach < self.dims[1]);
        ok_x && ok_y
    }

    #[inline]
    fn shift(&self, idx: usize, dx: isize, dy: isize) -> usize {
        let (i, j) = self.cell(idx);
        let wrap = |v: usize, d: isize, len: usize| -> usize {
            (v as isize + d).rem_euclid(len as isize) as usize
        };
        let ni = wrap(i, dx, self.dims[0]);
        let nj = if self.n() == 2 { wrap(j, dy, self.dims[1]) } else { 0 };
        self.index(ni, nj)
    }

    /// Index offsets of the `±1` neighbours of `idx` along each axis as
    /// `[x-, x+, y-, y+]`, wrapping on periodic grids.
    #[inline]
    fn neighbours(&self, idx: usize) -> [usize; 4] {
        let nx = self.dims[0];
        let (i, j) = self.cell(idx);
        let row = idx - i;
        let xm = if i == 0 { row + nx - 1 } else { idx - 1 };
        let xp = if i + 1 == nx { row } else { idx + 1 };
        if self.n() == 1 {
            return [xm, xp, 0, 0];
        }
        let ny = self.dims[1];
        let ym = if j == 0 { idx + nx * (ny - 1) } else { idx - nx };
        let yp = if j + 1 == ny { idx - nx * (ny - 1) } else { idx + nx };
        [xm, xp, ym, yp]
    }

    /// Second-order central-difference jets at an interior (or periodic) node.
    #[inline]
    pub fn jet(&self, u: &[f64], idx: usize) -> Jet {
        let h = self.h;
        let inv_h2 = 1.0 / (h * h);
        let c = u[idx];
        let [im, ip, jm, jp] = self.neighbours(idx);
        let (xm, xp) = (u[im], u[ip]);
        if self.n() == 1 {
            return Jet {
                n: 1,
                grad: [(xp - xm) / (2.0 * h), 0.0],
                hess: [(xp - 2.0 * c + xm) * inv_h2, 0.0, 0.0, 0.0],
            };
        }
        let (ym, yp) = (u[jm], u[jp]);
        // Diagonal neighbours: step in y from the x neighbours.
        let dy_p = jp as isize - idx as isize;
        let dy_m = jm as isize - idx as isize;
        let at = |base: usize, d: isize| u[(base as isize + d) as usize];
        let pp = at(ip, dy_p);
        let pm = at(ip, dy_m);
        let mp = at(im, dy_p);
        let mm = at(im, dy_m);
        let uxy = (pp - pm - mp + mm) * (0.25 * inv_h2);
        Jet {
            n: 2,
            grad: [(xp - xm) / (2.0 * h), (yp - ym) / (2.0 * h)],
            hess: [
                (xp - 2.0 * c + xm) * inv_h2,
                uxy,
                uxy,
                (yp - 2.0 * c + ym) * inv_h2,
            ],
        }
    }

    /// Fourth-order central gradient; `None` when the 5-point stencil does
    /// not fit.
    pub fn gradient4(&self, u: &[f64], idx: usize) -> Option<[f64; 2]> {
        if !self.has_reach(idx, 2) {
            return None;
        }
        let h = self.h;
        let d = |dx: isize, dy: isize| u[self.shift(idx, dx, dy)];
        let gx = (-d(2, 0) + 8.0 * d(1, 0) - 8.0 * d(-1, 0) + d(-2, 0)) / (12.0 * h);
        let gy = if self.n() == 2 {
            (-d(0, 2) + 8.0 * d(0, 1) - 8.0 * d(0, -1) + d(0, -2)) / (12.0 * h)
        } else {
            0.0
        };
        Some([gx, gy])
    }

    /// Nodes whose values evolve: everything on a periodic grid, the
    /// interior otherwise.
    pub fn active_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&idx| !self.is_boundary(idx))
    }

    /// Nearest node to a point, if it lies on the grid.
    pub fn nearest(&self, x: &[f64]) -> Option<usize> {
        let mut cell = [0usize; 2];
        for axis in 0..self.n() {
            let f = ((x[axis] - self.origin[axis]) / self.h).round();
            if f < 0.0 || f >= self.dims[axis] as f64 {
                return None;
            }
            cell[axis] = f as usize;
        }
        Some(self.index(cell[0], cell[1]))
    }
}

/// Discrete first and second derivatives at one node (`n <= 2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub n: usize,
    pub grad: [f64; 2],
    /// Row-major, only the leading `n×n` block is meaningful.
    pub hess: [f64; 4],
}

impl Jet {
    #[inline]
    pub fn grad(&self) -> &[f64] {
        &self.grad[..self.n]
    }

    #[inline]
    pub fn hess(&self) -> &[f64] {
        &self.hess[..self.n * self.n]
    }

    /// Principal curvatures (descending) and `w`.
    #[inline]
    pub fn curvatures(&self) -> Result<([f64; 2], f64), SymError> {
        let mut a = [0.0; 4];
        let w = weingarten_into(self.grad(), self.hess(), &mut a);
        let mut lam = [0.0; 2];
        sym_eigenvalues_into(&a[..self.n * self.n], self.n, &mut lam)?;
        Ok((lam, w))
    }
}

/// Time-dependent Dirichlet data.
pub trait BoundaryProvider: Send + Sync {
    fn value(&self, x: &[f64], t: f64) -> f64;
}

impl<F> BoundaryProvider for F
where
    F: Fn(&[f64], f64) -> f64 + Send + Sync,
{
    fn value(&self, x: &[f64], t: f64) -> f64 {
        self(x, t)
    }
}

#[derive(Clone)]
pub enum Boundary {
    /// Boundary nodes are set from the provider at every stage time.
    Dirichlet(Arc<dyn BoundaryProvider>),
    /// Boundary nodes keep their initial values.
    Frozen,
    /// The grid wraps around; there are no boundary nodes.
    Periodic,
}

impl fmt::Debug for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Dirichlet(_) => f.write_str("Dirichlet(..)"),
            Boundary::Frozen => f.write_str("Frozen"),
            Boundary::Periodic => f.write_str("Periodic"),
        }
    }
}

/// Grid samples of a graph function with their boundary treatment.
#[derive(Debug, Clone)]
pub struct GraphPatch {
    grid: Grid,
    u: Vec<f64>,
    bc: Boundary,
}

impl GraphPatch {
    pub fn new(grid: Grid, u: Vec<f64>, bc: Boundary) -> Result<Self, FlowError> {
        if u.len() != grid.len() {
            return Err(FlowError::Grid(format!(
                "{} values for a grid of {} nodes",
                u.len(),
                grid.len()
            )));
        }
        if grid.is_periodic() != matches!(bc, Boundary::Periodic) {
            return Err(FlowError::Grid(
                "periodic boundary requires a periodic grid and vice versa".into(),
            ));
        }
        if let Some(index) = u.iter().position(|v| !v.is_finite()) {
            return Err(FlowError::NonFinite { index });
        }
        Ok(Self { grid, u, bc })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64, bc: Boundary) -> Result<Self, FlowError> {
        let n = grid.n();
        let u = (0..grid.len()).map(|idx| f(&grid.coord(idx)[..n])).collect();
        Self::new(grid, u, bc)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.u
    }

    pub fn boundary(&self) -> &Boundary {
        &self.bc
    }

    /// Adds a constant to every value.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.u.iter_mut().for_each(|v| *v += c);
        out
    }

    pub fn refresh_boundary(&mut self, t: f64) {
        if let Boundary::Dirichlet(provider) = &self.bc {
            let n = self.grid.n();
            for idx in 0..self.grid.len() {
                if self.grid.is_boundary(idx) {
                    self.u[idx] = provider.value(&self.grid.coord(idx)[..n], t);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ConePolicy {
    /// Stop with [`FlowError::ConeViolation`].
    #[default]
    Abort,
    /// Count violating points and keep going; their speed is `Q_k·w` when
    /// `S_k > 0` and zero otherwise.
    Flag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Euler,
    #[default]
    Rk2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub k: usize,
    pub scheme: Scheme,
    pub safety: f64,
    pub dt_max: f64,
    pub policy: ConePolicy,
    /// Constant added to the speed; `-1` gives the translating frame.
    pub source: f64,
    pub tol: Tolerance,
}

impl StepParams {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            scheme: Scheme::Rk2,
            safety: 0.25,
            dt_max: 1.0,
            policy: ConePolicy::Abort,
            source: 0.0,
            tol: Tolerance::default(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct PointEval {
    speed: f64,
    trace: f64,
    violated: bool,
}

/// Speeds `Q_k·w` on active nodes plus the largest `Σ_i ∂Q_k/∂λ_i`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub speed: Vec<f64>,
    pub max_trace: f64,
    pub violations: Vec<usize>,
}

fn check_index(grid: &Grid, k: usize) -> Result<(), FlowError> {
    if k >= grid.n() {
        return Err(FlowError::BadIndex { k, n: grid.n() });
    }
    Ok(())
}

#[inline]
fn eval_point(grid: &Grid, u: &[f64], idx: usize, k: usize, tol: Tolerance) -> Result<PointEval, SymError> {
    let jet = grid.jet(u, idx);
    let (lam, w) = jet.curvatures()?;
    let sums = Sums::of(&lam[..jet.n]);
    // Q_0 is linear and parabolic everywhere; only k >= 1 needs the cone.
    let in_cone = k == 0 || sums.depth(tol) > k;
    match sums.quotient(k, tol) {
        Ok(q) => Ok(PointEval {
            speed: q * w,
            trace: if in_cone { sums.quotient_trace(k) } else { 0.0 },
            violated: !in_cone,
        }),
        Err(_) => Ok(PointEval {
            speed: 0.0,
            trace: 0.0,
            violated: true,
        }),
    }
}

/// Evaluates the flow speed on every active node.
pub fn evaluate(patch: &GraphPatch, k: usize, tol: Tolerance) -> Result<Evaluation, FlowError> {
    let grid = &patch.grid;
    check_index(grid, k)?;
    let u = &patch.u;
    let len = grid.len();
    let mut speed = vec![0.0; len];
    let mut trace = vec![0.0; len];
    // 0: fine, 1: outside the cone, 2: evaluation failed.
    let mut status = vec![0u8; len];
    speed
        .par_iter_mut()
        .zip(trace.par_iter_mut())
        .zip(status.par_iter_mut())
        .enumerate()
        .with_min_len(512)
        .for_each(|(idx, ((sp, tr), st))| {
            if grid.is_boundary(idx) {
                return;
            }
            match eval_point(grid, u, idx, k, tol) {
                Ok(p) if p.speed.is_finite() => {
                    *sp = p.speed;
                    *tr = p.trace;
                    *st = u8::from(p.violated);
                }
                // The closed-form eigensolver only fails on overflowed jets.
                _ => *st = 2,
            }
        });

    let mut max_trace = 0.0f64;
    let mut violations = Vec::new();
    for idx in 0..len {
        match status[idx] {
            2 => return Err(FlowError::NonFinite { index: idx }),
            1 => violations.push(idx),
            _ => {}
        }
        max_trace = max_trace.max(trace[idx]);
    }
    Ok(Evaluation {
        speed,
        max_trace,
        violations,
    })
}

/// `Q_k(A)·w` on active nodes, zero on Dirichlet nodes.
pub fn rhs(patch: &GraphPatch, k: usize) -> Result<Vec<f64>, FlowError> {
    let e = evaluate(patch, k, Tolerance::default())?;
    if !e.violations.is_empty() {
        return Err(FlowError::ConeViolation {
            cone: k + 1,
            points: e.violations,
        });
    }
    Ok(e.speed)
}

fn dt_from_trace(h: f64, max_trace: f64, safety: f64, dt_max: f64) -> f64 {
    if max_trace > 0.0 {
        (safety * h * h / max_trace).min(dt_max)
    } else {
        dt_max
    }
}

/// `safety·h² / max Σ_i ∂Q_k/∂λ_i`, capped at `dt_max`. The linearized
/// operator is `P Q′ P` with `|P| <= 1`, so the trace of `Q′` bounds its
/// diffusion strength.
pub fn stable_dt(patch: &GraphPatch, k: usize, safety: f64, dt_max: f64) -> Result<f64, FlowError> {
    let e = evaluate(patch, k, Tolerance::default())?;
    if !e.violations.is_empty() {
        return Err(FlowError::ConeViolation {
            cone: k + 1,
            points: e.violations,
        });
    }
    Ok(dt_from_trace(patch.grid.h, e.max_trace, safety, dt_max))
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub patch: GraphPatch,
    pub t: f64,
    pub dt: f64,
    pub k: usize,
    pub cone_violations: usize,
    pub steps: usize,
}

impl FlowState {
    pub fn new(mut patch: GraphPatch, k: usize) -> Self {
        patch.refresh_boundary(0.0);
        Self {
            patch,
            t: 0.0,
            dt: 0.0,
            k,
            cone_violations: 0,
            steps: 0,
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            t: self.t,
            grid: self.patch.grid.clone(),
            u: self.patch.u.clone(),
        }
    }
}

/// Immutable copy of the solution at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub grid: Grid,
    pub u: Vec<f64>,
}

fn apply_policy(e: &Evaluation, params: &StepParams) -> Result<usize, FlowError> {
    if e.violations.is_empty() {
        return Ok(0);
    }
    match params.policy {
        ConePolicy::Abort => Err(FlowError::ConeViolation {
            cone: params.k + 1,
            points: e.violations.clone(),
        }),
        ConePolicy::Flag => Ok(e.violations.len()),
    }
}

fn advance(base: &[f64], grid: &Grid, dt: f64, terms: &[&[f64]], weights: &[f64], source: f64) -> Vec<f64> {
    let mut out = base.to_vec();
    for (idx, v) in out.iter_mut().enumerate() {
        if grid.is_boundary(idx) {
            continue;
        }
        let mut f = source;
        for (term, wgt) in terms.iter().zip(weights) {
            f += wgt * term[idx];
        }
        *v += dt * f;
    }
    out
}

fn check_finite(u: &[f64]) -> Result<(), FlowError> {
    match u.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(FlowError::NonFinite { index }),
        None => Ok(()),
    }
}

/// One explicit step with the stable time step.
pub fn step(state: &FlowState, params: &StepParams) -> Result<FlowState, FlowError> {
    step_capped(state, params, f64::INFINITY)
}

/// One explicit step whose size is additionally capped at `dt_cap`.
pub fn step_capped(state: &FlowState, params: &StepParams, dt_cap: f64) -> Result<FlowState, FlowError> {
    let grid = state.patch.grid.clone();
    let e1 = evaluate(&state.patch, params.k, params.tol)?;
    let mut violations = apply_policy(&e1, params)?;
    let dt = dt_from_trace(grid.h, e1.max_trace, params.safety, params.dt_max).min(dt_cap);
    let t_new = state.t + dt;

    let mut patch = state.patch.clone();
    match params.scheme {
        Scheme::Euler => {
            patch.u = advance(&state.patch.u, &grid, dt, &[&e1.speed], &[1.0], params.source);
        }
        Scheme::Rk2 => {
            let mut stage = state.patch.clone();
            stage.u = advance(&state.patch.u, &grid, dt, &[&e1.speed], &[1.0], params.source);
            stage.refresh_boundary(t_new);
            check_finite(&stage.u)?;
            let e2 = evaluate(&stage, params.k, params.tol)?;
            violations += apply_policy(&e2, params)?;
            patch.u = advance(
                &state.patch.u,
                &grid,
                dt,
                &[&e1.speed, &e2.speed],
                &[0.5, 0.5],
                params.source,
            );
        }
    }
    patch.refresh_boundary(t_new);
    check_finite(&patch.u)?;
    Ok(FlowState {
        patch,
        t: t_new,
        dt,
        k: state.k,
        cone_violations: state.cone_violations + violations,
        steps: state.steps + 1,
    })
}

#[derive(Debug, Clone)]
pub struct EvolveConfig {
    pub initial: GraphPatch,
    pub params: StepParams,
    pub t_final: f64,
    /// Snapshot cadence in steps; the initial and final states are always kept.
    pub record_every: usize,
    pub max_steps: usize,
    pub monitors: Vec<MonitorSpec>,
}

/// Result of a completed run.
#[derive(Debug, Clone)]
pub struct FlowRun {
    pub state: FlowState,
    pub report: MonitorReport,
    pub snapshots: Vec<Snapshot>,
    pub dt_min: f64,
    pub dt_max: f64,
}

/// Integrates to `t_final`, recording snapshots every `record_every` steps,
/// then runs the configured monitors over them.
pub fn evolve(config: &EvolveConfig) -> Result<FlowRun, EvolveError> {
    let mut state = FlowState::new(config.initial.clone(), config.params.k);
    let fail = |state: &FlowState, error: FlowError| EvolveError {
        t: state.t,
        steps: state.steps,
        error,
    };
    check_index(state.patch.grid(), config.params.k).map_err(|e| fail(&state, e))?;
    let mut snapshots = vec![state.snapshot()];
    let (mut dt_min, mut dt_max) = (f64::INFINITY, 0.0f64);
    let record_every = config.record_every.max(1);
    // Round-off guard so the last step is not a sliver.
    let eps = 1e-12 * config.t_final.abs().max(1.0);

    while state.t < config.t_final - eps {
        if state.steps >= config.max_steps {
            return Err(fail(
                &state,
                FlowError::Grid(format!("step limit {} reached", config.max_steps)),
            ));
        }
        let remaining = config.t_final - state.t;
        let mut next =
            step_capped(&state, &config.params, remaining).map_err(|e| fail(&state, e))?;
        if config.t_final - next.t <= eps {
            next.t = config.t_final;
        }
        dt_min = dt_min.min(next.dt);
        dt_max = dt_max.max(next.dt);
        state = next;
        if state.steps % record_every == 0 && state.t < config.t_final {
            snapshots.push(state.snapshot());
        }
    }
    if snapshots.last().map(|s| s.t) != Some(state.t) {
        snapshots.push(state.snapshot());
    }
    let report = monitors::run_monitors(&config.monitors, &snapshots, config.params.k);
    Ok(FlowRun {
        state,
        report,
        snapshots,
        dt_min: if dt_min.is_finite() { dt_min } else { 0.0 },
        dt_max,
    })
}
