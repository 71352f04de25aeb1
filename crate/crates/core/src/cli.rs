//! Command-line front end: `identities`, `flow`, `translator`, `report`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{
    BoundaryKind, ConfigError, FailMode, InitialProfile, MonitorName, Purpose, RelaxStartKind, SolverConfig,
};
use crate::flow::{evolve, Boundary, EvolveConfig, Grid, GraphPatch, StepParams};
use crate::identities::{run_suite, SuiteConfig};
use crate::io;
use crate::monitors::{
    elliptic_gradient_bound_check, fit_curvature_constant, profile_samples, run_monitors, EstimateMode,
    EstimatePanel, Flag, FunctionalParams, MonitorReport, MonitorSpec,
};
use crate::profiles::{Paraboloid, ShrinkingCap, Sine};
use crate::symfunc::Tolerance;
use crate::translator::{
    growth_exponent, integrate_maximal, relax_to_translator, vertex_curvature, RadialData, RelaxConfig, RelaxStart,
    TranslatorProfile,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IDENTITY: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_MONITOR: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

pub const OUT_DIR_ENV: &str = "QKFLOW_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "qkflow", version, about = "Q_k curvature flows and translators")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Overrides the seed from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Randomized sweep over the symmetric-function identities.
    Identities {
        /// Largest dimension swept.
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        /// Random samples per dimension.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Evolves a graph under the flow.
    Flow {
        /// TOML run configuration.
        #[arg(long)]
        config: PathBuf,
    },
    /// Computes a rotational translator and its diagnostics.
    Translator {
        /// TOML run configuration.
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-runs the monitors over snapshots in the output directory.
    Report {
        /// Defaults to `config.toml` in the output directory.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Parses arguments and runs; returns the exit code.
pub fn main_with<I, T>(args: I, out: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = write!(out, "{e}");
            return code;
        }
    };
    run(&cli, out)
}

pub fn run(cli: &Cli, out: &mut (dyn Write + Send)) -> i32 {
    match cli.global.threads {
        Some(0) => {
            let _ = writeln!(out, "error: --threads must be positive");
            EXIT_USAGE
        }
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| dispatch(cli, out)),
            Err(e) => {
                let _ = writeln!(out, "error: thread pool: {e}");
                EXIT_USAGE
            }
        },
        None => dispatch(cli, out),
    }
}

fn dispatch(cli: &Cli, out: &mut (dyn Write + Send)) -> i32 {
    let g = &cli.global;
    match &cli.command {
        Command::Identities { n_max, samples } => cmd_identities(g.seed.unwrap_or(1), *n_max, *samples, out),
        Command::Flow { config } => cmd_flow(config, g, out),
        Command::Translator { config } => cmd_translator(config, g, out),
        Command::Report { config } => {
            let path = config.clone().unwrap_or_else(|| g.out_dir.join("config.toml"));
            cmd_report(&path, g, out)
        }
    }
}

/// Prints one line per identity; exit 1 names the first failure.
pub fn cmd_identities(seed: u64, n_max: usize, samples: usize, out: &mut (dyn Write + Send)) -> i32 {
    if n_max == 0 || n_max > crate::symfunc::MAX_DIM || samples == 0 {
        let _ = writeln!(out, "error: need 1 <= n_max <= {} and samples >= 1", crate::symfunc::MAX_DIM);
        return EXIT_USAGE;
    }
    let stats = run_suite(&SuiteConfig { seed, n_max, samples });
    if n_max == 1 {
        let _ = writeln!(out, "note: n_max = 1, cases with k >= 1 skipped");
    }
    for s in &stats {
        let _ = writeln!(out, "{s}");
    }
    match stats.iter().find(|s| !s.pass()) {
        Some(s) => {
            let _ = writeln!(out, "FAIL: {}", s.name);
            EXIT_IDENTITY
        }
        None => {
            let _ = writeln!(out, "all identities within tolerance");
            EXIT_OK
        }
    }
}

fn load(path: &Path, g: &GlobalOpts, purpose: Purpose, out: &mut (dyn Write + Send)) -> Result<SolverConfig, i32> {
    let checked = SolverConfig::load(path).and_then(|mut c| {
        if let Some(seed) = g.seed {
            c.run.seed = seed;
        }
        c.validate(purpose)?;
        Ok(c)
    });
    checked.map_err(|e: ConfigError| {
        let _ = writeln!(out, "error: {e}");
        EXIT_USAGE
    })
}

fn prepare_out(dir: &Path, cfg: &SolverConfig, out: &mut (dyn Write + Send)) -> Result<(), i32> {
    let written = io::ensure_dir(dir).and_then(|_| {
        let text = cfg.to_toml().map_err(|e| io::IoError::Format {
            path: dir.join("config.toml"),
            message: e.to_string(),
        })?;
        std::fs::write(dir.join("config.toml"), text).map_err(|source| io::IoError::Fs {
            path: dir.join("config.toml"),
            source,
        })
    });
    written.map_err(|e| {
        let _ = writeln!(out, "error: {e}");
        EXIT_USAGE
    })
}

fn io_fail(e: io::IoError, out: &mut (dyn Write + Send)) -> i32 {
    let _ = writeln!(out, "error: {e}");
    EXIT_SOLVER
}

/// Grid, initial patch and boundary treatment described by a config.
pub fn build_patch(cfg: &SolverConfig) -> Result<GraphPatch, String> {
    let n = cfg.run.n;
    let d = &cfg.domain;
    let grid = if d.periodic {
        let cells = (2.0 * d.half_width / d.h).round() as usize;
        Grid::periodic_box(n, 2.0 * d.half_width, cells)
    } else {
        Grid::centered_box(n, d.half_width, d.h)
    }
    .map_err(|e| e.to_string())?;
    let init = &cfg.initial;
    let named: Option<Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>> = match init.profile {
        InitialProfile::ShrinkingCap => {
            let cap = ShrinkingCap::new(n, cfg.run.k, init.radius, init.height);
            Some(Arc::new(move |x: &[f64], t: f64| cap.height(x, t)))
        }
        InitialProfile::Paraboloid => {
            let p = Paraboloid {
                curvature: init.curvature,
            };
            Some(Arc::new(move |x: &[f64], _t: f64| p.height(x)))
        }
        InitialProfile::Sine => {
            let s = Sine {
                amplitude: init.amplitude,
                wavenumber: init.wavenumber,
            };
            Some(Arc::new(move |x: &[f64], _t: f64| s.height(x)))
        }
        InitialProfile::Flat => Some(Arc::new(|_: &[f64], _t: f64| 0.0)),
        InitialProfile::File => None,
    };
    let bc = match cfg.boundary.kind {
        BoundaryKind::Periodic => Boundary::Periodic,
        BoundaryKind::Frozen => Boundary::Frozen,
        BoundaryKind::Dirichlet => {
            let f = named.clone().ok_or("Dirichlet data needs a named profile")?;
            Boundary::Dirichlet(Arc::new(move |x: &[f64], t: f64| f(x, t)))
        }
    };
    match named {
        Some(f) => GraphPatch::from_fn(grid, |x| f(x, 0.0), bc),
        None => {
            let path = cfg.resolve(init.path.as_deref().ok_or("initial.path missing")?);
            let u = io::read_heights(&path).map_err(|e| e.to_string())?;
            GraphPatch::new(grid, u, bc)
        }
    }
    .map_err(|e| e.to_string())
}

/// Monitor list for a flow config.
pub fn monitor_specs(cfg: &SolverConfig) -> Vec<MonitorSpec> {
    let m = &cfg.monitors;
    let tol = &cfg.tolerances;
    let n = cfg.run.n;
    let center: Vec<f64> = m.center[..n].to_vec();
    let mut names = m.names.clone();
    names.sort();
    names.dedup();
    names
        .into_iter()
        .map(|name| match name {
            MonitorName::SupCurvature => MonitorSpec::SupCurvature,
            MonitorName::RadiusLaw => MonitorSpec::RadiusLaw {
                r0: cfg.initial.radius,
                rms_max: tol.sphere_rms,
                tol: tol.radius_law,
            },
            MonitorName::Pinching => MonitorSpec::Pinching { tol: tol.pinching },
            MonitorName::MaxV => {
                let x0 = if cfg.initial.profile == InitialProfile::ShrinkingCap {
                    ShrinkingCap::new(n, cfg.run.k, cfg.initial.radius, cfg.initial.height).bottom()
                } else {
                    let mut p = center.clone();
                    p.push(0.0);
                    p
                };
                MonitorSpec::MaxV {
                    radius: m.max_v_radius,
                    x0,
                    tol: tol.max_v,
                }
            }
            MonitorName::GradientFunctional => MonitorSpec::GradientFunctional(FunctionalParams {
                xi: m.functional_xi[..n].to_vec(),
                radius: m.functional_radius,
                center: center.clone(),
                mode: EstimateMode::Parabolic,
            }),
            MonitorName::CurvatureEstimate => MonitorSpec::CurvatureEstimate {
                theta: m.theta,
                radii: m.radii.clone(),
                center: center.clone(),
                ceiling: tol.curvature_ceiling,
            },
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct Failure {
    t: f64,
    steps: usize,
    error: String,
}

#[derive(Debug, Serialize)]
struct FlowSummary {
    command: &'static str,
    n: usize,
    k: usize,
    seed: u64,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<Failure>,
    final_t: f64,
    steps: usize,
    dt_min: f64,
    dt_max: f64,
    cone_violations: usize,
    snapshots: usize,
    flags: std::collections::BTreeMap<String, Flag>,
}

fn print_flags(flags: &std::collections::BTreeMap<String, Flag>, out: &mut (dyn Write + Send)) {
    for (name, f) in flags {
        let _ = writeln!(out, "{:<20} {} {}", name, if f.pass { "PASS" } else { "FAIL" }, f.message);
    }
}

fn monitor_exit(flags_pass: bool, mode: FailMode, out: &mut (dyn Write + Send)) -> i32 {
    match (flags_pass, mode) {
        (true, _) => EXIT_OK,
        (false, FailMode::Warn) => {
            let _ = writeln!(out, "warning: monitor failure (warn-only)");
            EXIT_OK
        }
        (false, FailMode::Error) => EXIT_MONITOR,
    }
}

/// Runs a flow config; writes `summary.json`, `monitors.csv` and
/// `snapshots/`.
pub fn cmd_flow(path: &Path, g: &GlobalOpts, out: &mut (dyn Write + Send)) -> i32 {
    let cfg = match load(path, g, Purpose::Flow, out) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let dir = &g.out_dir;
    if let Err(code) = prepare_out(dir, &cfg, out) {
        return code;
    }
    let initial = match build_patch(&cfg) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let t = &cfg.time;
    let mut params = StepParams::new(cfg.run.k);
    params.scheme = t.scheme;
    params.safety = t.safety;
    params.dt_max = t.dt_max;
    params.policy = t.cone_policy;
    params.tol = Tolerance::new(cfg.tolerances.cone_rel);
    let ec = EvolveConfig {
        initial,
        params,
        t_final: t.t_final,
        record_every: t.record_every,
        max_steps: t.max_steps,
        monitors: monitor_specs(&cfg),
    };
    let mut summary = FlowSummary {
        command: "flow",
        n: cfg.run.n,
        k: cfg.run.k,
        seed: cfg.run.seed,
        status: "ok",
        failure: None,
        final_t: 0.0,
        steps: 0,
        dt_min: 0.0,
        dt_max: 0.0,
        cone_violations: 0,
        snapshots: 0,
        flags: Default::default(),
    };
    let run = match evolve(&ec) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(out, "solver failure at t = {:e} after {} steps: {}", e.t, e.steps, e.error);
            summary.status = "solver_failure";
            summary.final_t = e.t;
            summary.steps = e.steps;
            summary.failure = Some(Failure {
                t: e.t,
                steps: e.steps,
                error: e.error.to_string(),
            });
            if let Err(e) = io::write_json(&dir.join("summary.json"), &summary) {
                return io_fail(e, out);
            }
            return EXIT_SOLVER;
        }
    };
    summary.final_t = run.state.t;
    summary.steps = run.state.steps;
    summary.dt_min = run.dt_min;
    summary.dt_max = run.dt_max;
    summary.cone_violations = run.state.cone_violations;
    summary.snapshots = run.snapshots.len();
    summary.flags = run.report.flags.clone();
    let written = io::write_snapshots(&dir.join("snapshots"), &run.snapshots)
        .and_then(|_| io::write_monitor_csv(&dir.join("monitors.csv"), &run.report))
        .and_then(|_| io::write_json(&dir.join("summary.json"), &summary));
    if let Err(e) = written {
        return io_fail(e, out);
    }
    let _ = writeln!(
        out,
        "t = {:e} after {} steps, dt in [{:e}, {:e}], cone violations {}",
        run.state.t, run.state.steps, run.dt_min, run.dt_max, run.state.cone_violations
    );
    print_flags(&run.report.flags, out);
    monitor_exit(run.report.all_pass(), cfg.monitors.on_failure, out)
}

#[derive(Debug, Serialize)]
struct RelaxSummary {
    steps: usize,
    residual: f64,
    profile_error: f64,
}

#[derive(Debug, Serialize)]
struct TranslatorSummary {
    command: &'static str,
    n: usize,
    k: usize,
    seed: u64,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<String>,
    r_max: f64,
    /// Radius where a non-entire profile turns vertical or degenerates.
    #[serde(skip_serializing_if = "Option::is_none")]
    ends_at: Option<f64>,
    vertex_curvature: f64,
    vertex_curvature_estimate: f64,
    max_round_trip_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    growth_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gradient_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    curvature_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    relaxation: Option<RelaxSummary>,
    flags: std::collections::BTreeMap<String, Flag>,
}

/// Gradient panels of a profile: balls of the given radii centered at
/// distance `offset` from the axis. Planar profiles are sampled on a grid
/// of spacing `h`; in higher dimensions the ball data come from the
/// profile directly.
pub fn profile_panels(
    profile: &TranslatorProfile,
    offset: f64,
    radii: &[f64],
    h: f64,
) -> Result<Vec<EstimatePanel>, String> {
    let reach = offset + radii.iter().cloned().fold(0.0, f64::max);
    if reach + 4.0 * h > profile.r_max() {
        return Err(format!("panels reach r = {reach}, profile ends at {}", profile.r_max()));
    }
    if profile.n == 2 {
        let cells = (reach / h).ceil() + 3.0;
        let grid = Grid::centered_box(2, cells * h, h).map_err(|e| e.to_string())?;
        let data = RadialData::new(Arc::new(profile.clone()));
        let patch = GraphPatch::from_fn(grid, |x| data.height(x), Boundary::Frozen).map_err(|e| e.to_string())?;
        radii
            .iter()
            .map(|&r| EstimatePanel::from_grid(patch.grid(), patch.values(), &[offset, 0.0], r).map_err(|e| e.to_string()))
            .collect()
    } else {
        radii
            .iter()
            .map(|&r| {
                let hi = profile.eval(offset + r).ok_or("outside profile")?;
                let lo = profile.eval((offset - r).max(0.0)).ok_or("outside profile")?;
                let grad0 = profile.eval_slope(offset).ok_or("outside profile")?;
                Ok(EstimatePanel::new(hi - lo, r, grad0))
            })
            .collect()
    }
}

/// Integrates a translator profile and runs its diagnostics; writes
/// `profile.csv` and `summary.json`.
pub fn cmd_translator(path: &Path, g: &GlobalOpts, out: &mut (dyn Write + Send)) -> i32 {
    let cfg = match load(path, g, Purpose::Translator, out) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let dir = &g.out_dir;
    if let Err(code) = prepare_out(dir, &cfg, out) {
        return code;
    }
    let (n, k) = (cfg.run.n, cfg.run.k);
    let tr = &cfg.translator;
    let tol = &cfg.tolerances;
    let solver_fail = |msg: String, out: &mut (dyn Write + Send)| {
        let _ = writeln!(out, "solver failure: {msg}");
        let s = serde_json::json!({ "command": "translator", "status": "solver_failure", "failure": msg });
        match io::write_json(&dir.join("summary.json"), &s) {
            Ok(()) => EXIT_SOLVER,
            Err(e) => io_fail(e, out),
        }
    };
    let (profile, ends_at) = match integrate_maximal(k, n, tr.r_max, tr.h) {
        Ok(p) => p,
        Err(e) => return solver_fail(e.to_string(), out),
    };
    let mut report = MonitorReport::default();
    let exact = vertex_curvature(k, n);
    let estimate = match profile.vertex_curvature_estimate() {
        Ok(v) => v,
        Err(e) => return solver_fail(e.to_string(), out),
    };
    report.set_flag(
        "vertex",
        (estimate - exact).abs() <= tol.vertex,
        format!("estimate {estimate:.12} vs {exact:.12}"),
    );
    let round_trip = match profile.max_round_trip_residual() {
        Ok(v) => v,
        Err(e) => return solver_fail(e.to_string(), out),
    };
    report.set_flag("round_trip", round_trip <= tol.round_trip, format!("max |Q_k w - 1| = {round_trip:e}"));

    let mut summary = TranslatorSummary {
        command: "translator",
        n,
        k,
        seed: cfg.run.seed,
        status: "ok",
        failure: None,
        r_max: profile.r_max(),
        ends_at,
        vertex_curvature: exact,
        vertex_curvature_estimate: estimate,
        max_round_trip_residual: round_trip,
        growth_exponent: None,
        gradient_c: None,
        curvature_c: None,
        relaxation: None,
        flags: Default::default(),
    };
    match ends_at {
        Some(r) => {
            let _ = writeln!(out, "note: profile is not entire, it turns vertical at r = {r:.6}; growth and panels skipped");
        }
        None => {
            match growth_exponent(&profile, tr.growth_lo, tr.growth_hi) {
                Ok(p) => {
                    summary.growth_exponent = Some(p);
                    report.set_flag(
                        "growth",
                        p > tol.growth_min,
                        format!("exponent {p:.6} on [{}, {}], threshold {}", tr.growth_lo, tr.growth_hi, tol.growth_min),
                    );
                }
                Err(e) => report.set_flag("growth", false, e.to_string()),
            }
            match profile_panels(&profile, tr.panel_offset, &tr.panel_radii, tr.panel_h)
                .map_err(|e| e.to_string())
                .and_then(|p| elliptic_gradient_bound_check(&p, tol.gradient_ceiling).map_err(|e| e.to_string()))
            {
                Ok(fit) => {
                    summary.gradient_c = Some(fit.fitted_c);
                    report.set_flag(
                        "gradient_bound",
                        fit.pass,
                        format!("fitted C {:e} over {} panels, ceiling {:e}", fit.fitted_c, fit.used, tol.gradient_ceiling),
                    );
                }
                Err(e) => report.set_flag("gradient_bound", false, e),
            }
        }
    }
    let m = &cfg.monitors;
    match fit_curvature_constant(
        &[(0.0, profile_samples(&profile))],
        m.theta,
        &m.radii,
        EstimateMode::Elliptic,
        tol.curvature_ceiling,
    ) {
        Ok(fit) => {
            summary.curvature_c = Some(fit.fitted_c);
            for &(r, c) in &fit.per_radius {
                report.push("curvature_c", r, c);
            }
            report.set_flag(
                "curvature_estimate",
                fit.pass,
                format!("fitted c {:e}, ceiling {:e}", fit.fitted_c, tol.curvature_ceiling),
            );
        }
        Err(e) => report.set_flag("curvature_estimate", false, e.to_string()),
    }
    if tr.relax {
        let rc = RelaxConfig {
            half_width: tr.relax_half_width,
            h: tr.relax_h,
            start: match tr.relax_start {
                RelaxStartKind::Profile => RelaxStart::Profile,
                RelaxStartKind::Paraboloid => RelaxStart::Paraboloid {
                    curvature: tr.relax_curvature,
                },
            },
            rtol: tol.relax_rtol,
            max_steps: tr.relax_max_steps,
            safety: tr.relax_safety,
            ..RelaxConfig::default()
        };
        match relax_to_translator(&profile, &rc) {
            Ok(relax) => {
                report.set_flag(
                    "relaxation",
                    relax.profile_error <= tol.profile_error,
                    format!(
                        "max |u - profile| = {:e} after {} steps, residual {:e}",
                        relax.profile_error, relax.steps, relax.residual
                    ),
                );
                let snap = crate::flow::Snapshot {
                    t: 0.0,
                    grid: relax.patch.grid().clone(),
                    u: relax.patch.values().to_vec(),
                };
                if let Err(e) = io::write_snapshots(&dir.join("relaxed"), &[snap]) {
                    return io_fail(e, out);
                }
                summary.relaxation = Some(RelaxSummary {
                    steps: relax.steps,
                    residual: relax.residual,
                    profile_error: relax.profile_error,
                });
            }
            Err(e) => return solver_fail(format!("relaxation: {e}"), out),
        }
    }
    summary.flags = report.flags.clone();
    let written = io::write_profile_csv(&dir.join("profile.csv"), &profile)
        .and_then(|_| io::write_monitor_csv(&dir.join("monitors.csv"), &report))
        .and_then(|_| io::write_json(&dir.join("summary.json"), &summary));
    if let Err(e) = written {
        return io_fail(e, out);
    }
    let _ = writeln!(
        out,
        "vertex curvature {estimate:.12} (exact {exact:.12}), profile on [0, {}]",
        profile.r_max()
    );
    if let Some(p) = summary.growth_exponent {
        let _ = writeln!(out, "growth exponent {p:.6}");
    }
    print_flags(&report.flags, out);
    monitor_exit(report.all_pass(), cfg.monitors.on_failure, out)
}

/// Re-runs the monitors of a finished flow over its stored snapshots and
/// writes `report.json` and `monitors.csv` next to them.
pub fn cmd_report(config: &Path, g: &GlobalOpts, out: &mut (dyn Write + Send)) -> i32 {
    let cfg = match load(config, g, Purpose::Flow, out) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let dir = &g.out_dir;
    let snapshots = match io::read_snapshots(&dir.join("snapshots")) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let report = run_monitors(&monitor_specs(&cfg), &snapshots, cfg.run.k);
    let written = io::write_monitor_csv(&dir.join("monitors.csv"), &report)
        .and_then(|_| io::write_json(&dir.join("report.json"), &report));
    if let Err(e) = written {
        return io_fail(e, out);
    }
    let _ = writeln!(out, "{} snapshots", snapshots.len());
    print_flags(&report.flags, out);
    monitor_exit(report.all_pass(), cfg.monitors.on_failure, out)
}
