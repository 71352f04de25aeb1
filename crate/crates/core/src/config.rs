//! Run configuration: a flat TOML file with one section per concern.
//!
//! ```toml
//! [run]
//! n = 2
//! k = 1
//!
//! [domain]
//! half_width = 0.5
//! h = 0.03125
//!
//! [initial]
//! profile = "shrinking_cap"
//! radius = 1.0
//!
//! [time]
//! t_final = 0.2
//! ```
//!
//! Every section except `[run]` may be omitted. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::{ConePolicy, Scheme};
use crate::symfunc::MAX_DIM;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub run: RunSection,
    #[serde(default)]
    pub domain: DomainSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub boundary: BoundarySection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub monitors: MonitorSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub translator: TranslatorSection,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub n: usize,
    pub k: usize,
    #[serde(default = "one")]
    pub seed: u64,
}

/// Square `[-half_width, half_width]^n` with spacing `h`. Periodic boxes
/// are `[0, 2·half_width)^n` instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainSection {
    pub half_width: f64,
    pub h: f64,
    pub periodic: bool,
}

impl Default for DomainSection {
    fn default() -> Self {
        Self {
            half_width: 0.5,
            h: 1.0 / 32.0,
            periodic: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialProfile {
    /// Lower spherical cap of radius `radius`, centered at height `height`.
    ShrinkingCap,
    /// `curvature · |x|² / 2`.
    Paraboloid,
    /// `amplitude · Π sin(wavenumber · x_i)`.
    Sine,
    Flat,
    /// Heights in grid order from a one-column CSV with header `u`.
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub profile: InitialProfile,
    pub radius: f64,
    pub height: f64,
    pub curvature: f64,
    pub amplitude: f64,
    pub wavenumber: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            profile: InitialProfile::ShrinkingCap,
            radius: 1.0,
            height: 0.0,
            curvature: 1.0,
            amplitude: 0.1,
            wavenumber: 1.0,
            path: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    /// Values of the named initial profile; time dependent for the cap.
    Dirichlet,
    Frozen,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundarySection {
    pub kind: BoundaryKind,
}

impl Default for BoundarySection {
    fn default() -> Self {
        Self {
            kind: BoundaryKind::Dirichlet,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub t_final: f64,
    pub safety: f64,
    pub dt_max: f64,
    pub scheme: Scheme,
    pub cone_policy: ConePolicy,
    /// Snapshot cadence in steps.
    pub record_every: usize,
    pub max_steps: usize,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            t_final: 0.1,
            safety: 0.25,
            dt_max: 1.0,
            scheme: Scheme::Rk2,
            cone_policy: ConePolicy::Abort,
            record_every: 100,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorName {
    SupCurvature,
    RadiusLaw,
    Pinching,
    MaxV,
    GradientFunctional,
    CurvatureEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailMode {
    Error,
    Warn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonitorSection {
    pub names: Vec<MonitorName>,
    /// `Error` turns a failed flag into exit code 3.
    pub on_failure: FailMode,
    pub max_v_radius: f64,
    pub center: Vec<f64>,
    pub theta: f64,
    pub radii: Vec<f64>,
    pub functional_xi: Vec<f64>,
    pub functional_radius: f64,
}

impl Default for MonitorSection {
    fn default() -> Self {
        Self {
            names: vec![MonitorName::SupCurvature],
            on_failure: FailMode::Error,
            max_v_radius: 1.0,
            center: vec![0.0, 0.0],
            theta: 0.5,
            radii: vec![2.0, 4.0, 8.0],
            functional_xi: vec![1.0, 0.0],
            functional_radius: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSection {
    /// Relative threshold for cone membership.
    pub cone_rel: f64,
    pub radius_law: f64,
    /// Largest rms of a sphere fit that still counts as a sphere.
    pub sphere_rms: f64,
    pub pinching: f64,
    pub max_v: f64,
    pub curvature_ceiling: f64,
    pub gradient_ceiling: f64,
    pub round_trip: f64,
    pub vertex: f64,
    pub relax_rtol: f64,
    pub profile_error: f64,
    pub growth_min: f64,
}

impl Default for ToleranceSection {
    fn default() -> Self {
        Self {
            cone_rel: 1e-9,
            radius_law: 1e-3,
            sphere_rms: 1e-3,
            pinching: 1e-9,
            max_v: 1e-2,
            curvature_ceiling: 10.0,
            gradient_ceiling: 10.0,
            round_trip: 1e-6,
            vertex: 1e-8,
            relax_rtol: 1e-8,
            profile_error: 1e-3,
            growth_min: 1.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaxStartKind {
    Profile,
    Paraboloid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TranslatorSection {
    pub r_max: f64,
    pub h: f64,
    pub growth_lo: f64,
    pub growth_hi: f64,
    pub relax: bool,
    pub relax_half_width: f64,
    pub relax_h: f64,
    pub relax_start: RelaxStartKind,
    pub relax_curvature: f64,
    pub relax_safety: f64,
    pub relax_max_steps: usize,
    /// Gradient panels: balls centered at `(panel_offset, 0, ...)`.
    pub panel_offset: f64,
    pub panel_radii: Vec<f64>,
    pub panel_h: f64,
}

impl Default for TranslatorSection {
    fn default() -> Self {
        Self {
            r_max: 100.0,
            h: 1e-3,
            growth_lo: 10.0,
            growth_hi: 100.0,
            relax: false,
            relax_half_width: 1.0,
            relax_h: 1.0 / 16.0,
            relax_start: RelaxStartKind::Paraboloid,
            relax_curvature: 1.0,
            relax_safety: 0.3,
            relax_max_steps: 200_000,
            panel_offset: 4.0,
            panel_radii: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
            panel_h: 1.0 / 16.0,
        }
    }
}

fn one() -> u64 {
    1
}

/// What a config is validated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Flow,
    Translator,
}

impl SolverConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        toml::to_string(self).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Reads and parses a file; relative paths inside resolve against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn validate(&self, purpose: Purpose) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        let (n, k) = (self.run.n, self.run.k);
        if n == 0 || n > MAX_DIM || k + 1 > n {
            return bad(format!("need 0 <= k <= n - 1 and 1 <= n <= {MAX_DIM}, got n = {n}, k = {k}"));
        }
        let tol = &self.tolerances;
        let positive = [
            ("tolerances.cone_rel", tol.cone_rel),
            ("tolerances.radius_law", tol.radius_law),
            ("tolerances.sphere_rms", tol.sphere_rms),
            ("tolerances.pinching", tol.pinching),
            ("tolerances.max_v", tol.max_v),
            ("tolerances.curvature_ceiling", tol.curvature_ceiling),
            ("tolerances.gradient_ceiling", tol.gradient_ceiling),
            ("tolerances.round_trip", tol.round_trip),
            ("tolerances.vertex", tol.vertex),
            ("tolerances.relax_rtol", tol.relax_rtol),
            ("tolerances.profile_error", tol.profile_error),
            ("tolerances.growth_min", tol.growth_min),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        match purpose {
            Purpose::Flow => self.validate_flow(),
            Purpose::Translator => self.validate_translator(),
        }
    }

    fn validate_flow(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        let n = self.run.n;
        if n > 2 {
            return bad(format!("grid runs need n in {{1, 2}}, got {n}"));
        }
        let d = &self.domain;
        if !(d.h > 0.0 && d.half_width > d.h) {
            return bad(format!("domain needs 0 < h < half_width, got h = {}, half_width = {}", d.h, d.half_width));
        }
        let t = &self.time;
        if !(t.t_final > 0.0 && t.safety > 0.0 && t.dt_max > 0.0) {
            return bad("t_final, safety and dt_max must be positive".into());
        }
        if (self.boundary.kind == BoundaryKind::Periodic) != d.periodic {
            return bad("periodic boundary and periodic domain go together".into());
        }
        let init = &self.initial;
        match init.profile {
            InitialProfile::ShrinkingCap => {
                let corner = d.half_width * (n as f64).sqrt();
                if !(init.radius > corner) {
                    return bad(format!("cap radius {} must exceed the box corner {corner}", init.radius));
                }
            }
            InitialProfile::File => match &init.path {
                None => return bad("initial.path is required for profile = \"file\"".into()),
                Some(p) => {
                    let p = self.resolve(p);
                    if !p.is_file() {
                        return bad(format!("initial file {} not found", p.display()));
                    }
                }
            },
            _ => {}
        }
        if self.boundary.kind == BoundaryKind::Dirichlet && init.profile == InitialProfile::File {
            return bad("Dirichlet data needs a named profile; use frozen for file input".into());
        }
        let m = &self.monitors;
        if m.names.contains(&MonitorName::RadiusLaw) && init.profile != InitialProfile::ShrinkingCap {
            return bad("radius_law monitor needs the shrinking_cap profile".into());
        }
        if !(0.0..1.0).contains(&m.theta) || m.radii.iter().any(|r| !(*r > 0.0)) {
            return bad("monitors need theta in [0, 1) and positive radii".into());
        }
        if m.center.len() < n || m.functional_xi.len() < n {
            return bad(format!("monitors.center and functional_xi need {n} entries"));
        }
        Ok(())
    }

    fn validate_translator(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        let tr = &self.translator;
        if self.run.n < 2 {
            return bad("translators need n >= 2".into());
        }
        if !(tr.h > 0.0 && tr.r_max > 10.0 * tr.h) {
            return bad(format!("translator needs h > 0 and r_max > 10 h, got h = {}, r_max = {}", tr.h, tr.r_max));
        }
        if !(tr.growth_lo > 0.0 && tr.growth_hi > 2.0 * tr.growth_lo) {
            return bad("growth window needs 0 < growth_lo and growth_hi > 2 growth_lo".into());
        }
        if tr.relax {
            if self.run.n != 2 {
                return bad("relaxation runs on planar grids (n = 2)".into());
            }
            if !(tr.relax_h > 0.0 && tr.relax_half_width > tr.relax_h && tr.relax_safety > 0.0) {
                return bad("relaxation needs 0 < relax_h < relax_half_width and positive safety".into());
            }
        }
        if tr.panel_radii.iter().any(|r| !(*r > 0.0)) || !(tr.panel_h > 0.0) {
            return bad("panel radii and panel_h must be positive".into());
        }
        Ok(())
    }
}
