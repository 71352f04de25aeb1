//! Randomized sweep over the algebraic identities and inequalities satisfied
//! by `S_k` and `Q_k`.
//!
//! Every identity `L = R` is scored by `|L - R| / scale`, where `scale` is
//! the same expression evaluated with absolute values of every summand. That
//! is the size of the rounding error one has to expect, so a score near
//! machine epsilon means the identity holds to working precision.

use std::fmt;

use crate::sampling::Sampler;
use crate::symfunc::{
    self, concavity_spectrum, maclaurin_quotient_check, matrix_sym, newton_defect,
    newton_defect_scale, principal_minor_sum, qk_gradient, structured_derivative_check, sym_all,
    CurvatureVector, SymTable,
};

/// Largest dimension used for matrix and derivative checks.
pub const MATRIX_DIM_MAX: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub n_max: usize,
    /// Samples per `(n, k)` for most checks.
    pub samples: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_max: 8,
            samples: 1000,
        }
    }
}

/// One line of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Stat {
    pub name: &'static str,
    pub max_err: f64,
    pub tol: f64,
    pub count: usize,
    pub skipped: Option<String>,
}

impl Stat {
    fn new(name: &'static str, tol: f64) -> Self {
        Self {
            name,
            max_err: 0.0,
            tol,
            count: 0,
            skipped: None,
        }
    }

    fn record(&mut self, err: f64) {
        self.count += 1;
        // NaN never passes.
        self.max_err = if err.is_nan() { f64::INFINITY } else { self.max_err.max(err) };
    }

    pub fn pass(&self) -> bool {
        self.skipped.is_some() || self.max_err <= self.tol
    }
}

impl fmt::Display for Stat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.skipped {
            Some(why) => write!(f, "{:<22} skipped: {why}", self.name),
            None => write!(
                f,
                "{:<22} max_rel_err={:.3e} tol={:.0e} samples={} {}",
                self.name,
                self.max_err,
                self.tol,
                self.count,
                if self.pass() { "PASS" } else { "FAIL" }
            ),
        }
    }
}

fn rel(lhs: f64, rhs: f64, scale: f64) -> f64 {
    let d = (lhs - rhs).abs();
    if d == 0.0 {
        0.0
    } else {
        d / scale
    }
}

fn cv(v: Vec<f64>) -> CurvatureVector {
    CurvatureVector::new(v).expect("sampler produced an invalid vector")
}

fn abs_table(values: &[f64]) -> SymTable {
    sym_all(&cv(values.iter().map(|x| x.abs()).collect()))
}

/// Relative-to-rounding size of each `∂_i Q_k`.
fn gradient_scales(t: &SymTable, ta: &SymTable, k: usize) -> Vec<f64> {
    let sk = t.s(k);
    (0..t.dim())
        .map(|i| {
            let prev = if k == 0 { 0.0 } else { ta.without(k - 1, i) };
            (ta.without(k, i) * sk.abs() + ta.s(k + 1) * prev) / (sk * sk)
        })
        .collect()
}

/// Relations among the deleted tables, for `0 <= k <= n` on random real
/// vectors.
pub fn check_deleted_identities(cfg: &SuiteConfig) -> Vec<Stat> {
    let mut stats = vec![
        Stat::new("deleted derivative", 1e-10),
        Stat::new("deleted split", 1e-10),
        Stat::new("deleted sum", 1e-10),
        Stat::new("weighted deleted sum", 1e-10),
        Stat::new("squared deleted sum", 1e-10),
        Stat::new("double deletion", 1e-10),
    ];
    let mut rng = Sampler::new(cfg.seed);
    for n in 1..=cfg.n_max {
        for _ in 0..cfg.samples {
            let s = rng.scale();
            let v: Vec<f64> = rng.vector(n, -2.0, 2.0).into_iter().map(|x| x * s).collect();
            let t = sym_all(&cv(v.clone()));
            let ta = abs_table(&v);
            let nf = n as f64;
            for k in 0..=n {
                let kf = k as f64;
                // S_{k+1} is affine in λ_i with slope S_{k,i}.
                let step = 1.0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                for i in 0..n {
                    let mut shifted = v.clone();
                    shifted[i] += step;
                    let up = symfunc::elementary(&shifted);
                    let slope = (up.get(k + 1).copied().unwrap_or(0.0) - t.s(k + 1)) / step;
                    let mut abs_shift: Vec<f64> = v.iter().map(|x| x.abs()).collect();
                    abs_shift[i] += step;
                    let big = symfunc::elementary(&abs_shift);
                    let scale = (big.get(k + 1).copied().unwrap_or(0.0) + ta.s(k + 1)) / step;
                    stats[0].record(rel(slope, t.without(k, i), scale));
                }
                for i in 0..n {
                    let prev = if k == 0 { 0.0 } else { t.without(k - 1, i) };
                    let prev_a = if k == 0 { 0.0 } else { ta.without(k - 1, i) };
                    let scale = ta.s(k);
                    stats[1].record(rel(t.s(k), t.without(k, i) + v[i] * prev, scale.max(ta.without(k, i) + v[i].abs() * prev_a)));
                }
                let sum: f64 = (0..n).map(|i| t.without(k, i)).sum();
                stats[2].record(rel(sum, (nf - kf) * t.s(k), ((nf - kf) * ta.s(k)).max(f64::MIN_POSITIVE)));

                let sum: f64 = (0..n).map(|i| v[i] * t.without(k, i)).sum();
                stats[3].record(rel(sum, (kf + 1.0) * t.s(k + 1), ((kf + 1.0) * ta.s(k + 1)).max(f64::MIN_POSITIVE)));

                let sum: f64 = (0..n).map(|i| v[i] * v[i] * t.without(k, i)).sum();
                let rhs = t.s(1) * t.s(k + 1) - (kf + 2.0) * t.s(k + 2);
                let scale = ta.s(1) * ta.s(k + 1) + (kf + 2.0) * ta.s(k + 2);
                stats[4].record(rel(sum, rhs, scale.max(f64::MIN_POSITIVE)));

                for j in 0..n {
                    let sum: f64 = (0..n).filter(|&i| i != j).map(|i| t.without2(k, i, j)).sum();
                    let rhs = (nf - kf - 1.0) * t.without(k, j);
                    let scale = ((nf - kf - 1.0).abs() * ta.without(k, j))
                        .max((0..n).filter(|&i| i != j).map(|i| ta.without2(k, i, j)).sum());
                    stats[5].record(rel(sum, rhs, scale.max(f64::MIN_POSITIVE)));
                }
            }
        }
    }
    stats
}

/// Trace, Euler and second-moment identities of `∂Q_k` on `Γ_{k+1}`.
pub fn check_quotient_identities(cfg: &SuiteConfig) -> Vec<Stat> {
    let mut stats = vec![
        Stat::new("quotient trace", 1e-10),
        Stat::new("quotient euler", 1e-10),
        Stat::new("quotient second moment", 1e-10),
    ];
    let mut rng = Sampler::new(cfg.seed.wrapping_add(1));
    for n in 1..=cfg.n_max {
        for k in 0..n {
            for _ in 0..cfg.samples {
                let v = rng.cone_vector(n, k + 1);
                let lam = cv(v.clone());
                let t = sym_all(&lam);
                let ta = abs_table(&v);
                let g = qk_gradient(&lam, k).expect("sample lies in the cone");
                let gs = gradient_scales(&t, &ta, k);
                let (nf, kf) = (n as f64, k as f64);
                let sk = t.s(k);
                let q = t.s(k + 1) / sk;

                let trace: f64 = g.iter().sum();
                let (rhs, rhs_scale) = if k == 0 {
                    (nf, nf)
                } else {
                    let ratio = t.s(k + 1) * t.s(k - 1) / (sk * sk);
                    ((nf - kf) - (nf - kf + 1.0) * ratio, (nf - kf) + (nf - kf + 1.0) * ratio.abs())
                };
                stats[0].record(rel(trace, rhs, gs.iter().sum::<f64>() + rhs_scale));

                let euler: f64 = v.iter().zip(&g).map(|(l, d)| l * d).sum();
                let scale: f64 = v.iter().zip(&gs).map(|(l, d)| l.abs() * d).sum::<f64>() + q.abs();
                stats[1].record(rel(euler, q, scale));

                let lhs: f64 = v.iter().zip(&g).map(|(l, d)| l * l * d).sum();
                let tail = t.s(k + 2) / sk;
                let rhs = (kf + 1.0) * q * q - (kf + 2.0) * tail;
                let scale: f64 = v.iter().zip(&gs).map(|(l, d)| l * l * d).sum::<f64>()
                    + (kf + 1.0) * q * q
                    + (kf + 2.0) * ta.s(k + 2) / sk;
                stats[2].record(rel(lhs, rhs, scale));
            }
        }
    }
    stats
}

/// Newton inequality over random real vectors and its equality case;
/// the quotient bound between `Q_l` and `Q_k` on `Γ_{k+1}`.
pub fn check_newton_maclaurin(cfg: &SuiteConfig) -> Vec<Stat> {
    let mut defect = Stat::new("newton defect", 1e-12);
    let mut equality = Stat::new("newton equality", 1e-12);
    let mut maclaurin = Stat::new("maclaurin quotient", 0.0);
    if cfg.n_max < 2 {
        let why = "needs n >= 2".to_string();
        defect.skipped = Some(why.clone());
        equality.skipped = Some(why.clone());
        maclaurin.skipped = Some(why);
        return vec![defect, equality, maclaurin];
    }
    let mut rng = Sampler::new(cfg.seed.wrapping_add(2));
    let total = 10 * cfg.samples;
    for sample in 0..total {
        let n = 2 + sample % (cfg.n_max - 1);
        let v = rng.vector(n, -5.0, 5.0);
        let lam = cv(v);
        for k in 1..n {
            let d = newton_defect(&lam, k).expect("1 <= k < n");
            let scale = newton_defect_scale(&lam, k);
            // Score is the negative part only.
            defect.record((-d / scale).max(0.0));
        }
    }
    for n in 2..=cfg.n_max {
        for _ in 0..10 {
            let c = rng.uniform(-5.0, 5.0);
            let lam = CurvatureVector::equal(n, c).unwrap();
            for k in 1..n {
                let d = newton_defect(&lam, k).unwrap();
                equality.record(d.abs() / newton_defect_scale(&lam, k));
            }
        }
    }
    for n in 2..=cfg.n_max {
        for k in 0..n {
            for _ in 0..cfg.samples {
                let lam = cv(rng.cone_vector(n, k + 1));
                for l in 0..=k {
                    let ok = maclaurin_quotient_check(&lam, l, k).expect("sample lies in the cone");
                    maclaurin.record(if ok { 0.0 } else { 1.0 });
                }
            }
        }
    }
    vec![defect, equality, maclaurin]
}

/// `S_k` of a symmetric matrix via eigenvalues against the principal-minor
/// sum, plus invariance under orthogonal conjugation.
pub fn check_matrix_sums(cfg: &SuiteConfig) -> Vec<Stat> {
    let mut minors = Stat::new("matrix_sym minors", 1e-9);
    let mut conj = Stat::new("matrix_sym conjugation", 1e-9);
    let mut rng = Sampler::new(cfg.seed.wrapping_add(3));
    let n_max = cfg.n_max.min(MATRIX_DIM_MAX);
    for sample in 0..cfg.samples {
        let n = 1 + sample % n_max;
        let b = rng.symmetric_matrix(n);
        let q = rng.orthogonal(n);
        let c = &q * &b * q.transpose();
        let eig = symfunc::symmetric_eigenvalues(&b).expect("symmetric input");
        let abs_sums = symfunc::elementary(&eig.iter().map(|x| x.abs()).collect::<Vec<_>>());
        for k in 0..=n {
            let scale = abs_sums[k].max(f64::MIN_POSITIVE);
            let via_eig = matrix_sym(&b, k).expect("symmetric input");
            let via_minors = principal_minor_sum(&b, k).expect("symmetric input");
            minors.record(rel(via_eig, via_minors, scale));
            // Conjugation breaks exact symmetry in the last bits.
            let rotated = matrix_sym(&((&c + c.transpose()) * 0.5), k).expect("symmetrized");
            conj.record(rel(via_eig, rotated, scale));
        }
    }
    vec![minors, conj]
}

/// Analytic `∂Q_k` against central differences of `Q_k`.
pub fn check_gradient_fd(cfg: &SuiteConfig, samples: usize) -> Stat {
    let mut stat = Stat::new("gradient vs FD", 1e-6);
    let mut rng = Sampler::new(cfg.seed.wrapping_add(4));
    for n in 1..=cfg.n_max {
        for k in 0..n {
            for _ in 0..samples {
                let v = rng.cone_vector(n, k + 1);
                let lam = cv(v.clone());
                let g = qk_gradient(&lam, k).expect("sample lies in the cone");
                let h = 1e-6 * lam.max_abs();
                let gmax = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                for i in 0..n {
                    let mut p = v.clone();
                    let mut m = v.clone();
                    p[i] += h;
                    m[i] -= h;
                    let fd = (symfunc::qk(&cv(p), k).unwrap() - symfunc::qk(&cv(m), k).unwrap()) / (2.0 * h);
                    stat.record(rel(fd, g[i], gmax));
                }
            }
        }
    }
    stat
}

/// Structured inequalities at arrowhead matrices and concavity of `Q_k`.
pub fn check_structured(cfg: &SuiteConfig, samples: usize) -> Vec<Stat> {
    let mut structured = Stat::new("arrowhead inequalities", 0.0);
    let mut concavity = Stat::new("concavity", 1e-6);
    let n_max = cfg.n_max.min(MATRIX_DIM_MAX);
    let mut rng = Sampler::new(cfg.seed.wrapping_add(5));
    if n_max < 3 {
        structured.skipped = Some("arrowheads with a negative corner need k <= n - 2, n >= 3".into());
    }
    for n in 3..=n_max {
        for k in 0..=n - 2 {
            for _ in 0..samples {
                let a = rng.arrowhead(n, k + 1);
                let report = structured_derivative_check(&a, k).expect("sampled arrowhead is admissible");
                structured.record(if report.all_pass() { 0.0 } else { 1.0 });
            }
        }
    }
    for n in 1..=n_max {
        for k in 0..n {
            for _ in 0..samples {
                let lam = cv(rng.cone_vector(n, k + 1));
                let eigs = concavity_spectrum(&lam, k).expect("sample lies in the cone");
                let radius = eigs.iter().fold(1.0 / lam.max_abs(), |m, x| m.max(x.abs()));
                concavity.record(eigs[0].max(0.0) / radius);
            }
        }
    }
    vec![structured, concavity]
}

/// Full sweep in a fixed order.
pub fn run_suite(cfg: &SuiteConfig) -> Vec<Stat> {
    let mut out = check_deleted_identities(cfg);
    out.extend(check_quotient_identities(cfg));
    out.extend(check_newton_maclaurin(cfg));
    out.extend(check_matrix_sums(cfg));
    out.push(check_gradient_fd(cfg, (cfg.samples / 10).max(1)));
    out.extend(check_structured(cfg, (cfg.samples / 10).max(1)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sweep_passes() {
        let cfg = SuiteConfig {
            seed: 3,
            n_max: 4,
            samples: 20,
        };
        for stat in run_suite(&cfg) {
            assert!(stat.pass(), "{stat}");
        }
    }

    #[test]
    fn one_dimensional_sweep_skips() {
        let cfg = SuiteConfig {
            seed: 3,
            n_max: 1,
            samples: 5,
        };
        let stats = run_suite(&cfg);
        assert!(stats.iter().any(|s| s.skipped.is_some()));
        assert!(stats.iter().all(|s| s.pass()));
    }

    #[test]
    fn nan_fails() {
        let mut s = Stat::new("x", 1.0);
        s.record(f64::NAN);
        assert!(!s.pass());
    }
}
