//! Property tests for the invariants of the symmetric functions, the shape
//! operator, the discrete flow and the config schema.

use nalgebra::DMatrix;
use proptest::prelude::*;

use qkflow::config::SolverConfig;
use qkflow::flow::{rhs, step, Boundary, FlowState, GraphPatch, Grid, StepParams, Scheme};
use qkflow::sampling::{in_cone_with_margin, CONE_MARGIN};
use qkflow::shape::{principal_curvatures, weingarten, JetPoint};
use qkflow::symfunc::{matrix_sym, qk, sym_all, CurvatureVector};

fn vec_in(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    n.prop_flat_map(|n| prop::collection::vec(-3.0f64..3.0, n))
}

/// A vector in `Γ_{k+1}` together with `k`.
fn cone_case() -> impl Strategy<Value = (Vec<f64>, usize)> {
    (1usize..=7)
        .prop_flat_map(|n| (prop::collection::vec(-1.0f64..1.0, n), 0..n, 0.0f64..1.5))
        .prop_map(|(v, k, shift)| (v.into_iter().map(|x| x + shift).collect::<Vec<_>>(), k))
        .prop_filter("inside the cone", |(v, k)| in_cone_with_margin(v, k + 1, CONE_MARGIN))
}

fn abs_sums(v: &[f64]) -> qkflow::symfunc::SymTable {
    sym_all(&CurvatureVector::new(v.iter().map(|x| x.abs()).collect()).unwrap())
}

fn orthogonal(seed: u64, n: usize) -> DMatrix<f64> {
    qkflow::sampling::Sampler::new(seed).orthogonal(n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn quotient_is_homogeneous((v, k) in cone_case(), t in 0.01f64..100.0) {
        let lam = CurvatureVector::new(v.clone()).unwrap();
        let q = qk(&lam, k).unwrap();
        let qt = qk(&lam.scaled(t).unwrap(), k).unwrap();
        prop_assert!((qt - t * q).abs() <= 1e-12 * (t * q).abs().max(1e-300));
    }

    #[test]
    fn deleted_sum_identities(v in vec_in(1..=8)) {
        let n = v.len();
        let t = sym_all(&CurvatureVector::new(v.clone()).unwrap());
        let ta = abs_sums(&v);
        let nf = n as f64;
        for k in 0..=n {
            let kf = k as f64;
            let tiny = 1e-300;
            let sum: f64 = (0..n).map(|i| t.without(k, i)).sum();
            prop_assert!((sum - (nf - kf) * t.s(k)).abs() <= 1e-12 * ((nf - kf) * ta.s(k)).max(tiny));

            let sum: f64 = (0..n).map(|i| v[i] * t.without(k, i)).sum();
            prop_assert!((sum - (kf + 1.0) * t.s(k + 1)).abs() <= 1e-12 * ((kf + 1.0) * ta.s(k + 1)).max(tiny));

            let sum: f64 = (0..n).map(|i| v[i] * v[i] * t.without(k, i)).sum();
            let rhs = t.s(1) * t.s(k + 1) - (kf + 2.0) * t.s(k + 2);
            let scale = ta.s(1) * ta.s(k + 1) + (kf + 2.0) * ta.s(k + 2);
            prop_assert!((sum - rhs).abs() <= 1e-12 * scale.max(tiny));

            for j in 0..n {
                let sum: f64 = (0..n).filter(|&i| i != j).map(|i| t.without2(k, i, j)).sum();
                let rhs = (nf - kf - 1.0) * t.without(k, j);
                let scale = (0..n).filter(|&i| i != j).map(|i| ta.without2(k, i, j)).sum::<f64>()
                    + (nf - kf - 1.0).abs() * ta.without(k, j);
                prop_assert!((sum - rhs).abs() <= 1e-12 * scale.max(tiny));
            }
        }
    }

    #[test]
    fn matrix_sums_invariant_under_conjugation(
        entries in prop::collection::vec(-1.0f64..1.0, 36),
        n in 1usize..=6,
        seed in any::<u64>(),
    ) {
        let b = DMatrix::from_fn(n, n, |i, j| entries[i.min(j) * 6 + i.max(j)]);
        let q = orthogonal(seed, n);
        let c = &q * &b * q.transpose();
        let c = (&c + c.transpose()) * 0.5;
        for k in 0..=n {
            let a = matrix_sym(&b, k).unwrap();
            let r = matrix_sym(&c, k).unwrap();
            prop_assert!((a - r).abs() < 1e-11, "k={} {} vs {}", k, a, r);
        }
    }

    #[test]
    fn curvatures_rotate_with_the_graph(
        g in prop::collection::vec(-2.0f64..2.0, 3),
        h in prop::collection::vec(-2.0f64..2.0, 9),
        seed in any::<u64>(),
    ) {
        // u(x) = v(Qx) has gradient Qᵀ∇v and Hessian Qᵀ D²v Q.
        let n = 3;
        let hess = DMatrix::from_fn(n, n, |i, j| h[i.min(j) * n + i.max(j)]);
        let grad = nalgebra::DVector::from_vec(g.clone());
        let q = orthogonal(seed, n);
        let g2 = q.transpose() * &grad;
        let h2 = q.transpose() * &hess * &q;
        let h2 = (&h2 + h2.transpose()) * 0.5;
        let jet_a = JetPoint::new(g, hess.iter().copied().collect()).unwrap();
        let jet_b = JetPoint::new(g2.iter().copied().collect(), h2.iter().copied().collect()).unwrap();
        let mut a = principal_curvatures(&weingarten(&jet_a)).unwrap().into_vec();
        let mut b = principal_curvatures(&weingarten(&jet_b)).unwrap().into_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-11, "{:?} vs {:?}", a, b);
        }
    }
}

fn bump(amp: f64, cx: f64, cy: f64) -> impl Fn(&[f64]) -> f64 {
    move |x: &[f64]| amp * (-(x[0] - cx).powi(2) - (x[1] - cy).powi(2)).exp()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn speed_ignores_vertical_shifts(amp in 0.1f64..1.0, c in -5.0f64..5.0, cx in -0.3f64..0.3) {
        let grid = Grid::centered_box(2, 1.0, 0.125).unwrap();
        let patch = GraphPatch::from_fn(grid, bump(amp, cx, 0.0), Boundary::Frozen).unwrap();
        let a = rhs(&patch, 0).unwrap();
        let b = rhs(&patch.shifted(c), 0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn periodic_shift_equivariance(amp in 0.05f64..0.5, phase in 0.0f64..6.0, di in 0usize..16, dj in 0usize..16) {
        let cells = 16;
        let grid = Grid::periodic_box(2, 2.0 * std::f64::consts::PI, cells).unwrap();
        let f = move |x: &[f64]| amp * (x[0] + phase).sin() * (2.0 * x[1]).cos() + 0.3 * amp * x[1].sin();
        let patch = GraphPatch::from_fn(grid.clone(), f, Boundary::Periodic).unwrap();
        let mut shifted_u = vec![0.0; grid.len()];
        for idx in 0..grid.len() {
            let (i, j) = grid.cell(idx);
            shifted_u[grid.index((i + di) % cells, (j + dj) % cells)] = patch.values()[idx];
        }
        let shifted = GraphPatch::new(grid.clone(), shifted_u, Boundary::Periodic).unwrap();
        let a = rhs(&patch, 0).unwrap();
        let b = rhs(&shifted, 0).unwrap();
        for idx in 0..grid.len() {
            let (i, j) = grid.cell(idx);
            let moved = grid.index((i + di) % cells, (j + dj) % cells);
            prop_assert_eq!(a[idx].to_bits(), b[moved].to_bits());
        }
    }

    #[test]
    fn periodic_sine_maximum_decreases(amp in 0.05f64..0.8, m in 1usize..3) {
        let grid = Grid::periodic_box(2, 2.0 * std::f64::consts::PI, 24).unwrap();
        let m = m as f64;
        let patch = GraphPatch::from_fn(grid, move |x| amp * (m * x[0]).sin() * (m * x[1]).sin(), Boundary::Periodic).unwrap();
        let mut params = StepParams::new(0);
        params.scheme = Scheme::Euler;
        let mut state = FlowState::new(patch, 0);
        let mut prev = state.patch.values().iter().cloned().fold(f64::MIN, f64::max);
        for _ in 0..40 {
            state = step(&state, &params).unwrap();
            let max = state.patch.values().iter().cloned().fold(f64::MIN, f64::max);
            prop_assert!(max <= prev + 1e-14, "max rose from {} to {}", prev, max);
            prev = max;
        }
    }

    #[test]
    fn gradient_bound_does_not_grow(amp in 0.1f64..1.5, cx in -0.2f64..0.2, cy in -0.2f64..0.2) {
        // Difference quotients of a translation-invariant monotone scheme
        // obey the same comparison principle as the solution itself.
        let grid = Grid::periodic_box(2, 4.0, 32).unwrap();
        let f = bump(amp, 2.0 + cx, 2.0 + cy);
        let patch = GraphPatch::from_fn(grid.clone(), f, Boundary::Periodic).unwrap();
        let mut params = StepParams::new(0);
        params.scheme = Scheme::Euler;
        params.safety = 0.2;
        let sup_diff = |u: &[f64]| {
            let mut s = 0.0f64;
            for idx in 0..grid.len() {
                let (i, j) = grid.cell(idx);
                let xp = grid.index((i + 1) % 32, j);
                let yp = grid.index(i, (j + 1) % 32);
                s = s.max((u[xp] - u[idx]).abs()).max((u[yp] - u[idx]).abs());
            }
            s
        };
        let mut state = FlowState::new(patch, 0);
        let mut prev = sup_diff(state.patch.values());
        for _ in 0..30 {
            state = step(&state, &params).unwrap();
            let now = sup_diff(state.patch.values());
            prop_assert!(now <= prev * (1.0 + 1e-12), "sup |Du| rose from {} to {}", prev, now);
            prev = now;
        }
    }

    #[test]
    fn config_round_trips(
        n in 1usize..=2,
        half in 1u32..8,
        inv_h in prop::sample::select(vec![8u32, 16, 32, 64]),
        t_final in 0.001f64..10.0,
        safety in 0.01f64..0.5,
        seed in any::<u64>(),
        radius in 1.5f64..20.0,
        tol in 1e-12f64..1.0,
    ) {
        let text = format!(
            "[run]\nn = {n}\nk = 0\nseed = {seed}\n\n[domain]\nhalf_width = {}\nh = {}\n\n[initial]\nradius = {radius}\n\n[time]\nt_final = {t_final}\nsafety = {safety}\n\n[tolerances]\nradius_law = {tol}\n",
            half as f64 * 0.25,
            1.0 / inv_h as f64,
        );
        let a = SolverConfig::parse(&text).unwrap();
        let b = SolverConfig::parse(&a.to_toml().unwrap()).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.to_toml().unwrap(), b.to_toml().unwrap());
    }
}
