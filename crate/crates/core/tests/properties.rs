use ndarray::Array2;
use proptest::prelude::*;

use nskqg::constitutive::{g_eps, internal_energy};
use nskqg::diagnostics::{energy_qg, fit_rate, format_csv_line};
use nskqg::harness::{parse_config, read_snapshot, write_snapshot, ExperimentConfig, ExperimentKind, Mode, Snapshot};
use nskqg::{validate_params, QgSolver, QgState, ScalarField, SpectralWorkspace};

fn field(n: usize) -> impl Strategy<Value = ScalarField> {
    prop::collection::vec(-10.0f64..10.0, n * n)
        .prop_map(move |v| ScalarField::from_array(Array2::from_shape_vec((n, n), v).unwrap()).unwrap())
}

fn modes(band: i64) -> impl Strategy<Value = Vec<(i64, i64, f64, f64)>> {
    prop::collection::vec((-band..=band, -band..=band, -1.0f64..1.0, 0.0f64..6.3), 1..5)
}

fn trig(n: usize, modes: &[(i64, i64, f64, f64)]) -> ScalarField {
    ScalarField::from_fn(n, |x, y| {
        modes
            .iter()
            .map(|&(k1, k2, a, ph)| a * (k1 as f64 * x + k2 as f64 * y + ph).cos())
            .sum()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_roundtrip(f in field(16)) {
        let ws = SpectralWorkspace::new(16).unwrap();
        let back = ws.inverse(&ws.forward(&f));
        prop_assert!((&back - &f).max_abs() <= 1e-12 * f.max_abs().max(1.0));
    }

    #[test]
    fn parseval(f in field(16)) {
        let ws = SpectralWorkspace::new(16).unwrap();
        let direct = (&f * &f).integral();
        prop_assert!((ws.parseval_l2_sq(&f) - direct).abs() <= 1e-10 * direct.max(1.0));
    }

    #[test]
    fn dealias_is_a_projection(f in field(16)) {
        let ws = SpectralWorkspace::new(16).unwrap();
        let once = ws.dealias(&f);
        prop_assert!((&ws.dealias(&once) - &once).max_abs() <= 1e-12 * f.max_abs().max(1.0));
        prop_assert!(ws.out_of_band_fraction(&once) <= 1e-13);
    }

    #[test]
    fn derivatives_of_trig_polynomials_are_exact(m in modes(5)) {
        let n = 32;
        let ws = SpectralWorkspace::new(n).unwrap();
        let f = trig(n, &m);
        let dx = ScalarField::from_fn(n, |x, y| {
            m.iter().map(|&(k1, k2, a, ph)| -a * k1 as f64 * (k1 as f64 * x + k2 as f64 * y + ph).sin()).sum()
        });
        let lap = ScalarField::from_fn(n, |x, y| {
            m.iter()
                .map(|&(k1, k2, a, ph)| -a * (k1 * k1 + k2 * k2) as f64 * (k1 as f64 * x + k2 as f64 * y + ph).cos())
                .sum()
        });
        prop_assert!((&ws.grad(&f).x1 - &dx).max_abs() <= 1e-11);
        prop_assert!((&ws.laplacian(&f) - &lap).max_abs() <= 1e-10);
        prop_assert!(ws.div(&ws.perp_grad(&f)).max_abs() <= 1e-11);
    }

    #[test]
    fn lp_norm_is_homogeneous(f in field(8), c in -5.0f64..5.0, p in 1.0f64..4.0) {
        let ws = SpectralWorkspace::new(8).unwrap();
        let a = ws.lp_norm(&f.scale(c), p).unwrap();
        let b = c.abs() * ws.lp_norm(&f, p).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
    }

    #[test]
    fn internal_energy_is_convex_and_minimal_at_one(
        gamma in 1.1f64..6.0, a in 0.0f64..5.0, b in 0.0f64..5.0,
    ) {
        let p = validate_params(gamma, 0.05, 0.5, 0.5).unwrap();
        let h = |r: f64| internal_energy(r, &p).unwrap();
        prop_assert!(h(a) >= 0.0 && h(b) >= 0.0);
        prop_assert_eq!(h(1.0), 0.0);
        let mid = h(0.5 * (a + b));
        prop_assert!(mid <= 0.5 * (h(a) + h(b)) + 1e-12 * (h(a) + h(b)).max(1.0));
    }

    #[test]
    fn g_is_odd_signed_and_increasing(
        gamma in 1.1f64..6.0, eps in 0.01f64..0.9, r1 in 0.0f64..4.0, r2 in 0.0f64..4.0,
    ) {
        let p = validate_params(gamma, 0.05, 0.5, eps).unwrap();
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let g = |r: f64| g_eps((r - 1.0) / eps, &p).unwrap();
        prop_assert!(g(lo) <= g(hi));
        prop_assert_eq!(g(hi).signum() * (hi - 1.0).signum() >= 0.0, true);
        let h = internal_energy(hi, &p).unwrap() / (eps * eps);
        prop_assert!((0.5 * g(hi) * g(hi) - h).abs() <= 1e-12 * h.max(1.0));
    }

    #[test]
    fn admissible_parameters(gamma in 0.5f64..4.0, s in -0.5f64..1.5, alpha in -0.5f64..1.5, eps in -0.5f64..1.5) {
        let ok = gamma > 1.0 && s > 0.0 && s <= 1.0 && s + 0.5 <= (gamma + 1.0) / 2.0
            && alpha > 0.0 && alpha < 1.0 && eps > 0.0 && eps < 1.0;
        let got = validate_params(gamma, s, alpha, eps);
        prop_assert_eq!(got.is_ok(), ok);
        if let Ok(p) = got {
            prop_assert!((p.kappa() - eps.powf(2.0 * alpha - 2.0)).abs() <= 1e-12 * p.kappa());
        }
    }

    #[test]
    fn rate_fit_recovers_power_laws(c in 0.1f64..10.0, rate in -2.0f64..3.0) {
        let pts: Vec<(f64, f64)> = [0.4, 0.28, 0.2, 0.14, 0.1].iter().map(|&e: &f64| (e, c * e.powf(rate))).collect();
        let fit = fit_rate(&pts, 3).unwrap();
        prop_assert!((fit.slope - rate).abs() <= 1e-10);
        prop_assert!((fit.intercept - c.ln()).abs() <= 1e-10);
    }

    #[test]
    fn csv_values_parse_back_exactly(v in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 1..14)) {
        let line = format_csv_line(&v);
        let back: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        prop_assert_eq!(back, v);
    }

    #[test]
    fn snapshot_roundtrip(f in field(8), g in field(8), name in "[a-z_]{1,12}") {
        let snap = Snapshot { fields: vec![(name, f), ("phi".into(), g)] };
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, &snap).unwrap();
        prop_assert_eq!(bytes.len(), 16 + snap.fields.iter().map(|(n, _)| 4 + n.len() + 64 * 8).sum::<usize>());
        prop_assert_eq!(read_snapshot(bytes.as_slice()).unwrap(), snap);
    }

    #[test]
    fn config_survives_toml(n in (4usize..40).prop_map(|h| 2 * h), eps in 0.05f64..0.9, t in 0.01f64..2.0, seed in any::<u64>()) {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Limit);
        cfg.n = n;
        cfg.eps = eps;
        cfg.t_end = t;
        cfg.seed = seed;
        cfg.phi0_modes = vec![Mode(1, 0, 1.0, 0.0)];
        prop_assert_eq!(parse_config(&cfg.to_toml()).unwrap(), cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn qg_energy_never_increases(m in modes(4)) {
        let ws = SpectralWorkspace::new(32).unwrap();
        let p = validate_params(2.0, 0.5, 0.5, 0.2).unwrap();
        let solver = QgSolver::new(&ws, &p);
        let init = QgState::new(trig(32, &m));
        let (e0, _) = energy_qg(&init, &p, &ws);
        let out = solver.run(init, 0.05, 1e-3, |_| Ok(())).unwrap();
        let (e1, _) = energy_qg(&out, &p, &ws);
        prop_assert!(e1 <= e0 * (1.0 + 1e-12) + 1e-14);
    }
}
