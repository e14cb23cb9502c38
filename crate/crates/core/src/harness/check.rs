//! Quick identity and property suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::snapshot::{read_snapshot, write_snapshot, Snapshot};
use crate::constitutive::{g_eps, internal_energy, validate_params, Params};
use crate::diagnostics::{energy_nsk, energy_qg, momentum_bound};
use crate::error::Result;
use crate::nsk::{DtPolicy, KortewegForm, NskSolver, NskState, Scheme};
use crate::qg::{QgSolver, QgState};
use crate::spectral::{ScalarField, SpectralWorkspace, SymTensorField, VectorField};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

/// Sum of `a cos(k·x) + b sin(k·x)` over `max(|k1|,|k2|) <= kmax`, coefficients
/// uniform in `[-1, 1]` and damped by `1/(1+|k|²)`.
pub fn random_band_limited(n: usize, kmax: i64, rng: &mut impl Rng) -> ScalarField {
    let mut terms = Vec::new();
    for k1 in -kmax..=kmax {
        for k2 in 0..=kmax {
            if k2 == 0 && k1 < 0 {
                continue;
            }
            let damp = 1.0 / (1.0 + (k1 * k1 + k2 * k2) as f64);
            let a: f64 = rng.gen_range(-1.0..1.0);
            let b: f64 = rng.gen_range(-1.0..1.0);
            terms.push((k1 as f64, k2 as f64, a * damp, b * damp));
        }
    }
    ScalarField::from_fn(n, |x, y| {
        terms
            .iter()
            .map(|&(k1, k2, a, b)| {
                let th = k1 * x + k2 * y;
                a * th.cos() + b * th.sin()
            })
            .sum()
    })
}

fn rel(a: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        a
    } else {
        a / scale
    }
}

fn outcome(name: &'static str, worst: f64, tol: f64) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: worst <= tol,
        detail: format!("worst {worst:.3e} (tolerance {tol:.0e})"),
    }
}

fn raw_outer(v: &VectorField) -> SymTensorField {
    SymTensorField {
        t11: &v.x1 * &v.x1,
        t12: &v.x1 * &v.x2,
        t22: &v.x2 * &v.x2,
    }
}

/// Largest relative error of the four stream-function identities over `count` fields.
pub fn operator_identities(ws: &SpectralWorkspace, count: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kmax = (ws.n() / 8) as i64;
    let l2 = |f: &ScalarField| ws.lp_norm(f, 2.0);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let phi = random_band_limited(ws.n(), kmax, &mut rng);
        let v = ws.perp_grad(&phi);
        let lap = ws.laplacian(&phi);
        let transport = v.dot(&ws.grad(&lap));

        let lhs = ws.div_perp(&ws.div_tensor(&raw_outer(&v)));
        worst = worst.max(rel(l2(&(&lhs - &transport))?, l2(&transport)?));

        let d = ws.sym_gradient(&v);
        let lhs = ws.div_perp(&ws.div_tensor(&d)).scale(2.0);
        let bil = ws.bilaplacian(&phi);
        worst = worst.max(rel(l2(&(&lhs - &bil))?, l2(&bil)?));

        let a = (&lap * &lap).integral();
        let b = 2.0 * d.frobenius_sq().integral();
        worst = worst.max(rel((a - b).abs(), a));

        let skew = (&transport * &phi).integral();
        worst = worst.max(rel(skew.abs(), l2(&transport)? * l2(&phi)?));
    }
    Ok(worst)
}

/// Relative L² gap between the primitive and conservative Korteweg forms.
pub fn korteweg_gap(ws: &SpectralWorkspace, params: &Params, rho: &ScalarField) -> Result<f64> {
    let solver = NskSolver::new(ws, *params);
    let a = solver.korteweg_divergence(rho, KortewegForm::Primitive)?;
    let b = solver.korteweg_divergence(rho, KortewegForm::Conservative)?;
    Ok(rel(ws.lp_norm(&(&a - &b), 2.0)?, ws.lp_norm(&a, 2.0)?))
}

/// Density `1 + 0.5 g/max|g|` for a random band-limited `g`, so `ρ ∈ [0.5, 1.5]`.
pub fn random_density(n: usize, kmax: i64, rng: &mut impl Rng) -> ScalarField {
    let g = random_band_limited(n, kmax, rng);
    let m = g.max_abs();
    g.map(|v| 1.0 + 0.5 * v / m)
}

/// `max |½G_ε(φ)² - ε⁻²h(1+εφ)| / max(1, ε⁻²h)` over samples with `1 + εφ ∈ (0, 3)`.
pub fn g_identity_error(params: &Params, samples: usize, rng: &mut impl Rng) -> Result<f64> {
    let eps = params.eps();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let rho: f64 = rng.gen_range(1e-6..3.0);
        let phi = (rho - 1.0) / eps;
        let g = g_eps(phi, params)?;
        let h = internal_energy(1.0 + eps * phi, params)? / (eps * eps);
        worst = worst.max((0.5 * g * g - h).abs() / h.max(1.0));
    }
    Ok(worst)
}

/// `ε|G_ε(φ_ε) - φ_ε| / (|ρ-1|²(1 + ρ^{(γ-3)⁺}))`, independent of ε.
pub fn est_g_ratio(rho: f64, gamma: f64) -> Result<f64> {
    let p = validate_params(gamma, 0.5, 0.5, 0.5)?;
    let z = rho - 1.0;
    if z == 0.0 {
        return Ok(0.0);
    }
    let phi = z / p.eps();
    let diff = p.eps() * (g_eps(phi, &p)? - phi).abs();
    Ok(diff / (z * z * (1.0 + rho.powf((gamma - 3.0).max(0.0)))))
}

/// Largest ratio on a uniform grid of `ρ ∈ (0, 10]`, plus a 1% margin.
pub fn calibrate_est_g(gamma: f64, points: usize) -> Result<f64> {
    let mut c: f64 = 0.0;
    for i in 1..=points {
        c = c.max(est_g_ratio(10.0 * i as f64 / points as f64, gamma)?);
    }
    Ok(1.01 * c)
}

/// Smallest relative margin `(lhs - rhs)/lhs` of the internal-energy lower
/// bounds; negative means violated.
pub fn h_bound_margin(samples: usize) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for gamma in [2.5, 3.0, 5.0] {
        let p = validate_params(gamma, 0.5, 0.5, 0.5)?;
        let c = gamma * (gamma - 1.0);
        for i in 0..=samples {
            let rho = 10.0 * i as f64 / samples as f64;
            let h = internal_energy(rho, &p)?;
            worst = worst.min(margin(h, (rho - 1.0).abs().powf(gamma) / c));
        }
    }
    for gamma in [4.0, 5.0, 7.0] {
        let p = validate_params(gamma, 0.5, 0.5, 0.5)?;
        let c = gamma * (gamma - 1.0);
        for i in 0..=samples {
            let z = 10.0 * i as f64 / samples as f64;
            let h = internal_energy(1.0 + z, &p)?;
            worst = worst.min(margin(h, z * z * (1.0 + z).powf(gamma - 2.0) / c));
        }
    }
    for gamma in [2.0, 3.0, 5.0] {
        let p = validate_params(gamma, 0.5, 0.5, 0.5)?;
        for i in 1..samples {
            let z = 10.0 * i as f64 / samples as f64;
            let f = 2.0 * internal_energy(1.0 + z, &p)? / (z * z);
            worst = worst.min(margin(f, 1.0));
        }
    }
    Ok(worst)
}

fn margin(lhs: f64, rhs: f64) -> f64 {
    if lhs == rhs {
        0.0
    } else {
        (lhs - rhs) / lhs.abs()
    }
}

/// Worst relative `|E(t) + ∫D - E(0)|/E(0)` and mass drift of a fixed-step NSK run.
pub fn nsk_energy_and_mass(
    ws: &SpectralWorkspace,
    params: &Params,
    init: NskState,
    t_end: f64,
    dt: f64,
    scheme: Scheme,
) -> Result<(f64, f64)> {
    let mut solver = NskSolver::new(ws, *params);
    let (e0, d0) = energy_nsk(&init, params, ws)?;
    let m0 = init.mass();
    let (mut prev_t, mut prev_d, mut acc) = (init.t, d0, 0.0);
    let (mut worst_e, mut worst_m): (f64, f64) = (0.0, 0.0);
    solver.run(init, t_end, DtPolicy::Fixed(dt), scheme, |s| {
        let (e, d) = energy_nsk(s, params, ws)?;
        acc += 0.5 * (s.t - prev_t) * (d + prev_d);
        prev_t = s.t;
        prev_d = d;
        worst_e = worst_e.max((e + acc - e0).abs() / e0);
        worst_m = worst_m.max((s.mass() - m0).abs() / m0);
        Ok(())
    })?;
    Ok((worst_e, worst_m))
}

/// Worst relative `|E₀(t) + ∫D₀ - E₀(0)|/E₀(0)` of a fixed-step QG run.
pub fn qg_energy(ws: &SpectralWorkspace, params: &Params, init: QgState, t_end: f64, dt: f64) -> Result<f64> {
    let solver = QgSolver::new(ws, params);
    let (e0, d0) = energy_qg(&init, params, ws);
    let (mut prev_t, mut prev_d, mut acc) = (init.t, d0, 0.0);
    let mut worst: f64 = 0.0;
    solver.run(init, t_end, dt, |s| {
        let (e, d) = energy_qg(s, params, ws);
        acc += 0.5 * (s.t - prev_t) * (d + prev_d);
        prev_t = s.t;
        prev_d = d;
        worst = worst.max((e + acc - e0).abs() / e0);
        Ok(())
    })?;
    Ok(worst)
}

fn run_check(name: &'static str, tol: f64, f: impl FnOnce() -> Result<f64>) -> CheckOutcome {
    match f() {
        Ok(worst) => outcome(name, worst, tol),
        Err(e) => CheckOutcome {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Every check, small enough to finish in seconds.
pub fn run_checks(seed: u64) -> Vec<CheckOutcome> {
    let ws32 = SpectralWorkspace::new(32).expect("valid grid");
    let ws64 = SpectralWorkspace::new(64).expect("valid grid");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = validate_params(2.0, 0.5, 0.5, 0.2).expect("valid params");
    let mut out = Vec::new();

    out.push(run_check("operator identities", 1e-8, || operator_identities(&ws64, 5, seed)));

    let rho = random_density(64, 4, &mut rng);
    out.push(run_check("korteweg forms", 1e-6, || {
        let mut worst: f64 = 0.0;
        for (g, s) in [(2.0, 0.5), (2.0, 1.0), (3.0, 0.5)] {
            worst = worst.max(korteweg_gap(&ws64, &validate_params(g, s, 0.5, 0.2)?, &rho)?);
        }
        Ok(worst)
    }));

    out.push(run_check("G identity", 1e-13, || {
        let mut worst: f64 = 0.0;
        for g in [1.5, 2.0, 3.0, 5.0] {
            worst = worst.max(g_identity_error(&validate_params(g, 0.5, 0.5, 0.1)?, 2000, &mut rng)?);
        }
        Ok(worst)
    }));

    out.push(run_check("internal energy bounds", 1e-12, || Ok((-h_bound_margin(2000)?).max(0.0))));

    out.push(run_check("G estimate", 0.0, || {
        let mut worst: f64 = 0.0;
        for g in [1.5, 2.0, 3.0, 5.0] {
            let c = calibrate_est_g(g, 4000)?;
            for _ in 0..2000 {
                let r = est_g_ratio(rng.gen_range(1e-6..10.0), g)?;
                worst = worst.max(r - c);
            }
        }
        Ok(worst.max(0.0))
    }));

    let phi = ScalarField::from_fn(32, |x, y| x.cos() + 0.5 * (x + y + 0.3).cos());
    let rho0 = phi.map(|f| 1.0 + base.eps() * f);
    let init = NskState {
        mom: ws32.perp_grad(&phi).mul_scalar_field(&rho0),
        rho: rho0,
        t: 0.0,
    };
    match nsk_energy_and_mass(&ws32, &base, init.clone(), 0.05, 1e-3, Scheme::Imex) {
        Ok((e, m)) => {
            out.push(outcome("NSK energy identity", e, 1e-3));
            out.push(outcome("mass conservation", m, 1e-10));
        }
        Err(e) => {
            for name in ["NSK energy identity", "mass conservation"] {
                out.push(CheckOutcome {
                    name,
                    passed: false,
                    detail: format!("error: {e}"),
                });
            }
        }
    }

    out.push(run_check("QG energy identity", 1e-3, || {
        qg_energy(&ws32, &base, QgState::new(phi.clone()), 0.05, 1e-3)
    }));

    out.push(run_check("momentum Hoelder bound", 0.0, || {
        let qg = QgState::new(phi.map(|v| 0.9 * v));
        let (lhs, rhs) = momentum_bound(&init, &qg, &base, &ws32)?;
        Ok((lhs - rhs * (1.0 + 1e-12)).max(0.0))
    }));

    out.push(run_check("snapshot roundtrip", 0.0, || {
        let snap = Snapshot {
            fields: vec![("rho".into(), init.rho.clone()), ("phi".into(), phi.clone())],
        };
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, &snap)?;
        let back = read_snapshot(bytes.as_slice())?;
        Ok(if back == snap { 0.0 } else { 1.0 })
    }));

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for c in run_checks(7) {
            assert!(c.passed, "{c}");
        }
    }

    #[test]
    fn est_g_constant_is_finite() {
        for g in [1.5, 2.0, 3.0, 5.0] {
            let c = calibrate_est_g(g, 1000).unwrap();
            assert!(c.is_finite() && c >= 0.0, "{g}: {c}");
        }
    }
}
