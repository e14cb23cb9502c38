//! Energies, the modulated energy and the convergence norms between an NSK
//! state and a QG profile, plus log-log rate fitting.

use std::fmt::Write as _;

use crate::constitutive::{g_eps_unchecked, h_of_deviation, power_law, eval_power, Coefficient, Params};
use crate::error::{Error, Result};
use crate::nsk::NskState;
use crate::qg::QgState;
use crate::spectral::{ScalarField, SpectralWorkspace, VectorField};

fn check_positive(rho: &ScalarField) -> Result<()> {
    let min_rho = rho.min();
    if !(min_rho > 0.0) {
        return Err(Error::Vacuum {
            t: f64::NAN,
            min_rho,
            floor: 0.0,
        });
    }
    Ok(())
}

fn coeff_field(rho: &ScalarField, which: Coefficient, params: &Params) -> ScalarField {
    let (factor, exponent) = power_law(which, params);
    rho.map(|r| eval_power(factor, exponent, r))
}

/// `κ|∇σ(ρ)|²` integrated.
fn capillary_energy(rho: &ScalarField, params: &Params, ws: &SpectralWorkspace) -> f64 {
    let sigma = coeff_field(rho, Coefficient::Sigma, params);
    params.kappa() * ws.grad(&sigma).norm_sq().integral()
}

/// `2∫μ(ρ)|D(u)|²`.
fn viscous_dissipation(rho: &ScalarField, u: &VectorField, params: &Params, ws: &SpectralWorkspace) -> f64 {
    let mu = coeff_field(rho, Coefficient::Mu, params);
    2.0 * (&mu * &ws.sym_gradient(u).frobenius_sq()).integral()
}

/// `(E_ε, D_ε)` of an NSK state.
///
/// `E_ε = ∫ ε⁻²h(ρ) + ½ρ|u|² + κ|∇σ(ρ)|²`, `D_ε = 2∫μ(ρ)|D(u)|²`.
pub fn energy_nsk(state: &NskState, params: &Params, ws: &SpectralWorkspace) -> Result<(f64, f64)> {
    check_positive(&state.rho)?;
    let eps2 = params.eps() * params.eps();
    let gamma = params.gamma();
    let u = state.velocity();
    let internal = state.rho.map(|r| h_of_deviation(r - 1.0, gamma)).integral() / eps2;
    let kinetic = 0.5 * state.mom.dot(&u).integral();
    let e = internal + kinetic + capillary_energy(&state.rho, params, ws);
    Ok((e, viscous_dissipation(&state.rho, &u, params, ws)))
}

/// `(E₀, D₀)` of a QG state: `½∫|∇φ|² + φ²` and `2μ(1)∫|D(∇⊥φ)|²`.
pub fn energy_qg(state: &QgState, params: &Params, ws: &SpectralWorkspace) -> (f64, f64) {
    let phi = &state.phi;
    let e = 0.5 * (ws.grad(phi).norm_sq().integral() + (phi * phi).integral());
    let d = 2.0 * params.mu_at_one() * ws.sym_gradient(&ws.perp_grad(phi)).frobenius_sq().integral();
    (e, d)
}

/// `φ_ε = (ρ - 1)/ε`.
pub fn phi_eps(rho: &ScalarField, params: &Params) -> ScalarField {
    let eps = params.eps();
    rho.map(|r| (r - 1.0) / eps)
}

/// The four nonnegative parts of `H_ε`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModulatedEnergy {
    /// `½∫ρ|u - ∇⊥φ|²`
    pub kinetic: f64,
    /// `½∫|G_ε(φ_ε) - φ|²`
    pub potential: f64,
    /// `κ∫|∇σ(ρ)|²`
    pub capillary: f64,
    pub viscous: f64,
}

impl ModulatedEnergy {
    pub fn total(&self) -> f64 {
        self.kinetic + self.potential + self.capillary + self.viscous
    }
}

/// `H_ε` at a common time. `t_tol` bounds the allowed mismatch of the two clocks.
pub fn modulated_energy(
    nsk: &NskState,
    qg: &QgState,
    visc_accum: f64,
    t_tol: f64,
    params: &Params,
    ws: &SpectralWorkspace,
) -> Result<ModulatedEnergy> {
    if (nsk.t - qg.t).abs() > t_tol {
        return Err(Error::Usage(format!(
            "states at different times: nsk t={} vs qg t={}",
            nsk.t, qg.t
        )));
    }
    if !(visc_accum >= 0.0) {
        return Err(Error::Usage(format!("viscous accumulator must be >= 0, got {visc_accum}")));
    }
    check_positive(&nsk.rho)?;
    let v = ws.perp_grad(&qg.phi);
    let w = &nsk.velocity() - &v;
    let kinetic = 0.5 * (&nsk.rho * &w.norm_sq()).integral();
    let g = g_field(&nsk.rho, params);
    let dg = &g - &qg.phi;
    let potential = 0.5 * (&dg * &dg).integral();
    Ok(ModulatedEnergy {
        kinetic,
        potential,
        capillary: capillary_energy(&nsk.rho, params, ws),
        viscous: visc_accum,
    })
}

fn g_field(rho: &ScalarField, params: &Params) -> ScalarField {
    phi_eps(rho, params).map(|p| g_eps_unchecked(p, params))
}

/// Integrand of the viscous part of `H_ε`: `2∫μ(ρ)|D(u) - D(∇⊥φ)|²`.
pub fn viscous_mismatch_rate(nsk: &NskState, qg: &QgState, params: &Params, ws: &SpectralWorkspace) -> Result<f64> {
    check_positive(&nsk.rho)?;
    let w = &nsk.velocity() - &ws.perp_grad(&qg.phi);
    Ok(viscous_dissipation(&nsk.rho, &w, params, ws))
}

/// Discrepancies of initial data from the limit profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WellPrep {
    /// `‖G_ε(φ_ε⁰) - φ⁰‖₂`
    pub d1: f64,
    /// `‖(ρ⁰ - 1)/ε - φ⁰‖₂`
    pub d2: f64,
    /// `‖√ρ⁰ u⁰ - ∇⊥φ⁰‖₂`
    pub d3: f64,
    /// `ε^{α-1}‖∇√ρ⁰‖₂`
    pub d4: f64,
}

pub fn wellprep_check(
    rho0: &ScalarField,
    u0: &VectorField,
    phi0: &ScalarField,
    params: &Params,
    ws: &SpectralWorkspace,
) -> Result<WellPrep> {
    check_positive(rho0)?;
    let l2 = |f: &ScalarField| ws.lp_norm(f, 2.0);
    let d1 = l2(&(&g_field(rho0, params) - phi0))?;
    let d2 = l2(&(&phi_eps(rho0, params) - phi0))?;
    let sq = rho0.map(f64::sqrt);
    let d3 = ws.lp_norm(&(&u0.mul_scalar_field(&sq) - &ws.perp_grad(phi0)), 2.0)?;
    let d4 = params.eps().powf(params.alpha() - 1.0) * ws.lp_norm(&ws.grad(&sq), 2.0)?;
    Ok(WellPrep { d1, d2, d3, d4 })
}

/// Least-squares line through `(log ε, log value)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute residual in log space.
    pub max_residual: f64,
}

pub fn fit_rate(points: &[(f64, f64)], min_points: usize) -> Result<RateFit> {
    let need = min_points.max(2);
    if points.len() < need {
        return Err(Error::Usage(format!(
            "rate fit needs at least {need} points, got {}",
            points.len()
        )));
    }
    for &(e, v) in points {
        if !(e > 0.0) || !(v > 0.0) {
            return Err(Error::Usage(format!(
                "rate fit needs positive eps and value, got ({e}, {v})"
            )));
        }
    }
    for (i, a) in points.iter().enumerate() {
        if points[..i].iter().any(|b| b.0 == a.0) {
            return Err(Error::Usage(format!("duplicate eps {}", a.0)));
        }
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    Ok(RateFit {
        slope,
        intercept,
        max_residual,
    })
}

/// Column order of [`DiagnosticsRow`] in CSV output.
pub const CSV_COLUMNS: [&str; 13] = [
    "t",
    "mass",
    "E_eps",
    "D_eps",
    "E_0",
    "D_0",
    "H_eps",
    "visc_accum",
    "norm_rho_gamma",
    "norm_mom",
    "norm_kinetic",
    "norm_G",
    "norm_cap",
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub mass: f64,
    pub e_eps: f64,
    pub d_eps: f64,
    pub e_0: f64,
    pub d_0: f64,
    pub h_eps: f64,
    pub visc_accum: f64,
    /// `‖ρ - 1‖_{L^γ}`
    pub norm_rho_gamma: f64,
    /// `‖ρu - ∇⊥φ‖_{L^{2γ/(γ+1)}}`
    pub norm_mom: f64,
    /// `‖√ρ(u - ∇⊥φ)‖₂`
    pub norm_kinetic: f64,
    /// `‖G_ε(φ_ε) - φ‖₂`
    pub norm_g: f64,
    /// `ε^{α-1}‖∇σ(ρ)‖₂`
    pub norm_cap: f64,
}

impl DiagnosticsRow {
    pub fn values(&self) -> [f64; 13] {
        [
            self.t,
            self.mass,
            self.e_eps,
            self.d_eps,
            self.e_0,
            self.d_0,
            self.h_eps,
            self.visc_accum,
            self.norm_rho_gamma,
            self.norm_mom,
            self.norm_kinetic,
            self.norm_g,
            self.norm_cap,
        ]
    }

    pub fn csv_header() -> String {
        CSV_COLUMNS.join(",")
    }

    pub fn to_csv(&self) -> String {
        format_csv_line(&self.values())
    }
}

/// Comma-separated values with 17 significant digits.
pub fn format_csv_line(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{v:.16e}").unwrap();
    }
    s
}

/// Every diagnostic of a co-stepped pair.
pub fn compute_row(
    nsk: &NskState,
    qg: &QgState,
    visc_accum: f64,
    t_tol: f64,
    params: &Params,
    ws: &SpectralWorkspace,
) -> Result<DiagnosticsRow> {
    let (e_eps, d_eps) = energy_nsk(nsk, params, ws)?;
    let (e_0, d_0) = energy_qg(qg, params, ws);
    let h = modulated_energy(nsk, qg, visc_accum, t_tol, params, ws)?;
    let gamma = params.gamma();
    let v = ws.perp_grad(&qg.phi);
    let dev = nsk.rho.map(|r| r - 1.0);
    let w = &nsk.velocity() - &v;
    let sq = nsk.rho.map(f64::sqrt);
    let sigma = coeff_field(&nsk.rho, Coefficient::Sigma, params);
    let cap = params.eps().powf(params.alpha() - 1.0);
    Ok(DiagnosticsRow {
        t: nsk.t,
        mass: nsk.mass(),
        e_eps,
        d_eps,
        e_0,
        d_0,
        h_eps: h.total(),
        visc_accum,
        norm_rho_gamma: ws.lp_norm(&dev, gamma)?,
        norm_mom: ws.lp_norm(&(&nsk.mom - &v), 2.0 * gamma / (gamma + 1.0))?,
        norm_kinetic: ws.lp_norm(&w.mul_scalar_field(&sq), 2.0)?,
        norm_g: ws.lp_norm(&(&g_field(&nsk.rho, params) - &qg.phi), 2.0)?,
        norm_cap: cap * ws.lp_norm(&ws.grad(&sigma), 2.0)?,
    })
}

/// `(‖ρu - ∇⊥φ‖_q, ‖√ρ‖_{2γ}‖√ρ(u - ∇⊥φ)‖₂ + ‖ρ - 1‖_q ‖∇⊥φ‖_∞)` with
/// `q = 2γ/(γ+1)`; the first never exceeds the second.
pub fn momentum_bound(nsk: &NskState, qg: &QgState, params: &Params, ws: &SpectralWorkspace) -> Result<(f64, f64)> {
    check_positive(&nsk.rho)?;
    let gamma = params.gamma();
    let q = 2.0 * gamma / (gamma + 1.0);
    let v = ws.perp_grad(&qg.phi);
    let sq = nsk.rho.map(f64::sqrt);
    let w = (&nsk.velocity() - &v).mul_scalar_field(&sq);
    let lhs = ws.lp_norm(&(&nsk.mom - &v), q)?;
    let rhs = ws.lp_norm(&sq, 2.0 * gamma)? * ws.lp_norm(&w, 2.0)?
        + ws.lp_norm(&nsk.rho.map(|r| r - 1.0), q)? * ws.lp_norm(&v, f64::INFINITY)?;
    Ok((lhs, rhs))
}
