//! Power-law constitutive relations and parameter admissibility.
//!
//! `σ(ρ) = ρ^s`, `μ(ρ) = ρ^m` with `m = s + ½`, `p(ρ) = ρ^γ/γ`, the internal
//! energy `h` with `h'' = p'/ρ`, `h(1) = h'(1) = 0`, and `S(ρ) = (s/2) ρ^{2s}`
//! so that `S' = ρ σ'²`.

use crate::error::{Error, Result, Violation};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params {
    gamma: f64,
    s: f64,
    m: f64,
    alpha: f64,
    eps: f64,
    kappa: f64,
}

impl Params {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    /// Capillarity exponent.
    pub fn s(&self) -> f64 {
        self.s
    }
    /// Viscosity exponent, always `s + ½`.
    pub fn m(&self) -> f64 {
        self.m
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }
    /// Capillary prefactor `ε^{2(α-1)}`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Same constitutive exponents at a different `ε`.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        validate_params(self.gamma, self.s, self.alpha, eps)
    }

    /// `μ(1)`, the viscosity of the limit equation.
    pub fn mu_at_one(&self) -> f64 {
        1f64.powf(self.m)
    }
}

/// Check the admissibility constraints and derive `m` and `κ`.
///
/// Every violated constraint is reported, not just the first.
pub fn validate_params(gamma: f64, s: f64, alpha: f64, eps: f64) -> Result<Params> {
    let mut bad = Vec::new();
    let mut check = |ok: bool, name: &'static str, detail: String| {
        if !ok {
            bad.push(Violation { name, detail });
        }
    };
    check(gamma > 1.0, "gamma", format!("adiabatic exponent must exceed 1, got {gamma}"));
    check(
        s > 0.0 && s <= 1.0,
        "s",
        format!("capillarity exponent must satisfy 0 < s <= 1, got {s}"),
    );
    let m = s + 0.5;
    if gamma.is_finite() && s.is_finite() {
        check(
            m <= (gamma + 1.0) / 2.0,
            "m",
            format!(
                "viscosity exponent m = s + 1/2 = {m} exceeds (gamma+1)/2 = {}",
                (gamma + 1.0) / 2.0
            ),
        );
    }
    check(
        alpha > 0.0 && alpha < 1.0,
        "alpha",
        format!("capillarity scaling must satisfy 0 < alpha < 1, got {alpha}"),
    );
    check(
        eps > 0.0 && eps < 1.0,
        "eps",
        format!("singular parameter must satisfy 0 < eps < 1, got {eps}"),
    );
    if !bad.is_empty() {
        return Err(Error::InvalidParams(bad));
    }
    Ok(Params {
        gamma,
        s,
        m,
        alpha,
        eps,
        kappa: eps.powf(2.0 * (alpha - 1.0)),
    })
}

fn check_density(rho: f64) -> Result<()> {
    if rho.is_nan() || rho < 0.0 {
        return Err(Error::Domain(format!("density must be nonnegative, got {rho}")));
    }
    Ok(())
}

/// `p(ρ) = ρ^γ / γ`.
pub fn pressure(rho: f64, params: &Params) -> Result<f64> {
    check_density(rho)?;
    Ok(rho.powf(params.gamma) / params.gamma)
}

/// Internal energy `h(ρ) = (ρ^γ - 1 - γ(ρ-1)) / (γ(γ-1))`.
pub fn internal_energy(rho: f64, params: &Params) -> Result<f64> {
    check_density(rho)?;
    Ok(h_of_deviation(rho - 1.0, params.gamma))
}

/// `h''(ρ) = ρ^{γ-2}`.
pub fn internal_energy_curvature(rho: f64, params: &Params) -> Result<f64> {
    check_density(rho)?;
    Ok(rho.powf(params.gamma - 2.0))
}

/// `h(1 + z)` without the cancellation of the closed form near `z = 0`.
///
/// For `|z| <= 1/4` the binomial series `Σ_{n>=2} c_n z^n` is summed with
/// `c_2 = ½`, `c_{n+1} = c_n (γ - n)/(n + 1)`; it terminates for integer `γ`.
pub(crate) fn h_of_deviation(z: f64, gamma: f64) -> f64 {
    if gamma == 2.0 {
        return 0.5 * z * z;
    }
    if z.abs() <= 0.25 {
        let mut c = 0.5;
        let mut zn = z * z;
        let mut sum = c * zn;
        for n in 2..80 {
            c *= (gamma - n as f64) / (n as f64 + 1.0);
            zn *= z;
            let term = c * zn;
            sum += term;
            if term == 0.0 || term.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        ((1.0 + z).powf(gamma) - 1.0 - gamma * z) / (gamma * (gamma - 1.0))
    }
}

/// `G_ε(φ_ε) = (√2/ε) sign(φ_ε) √h(1 + εφ_ε)`, with `sign(0) = 0`.
///
/// For `γ = 2` this is the identity and is returned as such.
pub fn g_eps(phi_eps: f64, params: &Params) -> Result<f64> {
    let rho = 1.0 + params.eps * phi_eps;
    if rho.is_nan() || rho < 0.0 {
        return Err(Error::Domain(format!(
            "1 + eps*phi_eps = {rho} is negative (vacuum exceeded)"
        )));
    }
    Ok(g_eps_unchecked(phi_eps, params))
}

pub(crate) fn g_eps_unchecked(phi_eps: f64, params: &Params) -> f64 {
    if params.gamma == 2.0 || phi_eps == 0.0 {
        return phi_eps;
    }
    let h = h_of_deviation(params.eps * phi_eps, params.gamma);
    phi_eps.signum() * std::f64::consts::SQRT_2 / params.eps * h.sqrt()
}

/// Which density-dependent coefficient to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coefficient {
    /// `σ(ρ) = ρ^s`
    Sigma,
    /// `μ(ρ) = ρ^m`
    Mu,
    /// `S(ρ) = (s/2) ρ^{2s}`
    S,
    /// `σ'(ρ) = s ρ^{s-1}`
    SigmaPrime,
    /// `S''(ρ) = s²(2s-1) ρ^{2s-2}`
    SSecond,
}

/// Evaluate `σ`, `μ`, `S` or the derivatives `σ'`, `S''`.
pub fn coefficient(rho: f64, which: Coefficient, params: &Params) -> Result<f64> {
    check_density(rho)?;
    let (factor, exponent) = power_law(which, params);
    if rho == 0.0 && exponent < 0.0 && factor != 0.0 {
        return Err(Error::Domain(format!(
            "{which:?} has negative exponent {exponent} and is singular at rho = 0"
        )));
    }
    Ok(eval_power(factor, exponent, rho))
}

pub(crate) fn power_law(which: Coefficient, p: &Params) -> (f64, f64) {
    let s = p.s;
    match which {
        Coefficient::Sigma => (1.0, s),
        Coefficient::Mu => (1.0, p.m),
        Coefficient::S => (0.5 * s, 2.0 * s),
        Coefficient::SigmaPrime => (s, s - 1.0),
        Coefficient::SSecond => (s * s * (2.0 * s - 1.0), 2.0 * s - 2.0),
    }
}

#[inline]
pub(crate) fn eval_power(factor: f64, exponent: f64, rho: f64) -> f64 {
    if factor == 0.0 {
        0.0
    } else if exponent == 1.0 {
        factor * rho
    } else if exponent == 0.0 {
        factor
    } else if exponent == 0.5 {
        factor * rho.sqrt()
    } else {
        factor * rho.powf(exponent)
    }
}
