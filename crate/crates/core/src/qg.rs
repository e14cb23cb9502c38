//! Viscous quasi-geostrophic equation
//!
//! ```text
//! ∂t(Δφ - φ) + (∇⊥φ·∇)(Δφ) = μ(1) Δ²φ
//! ```
//!
//! advanced through the auxiliary variable `u = φ - Δφ`:
//! `∂t u = μΔu + (∇⊥φ·∇)(φ - u) - μ(φ - u)` with `φ = (1 - Δ)⁻¹ u`.
//! Diffusion is integrated exactly per mode; the rest by explicit midpoint
//! inside a Strang splitting.

use num_complex::Complex64;

use crate::constitutive::Params;
use crate::error::{Error, Result};
use crate::spectral::{ScalarField, SpectralWorkspace, Spectrum};

#[derive(Clone, Debug, PartialEq)]
pub struct QgState {
    pub phi: ScalarField,
    pub t: f64,
}

impl QgState {
    pub fn new(phi: ScalarField) -> Self {
        Self { phi, t: 0.0 }
    }
}

/// Solve `-Δφ + φ = u`.
pub fn helmholtz_solve(u: &ScalarField, ws: &SpectralWorkspace) -> ScalarField {
    ws.inverse(&helmholtz_spectral(&ws.forward(u), ws))
}

fn helmholtz_spectral(u: &Spectrum, ws: &SpectralWorkspace) -> Spectrum {
    let mut out = u.clone();
    for ((p, q), c) in out.coeffs_mut().indexed_iter_mut() {
        let (k1, k2) = ws.deriv_wavenumber(p, q);
        *c /= 1.0 + k1 * k1 + k2 * k2;
    }
    out
}

/// `u = φ - Δφ`.
pub fn auxiliary(phi: &ScalarField, ws: &SpectralWorkspace) -> ScalarField {
    phi - &ws.laplacian(phi)
}

pub struct QgSolver<'a> {
    ws: &'a SpectralWorkspace,
    mu: f64,
}

impl<'a> QgSolver<'a> {
    pub fn new(ws: &'a SpectralWorkspace, params: &Params) -> Self {
        Self {
            ws,
            mu: params.mu_at_one(),
        }
    }

    /// Viscosity `μ(1)` of the limit equation.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `∂t u` for the state, including diffusion.
    pub fn rhs(&self, state: &QgState) -> Result<ScalarField> {
        if !state.phi.is_finite() {
            return Err(Error::BlowUp {
                t: state.t,
                reason: "non-finite stream function".into(),
            });
        }
        let u = auxiliary(&state.phi, self.ws);
        let rest = self.explicit_part(&state.phi, &u);
        Ok(&rest + &self.ws.laplacian(&u).scale(self.mu))
    }

    /// `(∇⊥φ·∇)(φ - u) - μ(φ - u)`.
    fn explicit_part(&self, phi: &ScalarField, u: &ScalarField) -> ScalarField {
        let ws = self.ws;
        let diff = phi - u;
        let v = ws.perp_grad(phi);
        let transport = ws.advect(&v, &diff);
        transport.zip_map(&diff, |a, d| a - self.mu * d)
    }

    fn explicit_spectral(&self, u_hat: &Spectrum) -> Spectrum {
        let ws = self.ws;
        let u = ws.inverse(u_hat);
        let phi = ws.inverse(&helmholtz_spectral(u_hat, ws));
        ws.forward(&self.explicit_part(&phi, &u))
    }

    fn diffuse(&self, u_hat: &mut Spectrum, h: f64) {
        let ws = self.ws;
        let mu = self.mu;
        for ((p, q), c) in u_hat.coeffs_mut().indexed_iter_mut() {
            let (k1, k2) = ws.deriv_wavenumber(p, q);
            *c *= Complex64::from((-mu * (k1 * k1 + k2 * k2) * h).exp());
        }
    }

    pub fn step(&self, state: &QgState, dt: f64) -> Result<QgState> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Usage(format!("time step must be positive, got {dt}")));
        }
        let ws = self.ws;
        let half = 0.5 * dt;
        let mut y = ws.forward(&auxiliary(&state.phi, ws));
        self.diffuse(&mut y, half);
        let k1 = self.explicit_spectral(&y);
        let mut mid = y.clone();
        mid.add_scaled(half, &k1);
        let k2 = self.explicit_spectral(&mid);
        y.add_scaled(dt, &k2);
        self.diffuse(&mut y, half);
        let next = QgState {
            phi: ws.inverse(&helmholtz_spectral(&y, ws)),
            t: state.t + dt,
        };
        if !next.phi.is_finite() {
            return Err(Error::BlowUp {
                t: next.t,
                reason: "non-finite stream function after step".into(),
            });
        }
        Ok(next)
    }

    /// Fixed-step run to `t_end`; `observer` sees every accepted step.
    pub fn run(
        &self,
        init: QgState,
        t_end: f64,
        dt: f64,
        mut observer: impl FnMut(&QgState) -> Result<()>,
    ) -> Result<QgState> {
        if !(dt > 0.0) {
            return Err(Error::Usage(format!("time step must be positive, got {dt}")));
        }
        let t0 = init.t;
        let span = t_end - t0;
        let mut state = init;
        let mut step = 0usize;
        while t_end - state.t > 1e-12 * span.abs().max(1.0) {
            let remaining = t_end - state.t;
            let h = if dt >= remaining * (1.0 - 1e-9) { remaining } else { dt };
            let mut next = self.step(&state, h).map_err(|e| e.at_step(step + 1))?;
            step += 1;
            next.t = if h == dt { t0 + step as f64 * dt } else { t_end };
            observer(&next).map_err(|e| e.at_step(step))?;
            state = next;
        }
        Ok(state)
    }
}

/// Largest spatial L² norm of the PDE residual over interior states, with
/// centered differences in time. Requires uniform spacing.
pub fn qg_residual(traj: &[QgState], params: &Params, ws: &SpectralWorkspace) -> Result<f64> {
    if traj.len() < 3 {
        return Err(Error::Usage(format!(
            "residual needs at least 3 states, got {}",
            traj.len()
        )));
    }
    let dt = traj[1].t - traj[0].t;
    if !(dt > 0.0) {
        return Err(Error::Usage("trajectory times must increase".into()));
    }
    for w in traj.windows(2) {
        let h = w[1].t - w[0].t;
        if (h - dt).abs() > 1e-9 * dt {
            return Err(Error::Usage(format!("non-uniform spacing: {h} vs {dt}")));
        }
    }
    let mu = params.mu_at_one();
    let lhs: Vec<ScalarField> = traj
        .iter()
        .map(|s| &ws.laplacian(&s.phi) - &s.phi)
        .collect();
    let mut worst: f64 = 0.0;
    for n in 1..traj.len() - 1 {
        let phi = &traj[n].phi;
        let dtw = (&lhs[n + 1] - &lhs[n - 1]).scale(0.5 / dt);
        let transport = ws.advect(&ws.perp_grad(phi), &ws.laplacian(phi));
        let r = &(&dtw + &transport) - &ws.bilaplacian(phi).scale(mu);
        worst = worst.max(ws.lp_norm(&r, 2.0)?);
    }
    Ok(worst)
}
