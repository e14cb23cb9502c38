//! Scaled Navier-Stokes-Korteweg system in conservative variables `(ρ, m = ρu)`:
//!
//! ```text
//! ∂t ρ + div m = 0
//! ∂t m + div(m⊗m/ρ) + m⊥/ε + ∇ρ^γ/(ε²γ) = 2κ ρ∇(σ'(ρ)Δσ(ρ)) + 2 div(μ(ρ) D(u))
//! ```
//!
//! with `κ = ε^{2(α-1)}`. The IMEX scheme advances the linearization about
//! `(ρ, m) = (1, 0)` exactly per Fourier mode and the remainder explicitly.

use std::collections::HashMap;

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::constitutive::{eval_power, h_of_deviation, power_law, Coefficient, Params};
use crate::error::{Error, Result};
use crate::spectral::{ScalarField, SpectralWorkspace, Spectrum, SymTensorField, VectorField};

/// Default vacuum floor.
pub const DEFAULT_RHO_MIN: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct NskState {
    pub rho: ScalarField,
    pub mom: VectorField,
    pub t: f64,
}

impl NskState {
    /// `ρ ≡ 1`, `m ≡ 0`.
    pub fn rest(n: usize) -> Self {
        Self {
            rho: ScalarField::constant(n, 1.0),
            mom: VectorField::zeros(n),
            t: 0.0,
        }
    }

    /// `u = m/ρ` pointwise.
    pub fn velocity(&self) -> VectorField {
        VectorField::new(
            self.mom.x1.zip_map(&self.rho, |m, r| m / r),
            self.mom.x2.zip_map(&self.rho, |m, r| m / r),
        )
    }

    /// `∫ρ dx`.
    pub fn mass(&self) -> f64 {
        self.rho.integral()
    }

    pub fn is_finite(&self) -> bool {
        self.rho.is_finite() && self.mom.is_finite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KortewegForm {
    /// `ρ∇(σ'(ρ)Δσ(ρ))`
    Primitive,
    /// `div((ΔS - ½S''|∇ρ|²) I - ∇σ⊗∇σ)`
    Conservative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Imex,
    Rk4,
}

/// CFL constants for adaptive stepping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cfl {
    pub c_adv: f64,
    pub c_wave: f64,
    pub c_disp: f64,
    /// IMEX bound `dt <= c_osc / ω_max` on the fastest linear oscillation.
    pub c_osc: f64,
}

impl Default for Cfl {
    fn default() -> Self {
        Self {
            c_adv: 0.4,
            c_wave: 0.5,
            c_disp: 0.3,
            c_osc: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DtPolicy {
    Fixed(f64),
    Adaptive(Cfl),
}

/// Linearized dynamics of one Fourier mode acting on `(ρ̂, m̂1, m̂2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeMatrix(pub Matrix3<Complex64>);

impl ModeMatrix {
    pub fn eigenvalues(&self) -> [Complex64; 3] {
        let ev = self
            .0
            .eigenvalues()
            .expect("complex Schur form always yields eigenvalues");
        [ev[0], ev[1], ev[2]]
    }

    /// `exp(L h)`.
    pub fn propagator(&self, h: f64) -> Matrix3<Complex64> {
        (self.0 * Complex64::from(h)).exp()
    }
}

/// Linearization of the momentum and mass equations about `ρ = 1, m = 0` at
/// integer wavenumber `k`.
pub fn linearized_mode_matrix(k: (i64, i64), params: &Params) -> ModeMatrix {
    mode_matrix(k.0 as f64, k.1 as f64, params)
}

fn mode_matrix(k1: f64, k2: f64, p: &Params) -> ModeMatrix {
    let i = Complex64::i();
    let kk = k1 * k1 + k2 * k2;
    let eps = p.eps();
    let mu = p.mu_at_one();
    let s = p.s();
    let stiff = 1.0 / (eps * eps) + 2.0 * p.kappa() * s * s * kk;
    let f = 1.0 / eps;
    let c = |x: f64| Complex64::from(x);
    #[rustfmt::skip]
    let m = Matrix3::new(
        c(0.0),              -i * k1,                       -i * k2,
        -i * k1 * stiff,     c(-mu * (kk + k1 * k1)),       c(f - mu * k1 * k2),
        -i * k2 * stiff,     c(-f - mu * k1 * k2),          c(-mu * (kk + k2 * k2)),
    );
    ModeMatrix(m)
}

/// Per-mode `exp(L h)` for every slot of the half spectrum.
struct Propagator {
    mats: Vec<Matrix3<Complex64>>,
}

/// Owns the parameters, vacuum floor and propagator cache for NSK runs on one workspace.
pub struct NskSolver<'a> {
    ws: &'a SpectralWorkspace,
    params: Params,
    rho_min: f64,
    propagators: HashMap<u64, Propagator>,
}

impl<'a> NskSolver<'a> {
    pub fn new(ws: &'a SpectralWorkspace, params: Params) -> Self {
        Self {
            ws,
            params,
            rho_min: DEFAULT_RHO_MIN,
            propagators: HashMap::new(),
        }
    }

    pub fn with_rho_min(mut self, rho_min: f64) -> Self {
        self.rho_min = rho_min;
        self
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn rho_min(&self) -> f64 {
        self.rho_min
    }

    pub fn workspace(&self) -> &'a SpectralWorkspace {
        self.ws
    }

    fn check_floor(&self, rho: &ScalarField, t: f64) -> Result<()> {
        let min_rho = rho.min();
        if !(min_rho > self.rho_min) {
            return Err(Error::Vacuum {
                t,
                min_rho,
                floor: self.rho_min,
            });
        }
        Ok(())
    }

    fn coeff_field(&self, rho: &ScalarField, which: Coefficient) -> ScalarField {
        let (factor, exponent) = power_law(which, &self.params);
        rho.map(|r| eval_power(factor, exponent, r))
    }

    /// `2κ ρ∇(σ'(ρ)Δσ(ρ))` in the requested form. Products are taken on the
    /// grid and only the result is dealiased.
    pub fn korteweg_divergence(&self, rho: &ScalarField, form: KortewegForm) -> Result<VectorField> {
        self.check_floor(rho, f64::NAN)?;
        Ok(self.korteweg_unchecked(rho, form))
    }

    fn korteweg_unchecked(&self, rho: &ScalarField, form: KortewegForm) -> VectorField {
        let ws = self.ws;
        let pref = 2.0 * self.params.kappa();
        let sigma = self.coeff_field(rho, Coefficient::Sigma);
        let out = match form {
            KortewegForm::Primitive => {
                let lap = ws.laplacian(&sigma);
                let sp = self.coeff_field(rho, Coefficient::SigmaPrime);
                let q = &sp * &lap;
                ws.grad(&q).mul_scalar_field(rho)
            }
            KortewegForm::Conservative => {
                let s_of_rho = self.coeff_field(rho, Coefficient::S);
                let lap_s = ws.laplacian(&s_of_rho);
                let gr = ws.grad(rho);
                let s2 = self.coeff_field(rho, Coefficient::SSecond);
                let w = &s2 * &gr.norm_sq();
                let iso = lap_s.zip_map(&w, |a, b| a - 0.5 * b);
                let gs = ws.grad(&sigma);
                let t = SymTensorField {
                    t11: &gs.x1 * &gs.x1,
                    t12: &gs.x1 * &gs.x2,
                    t22: &gs.x2 * &gs.x2,
                };
                &ws.grad(&iso) - &ws.div_tensor(&t)
            }
        };
        ws.dealias_vector(&out).scale(pref)
    }

    /// `2 div(μ(ρ) D(u))`, dealiased.
    pub fn viscous_divergence(&self, rho: &ScalarField, u: &VectorField) -> Result<VectorField> {
        self.check_floor(rho, f64::NAN)?;
        Ok(self.viscous_unchecked(rho, u))
    }

    fn viscous_unchecked(&self, rho: &ScalarField, u: &VectorField) -> VectorField {
        let ws = self.ws;
        let mu = self.coeff_field(rho, Coefficient::Mu);
        let d = ws.sym_gradient(u);
        let t = SymTensorField {
            t11: ws.product(&mu, &d.t11),
            t12: ws.product(&mu, &d.t12),
            t22: ws.product(&mu, &d.t22),
        };
        ws.dealias_vector(&ws.div_tensor(&t)).scale(2.0)
    }

    /// Tendencies `(∂t ρ, ∂t m)` of the full system.
    pub fn rhs(&self, state: &NskState) -> Result<(ScalarField, VectorField)> {
        if !state.is_finite() {
            return Err(Error::BlowUp {
                t: state.t,
                reason: "non-finite state".into(),
            });
        }
        self.check_floor(&state.rho, state.t)?;
        let out = self.rhs_unchecked(state);
        if !(out.0.is_finite() && out.1.is_finite()) {
            return Err(Error::BlowUp {
                t: state.t,
                reason: "non-finite tendency".into(),
            });
        }
        Ok(out)
    }

    fn rhs_unchecked(&self, state: &NskState) -> (ScalarField, VectorField) {
        let ws = self.ws;
        let p = &self.params;
        let rho = &state.rho;
        let m = &state.mom;
        let u = ws.dealias_vector(&state.velocity());

        let d_rho = -&ws.div(m);

        let flux = SymTensorField {
            t11: ws.product(&m.x1, &u.x1),
            t12: ws.product(&m.x1, &u.x2),
            t22: ws.product(&m.x2, &u.x2),
        };
        let adv = ws.div_tensor(&flux);

        let inv_eps = 1.0 / p.eps();
        // -(1/ε) m⊥ = (m2, -m1)/ε
        let coriolis = VectorField::new(m.x2.scale(inv_eps), m.x1.scale(-inv_eps));

        // ∇ρ^γ/γ = (γ-1)∇h(ρ) + ∇ρ
        let gamma = p.gamma();
        let h = ws.dealias(&rho.map(|r| h_of_deviation(r - 1.0, gamma)));
        let pot = h.zip_map(rho, |h, r| (gamma - 1.0) * h + r);
        let pressure = ws.grad(&pot).scale(-inv_eps * inv_eps);

        let kort = self.korteweg_unchecked(rho, KortewegForm::Conservative);
        let visc = self.viscous_unchecked(rho, &u);

        let mut d_mom = &(&coriolis - &adv) + &pressure;
        d_mom = &(&d_mom + &kort) + &visc;
        (d_rho, ws.dealias_vector(&d_mom))
    }

    fn propagator(&mut self, h: f64) -> &Propagator {
        let ws = self.ws;
        let params = self.params;
        self.propagators.entry(h.to_bits()).or_insert_with(|| {
            let (n, nh) = ws.spectrum_dim();
            let mut mats = Vec::with_capacity(n * nh);
            for p in 0..n {
                for q in 0..nh {
                    let (d1, d2) = ws.deriv_wavenumber(p, q);
                    mats.push(mode_matrix(d1, d2, &params).propagator(h));
                }
            }
            Propagator { mats }
        })
    }

    fn to_spectral(&self, s: &NskState) -> [Spectrum; 3] {
        [
            self.ws.forward(&s.rho),
            self.ws.forward(&s.mom.x1),
            self.ws.forward(&s.mom.x2),
        ]
    }

    fn state_from_spectral(&self, y: &[Spectrum; 3], t: f64) -> NskState {
        NskState {
            rho: self.ws.inverse(&y[0]),
            mom: VectorField::new(self.ws.inverse(&y[1]), self.ws.inverse(&y[2])),
            t,
        }
    }

    fn apply_propagator(&mut self, y: &mut [Spectrum; 3], h: f64) {
        let nh = self.ws.spectrum_dim().1;
        let prop = self.propagator(h);
        let [a, b, c] = y;
        let (a, b, c) = (a.coeffs_mut(), b.coeffs_mut(), c.coeffs_mut());
        for ((p, q), ra) in a.indexed_iter_mut() {
            let mat = &prop.mats[p * nh + q];
            let v = nalgebra::Vector3::new(*ra, b[[p, q]], c[[p, q]]);
            let w = mat * v;
            *ra = w[0];
            b[[p, q]] = w[1];
            c[[p, q]] = w[2];
        }
    }

    /// Spectral `rhs(y) - L y`.
    fn remainder(&self, state: &NskState, y: &[Spectrum; 3]) -> Result<[Spectrum; 3]> {
        let (d_rho, d_mom) = self.rhs(state)?;
        let ws = self.ws;
        let mut out = [ws.forward(&d_rho), ws.forward(&d_mom.x1), ws.forward(&d_mom.x2)];
        let [o0, o1, o2] = &mut out;
        let (o0, o1, o2) = (o0.coeffs_mut(), o1.coeffs_mut(), o2.coeffs_mut());
        let (y0, y1, y2) = (y[0].coeffs(), y[1].coeffs(), y[2].coeffs());
        for ((p, q), r0) in o0.indexed_iter_mut() {
            let (d1, d2) = ws.deriv_wavenumber(p, q);
            let l = mode_matrix(d1, d2, &self.params).0;
            let v = nalgebra::Vector3::new(y0[[p, q]], y1[[p, q]], y2[[p, q]]);
            let lv = l * v;
            *r0 -= lv[0];
            o1[[p, q]] -= lv[1];
            o2[[p, q]] -= lv[2];
        }
        Ok(out)
    }

    fn check_result(&self, s: &NskState) -> Result<()> {
        if !s.is_finite() {
            return Err(Error::BlowUp {
                t: s.t,
                reason: "non-finite state after step".into(),
            });
        }
        self.check_floor(&s.rho, s.t)
    }

    /// Advance one step of size `dt`.
    pub fn step(&mut self, state: &NskState, dt: f64, scheme: Scheme) -> Result<NskState> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Usage(format!("time step must be positive, got {dt}")));
        }
        let next = match scheme {
            Scheme::Imex => self.step_imex(state, dt)?,
            Scheme::Rk4 => self.step_rk4(state, dt)?,
        };
        self.check_result(&next)?;
        Ok(next)
    }

    fn step_imex(&mut self, state: &NskState, dt: f64) -> Result<NskState> {
        let half = 0.5 * dt;
        let t_mid = state.t + half;
        let mut y = self.to_spectral(state);
        self.apply_propagator(&mut y, half);

        let s0 = self.state_from_spectral(&y, t_mid);
        let k1 = self.remainder(&s0, &y)?;
        let mut y_mid = y.clone();
        for (a, k) in y_mid.iter_mut().zip(&k1) {
            a.add_scaled(half, k);
        }
        let s_mid = self.state_from_spectral(&y_mid, t_mid);
        let k2 = self.remainder(&s_mid, &y_mid)?;
        for (a, k) in y.iter_mut().zip(&k2) {
            a.add_scaled(dt, k);
        }

        self.apply_propagator(&mut y, half);
        Ok(self.state_from_spectral(&y, state.t + dt))
    }

    fn step_rk4(&self, s: &NskState, dt: f64) -> Result<NskState> {
        let stage = |base: &NskState, k: &(ScalarField, VectorField), c: f64| NskState {
            rho: &base.rho + &k.0.scale(c),
            mom: &base.mom + &k.1.scale(c),
            t: base.t + c,
        };
        let k1 = self.rhs(s)?;
        let k2 = self.rhs(&stage(s, &k1, 0.5 * dt))?;
        let k3 = self.rhs(&stage(s, &k2, 0.5 * dt))?;
        let k4 = self.rhs(&stage(s, &k3, dt))?;
        let w = dt / 6.0;
        let rho = s.rho.zip_map(&k1.0, |a, b| a + w * b);
        let rho = rho.zip_map(&k2.0, |a, b| a + 2.0 * w * b);
        let rho = rho.zip_map(&k3.0, |a, b| a + 2.0 * w * b);
        let rho = rho.zip_map(&k4.0, |a, b| a + w * b);
        let comb = |c: fn(&VectorField) -> &ScalarField| {
            let base = c(&s.mom);
            let v = base.zip_map(c(&k1.1), |a, b| a + w * b);
            let v = v.zip_map(c(&k2.1), |a, b| a + 2.0 * w * b);
            let v = v.zip_map(c(&k3.1), |a, b| a + 2.0 * w * b);
            v.zip_map(c(&k4.1), |a, b| a + w * b)
        };
        Ok(NskState {
            rho,
            mom: VectorField::new(comb(|v| &v.x1), comb(|v| &v.x2)),
            t: s.t + dt,
        })
    }

    /// Upper bound on `|Im λ|` of the mode matrices over the dealias band:
    /// `|k|(ε⁻² + 2κs²|k|²)^{1/2} + 1/ε` at the band corner.
    pub fn max_linear_frequency(&self) -> f64 {
        let p = &self.params;
        let k = std::f64::consts::SQRT_2 * self.ws.band() as f64;
        let stiff = 1.0 / (p.eps() * p.eps()) + 2.0 * p.kappa() * p.s() * p.s() * k * k;
        k * stiff.sqrt() + 1.0 / p.eps()
    }

    /// Step size proposed by `policy` for `state`.
    pub fn proposed_dt(&self, state: &NskState, policy: DtPolicy, scheme: Scheme) -> f64 {
        match policy {
            DtPolicy::Fixed(dt) => dt,
            DtPolicy::Adaptive(cfl) => {
                let dx = self.ws.dx();
                let u = state.velocity();
                let umax = u.x1.zip_map(&u.x2, |a, b| a.hypot(b)).max();
                let mut dt = cfl.c_adv * dx / (umax + 1.0);
                match scheme {
                    Scheme::Rk4 => {
                        let eps = self.params.eps();
                        dt = dt.min(cfl.c_wave * eps * dx);
                        dt = dt.min(cfl.c_disp * eps.powf(1.0 - self.params.alpha()) * dx * dx);
                    }
                    Scheme::Imex => dt = dt.min(cfl.c_osc / self.max_linear_frequency()),
                }
                dt
            }
        }
    }

    /// Step from `init.t` to `t_end`, calling `observer` after every accepted step.
    pub fn run(
        &mut self,
        init: NskState,
        t_end: f64,
        policy: DtPolicy,
        scheme: Scheme,
        mut observer: impl FnMut(&NskState) -> Result<()>,
    ) -> Result<NskState> {
        if let DtPolicy::Fixed(dt) = policy {
            if !(dt > 0.0) {
                return Err(Error::Usage(format!("time step must be positive, got {dt}")));
            }
        }
        let t0 = init.t;
        let mut state = init;
        let mut step = 0usize;
        let span = t_end - t0;
        while t_end - state.t > 1e-12 * span.abs().max(1.0) {
            let remaining = t_end - state.t;
            let mut dt = self.proposed_dt(&state, policy, scheme);
            if dt >= remaining * (1.0 - 1e-9) {
                dt = remaining;
            }
            let mut next = self
                .step(&state, dt, scheme)
                .map_err(|e| e.at_step(step + 1))?;
            step += 1;
            if let DtPolicy::Fixed(h) = policy {
                // keep the time grid free of accumulated rounding
                if dt == h {
                    next.t = t0 + step as f64 * h;
                } else {
                    next.t = t_end;
                }
            }
            observer(&next).map_err(|e| e.at_step(step))?;
            state = next;
        }
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::validate_params;
    use crate::spectral::DOMAIN_LENGTH;

    fn params(gamma: f64, s: f64, eps: f64) -> Params {
        validate_params(gamma, s, 0.5, eps).unwrap()
    }

    #[test]
    fn korteweg_vanishes_for_constant_density() {
        let ws = SpectralWorkspace::new(16).unwrap();
        let solver = NskSolver::new(&ws, params(2.0, 0.5, 0.2));
        let rho = ScalarField::constant(16, 1.3);
        for form in [KortewegForm::Primitive, KortewegForm::Conservative] {
            assert!(solver.korteweg_divergence(&rho, form).unwrap().max_abs() < 1e-13);
        }
    }

    #[test]
    fn korteweg_shallow_water_closed_form() {
        // σ = ρ: 2κρ∇Δρ with ρ = 1 + 0.1 cos x1 gives 2κ(1 + 0.1 cos x1)(0.1 sin x1, 0).
        let ws = SpectralWorkspace::new(32).unwrap();
        let p = params(2.0, 1.0, 0.2);
        let solver = NskSolver::new(&ws, p);
        let rho = ScalarField::from_fn(32, |x, _| 1.0 + 0.1 * x.cos());
        let k = 2.0 * p.kappa();
        let expect = ScalarField::from_fn(32, |x, _| k * (1.0 + 0.1 * x.cos()) * 0.1 * x.sin());
        for form in [KortewegForm::Primitive, KortewegForm::Conservative] {
            let got = solver.korteweg_divergence(&rho, form).unwrap();
            assert!((&got.x1 - &expect).max_abs() < 1e-12 * k, "{form:?}");
            assert!(got.x2.max_abs() < 1e-12);
        }
    }

    #[test]
    fn korteweg_rejects_vacuum() {
        let ws = SpectralWorkspace::new(16).unwrap();
        let solver = NskSolver::new(&ws, params(2.0, 0.5, 0.2)).with_rho_min(0.5);
        let rho = ScalarField::from_fn(16, |x, _| 1.0 + 0.6 * x.cos());
        assert!(matches!(
            solver.korteweg_divergence(&rho, KortewegForm::Primitive),
            Err(Error::Vacuum { .. })
        ));
    }

    #[test]
    fn viscous_cases() {
        let ws = SpectralWorkspace::new(16).unwrap();
        let solver = NskSolver::new(&ws, params(2.0, 0.5, 0.2));
        let rho = ScalarField::constant(16, 1.0);
        let c = VectorField::new(ScalarField::constant(16, 0.4), ScalarField::constant(16, -1.0));
        assert!(solver.viscous_divergence(&rho, &c).unwrap().max_abs() < 1e-13);

        let u = VectorField::new(ScalarField::from_fn(16, |_, y| y.sin()), ScalarField::zeros(16));
        let got = solver.viscous_divergence(&rho, &u).unwrap();
        let expect = ScalarField::from_fn(16, |_, y| -y.sin());
        assert!((&got.x1 - &expect).max_abs() < 1e-13);
        assert!(got.x2.max_abs() < 1e-13);

        let phi = ScalarField::from_fn(16, |x, y| (x + 2.0 * y).cos() + 0.3 * y.sin());
        let v = ws.perp_grad(&phi);
        let got = ws.div_perp(&solver.viscous_divergence(&rho, &v).unwrap());
        assert!((&got - &ws.bilaplacian(&phi)).max_abs() < 1e-11);
    }

    #[test]
    fn rhs_at_rest_and_uniform_flow() {
        let ws = SpectralWorkspace::new(16).unwrap();
        let p = params(2.0, 0.5, 0.2);
        let solver = NskSolver::new(&ws, p);
        let (dr, dm) = solver.rhs(&NskState::rest(16)).unwrap();
        assert!(dr.max_abs() < 1e-14 && dm.max_abs() < 1e-12);

        let mut s = NskState::rest(16);
        s.mom = VectorField::new(ScalarField::constant(16, 0.3), ScalarField::constant(16, -0.7));
        let (dr, dm) = solver.rhs(&s).unwrap();
        assert!(dr.max_abs() < 1e-14);
        // -(1/ε)(-c2, c1)
        assert!((dm.x1.max() - (-0.7 / 0.2)).abs() < 1e-12 && (dm.x1.min() - (-0.7 / 0.2)).abs() < 1e-12);
        assert!((dm.x2.max() - (-0.3 / 0.2)).abs() < 1e-12);
    }

    #[test]
    fn rhs_rejects_nonfinite() {
        let ws = SpectralWorkspace::new(8).unwrap();
        let solver = NskSolver::new(&ws, params(2.0, 0.5, 0.2));
        let mut s = NskState::rest(8);
        s.mom.x1.values_mut()[[0, 0]] = f64::NAN;
        assert!(matches!(solver.rhs(&s), Err(Error::BlowUp { .. })));
    }

    #[test]
    fn mode_matrix_at_zero_is_coriolis() {
        let p = params(2.0, 0.5, 0.2);
        let l = linearized_mode_matrix((0, 0), &p);
        let mut ev = l.eigenvalues().map(|z| z.im);
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ev[0] + 5.0).abs() < 1e-12 && ev[1].abs() < 1e-12 && (ev[2] - 5.0).abs() < 1e-12);
        for z in l.eigenvalues() {
            assert!(z.re.abs() < 1e-12);
        }
    }

    /// Viscous block `μ(1)(-|k|² m̂ - k(k·m̂))`, written out independently.
    fn viscous_block(k1: f64, k2: f64) -> Matrix3<Complex64> {
        let kk = k1 * k1 + k2 * k2;
        let c = |x: f64| Complex64::from(x);
        Matrix3::new(
            c(0.0), c(0.0), c(0.0),
            c(0.0), c(-kk - k1 * k1), c(-k1 * k2),
            c(0.0), c(-k1 * k2), c(-kk - k2 * k2),
        )
    }

    #[test]
    fn mode_matrix_inviscid_dispersion() {
        // Without viscosity: ω² = 1/ε² + 1/ε² + 2 s² κ |k|⁴ at k = (1, 0);
        // the Coriolis frequency adds to the acoustic-capillary one.
        let p = params(2.0, 0.5, 0.2);
        let l = ModeMatrix(linearized_mode_matrix((1, 0), &p).0 - viscous_block(1.0, 0.0));
        let expect = (2.0 / 0.04 + 2.0 * 0.25 * p.kappa()).sqrt();
        let mut im: Vec<f64> = l.eigenvalues().iter().map(|z| z.im.abs()).collect();
        im.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(im[0] < 1e-10);
        assert!((im[1] - expect).abs() < 1e-10 * expect);
        assert!((im[2] - expect).abs() < 1e-10 * expect);
        for z in l.eigenvalues() {
            assert!(z.re.abs() < 1e-10);
        }
    }

    #[test]
    fn viscous_block_decays_at_least_like_laplacian() {
        let p = params(2.0, 0.5, 0.2);
        for k in [(1i64, 0i64), (2, -3), (5, 5)] {
            let (k1, k2) = (k.0 as f64, k.1 as f64);
            let kk = k1 * k1 + k2 * k2;
            let full = linearized_mode_matrix(k, &p).0;
            // keep only the viscous entries: drop mass, pressure, capillary and Coriolis couplings
            let mut v = full;
            v[(0, 1)] = Complex64::from(0.0);
            v[(0, 2)] = Complex64::from(0.0);
            v[(1, 0)] = Complex64::from(0.0);
            v[(2, 0)] = Complex64::from(0.0);
            v[(1, 2)] = Complex64::from(-k1 * k2);
            v[(2, 1)] = Complex64::from(-k1 * k2);
            assert!((v - viscous_block(k1, k2)).norm() < 1e-12);
            for z in ModeMatrix(v).eigenvalues() {
                if z.norm() > 0.0 {
                    assert!(z.re <= -p.mu_at_one() * kk + 1e-9, "{k:?} {z}");
                }
            }
        }
    }

    #[test]
    fn steady_state_is_preserved() {
        let ws = SpectralWorkspace::new(16).unwrap();
        let mut solver = NskSolver::new(&ws, params(2.0, 0.5, 0.2));
        for scheme in [Scheme::Imex, Scheme::Rk4] {
            let s = solver.step(&NskState::rest(16), 0.05, scheme).unwrap();
            assert!((&s.rho - &ScalarField::constant(16, 1.0)).max_abs() < 1e-14);
            assert!(s.mom.max_abs() < 1e-13);
        }
    }

    #[test]
    fn uniform_momentum_rotates_exactly_under_imex() {
        let ws = SpectralWorkspace::new(16).unwrap();
        let eps = 0.2;
        let mut solver = NskSolver::new(&ws, params(2.0, 0.5, eps));
        let mut s = NskState::rest(16);
        let (c1, c2) = (0.3, -0.7);
        s.mom = VectorField::new(ScalarField::constant(16, c1), ScalarField::constant(16, c2));
        let t_end = 0.37;
        let out = solver.run(s, t_end, DtPolicy::Fixed(0.1), Scheme::Imex, |_| Ok(())).unwrap();
        assert!((out.t - t_end).abs() < 1e-15);
        // dm/dt = (m2, -m1)/ε: clockwise rotation by t/ε
        let a = -t_end / eps;
        let (e1, e2) = (c1 * a.cos() - c2 * a.sin(), c1 * a.sin() + c2 * a.cos());
        assert!((out.mom.x1.values()[[3, 5]] - e1).abs() < 1e-12);
        assert!((out.mom.x2.values()[[7, 1]] - e2).abs() < 1e-12);
    }

    #[test]
    fn run_with_zero_horizon_returns_input() {
        let ws = SpectralWorkspace::new(8).unwrap();
        let mut solver = NskSolver::new(&ws, params(2.0, 0.5, 0.2));
        let mut s = NskState::rest(8);
        s.rho = ScalarField::from_fn(8, |x, _| 1.0 + 0.01 * x.sin());
        let mut calls = 0;
        let out = solver
            .run(s.clone(), 0.0, DtPolicy::Fixed(0.01), Scheme::Imex, |_| {
                calls += 1;
                Ok(())
            })
            .unwrap();
        assert_eq!(out, s);
        assert_eq!(calls, 0);
    }

    #[test]
    fn step_rejects_bad_dt() {
        let ws = SpectralWorkspace::new(8).unwrap();
        let mut solver = NskSolver::new(&ws, params(2.0, 0.5, 0.2));
        assert!(matches!(
            solver.step(&NskState::rest(8), 0.0, Scheme::Imex),
            Err(Error::Usage(_))
        ));
        assert!(solver.step(&NskState::rest(8), -1.0, Scheme::Rk4).is_err());
    }

    #[test]
    fn adaptive_dt_respects_stiff_bounds() {
        let ws = SpectralWorkspace::new(32).unwrap();
        let p = params(2.0, 0.5, 0.1);
        let solver = NskSolver::new(&ws, p);
        let s = NskState::rest(32);
        let cfl = Cfl::default();
        let dx = DOMAIN_LENGTH / 32.0;
        let imex = solver.proposed_dt(&s, DtPolicy::Adaptive(cfl), Scheme::Imex);
        // corner mode |k|² = 200, κ = 10: ω = √200·√(100 + 2·10·¼·200) + 10
        let omega = 200f64.sqrt() * 1100f64.sqrt() + 10.0;
        assert!((imex - (0.4 * dx).min(1.0 / omega)).abs() < 1e-15);
        let mut loose = cfl;
        loose.c_osc = 1e6;
        let adv = solver.proposed_dt(&s, DtPolicy::Adaptive(loose), Scheme::Imex);
        assert!((adv - 0.4 * dx).abs() < 1e-15);
        let rk4 = solver.proposed_dt(&s, DtPolicy::Adaptive(cfl), Scheme::Rk4);
        assert!(rk4 <= 0.5 * 0.1 * dx && rk4 <= 0.3 * 0.1f64.powf(0.5) * dx * dx + 1e-18);
    }
}
