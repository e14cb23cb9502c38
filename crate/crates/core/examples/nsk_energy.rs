//! Well-prepared NSK run with the energy balance E(t) + ∫D = E(0) and mass
//! conservation tracked along the way.

use nskqg::diagnostics::energy_nsk;
use nskqg::nsk::DtPolicy;
use nskqg::{validate_params, NskSolver, NskState, ScalarField, Scheme, SpectralWorkspace};

pub fn main() {
    let n = 32;
    let ws = SpectralWorkspace::new(n).unwrap();
    let params = validate_params(2.0, 0.5, 0.5, 0.2).unwrap();
    let phi = ScalarField::from_fn(n, |x, y| x.cos() + 0.5 * (x + y + 0.3).cos());
    let rho = phi.map(|f| 1.0 + params.eps() * f);
    let init = NskState {
        mom: ws.perp_grad(&phi).mul_scalar_field(&rho),
        rho,
        t: 0.0,
    };

    let (e0, d0) = energy_nsk(&init, &params, &ws).unwrap();
    let m0 = init.mass();
    let (mut prev_t, mut prev_d, mut dissipated) = (0.0, d0, 0.0);
    let mut solver = NskSolver::new(&ws, params);
    let mut step = 0;
    let last = solver
        .run(init, 0.1, DtPolicy::Fixed(1e-3), Scheme::Imex, |s| {
            let (e, d) = energy_nsk(s, &params, &ws)?;
            dissipated += 0.5 * (s.t - prev_t) * (d + prev_d);
            prev_t = s.t;
            prev_d = d;
            step += 1;
            if step % 25 == 0 {
                println!(
                    "t={:.3} E={e:.8} E+∫D-E0={:+.2e} mass drift={:.1e}",
                    s.t,
                    e + dissipated - e0,
                    (s.mass() - m0) / m0
                );
            }
            Ok(())
        })
        .unwrap();
    println!("min rho at t={}: {:.6}", last.t, last.rho.min());
}
