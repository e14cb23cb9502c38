//! Pressure, internal energy, the change of variable G_ε and the
//! density-dependent coefficients.

use nskqg::constitutive::{coefficient, g_eps, internal_energy, pressure, Coefficient};
use nskqg::validate_params;

pub fn main() {
    for (gamma, s) in [(2.0, 0.5), (2.0, 1.0), (1.5, 1.0)] {
        match validate_params(gamma, s, 0.5, 0.1) {
            Ok(p) => println!("gamma={gamma} s={s}: m={} kappa={:.3}", p.m(), p.kappa()),
            Err(e) => println!("gamma={gamma} s={s}: {e}"),
        }
    }

    let p = validate_params(3.0, 0.5, 0.5, 0.1).unwrap();
    println!("p(2) = {:.6}", pressure(2.0, &p).unwrap());
    println!("h(2) = {:.6}", internal_energy(2.0, &p).unwrap());
    for phi in [-5.0, -1.0, 0.0, 1.0, 5.0] {
        let g = g_eps(phi, &p).unwrap();
        let h = internal_energy(1.0 + p.eps() * phi, &p).unwrap() / (p.eps() * p.eps());
        println!("G({phi:>4}) = {g:>9.6}   ½G² - h/ε² = {:.1e}", 0.5 * g * g - h);
    }
    println!("vacuum: {}", g_eps(-20.0, &p).unwrap_err());

    let q = validate_params(2.0, 0.5, 0.5, 0.1).unwrap();
    for which in [Coefficient::Sigma, Coefficient::Mu, Coefficient::S, Coefficient::SigmaPrime] {
        println!("{which:?}(4) = {}", coefficient(4.0, which, &q).unwrap());
    }
}
