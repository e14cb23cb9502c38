//! Spectral operators on the periodic square: derivatives of a smooth field,
//! the stream-function identities and 2/3 dealiasing.

use nskqg::SpectralWorkspace;
use nskqg::ScalarField;

pub fn main() {
    let n = 64;
    let ws = SpectralWorkspace::new(n).expect("valid grid");
    let phi = ScalarField::from_fn(n, |x, y| x.cos() * (2.0 * y).sin() + 0.3 * (3.0 * x - y).cos());

    let v = ws.perp_grad(&phi);
    let lap = ws.laplacian(&phi);
    println!("div of perp-grad:       {:.2e}", ws.div(&v).max_abs());

    // 2 div⊥ div D(∇⊥φ) = Δ²φ
    let lhs = ws.div_perp(&ws.div_tensor(&ws.sym_gradient(&v))).scale(2.0);
    let bil = ws.bilaplacian(&phi);
    println!("2 div⊥div D - Δ²φ:      {:.2e}", (&lhs - &bil).max_abs());

    // ∫(Δφ)² = 2∫|D(∇⊥φ)|²
    let a = (&lap * &lap).integral();
    let b = 2.0 * ws.sym_gradient(&v).frobenius_sq().integral();
    println!("∫(Δφ)² vs 2∫|D|²:       {a:.12} {b:.12}");

    // transport of Δφ by ∇⊥φ has zero mean against φ
    let transport = ws.advect(&v, &lap);
    println!("∫(∇⊥φ·∇)Δφ φ:           {:.2e}", (&transport * &phi).integral());

    let high = ScalarField::from_fn(n, |x, _| (30.0 * x).cos());
    println!(
        "mode 30 out of band:    {:.1} -> {:.1}",
        ws.out_of_band_fraction(&high),
        ws.dealias(&high).max_abs()
    );
    println!("L^3 norm of φ:          {:.6}", ws.lp_norm(&phi, 3.0).unwrap());
}
