//! ε-sweep: independent limit runs in parallel, with log-log rates fitted
//! for the density deviation, the momentum error and sup_t H_ε.

use nskqg::harness::{simulate_sweep, ExperimentConfig, ExperimentKind};
use nskqg::SpectralWorkspace;

pub fn main() {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Sweep);
    cfg.n = 32;
    cfg.t_end = 0.1;
    cfg.eps_list = Some(vec![0.4, 0.28, 0.2, 0.14]);
    let ws = SpectralWorkspace::new(cfg.n).unwrap();
    let result = simulate_sweep(&cfg, &ws, true).unwrap();
    for e in &result.entries {
        let run = e.completed().expect("run completed");
        let f = run.final_row().unwrap();
        println!(
            "eps={:<5} ||rho-1||={:.4e} mom={:.4e} supH={:.4e}",
            e.eps,
            f.norm_rho_gamma,
            f.norm_mom,
            run.sup_h()
        );
    }
    print!("{}", result.fits_csv());
}
