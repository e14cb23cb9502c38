//! One co-stepped NSK/QG run at fixed ε: the per-step diagnostics CSV and
//! binary snapshots land in a temporary directory.

use nskqg::harness::{read_snapshot, run_limit_experiment, ExperimentConfig, ExperimentKind};
use nskqg::SpectralWorkspace;

pub fn main() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(ExperimentKind::Limit);
    cfg.n = 32;
    cfg.eps = 0.1;
    cfg.t_end = 0.1;
    cfg.snapshot_every = 20;
    cfg.output_dir = dir.path().to_path_buf();

    let ws = SpectralWorkspace::new(cfg.n).unwrap();
    let run = run_limit_experiment(&cfg, &ws).unwrap();
    let first = run.rows.first().unwrap();
    let last = run.final_row().unwrap();
    println!("{} steps, outcome {:?}", run.rows.len() - 1, run.outcome);
    println!("H_eps: {:.6} -> {:.6}", first.h_eps, last.h_eps);
    println!("||rho-1||_gamma: {:.6} -> {:.6}", first.norm_rho_gamma, last.norm_rho_gamma);
    println!("well-prepared: {:?}", run.wellprep);

    let csv = std::fs::read_to_string(dir.path().join("limit.csv")).unwrap();
    println!("{}", csv.lines().next().unwrap());
    let mut snaps: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "bin"))
        .collect();
    snaps.sort();
    let latest = snaps.last().expect("at least one snapshot");
    let snap = read_snapshot(std::fs::File::open(latest).unwrap()).unwrap();
    let names: Vec<&str> = snap.fields.iter().map(|(n, _)| n.as_str()).collect();
    println!("snapshot fields {names:?}, {} snapshots", run.snapshots_written);
}
