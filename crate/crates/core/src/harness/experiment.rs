//! Single runs, co-stepped limit runs and ε-sweeps.

use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind, Mode};
use super::snapshot::{write_snapshot, Snapshot};
use crate::diagnostics::{
    compute_row, energy_nsk, energy_qg, fit_rate, format_csv_line, viscous_mismatch_rate, wellprep_check,
    DiagnosticsRow, RateFit, WellPrep,
};
use crate::error::{Error, Result};
use crate::nsk::{DtPolicy, NskSolver, NskState};
use crate::qg::{QgSolver, QgState};
use crate::spectral::{ScalarField, SpectralWorkspace};

/// `φ⁰ = Σ a cos(k·x + phase)`.
pub fn initial_stream(modes: &[Mode], n: usize) -> ScalarField {
    ScalarField::from_fn(n, |x1, x2| {
        modes
            .iter()
            .map(|m| m.amplitude() * (m.0 as f64 * x1 + m.1 as f64 * x2 + m.phase()).cos())
            .sum()
    })
}

/// Well-prepared data `ρ⁰ = 1 + εφ⁰`, `m⁰ = ρ⁰∇⊥φ⁰`, and the matching QG state.
pub fn generate_initial(cfg: &ExperimentConfig, ws: &SpectralWorkspace) -> Result<(NskState, QgState)> {
    let params = cfg.params()?;
    let phi = initial_stream(&cfg.phi0_modes, ws.n());
    let rho = phi.map(|f| 1.0 + params.eps() * f);
    let min_rho = rho.min();
    if !(min_rho > cfg.rho_min) {
        return Err(Error::Vacuum {
            t: 0.0,
            min_rho,
            floor: cfg.rho_min,
        });
    }
    let mom = ws.perp_grad(&phi).mul_scalar_field(&rho);
    Ok((NskState { rho, mom, t: 0.0 }, QgState::new(phi)))
}

/// How a run ended.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Completed,
    Aborted { last_good_t: f64, reason: String },
}

impl Outcome {
    pub fn completed(&self) -> bool {
        matches!(self, Outcome::Completed)
    }

    fn csv_trailer(&self) -> String {
        match self {
            Outcome::Completed => String::new(),
            Outcome::Aborted { last_good_t, reason } => {
                format!("# aborted; last good t = {last_good_t:.16e}; {reason}\n")
            }
        }
    }
}

/// Result of a co-stepped NSK/QG run.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitRun {
    pub eps: f64,
    pub rows: Vec<DiagnosticsRow>,
    pub wellprep: WellPrep,
    pub outcome: Outcome,
    pub snapshots_written: usize,
}

impl LimitRun {
    pub fn to_csv(&self) -> String {
        let mut s = DiagnosticsRow::csv_header();
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.to_csv());
            s.push('\n');
        }
        s.push_str(&self.outcome.csv_trailer());
        s
    }

    pub fn final_row(&self) -> Option<&DiagnosticsRow> {
        self.rows.last()
    }

    pub fn sup_h(&self) -> f64 {
        self.rows.iter().map(|r| r.h_eps).fold(0.0, f64::max)
    }
}

/// A table of a single-solver run.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyRun {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
    pub outcome: Outcome,
}

impl EnergyRun {
    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format_csv_line(r));
            s.push('\n');
        }
        s.push_str(&self.outcome.csv_trailer());
        s
    }
}

fn is_done(t: f64, t_end: f64) -> bool {
    t_end - t <= 1e-12 * t_end.abs().max(1.0)
}

/// Step size for step number `step` (1-based) and the time reached.
fn next_dt(policy: DtPolicy, proposed: f64, t: f64, t_end: f64, step: usize) -> (f64, f64) {
    let remaining = t_end - t;
    if proposed >= remaining * (1.0 - 1e-9) {
        return (remaining, t_end);
    }
    match policy {
        DtPolicy::Fixed(h) => (proposed, step as f64 * h),
        DtPolicy::Adaptive(_) => (proposed, t + proposed),
    }
}

fn qg_proposed_dt(qg: &QgState, policy: DtPolicy, ws: &SpectralWorkspace) -> f64 {
    match policy {
        DtPolicy::Fixed(h) => h,
        DtPolicy::Adaptive(cfl) => {
            let v = ws.perp_grad(&qg.phi);
            let vmax = v.x1.zip_map(&v.x2, |a, b| a.hypot(b)).max();
            cfl.c_adv * ws.dx() / (vmax + 1.0)
        }
    }
}

fn limit_snapshot(nsk: &NskState, qg: &QgState) -> Snapshot {
    Snapshot {
        fields: vec![
            ("rho".into(), nsk.rho.clone()),
            ("m1".into(), nsk.mom.x1.clone()),
            ("m2".into(), nsk.mom.x2.clone()),
            ("phi".into(), qg.phi.clone()),
        ],
    }
}

fn save_snapshot(dir: &Path, step: usize, snap: &Snapshot) -> Result<()> {
    let file = fs::File::create(dir.join(format!("snap_{step:06}.bin")))?;
    write_snapshot(BufWriter::new(file), snap)
}

/// Co-step NSK and QG on one time grid, recording a [`DiagnosticsRow`] per step.
///
/// Snapshots go to `snapshot_dir` every `snapshot_every` steps when both are set.
/// A failure after the initial state ends the run early and is reported in
/// [`LimitRun::outcome`].
pub fn simulate_limit(cfg: &ExperimentConfig, ws: &SpectralWorkspace, snapshot_dir: Option<&Path>) -> Result<LimitRun> {
    let params = cfg.params()?;
    let (mut nsk, mut qg) = generate_initial(cfg, ws)?;
    let wellprep = wellprep_check(&nsk.rho, &nsk.velocity(), &qg.phi, &params, ws)?;
    let mut nsk_solver = NskSolver::new(ws, params).with_rho_min(cfg.rho_min);
    let qg_solver = QgSolver::new(ws, &params);
    let policy = cfg.dt_policy();
    let snap_every = if snapshot_dir.is_some() { cfg.snapshot_every } else { 0 };

    let mut rate = viscous_mismatch_rate(&nsk, &qg, &params, ws)?;
    let mut visc = 0.0;
    let mut rows = vec![compute_row(&nsk, &qg, visc, 0.0, &params, ws)?];
    let mut snapshots_written = 0;
    if let (Some(dir), true) = (snapshot_dir, snap_every > 0) {
        save_snapshot(dir, 0, &limit_snapshot(&nsk, &qg))?;
        snapshots_written += 1;
    }

    let mut step = 0usize;
    let mut outcome = Outcome::Completed;
    while !is_done(nsk.t, cfg.t_end) {
        let proposed = nsk_solver
            .proposed_dt(&nsk, policy, cfg.scheme)
            .min(qg_proposed_dt(&qg, policy, ws));
        let (dt, t_next) = next_dt(policy, proposed, nsk.t, cfg.t_end, step + 1);
        let advanced = (|| -> Result<(NskState, QgState, f64, DiagnosticsRow)> {
            let mut n2 = nsk_solver.step(&nsk, dt, cfg.scheme)?;
            let mut q2 = qg_solver.step(&qg, dt)?;
            n2.t = t_next;
            q2.t = t_next;
            let r2 = viscous_mismatch_rate(&n2, &q2, &params, ws)?;
            let v2 = visc + 0.5 * dt * (rate + r2);
            let row = compute_row(&n2, &q2, v2, 0.0, &params, ws)?;
            if !row.values().iter().all(|v| v.is_finite()) {
                return Err(Error::BlowUp {
                    t: t_next,
                    reason: "non-finite diagnostics".into(),
                });
            }
            Ok((n2, q2, r2, row))
        })();
        match advanced {
            Ok((n2, q2, r2, row)) => {
                step += 1;
                nsk = n2;
                qg = q2;
                visc = row.visc_accum;
                rate = r2;
                rows.push(row);
            }
            Err(e) => {
                outcome = Outcome::Aborted {
                    last_good_t: nsk.t,
                    reason: e.at_step(step + 1).to_string(),
                };
                break;
            }
        }
        if let (Some(dir), true) = (snapshot_dir, snap_every > 0 && step.is_multiple_of(snap_every)) {
            save_snapshot(dir, step, &limit_snapshot(&nsk, &qg))?;
            snapshots_written += 1;
        }
    }
    Ok(LimitRun {
        eps: params.eps(),
        rows,
        wellprep,
        outcome,
        snapshots_written,
    })
}

/// [`simulate_limit`] writing `limit.csv` and snapshots under `output_dir`.
pub fn run_limit_experiment(cfg: &ExperimentConfig, ws: &SpectralWorkspace) -> Result<LimitRun> {
    fs::create_dir_all(&cfg.output_dir)?;
    let run = simulate_limit(cfg, ws, Some(&cfg.output_dir))?;
    fs::write(cfg.output_dir.join("limit.csv"), run.to_csv())?;
    Ok(run)
}

/// NSK alone, tracking `E_ε + ∫D_ε` against its initial value.
pub fn simulate_nsk(cfg: &ExperimentConfig, ws: &SpectralWorkspace) -> Result<EnergyRun> {
    let params = cfg.params()?;
    let (init, _) = generate_initial(cfg, ws)?;
    let mut solver = NskSolver::new(ws, params).with_rho_min(cfg.rho_min);
    let (e0, d0) = energy_nsk(&init, &params, ws)?;
    let row = |s: &NskState, e: f64, d: f64, acc: f64| {
        let resid = if e0 > 0.0 { (e + acc - e0) / e0 } else { e + acc - e0 };
        vec![s.t, s.mass(), e, d, acc, resid]
    };
    let mut rows = vec![row(&init, e0, d0, 0.0)];
    let (mut prev_t, mut prev_d, mut acc) = (0.0, d0, 0.0);
    let result = solver.run(init, cfg.t_end, cfg.dt_policy(), cfg.scheme, |s| {
        let (e, d) = energy_nsk(s, &params, ws)?;
        acc += 0.5 * (s.t - prev_t) * (d + prev_d);
        prev_t = s.t;
        prev_d = d;
        rows.push(row(s, e, d, acc));
        Ok(())
    });
    Ok(EnergyRun {
        columns: vec!["t", "mass", "E_eps", "D_eps", "D_eps_accum", "energy_residual"],
        outcome: outcome_of(result.map(|_| ()), prev_t),
        rows,
    })
}

/// QG alone, tracking `E₀ + ∫D₀` against its initial value.
pub fn simulate_qg(cfg: &ExperimentConfig, ws: &SpectralWorkspace) -> Result<EnergyRun> {
    let params = cfg.params()?;
    let (_, mut qg) = generate_initial(cfg, ws)?;
    let solver = QgSolver::new(ws, &params);
    let policy = cfg.dt_policy();
    let (e0, d0) = energy_qg(&qg, &params, ws);
    let row = |s: &QgState, e: f64, d: f64, acc: f64| {
        let resid = if e0 > 0.0 { (e + acc - e0) / e0 } else { e + acc - e0 };
        vec![s.t, e, d, acc, resid]
    };
    let mut rows = vec![row(&qg, e0, d0, 0.0)];
    let (mut prev_d, mut acc) = (d0, 0.0);
    let mut step = 0;
    let mut result = Ok(());
    while !is_done(qg.t, cfg.t_end) {
        let (dt, t_next) = next_dt(policy, qg_proposed_dt(&qg, policy, ws), qg.t, cfg.t_end, step + 1);
        match solver.step(&qg, dt) {
            Ok(mut next) => {
                step += 1;
                next.t = t_next;
                let (e, d) = energy_qg(&next, &params, ws);
                acc += 0.5 * dt * (d + prev_d);
                prev_d = d;
                rows.push(row(&next, e, d, acc));
                qg = next;
            }
            Err(e) => {
                result = Err(e.at_step(step + 1));
                break;
            }
        }
    }
    Ok(EnergyRun {
        columns: vec!["t", "E_0", "D_0", "D_0_accum", "energy_residual"],
        outcome: outcome_of(result, qg.t),
        rows,
    })
}

fn outcome_of(result: Result<()>, last_good_t: f64) -> Outcome {
    match result {
        Ok(()) => Outcome::Completed,
        Err(e) => Outcome::Aborted {
            last_good_t,
            reason: e.to_string(),
        },
    }
}

/// One ε of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepEntry {
    pub eps: f64,
    pub run: std::result::Result<LimitRun, String>,
}

impl SweepEntry {
    /// The run if it reached `T`.
    pub fn completed(&self) -> Option<&LimitRun> {
        self.run.as_ref().ok().filter(|r| r.outcome.completed())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
    /// `‖ρ-1‖_{L^γ}(T)` against ε.
    pub fit_rho: RateFit,
    /// `‖ρu - ∇⊥φ‖_{L^{2γ/(γ+1)}}(T)` against ε.
    pub fit_mom: RateFit,
    /// `sup_t H_ε` against ε.
    pub fit_h: RateFit,
    /// Initial `ε^{α-1}‖∇√ρ⁰‖₂` against ε.
    pub fit_d4: RateFit,
    pub config_hash: u64,
    pub wall_time_s: f64,
}

/// FNV-1a of the defaulted config document.
pub fn config_hash(cfg: &ExperimentConfig) -> u64 {
    cfg.to_toml().bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Independent limit runs over `eps_list`, concurrently when `parallel`.
pub fn simulate_sweep(cfg: &ExperimentConfig, ws: &SpectralWorkspace, parallel: bool) -> Result<SweepResult> {
    cfg.validate()?;
    let list = cfg
        .eps_list
        .clone()
        .ok_or_else(|| Error::config("eps_list", "required for a sweep"))?;
    let start = Instant::now();
    let one = |eps: f64| {
        let mut c = cfg.clone();
        c.experiment = ExperimentKind::Limit;
        c.eps = eps;
        SweepEntry {
            eps,
            run: simulate_limit(&c, ws, None).map_err(|e| e.to_string()),
        }
    };
    let entries: Vec<SweepEntry> = if parallel {
        list.par_iter().map(|&e| one(e)).collect()
    } else {
        list.iter().map(|&e| one(e)).collect()
    };
    let done: Vec<(f64, &LimitRun)> = entries.iter().filter_map(|e| e.completed().map(|r| (e.eps, r))).collect();
    if done.len() < 3 {
        return Err(Error::Sweep(format!(
            "only {} of {} runs completed; need 3 to fit rates",
            done.len(),
            entries.len()
        )));
    }
    let fit = |f: &dyn Fn(&LimitRun) -> f64| {
        let pts: Vec<(f64, f64)> = done.iter().map(|(e, r)| (*e, f(r))).collect();
        fit_rate(&pts, 3)
    };
    let fit_rho = fit(&|r| r.final_row().unwrap().norm_rho_gamma)?;
    let fit_mom = fit(&|r| r.final_row().unwrap().norm_mom)?;
    let fit_h = fit(&|r| r.sup_h())?;
    let fit_d4 = fit(&|r| r.wellprep.d4)?;
    Ok(SweepResult {
        entries,
        fit_rho,
        fit_mom,
        fit_h,
        fit_d4,
        config_hash: config_hash(cfg),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

impl SweepResult {
    /// One line per ε: status, final diagnostics, `sup_t H_ε` and the
    /// well-preparedness discrepancies.
    pub fn summary_csv(&self) -> String {
        let mut s = String::from("eps,status,");
        s.push_str(&DiagnosticsRow::csv_header());
        s.push_str(",sup_H_eps,d1,d2,d3,d4\n");
        for e in &self.entries {
            match &e.run {
                Ok(run) => {
                    let status = if run.outcome.completed() { "ok" } else { "aborted" };
                    let mut vals = run.final_row().map(|r| r.values().to_vec()).unwrap_or_default();
                    let w = run.wellprep;
                    vals.extend([run.sup_h(), w.d1, w.d2, w.d3, w.d4]);
                    s.push_str(&format!("{},{status},{}\n", format_csv_line(&[e.eps]), format_csv_line(&vals)));
                }
                Err(_) => s.push_str(&format!("{},failed\n", format_csv_line(&[e.eps]))),
            }
        }
        s
    }

    pub fn fits_csv(&self) -> String {
        let mut s = String::from("quantity,slope,intercept,max_residual\n");
        for (name, f) in [
            ("norm_rho_gamma", self.fit_rho),
            ("norm_mom", self.fit_mom),
            ("sup_H_eps", self.fit_h),
            ("d4", self.fit_d4),
        ] {
            s.push_str(&format!("{name},{}\n", format_csv_line(&[f.slope, f.intercept, f.max_residual])));
        }
        s
    }
}

/// [`simulate_sweep`] in parallel, writing per-ε CSVs and the summaries under `output_dir`.
pub fn run_sweep(cfg: &ExperimentConfig, ws: &SpectralWorkspace) -> Result<SweepResult> {
    let result = simulate_sweep(cfg, ws, true)?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    for e in &result.entries {
        if let Ok(run) = &e.run {
            fs::write(dir.join(format!("limit_eps_{}.csv", e.eps)), run.to_csv())?;
        }
    }
    fs::write(dir.join("sweep_summary.csv"), result.summary_csv())?;
    fs::write(dir.join("sweep_fits.csv"), result.fits_csv())?;
    fs::write(
        dir.join("sweep_meta.txt"),
        format!(
            "config_hash = {:016x}\nwall_time_s = {:.3}\n",
            result.config_hash, result.wall_time_s
        ),
    )?;
    Ok(result)
}

/// What [`run_experiment`] produced.
#[derive(Debug)]
pub enum RunReport {
    Nsk(EnergyRun),
    Qg(EnergyRun),
    Limit(LimitRun),
    Sweep(SweepResult),
}

/// Dispatch on `cfg.experiment`, writing results under `output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let ws = SpectralWorkspace::new(cfg.n)?;
    match cfg.experiment {
        ExperimentKind::Nsk => {
            let run = simulate_nsk(cfg, &ws)?;
            fs::create_dir_all(&cfg.output_dir)?;
            fs::write(cfg.output_dir.join("nsk.csv"), run.to_csv())?;
            Ok(RunReport::Nsk(run))
        }
        ExperimentKind::Qg => {
            let run = simulate_qg(cfg, &ws)?;
            fs::create_dir_all(&cfg.output_dir)?;
            fs::write(cfg.output_dir.join("qg.csv"), run.to_csv())?;
            Ok(RunReport::Qg(run))
        }
        ExperimentKind::Limit => Ok(RunReport::Limit(run_limit_experiment(cfg, &ws)?)),
        ExperimentKind::Sweep => Ok(RunReport::Sweep(run_sweep(cfg, &ws)?)),
    }
}
