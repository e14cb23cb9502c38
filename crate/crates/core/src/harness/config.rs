//! Experiment configuration, read from TOML.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::constitutive::{validate_params, Params};
use crate::error::{Error, Result};
use crate::nsk::{Cfl, DtPolicy, Scheme, DEFAULT_RHO_MIN};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Nsk,
    Qg,
    Limit,
    Sweep,
}

/// One term `amplitude · cos(k1 x1 + k2 x2 + phase)` of the initial stream function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode(pub i64, pub i64, pub f64, pub f64);

impl Mode {
    pub fn k(&self) -> (i64, i64) {
        (self.0, self.1)
    }

    pub fn amplitude(&self) -> f64 {
        self.2
    }

    pub fn phase(&self) -> f64 {
        self.3
    }
}

pub fn default_modes() -> Vec<Mode> {
    vec![Mode(1, 0, 1.0, 0.0), Mode(1, 1, 0.5, 0.3)]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(rename = "N", default = "defaults::n")]
    pub n: usize,
    #[serde(default = "defaults::gamma")]
    pub gamma: f64,
    #[serde(default = "defaults::s")]
    pub s: f64,
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    #[serde(default = "defaults::eps")]
    pub eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_list: Option<Vec<f64>>,
    #[serde(rename = "T", default = "defaults::t_end")]
    pub t_end: f64,
    /// Fixed step; adaptive CFL stepping when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "defaults::c_adv")]
    pub c_adv: f64,
    #[serde(default = "defaults::c_wave")]
    pub c_wave: f64,
    #[serde(default = "defaults::c_disp")]
    pub c_disp: f64,
    #[serde(default = "defaults::c_osc")]
    pub c_osc: f64,
    #[serde(default = "defaults::scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_modes")]
    pub phi0_modes: Vec<Mode>,
    #[serde(default = "defaults::rho_min")]
    pub rho_min: f64,
    #[serde(default = "defaults::output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default)]
    pub seed: u64,
}

mod defaults {
    use super::*;

    pub fn n() -> usize {
        64
    }
    pub fn gamma() -> f64 {
        2.0
    }
    pub fn s() -> f64 {
        0.5
    }
    pub fn alpha() -> f64 {
        0.5
    }
    pub fn eps() -> f64 {
        0.2
    }
    pub fn t_end() -> f64 {
        0.5
    }
    pub fn c_adv() -> f64 {
        Cfl::default().c_adv
    }
    pub fn c_wave() -> f64 {
        Cfl::default().c_wave
    }
    pub fn c_disp() -> f64 {
        Cfl::default().c_disp
    }
    pub fn c_osc() -> f64 {
        Cfl::default().c_osc
    }
    pub fn scheme() -> Scheme {
        Scheme::Imex
    }
    pub fn rho_min() -> f64 {
        DEFAULT_RHO_MIN
    }
    pub fn output_dir() -> PathBuf {
        PathBuf::from("output")
    }
}

/// Parse and validate a TOML document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(toml_error)?;
    cfg.validate()?;
    Ok(cfg)
}

fn toml_error(e: toml::de::Error) -> Error {
    let msg = e.message().to_string();
    let key = msg
        .strip_prefix("unknown field `")
        .and_then(|r| r.split('`').next())
        .map(str::to_string)
        .unwrap_or_else(|| "<document>".into());
    Error::config(key, msg)
}

impl ExperimentConfig {
    /// A config with every default and the given experiment kind.
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            n: defaults::n(),
            gamma: defaults::gamma(),
            s: defaults::s(),
            alpha: defaults::alpha(),
            eps: defaults::eps(),
            eps_list: None,
            t_end: defaults::t_end(),
            dt: None,
            c_adv: defaults::c_adv(),
            c_wave: defaults::c_wave(),
            c_disp: defaults::c_disp(),
            c_osc: defaults::c_osc(),
            scheme: defaults::scheme(),
            phi0_modes: default_modes(),
            rho_min: defaults::rho_min(),
            output_dir: defaults::output_dir(),
            snapshot_every: 0,
            seed: 0,
        }
    }

    pub fn params(&self) -> Result<Params> {
        validate_params(self.gamma, self.s, self.alpha, self.eps)
    }

    pub fn dt_policy(&self) -> DtPolicy {
        match self.dt {
            Some(dt) => DtPolicy::Fixed(dt),
            None => DtPolicy::Adaptive(Cfl {
                c_adv: self.c_adv,
                c_wave: self.c_wave,
                c_disp: self.c_disp,
                c_osc: self.c_osc,
            }),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 8 || !self.n.is_multiple_of(2) {
            return Err(Error::config("N", format!("must be even and >= 8, got {}", self.n)));
        }
        let eps_values: Vec<f64> = match (self.experiment, &self.eps_list) {
            (ExperimentKind::Sweep, Some(list)) => {
                check_eps_list(list)?;
                list.clone()
            }
            (ExperimentKind::Sweep, None) => {
                return Err(Error::config("eps_list", "required for a sweep"));
            }
            _ => vec![self.eps],
        };
        for (i, &eps) in eps_values.iter().enumerate() {
            if let Err(Error::InvalidParams(v)) = validate_params(self.gamma, self.s, self.alpha, eps) {
                let first = &v[0];
                let key = if first.name == "eps" && self.experiment == ExperimentKind::Sweep {
                    format!("eps_list[{i}]")
                } else if first.name == "m" {
                    "s".to_string()
                } else {
                    first.name.to_string()
                };
                let reason = v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ");
                return Err(Error::config(key, reason));
            }
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::config("T", format!("must be positive, got {}", self.t_end)));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Error::config("dt", format!("must be positive, got {dt}")));
            }
        }
        for (key, c) in [("c_adv", self.c_adv), ("c_wave", self.c_wave), ("c_disp", self.c_disp), ("c_osc", self.c_osc)] {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::config(key, format!("must be positive, got {c}")));
            }
        }
        if !(self.rho_min >= 0.0 && self.rho_min < 1.0) {
            return Err(Error::config("rho_min", format!("must lie in [0, 1), got {}", self.rho_min)));
        }
        let band = (self.n / 3) as i64;
        for (i, m) in self.phi0_modes.iter().enumerate() {
            let (k1, k2) = m.k();
            if k1.abs().max(k2.abs()) > band {
                return Err(Error::config(
                    format!("phi0_modes[{i}]"),
                    format!("wavenumber ({k1}, {k2}) outside the dealias band |k| <= {band}"),
                ));
            }
            if !m.amplitude().is_finite() || !m.phase().is_finite() {
                return Err(Error::config(format!("phi0_modes[{i}]"), "amplitude and phase must be finite"));
            }
        }
        Ok(())
    }
}

/// At least four values, strictly decreasing, with consecutive ratios
/// within 10% of their mean.
fn check_eps_list(list: &[f64]) -> Result<()> {
    if list.len() < 4 {
        return Err(Error::config(
            "eps_list",
            format!("needs at least 4 values, got {}", list.len()),
        ));
    }
    let ratios: Vec<f64> = list.windows(2).map(|w| w[1] / w[0]).collect();
    if ratios.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
        return Err(Error::config("eps_list", "must be positive and strictly decreasing"));
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    if ratios.iter().any(|r| (r - mean).abs() > 0.1 * mean) {
        return Err(Error::config("eps_list", "must be (close to) geometric"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_of(e: Error) -> String {
        match e {
            Error::Config { key, .. } => key,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_document_gets_defaults() {
        let cfg = parse_config("experiment = \"qg\"\n").unwrap();
        assert_eq!(cfg.scheme, Scheme::Imex);
        assert_eq!(cfg.rho_min, 1e-4);
        assert_eq!(cfg.snapshot_every, 0);
        assert_eq!(cfg.phi0_modes, default_modes());
        assert_eq!(cfg.t_end, 0.5);
        assert_eq!(cfg, ExperimentConfig::new(ExperimentKind::Qg));
    }

    #[test]
    fn full_document() {
        let text = r#"
experiment = "limit"
N = 32
gamma = 3
s = 0.5
alpha = 0.25
eps = 0.1
T = 0.25
dt = 1e-3
scheme = "rk4"
phi0_modes = [[1, 0, 1.0, 0.0], [2, -1, 0.25, 1.5]]
output_dir = "runs/a"
snapshot_every = 10
"#;
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.n, 32);
        assert_eq!(cfg.gamma, 3.0);
        assert_eq!(cfg.scheme, Scheme::Rk4);
        assert_eq!(cfg.phi0_modes[1], Mode(2, -1, 0.25, 1.5));
        assert_eq!(cfg.dt_policy(), DtPolicy::Fixed(1e-3));
        let again = parse_config(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_key_rejected() {
        let e = parse_config("experiment = \"qg\"\nbogus = 1\n").unwrap_err();
        assert_eq!(key_of(e), "bogus");
    }

    #[test]
    fn zero_s_names_the_constraint() {
        let e = parse_config("experiment = \"qg\"\ns = 0\n").unwrap_err();
        assert!(e.to_string().contains("0 < s <= 1"), "{e}");
        assert_eq!(key_of(e), "s");
    }

    #[test]
    fn mode_outside_band_rejected() {
        let e = parse_config("experiment = \"nsk\"\nN = 16\nphi0_modes = [[8, 0, 1.0, 0.0]]\n").unwrap_err();
        assert_eq!(key_of(e), "phi0_modes[0]");
    }

    #[test]
    fn bad_horizon_rejected() {
        let e = parse_config("experiment = \"nsk\"\nT = 0\n").unwrap_err();
        assert_eq!(key_of(e), "T");
    }

    #[test]
    fn sweep_lists() {
        let ok = "experiment = \"sweep\"\neps_list = [0.4, 0.28, 0.2, 0.14, 0.1]\n";
        assert!(parse_config(ok).is_ok());
        let short = "experiment = \"sweep\"\neps_list = [0.4, 0.2]\n";
        assert_eq!(key_of(parse_config(short).unwrap_err()), "eps_list");
        let missing = "experiment = \"sweep\"\n";
        assert_eq!(key_of(parse_config(missing).unwrap_err()), "eps_list");
        let ragged = "experiment = \"sweep\"\neps_list = [0.4, 0.3, 0.1, 0.05]\n";
        assert_eq!(key_of(parse_config(ragged).unwrap_err()), "eps_list");
        let increasing = "experiment = \"sweep\"\neps_list = [0.1, 0.2, 0.4, 0.8]\n";
        assert_eq!(key_of(parse_config(increasing).unwrap_err()), "eps_list");
    }
}
