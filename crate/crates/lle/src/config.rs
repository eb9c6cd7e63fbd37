//! Run configuration: strict TOML parsing with explicit defaults, validated
//! against the module invariants before dispatch.

use crate::continuation::{ContinuationParameter, StepControls};
use crate::field::{PotentialSpec, TorusGrid};
use crate::stationary::{Params, PhaseFix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid config at {path}: {message}")]
    Invalid { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Solve,
    Continue,
    Spectrum,
    Veff,
    Simulate,
    Reduce,
    Asymptotics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default)]
    pub emit_svg: bool,
}

fn default_output_dir() -> String {
    "out".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub d: f64,
    pub zeta: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_f0")]
    pub f0: f64,
    #[serde(default)]
    pub eps: f64,
}

fn default_mu() -> f64 {
    1.0
}

fn default_f0() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    #[serde(default)]
    pub mean: f64,
    #[serde(default)]
    pub cosine: Vec<f64>,
    #[serde(default)]
    pub sine: Vec<f64>,
}

impl Default for PotentialSection {
    fn default() -> Self {
        // the experiment default V(x) = 0.1 + 0.5 cos x
        Self {
            mean: 0.1,
            cosine: vec![0.5],
            sine: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuessName {
    Bright,
    Dark,
    ConstantPlusMode,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: usize,
    #[serde(default = "default_phase_fix")]
    pub phase_fix: PhaseFix,
    #[serde(default = "default_guess")]
    pub guess: GuessName,
    #[serde(default = "default_mode_k")]
    pub mode_k: u32,
    #[serde(default = "default_mode_delta")]
    pub mode_delta: f64,
    /// shift applied to the converged solution (e.g. to start at a zero of
    /// the effective potential)
    #[serde(default)]
    pub shift_to: Option<f64>,
}

fn default_n() -> usize {
    256
}

fn default_newton_tol() -> f64 {
    crate::stationary::NEWTON_TOL
}

fn default_newton_max_iter() -> usize {
    crate::stationary::NEWTON_MAX_ITER
}

fn default_phase_fix() -> PhaseFix {
    PhaseFix::EvenSubspace
}

fn default_guess() -> GuessName {
    GuessName::Bright
}

fn default_mode_k() -> u32 {
    1
}

fn default_mode_delta() -> f64 {
    0.3
}

impl Default for NumericsSection {
    fn default() -> Self {
        Self {
            n: default_n(),
            newton_tol: default_newton_tol(),
            newton_max_iter: default_newton_max_iter(),
            phase_fix: default_phase_fix(),
            guess: default_guess(),
            mode_k: default_mode_k(),
            mode_delta: default_mode_delta(),
            shift_to: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationSection {
    pub parameter: ContinuationParameter,
    pub range: [f64; 2],
    #[serde(default = "default_step_initial")]
    pub step_initial: f64,
    #[serde(default = "default_step_min")]
    pub step_min: f64,
    #[serde(default = "default_step_max")]
    pub step_max: f64,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
}

fn default_step_initial() -> f64 {
    1e-2
}

fn default_step_min() -> f64 {
    1e-6
}

fn default_step_max() -> f64 {
    5e-2
}

fn default_max_points() -> usize {
    400
}

impl ContinuationSection {
    pub fn controls(&self) -> StepControls {
        StepControls {
            initial: self.step_initial,
            min: self.step_min,
            max: self.step_max,
            max_points: self.max_points,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    CriticalMode,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default = "default_perturbation")]
    pub perturbation: PerturbationKind,
    #[serde(default = "default_perturbation_scale")]
    pub perturbation_scale: f64,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_record_every() -> usize {
    100
}

fn default_perturbation() -> PerturbationKind {
    PerturbationKind::CriticalMode
}

fn default_perturbation_scale() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionSection {
    pub d: f64,
    pub zeta: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_f0")]
    pub f0: f64,
    pub f1: f64,
    #[serde(default = "default_k1")]
    pub k1: i64,
    pub nu1: f64,
}

fn default_k1() -> i64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticsSection {
    #[serde(default = "default_line_zeta")]
    pub zeta: f64,
    #[serde(default = "default_line_d")]
    pub d: f64,
    #[serde(default = "default_line_l")]
    pub l: f64,
    #[serde(default = "default_mu_values")]
    pub mu_values: Vec<f64>,
    #[serde(default = "default_f0")]
    pub f0: f64,
    #[serde(default = "default_line_n")]
    pub n: usize,
}

fn default_line_zeta() -> f64 {
    1.0
}

fn default_line_d() -> f64 {
    1.0
}

fn default_line_l() -> f64 {
    40.0
}

fn default_mu_values() -> Vec<f64> {
    vec![0.025, 0.05]
}

fn default_line_n() -> usize {
    512
}

impl Default for AsymptoticsSection {
    fn default() -> Self {
        Self {
            zeta: default_line_zeta(),
            d: default_line_d(),
            l: default_line_l(),
            mu_values: default_mu_values(),
            f0: default_f0(),
            n: default_line_n(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    #[serde(default)]
    pub params: Option<ParamsSection>,
    #[serde(default)]
    pub potential: PotentialSection,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub continuation: Option<ContinuationSection>,
    #[serde(default)]
    pub evolution: Option<EvolutionSection>,
    #[serde(default)]
    pub reduction: Option<ReductionSection>,
    #[serde(default)]
    pub asymptotics: Option<AsymptoticsSection>,
}

impl RunConfig {
    pub fn potential_spec(&self) -> PotentialSpec {
        PotentialSpec {
            mean: self.potential.mean,
            cosine_coeffs: self.potential.cosine.clone(),
            sine_coeffs: self.potential.sine.clone(),
        }
    }

    pub fn model_params(&self) -> Result<Params, ConfigError> {
        let ps = self.params.as_ref().ok_or_else(|| ConfigError::Invalid {
            path: "params".into(),
            message: "section required for this command".into(),
        })?;
        Ok(Params {
            d: ps.d,
            zeta: ps.zeta,
            mu: ps.mu,
            f0: ps.f0,
            eps: ps.eps,
            potential: self.potential_spec(),
        })
    }
}

/// Parse and validate a TOML configuration document. Unknown keys are
/// rejected; every numeric field is checked against the module invariants.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    validate(&cfg)?;
    Ok(cfg)
}

fn invalid(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.to_string(),
        message: message.into(),
    }
}

pub fn validate(cfg: &RunConfig) -> Result<(), ConfigError> {
    let n = cfg.numerics.n;
    if n < 16 || n % 2 != 0 {
        return Err(invalid("numerics.n", "must be even and >= 16"));
    }
    if cfg.numerics.newton_tol <= 0.0 {
        return Err(invalid("numerics.newton_tol", "must be positive"));
    }
    let grid = TorusGrid::new(n).map_err(|e| invalid("numerics.n", e.to_string()))?;
    let pot = cfg.potential_spec();
    pot.check_grid(&grid)
        .map_err(|e| invalid("potential", e.to_string()))?;
    if let Some(ps) = &cfg.params {
        if ps.d == 0.0 {
            return Err(invalid("params.d", "d must be nonzero"));
        }
        if ps.mu <= 0.0 {
            return Err(invalid("params.mu", "mu must be positive"));
        }
    }
    match cfg.run.command {
        Command::Solve | Command::Spectrum | Command::Veff => {
            cfg.model_params()
                .map_err(|e| invalid("params", e.to_string()))?;
        }
        Command::Continue => {
            cfg.model_params()
                .map_err(|e| invalid("params", e.to_string()))?;
            let c = cfg
                .continuation
                .as_ref()
                .ok_or_else(|| invalid("continuation", "section required"))?;
            if c.step_initial <= 0.0 || c.step_min <= 0.0 || c.step_max < c.step_initial {
                return Err(invalid(
                    "continuation",
                    "steps must satisfy 0 < min, 0 < initial <= max",
                ));
            }
            if c.range[0] >= c.range[1] {
                return Err(invalid("continuation.range", "must be increasing"));
            }
        }
        Command::Simulate => {
            let p = cfg
                .model_params()
                .map_err(|e| invalid("params", e.to_string()))?;
            let e = cfg
                .evolution
                .as_ref()
                .ok_or_else(|| invalid("evolution", "section required"))?;
            if e.dt <= 0.0 || e.t_end <= 0.0 {
                return Err(invalid("evolution", "dt and t_end must be positive"));
            }
            let bound = crate::evolution::dt_bound(&grid, &p);
            if e.dt > bound * (1.0 + 1e-12) {
                return Err(invalid(
                    "evolution.dt",
                    format!("exceeds the advection bound {bound}"),
                ));
            }
        }
        Command::Reduce => {
            let r = cfg
                .reduction
                .as_ref()
                .ok_or_else(|| invalid("reduction", "section required"))?;
            if r.f1.abs() >= r.f0.abs() {
                return Err(invalid("reduction.f1", "|f1| must be below |f0|"));
            }
            if r.k1 == 0 {
                return Err(invalid("reduction.k1", "must be nonzero"));
            }
            if r.mu <= 0.0 {
                return Err(invalid("reduction.mu", "mu must be positive"));
            }
        }
        Command::Asymptotics => {
            let a = cfg.asymptotics.clone().unwrap_or_default();
            if a.d <= 0.0 || a.zeta <= 0.0 {
                return Err(invalid("asymptotics", "needs d > 0 and zeta > 0"));
            }
            if a.mu_values.is_empty() || a.mu_values.iter().any(|&m| m <= 0.0) {
                return Err(invalid("asymptotics.mu_values", "must be positive"));
            }
            if a.n < 16 || a.n % 2 != 0 {
                return Err(invalid("asymptotics.n", "must be even and >= 16"));
            }
        }
    }
    Ok(())
}

/// Normalized TOML text with all defaults made explicit.
pub fn echo(cfg: &RunConfig) -> String {
    toml::to_string_pretty(cfg).expect("config serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL_VEFF: &str = r#"
[run]
command = "veff"

[params]
d = 0.1
zeta = 3.7
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config(MINIMAL_VEFF).unwrap();
        assert_eq!(cfg.numerics.n, 256);
        assert_eq!(cfg.numerics.newton_tol, crate::stationary::NEWTON_TOL);
        let p = cfg.model_params().unwrap();
        assert_eq!(p.mu, 1.0);
        assert_eq!(p.f0, 2.0);
        assert_eq!(p.potential.mean, 0.1);
        assert_eq!(p.potential.cosine_coeffs, vec![0.5]);
    }

    #[test]
    fn zero_dispersion_is_rejected_citing_field() {
        let text = MINIMAL_VEFF.replace("d = 0.1", "d = 0.0");
        let err = parse_config(&text).unwrap_err();
        match err {
            ConfigError::Invalid { path, .. } => assert_eq!(path, "params.d"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL_VEFF}\nbogus_key = 1\n");
        assert!(parse_config(&text).is_err());
        let nested = MINIMAL_VEFF.replace("zeta = 3.7", "zeta = 3.7\nwhatever = 2.0");
        assert!(parse_config(&nested).is_err());
    }

    #[test]
    fn echo_roundtrip_is_idempotent() {
        let cfg = parse_config(MINIMAL_VEFF).unwrap();
        let echoed = echo(&cfg);
        let reparsed = parse_config(&echoed).unwrap();
        assert_eq!(cfg, reparsed);
        assert_eq!(echo(&reparsed), echoed);
    }

    #[test]
    fn simulate_requires_evolution_section() {
        let text = MINIMAL_VEFF.replace("command = \"veff\"", "command = \"simulate\"");
        assert!(parse_config(&text).is_err());
        let with = format!("{text}\n[evolution]\nt_end = 10.0\n");
        assert!(parse_config(&with).is_ok());
    }
}
