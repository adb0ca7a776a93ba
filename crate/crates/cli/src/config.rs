use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use virusperiod::periodic::{Representation, DEFAULT_GRID_N};
use virusperiod::{
    ADecay, CertifyConfig, Coefficient, CoefficientSet, D1Variant, IntegratorConfig, PeriodicFn, Rates,
    ShootingConfig, SystemKind,
};

use crate::CliError;

/// A coefficient is either a bare number (a constant) or a function object.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum CoefficientSpec {
    Constant(f64),
    Function(FunctionSpec),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct FunctionSpec {
    /// Defaults to the shared `omega`.
    #[serde(default)]
    pub period: Option<f64>,
    #[serde(flatten)]
    pub repr: Representation,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    /// Initial `(S, L, A)`.
    pub y0: [f64; 3],
    pub t1: f64,
    #[serde(default)]
    pub t0: f64,
    #[serde(default = "default_system")]
    pub system: SystemKind,
}

fn default_system() -> SystemKind {
    SystemKind::Transformed
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Coefficient replaced by each constant in `values`.
    pub coefficient: Coefficient,
    pub values: Vec<f64>,
    /// Also shoot for a periodic orbit at every grid point.
    #[serde(default)]
    pub solve: bool,
}

fn default_grid_n() -> usize {
    DEFAULT_GRID_N
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub omega: f64,
    pub coefficients: Rates<CoefficientSpec>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub shooting: ShootingConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
    #[serde(default)]
    pub d1_variant: D1Variant,
    #[serde(default)]
    pub a_decay: ADecay,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    /// Extra starting point for shooting, as `(S, L, A)`.
    #[serde(default)]
    pub initial_guess: Option<[f64; 3]>,
    #[serde(default)]
    pub multi_start: Option<usize>,
    #[serde(default)]
    pub simulate: Option<SimulateSpec>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Variants {
    pub d1_variant: D1Variant,
    pub a_decay: ADecay,
}

/// A parsed configuration file plus everything derived from it.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub coefficients: CoefficientSet,
    /// SHA-256 of the raw file bytes.
    pub hash: String,
}

impl Loaded {
    pub fn variants(&self) -> Variants {
        Variants {
            d1_variant: self.config.d1_variant,
            a_decay: self.config.a_decay,
        }
    }
}

pub fn config_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::config(msg)
}

pub fn build_coefficients(config: &RunConfig) -> Result<CoefficientSet, CliError> {
    let omega = config.omega;
    let fns = config.coefficients.try_map(|c, spec| {
        let f = match spec {
            CoefficientSpec::Constant(v) => PeriodicFn::constant(omega, *v),
            CoefficientSpec::Function(f) => PeriodicFn::new(f.period.unwrap_or(omega), f.repr.clone()),
        };
        f.map_err(|e| config_error(format!("coefficients.{c}: {e}")))
    })?;
    CoefficientSet::new(omega, fns).map_err(|e| config_error(e.to_string()))
}

fn validate(config: &RunConfig) -> Result<(), CliError> {
    config
        .integrator
        .validate()
        .map_err(|e| config_error(format!("integrator: {e}")))?;
    config
        .shooting
        .validate()
        .map_err(|e| config_error(format!("shooting: {e}")))?;
    if config.grid_n < 3 {
        return Err(config_error(format!(
            "grid_n must be at least 3, got {}",
            config.grid_n
        )));
    }
    if let Some(s) = &config.simulate {
        if !(s.t1 > s.t0) || !s.t1.is_finite() {
            return Err(config_error(format!(
                "simulate: need t1 > t0, got t0 = {}, t1 = {}",
                s.t0, s.t1
            )));
        }
    }
    Ok(())
}

pub fn parse(bytes: &[u8]) -> Result<Loaded, CliError> {
    let config: RunConfig =
        serde_json::from_slice(bytes).map_err(|e| config_error(format!("config: {e}")))?;
    validate(&config)?;
    let coefficients = build_coefficients(&config)?;
    Ok(Loaded {
        config,
        coefficients,
        hash: config_hash(bytes),
    })
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let bytes =
        std::fs::read(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    parse(&bytes).map_err(|e| CliError {
        message: format!("{}: {}", path.display(), e.message),
        ..e
    })
}
