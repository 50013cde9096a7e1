//! Run configuration files.
//!
//! ```json
//! {"n": 2, "N": 32, "ic": {"family": "random_bandlimited", "max_k": 3, "amplitude": 0.004, "seed": 7},
//!  "t_end": 0.01, "record_every": 200}
//! ```
//!
//! Everything except `n`, `N` and `ic` is optional; flow parameters default to
//! [`FlowConfig::default`].

use std::path::Path;

use calabi_core::potential::CosineMode;
use calabi_core::{FlowConfig, GridSpec, SymplecticPotential};
use serde::{Deserialize, Serialize};

use crate::error::{read_file, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub k: Vec<i64>,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Flat,
    Cosine { modes: Vec<ModeSpec> },
    RandomBandlimited { max_k: u32, amplitude: f64, seed: u64 },
}

impl InitialCondition {
    pub fn describe(&self) -> String {
        match self {
            InitialCondition::Flat => "flat".into(),
            InitialCondition::Cosine { modes } => format!("cosine ({} modes)", modes.len()),
            InitialCondition::RandomBandlimited {
                max_k,
                amplitude,
                seed,
            } => format!("random_bandlimited (|k| <= {max_k}, amplitude {amplitude}, seed {seed})"),
        }
    }
}

fn default_scale() -> f64 {
    1.0
}

fn default_c() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    #[serde(rename = "N")]
    pub points: usize,
    #[serde(default = "default_scale")]
    pub scale: f64,
    /// Quadratic coefficient of the background `c|x|^2/2`.
    #[serde(default = "default_c")]
    pub c: f64,
    pub ic: InitialCondition,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub dt_min: Option<f64>,
    #[serde(default)]
    pub ca_stop: Option<f64>,
    #[serde(default)]
    pub record_every: Option<usize>,
    #[serde(default)]
    pub diagnostics_every: Option<usize>,
    #[serde(default)]
    pub m_segments: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn grid(&self) -> Result<GridSpec> {
        Ok(GridSpec::new(self.n, self.points, self.scale)?)
    }

    pub fn flow_config(&self) -> FlowConfig {
        let d = FlowConfig::default();
        FlowConfig {
            t_end: self.t_end.unwrap_or(d.t_end),
            sigma: self.sigma.unwrap_or(d.sigma),
            dt_min: self.dt_min.unwrap_or(d.dt_min),
            ca_stop: self.ca_stop,
            record_every: self.record_every.unwrap_or(d.record_every),
            m_segments: self.m_segments.unwrap_or(d.m_segments),
            seed: self.seed.unwrap_or(d.seed),
            diagnostics_every: self.diagnostics_every.unwrap_or(d.diagnostics_every),
        }
    }

    /// Samples the initial potential; convexity failures become
    /// [`Error::NotConvex`].
    pub fn initial_potential(&self) -> Result<SymplecticPotential> {
        let spec = self.grid()?;
        let built = match &self.ic {
            InitialCondition::Flat => {
                SymplecticPotential::new(self.c, calabi_core::PeriodicField::zeros(spec))
            }
            InitialCondition::Cosine { modes } => {
                let modes: Vec<CosineMode> = modes
                    .iter()
                    .map(|m| CosineMode {
                        k: m.k.clone(),
                        amplitude: m.amplitude,
                        phase: m.phase,
                    })
                    .collect();
                SymplecticPotential::cosine_modes(spec, self.c, &modes)
            }
            InitialCondition::RandomBandlimited {
                max_k,
                amplitude,
                seed,
            } => {
                let modes = calabi_core::potential::bandlimited_modes(self.n, *max_k, *amplitude, *seed);
                SymplecticPotential::cosine_modes(spec, self.c, &modes)
            }
        };
        built.map_err(|e| match e {
            calabi_core::Error::ConvexityLoss { point, eig_min } => Error::NotConvex { eig_min, point },
            other => Error::Numerical(other),
        })
    }
}

/// Parses a configuration from JSON text and checks it: flow parameters are
/// validated and the initial condition must be strictly convex.
pub fn parse_config_str(text: &str, origin: &Path) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|source| Error::Schema {
        path: origin.to_path_buf(),
        source,
    })?;
    cfg.flow_config().validate()?;
    cfg.initial_potential()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    parse_config_str(&read_file(path)?, path)
}
