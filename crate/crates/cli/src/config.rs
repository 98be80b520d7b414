//! JSON problem configuration and its translation into library types.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use harvest::model::{
    ComponentDynamics, DiffusionSpec, PriceFn, PriceSpec, ProblemSpec,
};
use harvest::sim::{ExtinctionMode, LumpPricing, Scheme, SimConfig};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub schema: Option<u32>,
    pub dynamics: DynamicsConfig,
    pub prices: PricesConfig,
    pub x0: Vec<f64>,
    #[serde(default)]
    pub s: f64,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub grid: Option<GridSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    pub components: Vec<DynamicsComponent>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DynamicsComponent {
    ArithmeticBm { mu: f64, sigma: f64 },
    Logistic {
        mu: f64,
        carrying_capacity: f64,
        sigma: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricesConfig {
    pub rho: f64,
    pub components: Vec<PriceComponent>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriceComponent {
    PowerHalf { theta: f64 },
    Constant { p: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_n_paths")]
    pub n_paths: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub lump_pricing: LumpPricingConfig,
    #[serde(default)]
    pub extinction: ExtinctionConfig,
}

fn default_dt() -> f64 {
    1e-3
}
fn default_t_max() -> f64 {
    100.0
}
fn default_n_paths() -> usize {
    10_000
}
fn default_seed() -> u64 {
    1
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            dt: default_dt(),
            t_max: default_t_max(),
            n_paths: default_n_paths(),
            seed: default_seed(),
            scheme: SchemeConfig::EulerMaruyama,
            lump_pricing: LumpPricingConfig::LeftPrice,
            extinction: ExtinctionConfig::Auto,
        }
    }
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeConfig {
    #[default]
    EulerMaruyama,
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LumpPricingConfig {
    #[default]
    LeftPrice,
    IntegralPrice,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtinctionConfig {
    #[default]
    Auto,
    Joint,
    PerComponent,
    /// Run both conventions and report each (simulate only).
    Both,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub ranges: Vec<[f64; 2]>,
    pub points_per_axis: usize,
}

impl ProblemConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let cfg: ProblemConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            CliError::config(format!(
                "invalid config {} at field `{}`: {}",
                path.display(),
                e.path(),
                e.inner()
            ))
        })?;
        if let Some(schema) = cfg.schema {
            if schema != 1 {
                return Err(CliError::config(format!(
                    "unsupported schema version {schema}, expected 1"
                )));
            }
        }
        Ok(cfg)
    }

    /// Build the library problem spec; model-level validation errors are
    /// config errors from the CLI's point of view.
    pub fn build_spec(&self) -> Result<ProblemSpec, CliError> {
        let dynamics = DiffusionSpec::new(
            self.dynamics
                .components
                .iter()
                .map(|c| match *c {
                    DynamicsComponent::ArithmeticBm { mu, sigma } => {
                        ComponentDynamics::ArithmeticBm { mu, sigma }
                    }
                    DynamicsComponent::Logistic {
                        mu,
                        carrying_capacity,
                        sigma,
                    } => ComponentDynamics::Logistic {
                        mu,
                        carrying_capacity,
                        sigma,
                    },
                })
                .collect(),
        )
        .map_err(CliError::from_config_value)?;
        let prices = PriceSpec::new(
            self.prices.rho,
            self.prices
                .components
                .iter()
                .map(|c| match *c {
                    PriceComponent::PowerHalf { theta } => PriceFn::PowerHalf { theta },
                    PriceComponent::Constant { p } => PriceFn::Constant { p },
                })
                .collect(),
        )
        .map_err(CliError::from_config_value)?;
        let spec = ProblemSpec::new(dynamics, prices).map_err(CliError::from_config_value)?;
        if self.x0.len() != spec.n_components() {
            return Err(CliError::config(format!(
                "x0 has {} entries, model has {} components",
                self.x0.len(),
                spec.n_components()
            )));
        }
        Ok(spec)
    }

    /// Library simulation config with an optional seed override. The `Both`
    /// extinction diagnostic is expanded by the simulate command.
    pub fn sim_config(&self, seed_override: Option<u64>) -> SimConfig {
        SimConfig {
            dt: self.sim.dt,
            t_max: self.sim.t_max,
            n_paths: self.sim.n_paths,
            seed: seed_override.unwrap_or(self.sim.seed),
            scheme: match self.sim.scheme {
                SchemeConfig::EulerMaruyama => Scheme::EulerMaruyama,
            },
            lump_pricing: match self.sim.lump_pricing {
                LumpPricingConfig::LeftPrice => LumpPricing::LeftPrice,
                LumpPricingConfig::IntegralPrice => LumpPricing::IntegralPrice,
            },
            extinction: match self.sim.extinction {
                ExtinctionConfig::Auto | ExtinctionConfig::Both => ExtinctionMode::Auto,
                ExtinctionConfig::Joint => ExtinctionMode::Joint,
                ExtinctionConfig::PerComponent => ExtinctionMode::PerComponent,
            },
            ..SimConfig::default()
        }
    }
}
