//! Declarative run configuration: one TOML file per experiment.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use casecross_core::analytic::{GridSpec, HeterogeneityModel};
use casecross_core::dgp::DgpSpec;
use casecross_core::sampler::SamplingPlan;

/// A parsed experiment configuration. Sections are optional; each command
/// checks for the ones it needs.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Intended command; when present it must match the invoked subcommand.
    pub command: Option<String>,
    pub dgp: Option<DgpSpec>,
    pub plan: Option<SamplingPlan>,
    #[serde(default)]
    pub run: RunSection,
    pub hetero: Option<HeterogeneityModel>,
    pub grid: Option<GridSection>,
    pub audit: Option<AuditSection>,
    pub bias: Option<BiasSection>,
    pub estimate: Option<EstimateSection>,
    /// Acceptance band this experiment is expected to land in, as data for
    /// humans and for the drift test; the reproduction suite pins its own
    /// constants in code.
    pub acceptance: Option<AcceptanceSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_n_subjects")]
    pub n_subjects: u64,
    #[serde(default)]
    pub master_seed: u64,
    /// Number of consecutive master seeds pooled into the Mantel-Haenszel
    /// estimate; the other estimators use `master_seed` alone.
    #[serde(default = "default_seeds")]
    pub seeds: u32,
    /// Also compute the naive pooled cohort hazard ratio.
    #[serde(default)]
    pub cohort_hr: bool,
    /// Evaluate the randomized-trial estimand at this step.
    pub rct_step: Option<u32>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            n_subjects: default_n_subjects(),
            master_seed: 0,
            seeds: default_seeds(),
            cohort_hr: false,
            rct_step: None,
        }
    }
}

fn default_n_subjects() -> u64 {
    100_000
}

fn default_seeds() -> u32 {
    1
}

/// Grid bounds; omitted axes fall back to the standard sweep.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub lambda0_values: Option<Vec<f64>>,
    pub ratios_g0: Option<Vec<u32>>,
    pub ratio_multipliers: Option<Vec<u32>>,
    pub p_a_values: Option<Vec<f64>>,
    pub p_g: Option<f64>,
}

impl GridSection {
    pub fn to_grid_spec(&self) -> GridSpec {
        let d = GridSpec::default();
        GridSpec {
            lambda0_values: self.lambda0_values.clone().unwrap_or(d.lambda0_values),
            ratios_g0: self.ratios_g0.clone().unwrap_or(d.ratios_g0),
            ratio_multipliers: self.ratio_multipliers.clone().unwrap_or(d.ratio_multipliers),
            p_a_values: self.p_a_values.clone().unwrap_or(d.p_a_values),
            p_g: self.p_g.unwrap_or(d.p_g),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSection {
    pub epsilon: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasSection {
    /// One of `exact`, `independent-approx`, `fine-closed-form`,
    /// `correlated-expansion`.
    pub method: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    /// Read this cohort export instead of simulating.
    pub cohort_file: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptanceSection {
    pub band: Option<[f64; 2]>,
    pub note: Option<String>,
}

impl RunConfig {
    /// Load and parse; parse errors carry the file location.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: RunConfig = toml::from_str(&text)
            .with_context(|| format!("config parse error in {}", path.display()))?;
        Ok(config)
    }

    /// Enforce the optional `command` pin.
    pub fn check_command(&self, invoked: &str) -> Result<()> {
        if let Some(declared) = &self.command {
            if declared != invoked {
                bail!("config declares command `{declared}` but `{invoked}` was invoked");
            }
        }
        Ok(())
    }

    pub fn dgp(&self) -> Result<&DgpSpec> {
        self.dgp.as_ref().context("config needs a [dgp] section")
    }

    pub fn plan(&self) -> Result<&SamplingPlan> {
        self.plan.as_ref().context("config needs a [plan] section")
    }

    pub fn hetero(&self) -> Result<&HeterogeneityModel> {
        self.hetero.as_ref().context("config needs a [hetero] section")
    }
}
