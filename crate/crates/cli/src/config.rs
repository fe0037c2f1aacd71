//! The experiment configuration schema.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use gchain::criteria::SearchBudget;
use gchain::models::ModelSpec;
use gchain::oracle::DEFAULT_BUDGET;
use gchain::series::SlopeThresholds;
use gchain::{Past, Symbol};

pub const SCHEMA_VERSION: u32 = 1;

/// A past given by name or explicitly as canonical symbol indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PastSpec {
    Named(NamedPast),
    Explicit(Past),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedPast {
    /// Every symbol is the first symbol (`+1` for spins).
    Plus,
    /// Every symbol is the second symbol (`−1` for spins).
    Minus,
    Alternating,
}

impl PastSpec {
    pub fn resolve(&self) -> Past {
        match self {
            PastSpec::Named(NamedPast::Plus) => Past::plus(),
            PastSpec::Named(NamedPast::Minus) => Past::minus(),
            PastSpec::Named(NamedPast::Alternating) => Past::alternating(Symbol::PLUS, Symbol::MINUS),
            PastSpec::Explicit(p) => p.clone(),
        }
    }
}

/// Stationary past surrogate; the burn-in defaults to ten memory scales.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    #[serde(default)]
    pub burn_in: Option<usize>,
    pub suffix_len: usize,
    pub tail: PastSpec,
}

fn default_z() -> f64 {
    4.0
}

fn default_budget() -> usize {
    DEFAULT_BUDGET
}

fn default_grid() -> usize {
    40
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    WeakL2 {
        past_x: PastSpec,
        past_y: PastSpec,
        horizon: usize,
        replicas: usize,
        #[serde(default = "default_grid")]
        grid_points: usize,
        #[serde(default)]
        thresholds: SlopeThresholds,
    },
    PWeakL2 {
        sampler: SamplerSpec,
        pairs: usize,
        replicas_per_pair: usize,
        horizon: usize,
        #[serde(default = "default_grid")]
        grid_points: usize,
        #[serde(default)]
        thresholds: SlopeThresholds,
    },
    TvDecay {
        past_x: PastSpec,
        past_y: PastSpec,
        horizons: Vec<usize>,
        window: usize,
        replicas: usize,
        #[serde(default = "default_budget")]
        oracle_budget: usize,
        #[serde(default)]
        coupling_window: Option<usize>,
        #[serde(default = "default_z")]
        z: f64,
    },
    CouplingTail {
        past_x: PastSpec,
        past_y: PastSpec,
        horizons: Vec<usize>,
        /// Simulation horizon `T`.
        horizon: usize,
        /// Trailing window `W`; defaults to `T / 4`.
        #[serde(default)]
        window: Option<usize>,
        replicas: usize,
        #[serde(default = "default_z")]
        z: f64,
    },
    BetaMixing {
        horizons: Vec<usize>,
        window: usize,
        pairs: usize,
        replicas_per_pair: usize,
        sampler: SamplerSpec,
        #[serde(default = "default_z")]
        z: f64,
    },
    Correlations {
        j_max: usize,
        sample_length: usize,
        replicas: usize,
        #[serde(default)]
        burn_in: Option<usize>,
        tail: PastSpec,
        #[serde(default = "default_z")]
        z: f64,
        #[serde(default)]
        thresholds: SlopeThresholds,
    },
    CriteriaScan {
        k_max: usize,
        #[serde(default)]
        search: SearchBudget,
    },
    OracleCheck {
        past_x: PastSpec,
        past_y: PastSpec,
        /// Window laws are computed on `[0, t1]`.
        t1: usize,
        /// Increments are computed for `n ≤ horizon`.
        horizon: usize,
        #[serde(default = "default_budget")]
        budget: usize,
    },
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::WeakL2 { .. } => "weak-l2",
            Experiment::PWeakL2 { .. } => "p-weak-l2",
            Experiment::TvDecay { .. } => "tv-decay",
            Experiment::CouplingTail { .. } => "coupling-tail",
            Experiment::BetaMixing { .. } => "beta-mixing",
            Experiment::Correlations { .. } => "correlations",
            Experiment::CriteriaScan { .. } => "criteria-scan",
            Experiment::OracleCheck { .. } => "oracle-check",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    /// The result the experiment exercises, echoed into the report.
    #[serde(default)]
    pub anchor: Option<String>,
    pub seed: u64,
    pub model: ModelSpec<f64>,
    pub experiments: Vec<Experiment>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!("schema_version: expected {SCHEMA_VERSION}, got {}", self.schema_version);
        }
        if self.experiments.is_empty() {
            bail!("experiments: at least one experiment is required");
        }
        let kernel = self.model.build().context("model")?;
        let alphabet = kernel.alphabet();
        for (i, e) in self.experiments.iter().enumerate() {
            let mut pasts: Vec<&PastSpec> = Vec::new();
            match e {
                Experiment::WeakL2 { past_x, past_y, .. }
                | Experiment::TvDecay { past_x, past_y, .. }
                | Experiment::CouplingTail { past_x, past_y, .. }
                | Experiment::OracleCheck { past_x, past_y, .. } => pasts.extend([past_x, past_y]),
                Experiment::PWeakL2 { sampler, .. } | Experiment::BetaMixing { sampler, .. } => pasts.push(&sampler.tail),
                Experiment::Correlations { tail, .. } => pasts.push(tail),
                Experiment::CriteriaScan { search, .. } => search.validate().with_context(|| format!("experiments[{i}].search"))?,
            }
            for p in pasts {
                p.resolve().validate(alphabet).with_context(|| format!("experiments[{i}] ({}): past", e.kind()))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1, "name": "t", "seed": 3,
        "model": {"family": "ising", "epsilon": 0.8, "beta_sum": 0.9},
        "experiments": [{"kind": "weak-l2", "past_x": "plus", "past_y": {"suffix": [1, 1], "tail": [0]}, "horizon": 10, "replicas": 100}]
    }"#;

    #[test]
    fn minimal_config_parses() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.experiments[0].kind(), "weak-l2");
        let back = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&back).unwrap(), c);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = MINIMAL.replace("\"replicas\": 100", "\"replica\": 100");
        let e = format!("{:#}", ExperimentConfig::from_json(&bad).unwrap_err());
        assert!(e.contains("replica"), "{e}");
        let v2 = MINIMAL.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(format!("{:#}", ExperimentConfig::from_json(&v2).unwrap_err()).contains("schema_version"));
        let no_seed = MINIMAL.replace("\"seed\": 3,", "");
        assert!(format!("{:#}", ExperimentConfig::from_json(&no_seed).unwrap_err()).contains("seed"));
        let bad_past = MINIMAL.replace("[1, 1]", "[1, 7]");
        assert!(ExperimentConfig::from_json(&bad_past).is_err());
    }
}
