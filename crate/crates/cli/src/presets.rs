//! Built-in experiment catalogue.

use serde::Serialize;

use gchain::criteria::SearchBudget;
use gchain::models::{BkfParams, ModelSpec, Psi, RenewalParams};
use gchain::{Past, Symbol};

use crate::config::{Experiment, ExperimentConfig, NamedPast, PastSpec, SamplerSpec, SCHEMA_VERSION};

#[derive(Clone, Debug, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub anchor: &'static str,
}

pub const PRESETS: [Preset; 5] = [
    Preset {
        name: "corollary4-bkf",
        summary: "lacunary BKF mixtures with m_j = 5^j: bound series diverge for λ_j ∝ 2^-j and converge for λ_j ∝ 5^-j",
        anchor: "ℓ² dichotomy for lacunary BKF mixtures",
    },
    Preset {
        name: "corollary4-ar",
        summary: "logit chains with β_j = c/j^(1+ε), Σβ = 0.9: ℓ² divergent at ε = 0.3, convergent at ε = 0.8",
        anchor: "ℓ² dichotomy for power-law autoregressive kernels",
    },
    Preset {
        name: "corollary6-ising",
        summary: "long-range Ising chain ε = 0.3, Σβ = 0.9: Dobrushin holds, ℓ² and extremal weak-ℓ² diverge, β-mixing decays",
        anchor: "weak Bernoulli chain with a dynamic phase transition",
    },
    Preset {
        name: "renewal-example",
        summary: "renewal chain q_i = 0.5 + 0.3/(i+1): closed-form variation rates and bounded weak-ℓ² sums",
        anchor: "renewal variation rate var_k = q_k − q_∞",
    },
    Preset {
        name: "dobrushin-linear-psi",
        summary: "BKF with linear ψ, ε = 0.3, m = (1, 3): one-sided Dobrushin sum 2(1 − 2ε) = 0.8",
        anchor: "one-sided Dobrushin sum of the linear ψ mixture",
    },
];

fn named(p: NamedPast) -> PastSpec {
    PastSpec::Named(p)
}

fn config(name: &str, anchor: &str, seed: u64, model: ModelSpec<f64>, experiments: Vec<Experiment>) -> ExperimentConfig {
    ExperimentConfig { schema_version: SCHEMA_VERSION, name: name.into(), anchor: Some(anchor.into()), seed, model, experiments }
}

fn scan(k_max: usize) -> Experiment {
    Experiment::CriteriaScan { k_max, search: SearchBudget::default() }
}

fn extremal_weak_l2(horizon: usize, replicas: usize) -> Experiment {
    Experiment::WeakL2 { past_x: named(NamedPast::Plus), past_y: named(NamedPast::Minus), horizon, replicas, grid_points: 40, thresholds: Default::default() }
}

/// The configurations a preset expands to, or `None` for an unknown name.
pub fn preset(name: &str) -> Option<Vec<ExperimentConfig>> {
    let anchor = PRESETS.iter().find(|p| p.name == name)?.anchor;
    let configs = match name {
        "corollary4-bkf" => {
            let bkf = |ratio: f64| ModelSpec::Bkf(BkfParams::geometric(5, ratio, 6, Psi::Step { epsilon: 0.1 }, Some(0.1)).expect("valid preset"));
            vec![config("corollary4-bkf-slow", anchor, 11, bkf(0.5), vec![scan(400)]), config("corollary4-bkf-fast", anchor, 12, bkf(0.2), vec![scan(400)])]
        }
        "corollary4-ar" => {
            let ising = |epsilon: f64| ModelSpec::Ising { epsilon, beta_sum: 0.9, delta: 0.0 };
            vec![
                config("corollary4-ar-eps03", anchor, 21, ising(0.3), vec![scan(200), extremal_weak_l2(20_000, 100)]),
                config("corollary4-ar-eps08", anchor, 22, ising(0.8), vec![scan(200), extremal_weak_l2(20_000, 100)]),
            ]
        }
        "corollary6-ising" => {
            let alternating = || named(NamedPast::Alternating);
            vec![config(
                "corollary6-ising",
                anchor,
                31,
                ModelSpec::Ising { epsilon: 0.3, beta_sum: 0.9, delta: 0.0 },
                vec![
                    scan(500),
                    extremal_weak_l2(100_000, 200),
                    Experiment::BetaMixing {
                        horizons: vec![1, 2, 4, 8, 16, 32, 64],
                        window: 3,
                        pairs: 64,
                        replicas_per_pair: 200,
                        sampler: SamplerSpec { burn_in: Some(20_000), suffix_len: 2_000, tail: alternating() },
                        z: 4.0,
                    },
                    Experiment::Correlations {
                        j_max: 256,
                        sample_length: 200_000,
                        replicas: 16,
                        burn_in: Some(20_000),
                        tail: alternating(),
                        z: 4.0,
                        thresholds: Default::default(),
                    },
                    Experiment::PWeakL2 {
                        sampler: SamplerSpec { burn_in: Some(20_000), suffix_len: 2_000, tail: alternating() },
                        pairs: 8,
                        replicas_per_pair: 20,
                        horizon: 20_000,
                        grid_points: 30,
                        thresholds: Default::default(),
                    },
                ],
            )]
        }
        "renewal-example" => {
            let y = Past::new(vec![Symbol::MINUS; 3], vec![Symbol::PLUS]).expect("valid past");
            vec![config(
                "renewal-example",
                anchor,
                41,
                ModelSpec::Renewal(RenewalParams::power_law(0.5, 0.3, 1.0)),
                vec![
                    scan(50),
                    Experiment::WeakL2 {
                        past_x: named(NamedPast::Plus),
                        past_y: PastSpec::Explicit(y.clone()),
                        horizon: 10_000,
                        replicas: 200,
                        grid_points: 30,
                        thresholds: Default::default(),
                    },
                    Experiment::OracleCheck { past_x: named(NamedPast::Plus), past_y: PastSpec::Explicit(y), t1: 10, horizon: 12, budget: 1 << 24 },
                ],
            )]
        }
        "dobrushin-linear-psi" => {
            let params = BkfParams { m: vec![1, 3], lambda: vec![0.5, 0.5], psi: Psi::Linear { epsilon: 0.3 }, r0: None, family: None };
            vec![config(
                "dobrushin-linear-psi",
                anchor,
                51,
                ModelSpec::Bkf(params),
                vec![
                    scan(3),
                    Experiment::TvDecay {
                        past_x: named(NamedPast::Plus),
                        past_y: named(NamedPast::Minus),
                        horizons: vec![0, 1, 2, 4, 8],
                        window: 2,
                        replicas: 2_000,
                        oracle_budget: 1 << 20,
                        coupling_window: None,
                        z: 4.0,
                    },
                ],
            )]
        }
        _ => return None,
    };
    Some(configs)
}
