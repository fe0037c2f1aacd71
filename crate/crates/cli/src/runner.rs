//! Executes an [`ExperimentConfig`] against the library.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::json;

use gchain::coupling::coupling_time_tail;
use gchain::criteria::{dobrushin_sum, ell2_criterion, DobrushinVerdict};
use gchain::diagnostics::{
    beta_mixing_curve, correlation_curve, p_weak_l2_curve, tv_decay_curve, weak_l2_curve, BetaMixingConfig, CorrelationConfig, GrowthVerdict, PWeakL2Config,
    TvDecayConfig, WeakL2Config,
};
use gchain::oracle::{exact_increments, exact_window_law};
use gchain::series::Verdict as SeriesVerdict;
use gchain::sim::{default_burn_in, PastSampler};
use gchain::{DynKernel64, Kernel, RngStream};

use crate::config::{Experiment, ExperimentConfig, SamplerSpec, SCHEMA_VERSION};
use crate::report::{ExperimentResult, Payload, Report, RunMetadata, Verdict};

/// Stream tag separating experiments within one configuration.
const EXPERIMENT_TAG: u64 = 100;

/// Flag overrides, echoed into the report.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Overrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub workers: usize,
    pub overrides: Overrides,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { workers: 1, overrides: Overrides::default() }
    }
}

fn growth(v: GrowthVerdict) -> &'static str {
    match v {
        GrowthVerdict::Bounded => "bounded",
        GrowthVerdict::Divergent => "divergent",
        GrowthVerdict::Inconclusive => "inconclusive",
    }
}

fn series(v: SeriesVerdict) -> &'static str {
    match v {
        SeriesVerdict::Convergent => "convergent",
        SeriesVerdict::Divergent => "divergent",
        SeriesVerdict::Inconclusive => "inconclusive",
    }
}

fn dobrushin(v: DobrushinVerdict) -> &'static str {
    match v {
        DobrushinVerdict::Satisfied => "satisfied",
        DobrushinVerdict::Violated => "violated",
        DobrushinVerdict::Inconclusive => "inconclusive",
    }
}

fn sampler(spec: &SamplerSpec, kernel: &dyn Kernel<f64>, caveats: &mut Vec<String>) -> PastSampler {
    let burn = default_burn_in(kernel);
    let burn_in = spec.burn_in.unwrap_or(burn.steps).max(spec.suffix_len);
    caveats.push(format!(
        "stationary pasts approximated by {burn_in} burn-in steps keeping the last {} symbols; past dependence may persist under a dynamic phase transition",
        spec.suffix_len
    ));
    if spec.burn_in.is_none() && burn.capped {
        caveats.push("default burn-in uses a capped memory scale".into());
    }
    PastSampler { burn_in, suffix_len: spec.suffix_len, tail: spec.tail.resolve() }
}

fn value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("result serialises")
}

fn run_one(kernel: &dyn Kernel<f64>, exp: &Experiment, index: usize, stream: RngStream, workers: usize) -> Result<ExperimentResult> {
    let mut verdicts = Vec::new();
    let mut caveats = Vec::new();
    let (data, csv) = match exp {
        Experiment::WeakL2 { past_x, past_y, horizon, replicas, grid_points, thresholds } => {
            let cfg = WeakL2Config { horizon: *horizon, replicas: *replicas, grid_points: *grid_points, thresholds: *thresholds, keep_replicas: false };
            let c = weak_l2_curve(kernel, &past_x.resolve(), &past_y.resolve(), &cfg, stream, workers)?;
            verdicts.push(Verdict::new("growth", growth(c.verdict)));
            verdicts.push(Verdict::new("sandwich", if c.sandwich.violations == 0 { "holds" } else { "violated" }));
            (value(&c), Some(c.csv()))
        }
        Experiment::PWeakL2 { sampler: s, pairs, replicas_per_pair, horizon, grid_points, thresholds } => {
            let cfg = PWeakL2Config {
                sampler: sampler(s, kernel, &mut caveats),
                pairs: *pairs,
                replicas_per_pair: *replicas_per_pair,
                horizon: *horizon,
                grid_points: *grid_points,
                thresholds: *thresholds,
            };
            let r = p_weak_l2_curve(kernel, &cfg, stream, workers)?;
            let overall = if r.bounded == r.pairs.len() {
                "bounded"
            } else if r.divergent == r.pairs.len() {
                "divergent"
            } else if r.inconclusive == r.pairs.len() {
                "inconclusive"
            } else {
                "mixed"
            };
            verdicts.push(Verdict::new("pairs", overall));
            let mut csv = String::from("pair,verdict,medianSlope,finalMedian,finalMean\n");
            for p in &r.pairs {
                let slope = p.median_slope.map_or(String::new(), |s| format!("{s:.16e}"));
                csv.push_str(&format!("{},{},{},{:.16e},{:.16e}\n", p.pair, growth(p.verdict), slope, p.final_median, p.final_mean));
            }
            (value(&r), Some(csv))
        }
        Experiment::TvDecay { past_x, past_y, horizons, window, replicas, oracle_budget, coupling_window, z } => {
            let cfg = TvDecayConfig {
                horizons: horizons.clone(),
                window: *window,
                replicas: *replicas,
                oracle_budget: *oracle_budget,
                coupling_window: *coupling_window,
                z: *z,
            };
            let c = tv_decay_curve(kernel, &past_x.resolve(), &past_y.resolve(), &cfg, stream, workers)?;
            verdicts.push(Verdict::new("bracketing", if c.exact_dominated && c.monte_carlo_dominated { "holds" } else { "violated" }));
            if !c.exact_complete {
                caveats.push("exact curve limited by the enumeration budget".into());
            }
            caveats.push("coupling tail is censored at the simulation horizon".into());
            (value(&c), Some(c.csv()))
        }
        Experiment::CouplingTail { past_x, past_y, horizons, horizon, window, replicas, z } => {
            let w = window.unwrap_or(horizon / 4);
            let c = coupling_time_tail(kernel, &past_x.resolve(), &past_y.resolve(), horizons, *horizon, w, *replicas, stream, workers, *z)?;
            caveats.push(format!("disagreements after T = {horizon} are unobserved; {} replicas were not coupled in the last {w} steps", c.censored));
            (value(&c), Some(c.csv()))
        }
        Experiment::BetaMixing { horizons, window, pairs, replicas_per_pair, sampler: s, z } => {
            let cfg = BetaMixingConfig {
                horizons: horizons.clone(),
                window: *window,
                pairs: *pairs,
                replicas_per_pair: *replicas_per_pair,
                sampler: sampler(s, kernel, &mut caveats),
                z: *z,
            };
            let b = beta_mixing_curve(kernel, &cfg, stream, workers)?;
            let last = b.horizons.len() - 1;
            let decays = b.isotonic[last] <= 0.5 * b.isotonic[0] && b.ci_high[last] < b.ci_low[0];
            verdicts.push(Verdict::new("decay", if decays { "decaying" } else { "inconclusive" }));
            caveats.push("window TV between stationary past pairs is a proxy for the β-mixing coefficient".into());
            (value(&b), Some(b.csv()))
        }
        Experiment::Correlations { j_max, sample_length, replicas, burn_in, tail, z, thresholds } => {
            let burn = burn_in.unwrap_or_else(|| default_burn_in(kernel).steps);
            let cfg = CorrelationConfig {
                j_max: *j_max,
                sample_length: *sample_length,
                replicas: *replicas,
                burn_in: burn,
                tail: tail.resolve(),
                z: *z,
                thresholds: *thresholds,
            };
            let c = correlation_curve(kernel, &cfg, stream, workers)?;
            verdicts.push(Verdict::new("summability", series(c.abs_sums.verdict)));
            caveats.push(format!("stationarity approximated by {burn} burn-in steps"));
            (value(&c), Some(c.csv()))
        }
        Experiment::CriteriaScan { k_max, search } => {
            let d = dobrushin_sum(kernel, *k_max, search)?;
            let l = ell2_criterion(kernel, *k_max, search)?;
            verdicts.push(Verdict::new("dobrushin", dobrushin(d.normalized_verdict)));
            verdicts.push(Verdict::new("dobrushin-summed", dobrushin(d.summed_verdict)));
            verdicts.push(Verdict::new("ell2", series(l.verdict)));
            if let Some(b) = &l.bounds {
                verdicts.push(Verdict::new("ell2-upper-bound-series", series(b.upper.verdict)));
                if let Some(lo) = &b.lower {
                    verdicts.push(Verdict::new("ell2-lower-bound-series", series(lo.verdict)));
                }
            }
            let mut csv = String::from("k,variation,variationBound,oscillation,oscillationBound\n");
            for k in 0..*k_max {
                let (v, o) = (&l.variations[k], &d.terms[k]);
                csv.push_str(&format!("{},{:.16e},{},{:.16e},{}\n", k + 1, v.value, bound(v.bound), o.value, bound(o.bound)));
            }
            (json!({ "dobrushin": value(&d), "ell2": value(&l), "certified": l.certified }), Some(csv))
        }
        Experiment::OracleCheck { past_x, past_y, t1, horizon, budget } => {
            let (x, y) = (past_x.resolve(), past_y.resolve());
            let law = exact_window_law(kernel, &x, 0, *t1, *budget, workers)?;
            let total: f64 = law.probs.iter().sum();
            let mut marginal_error: f64 = 0.0;
            for t0 in 1..=*t1 {
                let direct = exact_window_law(kernel, &x, t0, *t1, *budget, workers)?;
                let m = law.marginal(t0, *t1)?;
                marginal_error = m.probs.iter().zip(&direct.probs).map(|(a, b)| (a - b).abs()).fold(marginal_error, f64::max);
            }
            let inc = exact_increments(kernel, &x, &y, *horizon, *budget, workers)?;
            verdicts.push(Verdict::new("marginal-consistency", if marginal_error <= 1e-10 { "holds" } else { "violated" }));
            verdicts.push(Verdict::new("sandwich", if inc.sandwich.violations == 0 { "holds" } else { "violated" }));
            let mut csv = String::from("n,squaredIncrement,hellingerIncrement\n");
            for n in 0..=*horizon {
                csv.push_str(&format!("{n},{:.16e},{:.16e}\n", inc.squared[n], inc.hellinger[n]));
            }
            let data = json!({
                "probability_total": total,
                "marginal_max_error": marginal_error,
                "window_evaluations": law.evaluations,
                "weak_l2_expectation": inc.weak_l2_expectation(),
                "squared_increments": inc.squared,
                "hellinger_increments": inc.hellinger,
                "sandwich": inc.sandwich,
                "increment_evaluations": inc.evaluations,
            });
            (data, Some(csv))
        }
    };
    Ok(ExperimentResult { index, kind: exp.kind().into(), verdicts, caveats, data, csv })
}

fn bound(b: gchain::Bound) -> &'static str {
    match b {
        gchain::Bound::Exact => "exact",
        gchain::Bound::LowerBound => "lower",
        gchain::Bound::UpperBound => "upper",
    }
}

/// Runs every experiment of `cfg`; the payload depends only on the config and overrides.
pub fn run_config(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Report> {
    cfg.validate()?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let kernel: DynKernel64 = cfg.model.build().context("model")?;
    let seed = opts.overrides.seed.unwrap_or(cfg.seed);
    let root = RngStream::root(seed);
    let mut results = Vec::with_capacity(cfg.experiments.len());
    let mut experiment_seconds = Vec::with_capacity(cfg.experiments.len());
    for (i, exp) in cfg.experiments.iter().enumerate() {
        let t = Instant::now();
        let r = run_one(kernel.as_ref(), exp, i, root.child(EXPERIMENT_TAG, i as u64), opts.workers)
            .with_context(|| format!("experiments[{i}] ({})", exp.kind()))?;
        experiment_seconds.push(t.elapsed().as_secs_f64());
        results.push(r);
    }
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        payload: Payload {
            name: cfg.name.clone(),
            anchor: cfg.anchor.clone(),
            seed,
            model_family: cfg.model.family().into(),
            model_fingerprint: format!("{:016x}", kernel.fingerprint()),
            config: cfg.clone(),
            overrides: opts.overrides.clone(),
            results,
        },
        metadata: RunMetadata {
            started_unix_seconds: started,
            wall_seconds: clock.elapsed().as_secs_f64(),
            experiment_seconds,
            workers: opts.workers,
            version: env!("CARGO_PKG_VERSION").into(),
        },
    })
}
