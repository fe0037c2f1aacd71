//! Weak-ℓ² partial sums along simulated trajectories.

use serde::{Deserialize, Serialize};

use crate::diagnostics::stats::{mean_se, Quantiles};
use crate::kernel::Kernel;
use crate::oracle::SandwichCheck;
use crate::parallel::map_indexed;
use crate::past::Past;
use crate::rng::{tags, RngStream};
use crate::scalar::Scalar;
use crate::series::{last_decade_slope, SlopeThresholds};
use crate::sim::{draw, uniform, BurnIn, PastSampler};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthVerdict {
    Bounded,
    Divergent,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakL2Config {
    /// Largest `N`.
    pub horizon: usize,
    pub replicas: usize,
    /// Log-spaced points recorded beyond `N = 32`.
    pub grid_points: usize,
    #[serde(default)]
    pub thresholds: SlopeThresholds,
    /// Keep every replica's curve in the output.
    #[serde(default)]
    pub keep_replicas: bool,
}

/// Every `N ≤ 32`, then `points` log-spaced values up to `horizon`.
pub fn horizon_grid(horizon: usize, points: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = (0..=horizon.min(32)).collect();
    if horizon > 32 && points > 0 {
        let (a, b) = ((32f64).ln(), (horizon as f64).ln());
        for i in 1..=points {
            let x = (a + (b - a) * i as f64 / points as f64).exp().round() as usize;
            grid.push(x.clamp(33, horizon));
        }
        grid.push(horizon);
    }
    grid.sort_unstable();
    grid.dedup();
    grid
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakL2Curve<T> {
    pub horizons: Vec<usize>,
    pub replicas: usize,
    pub mean: Vec<T>,
    pub se: Vec<T>,
    pub quantiles: Vec<Quantiles<T>>,
    /// Fitted log-log slope of the median over the last decade of `N`.
    pub median_slope: Option<T>,
    pub verdict: GrowthVerdict,
    /// Every replica's `D_N` is nondecreasing in `N`.
    pub monotone: bool,
    /// Every `D_N ≤ 2(N + 1)`.
    pub within_trivial_bound: bool,
    pub sandwich: SandwichCheck,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_replica: Option<Vec<Vec<T>>>,
}

impl<T: Scalar> WeakL2Curve<T> {
    /// Columns `N, mean, se, q10, q25, median, q75, q90`.
    pub fn csv(&self) -> String {
        let mut out = String::from("N,mean,se,q10,q25,median,q75,q90\n");
        for (i, n) in self.horizons.iter().enumerate() {
            let q = &self.quantiles[i];
            out.push_str(&format!(
                "{n},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.mean[i], self.se[i], q.q10, q.q25, q.median, q.q75, q.q90
            ));
        }
        out
    }

    pub fn at(&self, n: usize) -> Option<usize> {
        self.horizons.iter().position(|h| *h == n)
    }
}

/// One trajectory from `x`: `D_N(ω; x, y)` on the grid.
fn replica<T: Scalar>(kernel: &dyn Kernel<T>, x: &Past, y: &Past, grid: &[usize], stream: RngStream) -> (Vec<T>, SandwichCheck) {
    let n = kernel.alphabet().len();
    let gamma = kernel.non_null_bound();
    let mut rng = stream.generator();
    let mut cx = kernel.cursor(x);
    let mut cy = kernel.cursor(y);
    let (mut p, mut q) = (vec![T::zero(); n], vec![T::zero(); n]);
    let mut sandwich = SandwichCheck::default();
    let mut acc = crate::scalar::CompensatedSum::new();
    let mut out = Vec::with_capacity(grid.len());
    let mut next = 0;
    let last = *grid.last().expect("non-empty grid");
    for t in 0..=last {
        cx.probs(&mut p);
        cy.probs(&mut q);
        let (sq, _) = sandwich.record(&p, &q, gamma);
        acc.add(sq);
        if grid[next] == t {
            out.push(acc.value());
            next += 1;
        }
        if t == last {
            break;
        }
        let s = draw(&p, uniform(&mut rng));
        cx.push(s);
        cy.push(s);
    }
    (out, sandwich)
}

pub(crate) fn weak_l2_unchecked<T: Scalar>(
    kernel: &dyn Kernel<T>,
    x: &Past,
    y: &Past,
    cfg: &WeakL2Config,
    stream: RngStream,
    workers: usize,
) -> WeakL2Curve<T> {
    let grid = horizon_grid(cfg.horizon, cfg.grid_points);
    let runs = map_indexed(workers, cfg.replicas, |r| replica(kernel, x, y, &grid, stream.child(tags::WEAK_L2, r as u64)));
    let mut sandwich = SandwichCheck::default();
    for (_, s) in &runs {
        sandwich.merge(s);
    }
    let monotone = runs.iter().all(|(d, _)| d.windows(2).all(|w| w[1] >= w[0]));
    let within_trivial_bound = runs.iter().all(|(d, _)| d.iter().zip(&grid).all(|(v, n)| v.to_f64_lossy() <= 2.0 * (*n as f64 + 1.0) + 1e-9));
    let mut mean = Vec::with_capacity(grid.len());
    let mut se = Vec::with_capacity(grid.len());
    let mut quantiles = Vec::with_capacity(grid.len());
    let mut column = vec![T::zero(); runs.len()];
    for i in 0..grid.len() {
        for (c, (d, _)) in column.iter_mut().zip(&runs) {
            *c = d[i];
        }
        let (m, s) = mean_se(&column);
        mean.push(m);
        se.push(s);
        quantiles.push(Quantiles::of(&column));
    }
    let xs: Vec<T> = grid.iter().map(|n| T::from_usize_lossy(*n)).collect();
    let medians: Vec<T> = quantiles.iter().map(|q| q.median).collect();
    let median_slope = last_decade_slope(&xs, &medians);
    let verdict = growth_verdict(median_slope, &medians, cfg.thresholds);
    WeakL2Curve {
        horizons: grid,
        replicas: cfg.replicas,
        mean,
        se,
        quantiles,
        median_slope,
        verdict,
        monotone,
        within_trivial_bound,
        sandwich,
        per_replica: cfg.keep_replicas.then(|| runs.into_iter().map(|(d, _)| d).collect()),
    }
}

fn growth_verdict<T: Scalar>(slope: Option<T>, medians: &[T], th: SlopeThresholds) -> GrowthVerdict {
    let grows = matches!((medians.first(), medians.last()), (Some(a), Some(b)) if b > a);
    match slope {
        Some(s) if s.to_f64_lossy() < th.converge_below => GrowthVerdict::Bounded,
        Some(s) if s.to_f64_lossy() > th.diverge_above && grows => GrowthVerdict::Divergent,
        _ => GrowthVerdict::Inconclusive,
    }
}

/// Distribution of `D_N(ω; x, y)` for `ω ~ P^x`, `N` on a log grid.
pub fn weak_l2_curve<T: Scalar>(
    kernel: &dyn Kernel<T>,
    x: &Past,
    y: &Past,
    cfg: &WeakL2Config,
    stream: RngStream,
    workers: usize,
) -> Result<WeakL2Curve<T>, Error> {
    if cfg.horizon < 1 {
        return Err(Error::Horizon("weak-ℓ² curves need N ≥ 1".into()));
    }
    if cfg.replicas < 100 {
        return Err(Error::param("replicas", format!("at least 100 replicas are needed, got {}", cfg.replicas)));
    }
    x.validate(kernel.alphabet())?;
    y.validate(kernel.alphabet())?;
    Ok(weak_l2_unchecked(kernel, x, y, cfg, stream, workers))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PWeakL2Config {
    pub sampler: PastSampler,
    pub pairs: usize,
    pub replicas_per_pair: usize,
    pub horizon: usize,
    pub grid_points: usize,
    #[serde(default)]
    pub thresholds: SlopeThresholds,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome<T> {
    pub pair: usize,
    pub verdict: GrowthVerdict,
    pub median_slope: Option<T>,
    pub final_median: T,
    pub final_mean: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PWeakL2Report<T> {
    pub pairs: Vec<PairOutcome<T>>,
    pub bounded: usize,
    pub divergent: usize,
    pub inconclusive: usize,
    /// Burn-in and suffix length of the stationary surrogate.
    pub burn_in: BurnIn,
    pub suffix_len: usize,
    pub sandwich: SandwichCheck,
}

/// Weak-ℓ² curves for independent pairs of approximately stationary pasts.
pub fn p_weak_l2_curve<T: Scalar>(kernel: &dyn Kernel<T>, cfg: &PWeakL2Config, stream: RngStream, workers: usize) -> Result<PWeakL2Report<T>, Error> {
    if cfg.horizon < 1 || cfg.pairs == 0 || cfg.replicas_per_pair == 0 {
        return Err(Error::param("p-weak-l2", "horizon, pairs and replicas per pair must be positive"));
    }
    cfg.sampler.tail.validate(kernel.alphabet())?;
    let inner =
        WeakL2Config { horizon: cfg.horizon, replicas: cfg.replicas_per_pair, grid_points: cfg.grid_points, thresholds: cfg.thresholds, keep_replicas: false };
    let mut pairs = Vec::with_capacity(cfg.pairs);
    let mut sandwich = SandwichCheck::default();
    for p in 0..cfg.pairs {
        let base = stream.child(tags::PAIR, p as u64);
        let x = cfg.sampler.sample(kernel, base.child(tags::PAIR, 0))?;
        let y = cfg.sampler.sample(kernel, base.child(tags::PAIR, 1))?;
        let curve = weak_l2_unchecked(kernel, &x, &y, &inner, base.child(tags::WEAK_L2, 0), workers);
        sandwich.merge(&curve.sandwich);
        let last = curve.horizons.len() - 1;
        pairs.push(PairOutcome {
            pair: p,
            verdict: curve.verdict,
            median_slope: curve.median_slope,
            final_median: curve.quantiles[last].median,
            final_mean: curve.mean[last],
        });
    }
    let count = |v: GrowthVerdict| pairs.iter().filter(|p| p.verdict == v).count();
    Ok(PWeakL2Report {
        bounded: count(GrowthVerdict::Bounded),
        divergent: count(GrowthVerdict::Divergent),
        inconclusive: count(GrowthVerdict::Inconclusive),
        burn_in: BurnIn { steps: cfg.sampler.burn_in, capped: kernel.memory_scale() >= crate::kernel::MEMORY_SCALE_CAP },
        suffix_len: cfg.sampler.suffix_len,
        sandwich,
        pairs,
    })
}
