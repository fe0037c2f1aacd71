//! Total-variation decay between chains from two pasts and the β-mixing proxy.
//!
//! Windows are `[n, n + w − 1]`. Three curves bracket the window distance:
//! the exact value where the enumeration budget allows, a Rao-Blackwellised
//! Monte Carlo estimate and the coupling-tail upper bound.

use serde::{Deserialize, Serialize};

use crate::coupling::{couple_unchecked, coupling_time_tail, CouplingTail};
use crate::diagnostics::stats::{isotonic_nonincreasing, linear_fit, mean_se};
use crate::kernel::Kernel;
use crate::oracle::{exact_window_law, leaves_dfs};
use crate::parallel::map_indexed;
use crate::past::Past;
use crate::rng::{tags, RngStream};
use crate::scalar::{CompensatedSum, Scalar};
use crate::sim::{BurnIn, PastSampler};
use crate::Error;

/// Largest number of window cells the histogram estimators accept.
pub const MAX_WINDOW_CELLS: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TvDecayConfig {
    /// Window starts, strictly increasing.
    pub horizons: Vec<usize>,
    pub window: usize,
    pub replicas: usize,
    /// Path budget for the exact curve.
    pub oracle_budget: usize,
    /// Trailing coupling window; defaults to a third of the largest horizon.
    #[serde(default)]
    pub coupling_window: Option<usize>,
    /// Width of the reported intervals in standard errors.
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvDecayCurve<T> {
    pub horizons: Vec<usize>,
    pub window: usize,
    /// Exact window distance where `|S|^{n+w}` fits the budget.
    pub exact: Vec<Option<T>>,
    /// False when some horizons fell outside the enumeration budget.
    pub exact_complete: bool,
    pub monte_carlo: Vec<T>,
    pub monte_carlo_se: Vec<T>,
    pub monte_carlo_ci_low: Vec<T>,
    pub monte_carlo_ci_high: Vec<T>,
    pub coupling: CouplingTail<T>,
    /// Exact values never exceed the coupling tail by more than `z` standard errors.
    pub exact_dominated: bool,
    pub monte_carlo_dominated: bool,
}

impl<T: Scalar> TvDecayCurve<T> {
    /// Columns `n, exact, monteCarlo, mcCiLow, mcCiHigh, couplingTail, couplingCiHigh`.
    pub fn csv(&self) -> String {
        let mut out = String::from("n,exact,monteCarlo,mcCiLow,mcCiHigh,couplingTail,couplingCiHigh\n");
        for i in 0..self.horizons.len() {
            let exact = self.exact[i].map_or(String::new(), |v| format!("{v:.16e}"));
            out.push_str(&format!(
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.horizons[i],
                exact,
                self.monte_carlo[i],
                self.monte_carlo_ci_low[i],
                self.monte_carlo_ci_high[i],
                self.coupling.estimate[i],
                self.coupling.ci_high[i]
            ));
        }
        out
    }
}

fn window_cells<T: Scalar>(kernel: &dyn Kernel<T>, horizons: &[usize], window: usize) -> Result<usize, Error> {
    if horizons.is_empty() || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Horizon("horizons must be non-empty and strictly increasing".into()));
    }
    if window == 0 {
        return Err(Error::param("window", "must be at least 1"));
    }
    kernel
        .alphabet()
        .paths(window)
        .filter(|c| *c <= MAX_WINDOW_CELLS)
        .ok_or_else(|| Error::Budget(format!("{}^{window} window cells exceed {MAX_WINDOW_CELLS}", kernel.alphabet().len())))
}

/// One coupled prefix pair; for each horizon the difference of the exact
/// window laws given the two prefixes, flattened horizon-major.
fn rb_replica<T: Scalar>(kernel: &dyn Kernel<T>, x: &Past, y: &Past, horizons: &[usize], window: usize, cells: usize, stream: RngStream) -> Vec<T> {
    let n = kernel.alphabet().len();
    let mut rng = stream.generator();
    let mut cx = kernel.cursor(x);
    let mut cy = kernel.cursor(y);
    let (mut p, mut q) = (vec![T::zero(); n], vec![T::zero(); n]);
    let mut out = vec![T::zero(); horizons.len() * cells];
    let (mut lx, mut ly) = (vec![T::zero(); cells], vec![T::zero(); cells]);
    let mut evals = 0u64;
    let mut t = 0;
    for (h, &target) in horizons.iter().enumerate() {
        while t < target {
            cx.probs(&mut p);
            cy.probs(&mut q);
            let (a, b) = couple_unchecked(&p, &q, &mut rng);
            cx.push(a);
            cy.push(b);
            t += 1;
        }
        leaves_dfs(cx.fork(), T::one(), &mut lx, n, &mut evals);
        leaves_dfs(cy.fork(), T::one(), &mut ly, n, &mut evals);
        let _ = window;
        for v in 0..cells {
            out[h * cells + v] = lx[v] - ly[v];
        }
    }
    out
}

/// `(estimate, se, ci_low, ci_high)` per horizon from replica differences.
fn rb_summary<T: Scalar>(runs: &[Vec<T>], horizons: usize, cells: usize, z: f64) -> Vec<(T, T, T, T)> {
    let zt = T::lit(z);
    let half = T::lit(0.5);
    let mut column = vec![T::zero(); runs.len()];
    (0..horizons)
        .map(|h| {
            let (mut est, mut var, mut lo, mut hi) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
            for v in 0..cells {
                for (c, r) in column.iter_mut().zip(runs) {
                    *c = r[h * cells + v];
                }
                let (m, s) = mean_se(&column);
                est.add(m.abs());
                var.add(s * s);
                lo.add((m.abs() - zt * s).max(T::zero()));
                hi.add(m.abs() + zt * s);
            }
            (est.value() * half, var.value().sqrt() * half, lo.value() * half, (hi.value() * half).min(T::one()))
        })
        .collect()
}

/// Window TV between the chains from `x` and `y` at each horizon.
pub fn tv_decay_curve<T: Scalar>(
    kernel: &dyn Kernel<T>,
    x: &Past,
    y: &Past,
    cfg: &TvDecayConfig,
    stream: RngStream,
    workers: usize,
) -> Result<TvDecayCurve<T>, Error> {
    let cells = window_cells(kernel, &cfg.horizons, cfg.window)?;
    if cfg.replicas < 2 {
        return Err(Error::param("replicas", "at least two replicas are needed"));
    }
    x.validate(kernel.alphabet())?;
    y.validate(kernel.alphabet())?;
    let w = cfg.window;
    let n_sym = kernel.alphabet().len();
    let fits = |n: usize| kernel.alphabet().paths(n + w).is_some_and(|p| p <= cfg.oracle_budget);
    let reach = cfg.horizons.iter().copied().filter(|n| fits(*n)).max();
    let mut exact = vec![None; cfg.horizons.len()];
    if let Some(top) = reach {
        let lx = exact_window_law(kernel, x, 0, top + w - 1, cfg.oracle_budget, workers)?;
        let ly = exact_window_law(kernel, y, 0, top + w - 1, cfg.oracle_budget, workers)?;
        for (i, &n) in cfg.horizons.iter().enumerate() {
            if n <= top {
                exact[i] = Some(lx.marginal(n, n + w - 1)?.tv(&ly.marginal(n, n + w - 1)?)?);
            }
        }
    }
    let _ = n_sym;
    let runs = map_indexed(workers, cfg.replicas, |r| rb_replica(kernel, x, y, &cfg.horizons, w, cells, stream.child(tags::TV_DECAY, r as u64)));
    let summary = rb_summary(&runs, cfg.horizons.len(), cells, cfg.z);
    let max_h = *cfg.horizons.last().expect("non-empty");
    let cw = cfg.coupling_window.unwrap_or(max_h.div_ceil(3)).max(w);
    let coupling = coupling_time_tail(kernel, x, y, &cfg.horizons, max_h + cw, cw, cfg.replicas, stream.child(tags::COUPLING, 0), workers, cfg.z)?;
    let zt = T::lit(cfg.z);
    let exact_dominated = exact.iter().enumerate().all(|(i, e)| e.is_none_or(|v| v <= coupling.estimate[i] + zt * coupling.se[i]));
    let monte_carlo_dominated = summary.iter().enumerate().all(|(i, s)| {
        let sd = (s.1 * s.1 + coupling.se[i] * coupling.se[i]).sqrt();
        s.0 <= coupling.estimate[i] + zt * sd
    });
    Ok(TvDecayCurve {
        horizons: cfg.horizons.clone(),
        window: w,
        exact_complete: exact.iter().all(|e| e.is_some()),
        exact,
        monte_carlo: summary.iter().map(|s| s.0).collect(),
        monte_carlo_se: summary.iter().map(|s| s.1).collect(),
        monte_carlo_ci_low: summary.iter().map(|s| s.2).collect(),
        monte_carlo_ci_high: summary.iter().map(|s| s.3).collect(),
        coupling,
        exact_dominated,
        monte_carlo_dominated,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaMixingConfig {
    pub horizons: Vec<usize>,
    pub window: usize,
    pub pairs: usize,
    pub replicas_per_pair: usize,
    pub sampler: PastSampler,
    pub z: f64,
}

/// Fitted decay of a nonnegative curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit<T> {
    /// `a` in `c · n^{−a}`.
    pub power_exponent: Option<T>,
    pub power_prefactor: Option<T>,
    /// `ρ` in `c · ρ^n`.
    pub geometric_rate: Option<T>,
}

impl<T: Scalar> DecayFit<T> {
    pub fn of(xs: &[usize], ys: &[T]) -> Self {
        let pts: Vec<(usize, T)> = xs.iter().zip(ys).filter(|(x, y)| **x >= 1 && **y > T::zero()).map(|(x, y)| (*x, *y)).collect();
        let power: Vec<(T, T)> = pts.iter().map(|(x, y)| (T::from_usize_lossy(*x).ln(), y.ln())).collect();
        let geo: Vec<(T, T)> = pts.iter().map(|(x, y)| (T::from_usize_lossy(*x), y.ln())).collect();
        let p = linear_fit(&power);
        Self { power_exponent: p.map(|(s, _)| -s), power_prefactor: p.map(|(_, c)| c.exp()), geometric_rate: linear_fit(&geo).map(|(s, _)| s.exp()) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaMixingCurve<T> {
    pub horizons: Vec<usize>,
    pub window: usize,
    pub raw: Vec<T>,
    pub se: Vec<T>,
    pub ci_low: Vec<T>,
    pub ci_high: Vec<T>,
    /// Nonincreasing least-squares fit of `raw`.
    pub isotonic: Vec<T>,
    pub decay: DecayFit<T>,
    pub pairs: usize,
    pub replicas_per_pair: usize,
    pub burn_in: BurnIn,
    pub suffix_len: usize,
}

impl<T: Scalar> BetaMixingCurve<T> {
    /// Columns `n, raw, ciLow, ciHigh, isotonic`.
    pub fn csv(&self) -> String {
        let mut out = String::from("n,raw,ciLow,ciHigh,isotonic\n");
        for i in 0..self.horizons.len() {
            out.push_str(&format!("{},{:.16e},{:.16e},{:.16e},{:.16e}\n", self.horizons[i], self.raw[i], self.ci_low[i], self.ci_high[i], self.isotonic[i]));
        }
        out
    }
}

/// `β̂(n)`: mean window TV between chains from independent stationary pasts.
pub fn beta_mixing_curve<T: Scalar>(kernel: &dyn Kernel<T>, cfg: &BetaMixingConfig, stream: RngStream, workers: usize) -> Result<BetaMixingCurve<T>, Error> {
    let cells = window_cells(kernel, &cfg.horizons, cfg.window)?;
    if cfg.pairs < 2 || cfg.replicas_per_pair < 2 {
        return Err(Error::param("pairs", "at least two pairs and two replicas per pair are needed"));
    }
    cfg.sampler.tail.validate(kernel.alphabet())?;
    let h = cfg.horizons.len();
    let mut per_pair: Vec<Vec<T>> = vec![Vec::with_capacity(cfg.pairs); h];
    for p in 0..cfg.pairs {
        let base = stream.child(tags::BETA_MIXING, p as u64);
        let x = cfg.sampler.sample(kernel, base.child(tags::PAIR, 0))?;
        let y = cfg.sampler.sample(kernel, base.child(tags::PAIR, 1))?;
        let runs =
            map_indexed(workers, cfg.replicas_per_pair, |r| rb_replica(kernel, &x, &y, &cfg.horizons, cfg.window, cells, base.child(tags::TV_DECAY, r as u64)));
        for (i, s) in rb_summary(&runs, h, cells, cfg.z).into_iter().enumerate() {
            per_pair[i].push(s.0);
        }
    }
    let zt = T::lit(cfg.z);
    let stats: Vec<(T, T)> = per_pair.iter().map(|v| mean_se(v)).collect();
    let raw: Vec<T> = stats.iter().map(|s| s.0).collect();
    let se: Vec<T> = stats.iter().map(|s| s.1).collect();
    let weights = vec![T::one(); h];
    let isotonic = isotonic_nonincreasing(&raw, &weights);
    Ok(BetaMixingCurve {
        decay: DecayFit::of(&cfg.horizons, &isotonic),
        ci_low: raw.iter().zip(&se).map(|(m, s)| (*m - zt * *s).max(T::zero())).collect(),
        ci_high: raw.iter().zip(&se).map(|(m, s)| *m + zt * *s).collect(),
        horizons: cfg.horizons.clone(),
        window: cfg.window,
        raw,
        se,
        isotonic,
        pairs: cfg.pairs,
        replicas_per_pair: cfg.replicas_per_pair,
        burn_in: BurnIn { steps: cfg.sampler.burn_in, capped: kernel.memory_scale() >= crate::kernel::MEMORY_SCALE_CAP },
        suffix_len: cfg.sampler.suffix_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::models::*;
    use crate::oracle::{MarkovChain, DEFAULT_BUDGET};

    fn tv_cfg(horizons: Vec<usize>, replicas: usize) -> TvDecayConfig {
        TvDecayConfig { horizons, window: 3, replicas, oracle_budget: DEFAULT_BUDGET, coupling_window: None, z: 4.0 }
    }

    #[test]
    fn iid_curves_vanish() {
        let k = FiniteMemoryKernel::iid(Alphabet::spin(), vec![0.3, 0.7]).unwrap();
        let c: TvDecayCurve<f64> = tv_decay_curve(&k, &Past::plus(), &Past::minus(), &tv_cfg(vec![0, 2, 5], 50), RngStream::root(1), 1).unwrap();
        assert!(c.exact.iter().all(|e| *e == Some(0.0)));
        assert!(c.monte_carlo.iter().all(|e| *e == 0.0));
        assert!(c.coupling.estimate.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn window_cap_and_horizon_order() {
        let k = FiniteMemoryKernel::iid(Alphabet::spin(), vec![0.3, 0.7]).unwrap();
        let mut cfg = tv_cfg(vec![0, 2], 10);
        cfg.window = 13;
        assert!(tv_decay_curve::<f64>(&k, &Past::plus(), &Past::minus(), &cfg, RngStream::root(1), 1).is_err());
        let cfg = tv_cfg(vec![2, 2], 10);
        assert!(tv_decay_curve::<f64>(&k, &Past::plus(), &Past::minus(), &cfg, RngStream::root(1), 1).is_err());
    }

    #[test]
    fn exact_degrades_past_the_budget() {
        let k = ArKernel::new(ArParams::ising(0.8, 0.9, 0.0).unwrap()).unwrap();
        let mut cfg = tv_cfg(vec![0, 4, 12], 200);
        cfg.oracle_budget = 1 << 10;
        let c: TvDecayCurve<f64> = tv_decay_curve(&k, &Past::plus(), &Past::minus(), &cfg, RngStream::root(3), 1).unwrap();
        assert!(!c.exact_complete);
        assert!(c.exact[0].is_some() && c.exact[2].is_none());
        let e0 = c.exact[0].unwrap();
        assert!((c.monte_carlo[0] - e0).abs() < 1e-12, "n = 0 has no randomness");
        assert!(c.exact_dominated && c.monte_carlo_dominated);
    }

    #[test]
    fn markov_beta_mixing_tracks_the_exact_rate() {
        let table = vec![vec![0.8, 0.2], vec![0.3, 0.7]];
        let k = FiniteMemoryKernel::new(FiniteMemoryParams { alphabet: Alphabet::spin(), order: 1, table }).unwrap();
        let chain = MarkovChain::from_kernel(&k);
        let pi = chain.stationary(1e-15, 10_000).unwrap();
        let horizons = vec![0, 1, 2, 3];
        let cfg = BetaMixingConfig {
            horizons: horizons.clone(),
            window: 2,
            pairs: 400,
            replicas_per_pair: 2,
            sampler: PastSampler { burn_in: 40, suffix_len: 4, tail: Past::plus() },
            z: 4.0,
        };
        let b: BetaMixingCurve<f64> = beta_mixing_curve(&k, &cfg, RngStream::root(7), 1).unwrap();
        // Order one: the Rao-Blackwellised estimate is exact for each pair, so only the pair average is random.
        for (i, n) in horizons.iter().enumerate() {
            let want = chain.pair_window_tv(&pi, *n, 2);
            assert!((b.raw[i] - want).abs() <= 4.0 * b.se[i] + 1e-12, "n={n}: {} vs {want} ± {}", b.raw[i], b.se[i]);
        }
        let rate = b.decay.geometric_rate.unwrap();
        assert!((rate - 0.5).abs() < 0.1, "{rate}");
    }
}
