//! Autocovariance of the embedded stationary process from long runs.

use serde::{Deserialize, Serialize};

use crate::diagnostics::stats::{linear_fit, mean_se};
use crate::kernel::Kernel;
use crate::parallel::map_indexed;
use crate::past::Past;
use crate::rng::{tags, RngStream};
use crate::scalar::{CompensatedSum, Scalar};
use crate::series::{SeriesClassification, SlopeThresholds, TailCertificate};
use crate::sim::{draw, uniform};
use crate::Error;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationConfig {
    pub j_max: usize,
    /// Recorded symbols per replica after burn-in.
    pub sample_length: usize,
    /// Independent runs, used as batches for the standard errors.
    pub replicas: usize,
    pub burn_in: usize,
    pub tail: Past,
    pub z: f64,
    #[serde(default)]
    pub thresholds: SlopeThresholds,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurve<T> {
    pub mean: T,
    /// `γ̂_j` for `j = 0 ..= j_max`.
    pub gamma: Vec<T>,
    pub se: Vec<T>,
    pub ci_low: Vec<T>,
    pub ci_high: Vec<T>,
    /// Partial sums `Σ_{j ≤ J} |γ̂_j|` with their growth fit.
    pub abs_sums: SeriesClassification<T>,
    /// `a` in `|γ̂_j| ≈ κ (1 + j)^{−a}`, fitted over lags with `γ̂_j` above `z` standard errors.
    pub decay_exponent: Option<T>,
    pub decay_prefactor: Option<T>,
    pub fitted_lags: usize,
    pub burn_in: usize,
    pub sample_length: usize,
    pub replicas: usize,
}

impl<T: Scalar> CorrelationCurve<T> {
    /// Columns `j, gamma, se, ciLow, ciHigh, absPartialSum`.
    pub fn csv(&self) -> String {
        let mut out = String::from("j,gamma,se,ciLow,ciHigh,absPartialSum\n");
        for j in 0..self.gamma.len() {
            out.push_str(&format!(
                "{j},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.gamma[j], self.se[j], self.ci_low[j], self.ci_high[j], self.abs_sums.partial_sums[j]
            ));
        }
        out
    }
}

/// Sums needed to centre lag products at a pooled mean.
struct LagSums<T> {
    total: T,
    /// `Σ_t ξ_t ξ_{t+j}`.
    cross: Vec<T>,
    /// `Σ_{t < n−j} ξ_t`.
    head: Vec<T>,
    /// `Σ_{t ≥ j} ξ_t`.
    tail: Vec<T>,
}

fn run<T: Scalar>(kernel: &dyn Kernel<T>, cfg: &CorrelationConfig, embedding: &[T], stream: RngStream) -> LagSums<T> {
    let n = kernel.alphabet().len();
    let mut rng = stream.generator();
    let mut cursor = kernel.cursor(&cfg.tail);
    let mut p = vec![T::zero(); n];
    let mut xi = Vec::with_capacity(cfg.sample_length);
    for t in 0..cfg.burn_in + cfg.sample_length {
        cursor.probs(&mut p);
        let s = draw(&p, uniform(&mut rng));
        cursor.push(s);
        if t >= cfg.burn_in {
            xi.push(embedding[s.index()]);
        }
    }
    let len = xi.len();
    let mut prefix = Vec::with_capacity(len + 1);
    let mut acc = CompensatedSum::new();
    prefix.push(T::zero());
    for v in &xi {
        acc.add(*v);
        prefix.push(acc.value());
    }
    let total = prefix[len];
    let mut cross = Vec::with_capacity(cfg.j_max + 1);
    for j in 0..=cfg.j_max {
        let mut c = CompensatedSum::new();
        for t in 0..len - j {
            c.add(xi[t] * xi[t + j]);
        }
        cross.push(c.value());
    }
    let head = (0..=cfg.j_max).map(|j| prefix[len - j]).collect();
    let tail = (0..=cfg.j_max).map(|j| total - prefix[j]).collect();
    LagSums { total, cross, head, tail }
}

/// `γ̂_j = E[ξ_0 ξ_j] − E[ξ_0]E[ξ_j]` from independent long runs.
pub fn correlation_curve<T: Scalar>(kernel: &dyn Kernel<T>, cfg: &CorrelationConfig, stream: RngStream, workers: usize) -> Result<CorrelationCurve<T>, Error> {
    let embedding: Vec<T> = kernel
        .alphabet()
        .embedding()
        .ok_or_else(|| Error::InvalidAlphabet("correlations need a numeric embedding".into()))?
        .iter()
        .map(|v| T::lit(*v))
        .collect();
    if cfg.replicas < 2 {
        return Err(Error::param("replicas", "at least two replicas are needed"));
    }
    if cfg.sample_length <= cfg.j_max {
        return Err(Error::param("sample_length", "must exceed j_max"));
    }
    cfg.tail.validate(kernel.alphabet())?;
    let runs = map_indexed(workers, cfg.replicas, |r| run(kernel, cfg, &embedding, stream.child(tags::CORRELATION, r as u64)));
    let len = T::from_usize_lossy(cfg.sample_length);
    let mean = crate::scalar::compensated_sum(runs.iter().map(|r| r.total)) / (len * T::from_usize_lossy(cfg.replicas));
    let zt = T::lit(cfg.z);
    let (mut gamma, mut se) = (Vec::new(), Vec::new());
    let mut column = vec![T::zero(); runs.len()];
    for j in 0..=cfg.j_max {
        let m = T::from_usize_lossy(cfg.sample_length - j);
        for (c, r) in column.iter_mut().zip(&runs) {
            *c = (r.cross[j] - mean * (r.head[j] + r.tail[j])) / m + mean * mean;
        }
        let (g, s) = mean_se(&column);
        gamma.push(g);
        se.push(s);
    }
    let abs: Vec<T> = gamma.iter().map(|g| g.abs()).collect();
    let abs_sums = SeriesClassification::from_terms(0, &abs, TailCertificate::None, cfg.thresholds);
    let pts: Vec<(T, T)> = (1..=cfg.j_max).filter(|&j| gamma[j] > zt * se[j]).map(|j| (T::from_usize_lossy(1 + j).ln(), gamma[j].ln())).collect();
    let fit = linear_fit(&pts);
    Ok(CorrelationCurve {
        mean,
        ci_low: gamma.iter().zip(&se).map(|(g, s)| *g - zt * *s).collect(),
        ci_high: gamma.iter().zip(&se).map(|(g, s)| *g + zt * *s).collect(),
        gamma,
        se,
        abs_sums,
        decay_exponent: fit.map(|(s, _)| -s),
        decay_prefactor: fit.map(|(_, c)| c.exp()),
        fitted_lags: pts.len(),
        burn_in: cfg.burn_in,
        sample_length: cfg.sample_length,
        replicas: cfg.replicas,
    })
}
