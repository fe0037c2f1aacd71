//! Forward simulation of g-chains from fixed or approximately stationary pasts.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::alphabet::Symbol;
use crate::kernel::{Kernel, MEMORY_SCALE_CAP};
use crate::parallel::map_indexed;
use crate::past::Past;
use crate::rng::{tags, RngStream};
use crate::scalar::Scalar;
use crate::Error;

/// Inverse-CDF draw in canonical symbol order; `u ∈ [0, 1)`.
#[inline]
pub fn draw<T: Scalar>(p: &[T], u: T) -> Symbol {
    let mut acc = T::zero();
    let mut last = 0;
    for (i, pi) in p.iter().enumerate() {
        if *pi > T::zero() {
            acc += *pi;
            last = i;
            if u < acc {
                return Symbol(i as u8);
            }
        }
    }
    Symbol(last as u8)
}

#[inline]
pub(crate) fn uniform<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.random::<f64>())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub origin: Past,
    /// `ω_0 … ω_T`.
    pub symbols: Vec<Symbol>,
    /// Fingerprint of the kernel that produced the trajectory.
    pub model: u64,
}

/// Draws `ω_0 … ω_horizon` sequentially from `g(· | ω_0^{t-1} past)`.
pub fn sample_chain<T: Scalar, R: Rng + ?Sized>(kernel: &dyn Kernel<T>, past: &Past, horizon: usize, rng: &mut R) -> Trajectory {
    let mut cursor = kernel.cursor(past);
    let mut p = vec![T::zero(); kernel.alphabet().len()];
    let mut symbols = Vec::with_capacity(horizon + 1);
    for _ in 0..=horizon {
        cursor.probs(&mut p);
        let s = draw(&p, uniform(rng));
        cursor.push(s);
        symbols.push(s);
    }
    Trajectory { origin: past.clone(), symbols, model: kernel.fingerprint() }
}

/// Independent replicas, replica `r` on stream `stream.child(SIMULATION, r)`.
pub fn sample_replicas<T: Scalar>(kernel: &dyn Kernel<T>, past: &Past, horizon: usize, replicas: usize, stream: RngStream, workers: usize) -> Vec<Trajectory> {
    map_indexed(workers, replicas, |r| {
        let mut rng = stream.child(tags::SIMULATION, r as u64).generator();
        sample_chain(kernel, past, horizon, &mut rng)
    })
}

/// One row per replica, symbols as canonical indices.
pub fn trajectories_csv(trajectories: &[Trajectory]) -> String {
    let mut out = String::new();
    for t in trajectories {
        let row: Vec<String> = t.symbols.iter().map(|s| s.0.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Burn-in length with a flag telling whether the memory scale was capped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BurnIn {
    pub steps: usize,
    pub capped: bool,
}

/// `10 ×` the kernel's memory scale.
pub fn default_burn_in<T: Scalar>(kernel: &dyn Kernel<T>) -> BurnIn {
    let scale = kernel.memory_scale();
    BurnIn { steps: 10 * scale, capped: scale >= MEMORY_SCALE_CAP }
}

/// Approximate stationary past: runs `burn_in` steps from `tail` and keeps
/// the last `suffix_len` simulated symbols in front of `tail`.
pub fn sample_stationary_past<T: Scalar, R: Rng + ?Sized>(
    kernel: &dyn Kernel<T>,
    burn_in: usize,
    suffix_len: usize,
    tail: &Past,
    rng: &mut R,
) -> Result<Past, Error> {
    if burn_in < suffix_len {
        return Err(Error::param("burn_in", format!("burn-in {burn_in} is shorter than the suffix length {suffix_len}")));
    }
    let mut cursor = kernel.cursor(tail);
    let mut p = vec![T::zero(); kernel.alphabet().len()];
    let mut recent = Vec::with_capacity(suffix_len);
    for t in 0..burn_in {
        cursor.probs(&mut p);
        let s = draw(&p, uniform(rng));
        cursor.push(s);
        if t + suffix_len >= burn_in {
            recent.push(s);
        }
    }
    recent.reverse();
    Ok(tail.prepend(&recent))
}

/// How stationary pasts are drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PastSampler {
    pub burn_in: usize,
    pub suffix_len: usize,
    pub tail: Past,
}

impl PastSampler {
    pub fn sample<T: Scalar>(&self, kernel: &dyn Kernel<T>, stream: RngStream) -> Result<Past, Error> {
        let mut rng = stream.child(tags::STATIONARY_PAST, 0).generator();
        sample_stationary_past(kernel, self.burn_in, self.suffix_len, &self.tail, &mut rng)
    }
}
