//! Greedy maximal coupling of two g-chains and coupling-time tail estimates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::alphabet::Symbol;
use crate::diagnostics::stats::wilson;
use crate::kernel::{check_distribution, Kernel};
use crate::parallel::map_indexed;
use crate::past::Past;
use crate::rng::{tags, RngStream};
use crate::scalar::Scalar;
use crate::sim::{draw, uniform};
use crate::Error;

/// `Σ_a min(p_a, q_a)`.
pub fn overlap<T: Scalar>(p: &[T], q: &[T]) -> T {
    crate::scalar::compensated_sum(p.iter().zip(q).map(|(a, b)| a.min(*b)))
}

/// Draws `(a, b)` with `a ~ p`, `b ~ q` and `P(a = b) = Σ_a min(p_a, q_a)`.
///
/// A single uniform `u` decides: below the overlap it selects the shared
/// symbol from the `min` vector; otherwise `a` comes from `p`'s residual at
/// `u - overlap` and `b` from `q`'s residual at a second uniform.
pub fn greedy_couple_step<T: Scalar, R: Rng + ?Sized>(p: &[T], q: &[T], rng: &mut R) -> Result<(Symbol, Symbol), Error> {
    let tol = T::lit(1e-10);
    check_distribution(p, tol)?;
    check_distribution(q, tol)?;
    if p.len() != q.len() {
        return Err(Error::InvalidDistribution("distributions over different alphabets".into()));
    }
    Ok(couple_unchecked(p, q, rng))
}

#[inline]
pub(crate) fn couple_unchecked<T: Scalar, R: Rng + ?Sized>(p: &[T], q: &[T], rng: &mut R) -> (Symbol, Symbol) {
    let n = p.len();
    let mut shared = [T::zero(); 256];
    let mut ov = T::zero();
    for i in 0..n {
        shared[i] = p[i].min(q[i]);
        ov += shared[i];
    }
    let u: T = uniform(rng);
    if u < ov {
        let s = draw(&shared[..n], u);
        return (s, s);
    }
    let mut rp = [T::zero(); 256];
    let mut rq = [T::zero(); 256];
    for i in 0..n {
        rp[i] = (p[i] - shared[i]).max(T::zero());
        rq[i] = (q[i] - shared[i]).max(T::zero());
    }
    let rest = T::one() - ov;
    let a = draw(&rp[..n], u - ov);
    let v: T = uniform(rng);
    let b = draw(&rq[..n], v * rest);
    (a, b)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledTrajectory {
    pub past_x: Past,
    pub past_y: Past,
    pub symbols_x: Vec<Symbol>,
    pub symbols_y: Vec<Symbol>,
    /// Largest `t ≤ T` with `ω_t ≠ ω'_t`, or `-1`.
    pub last_disagreement: i64,
    /// No disagreement within the trailing `window` steps.
    pub coupled_at_horizon: bool,
}

/// Runs the stepwise greedy coupling for `t = 0 ..= horizon`.
pub fn couple_chains<T: Scalar, R: Rng + ?Sized>(
    kernel: &dyn Kernel<T>,
    past_x: &Past,
    past_y: &Past,
    horizon: usize,
    window: usize,
    rng: &mut R,
) -> Result<CoupledTrajectory, Error> {
    if horizon < 1 {
        return Err(Error::Horizon("coupling needs T ≥ 1".into()));
    }
    let (sx, sy, last) = run_coupled(kernel, past_x, past_y, horizon, rng, true);
    Ok(CoupledTrajectory {
        past_x: past_x.clone(),
        past_y: past_y.clone(),
        symbols_x: sx,
        symbols_y: sy,
        last_disagreement: last,
        coupled_at_horizon: coupled(last, horizon, window),
    })
}

fn coupled(last: i64, horizon: usize, window: usize) -> bool {
    last < horizon as i64 + 1 - window as i64
}

fn run_coupled<T: Scalar, R: Rng + ?Sized>(
    kernel: &dyn Kernel<T>,
    past_x: &Past,
    past_y: &Past,
    horizon: usize,
    rng: &mut R,
    keep: bool,
) -> (Vec<Symbol>, Vec<Symbol>, i64) {
    let n = kernel.alphabet().len();
    let mut cx = kernel.cursor(past_x);
    let mut cy = kernel.cursor(past_y);
    let (mut p, mut q) = (vec![T::zero(); n], vec![T::zero(); n]);
    let cap = if keep { horizon + 1 } else { 0 };
    let (mut sx, mut sy) = (Vec::with_capacity(cap), Vec::with_capacity(cap));
    let mut last = -1i64;
    for t in 0..=horizon {
        cx.probs(&mut p);
        cy.probs(&mut q);
        let (a, b) = couple_unchecked(&p, &q, rng);
        if a != b {
            last = t as i64;
        }
        cx.push(a);
        cy.push(b);
        if keep {
            sx.push(a);
            sy.push(b);
        }
    }
    (sx, sy, last)
}

/// `n ↦ P(Θ > n)` estimated by the fraction of replicas with a
/// disagreement in `[n, T]`; disagreements after `T` are not observed,
/// so the curve is censored from below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingTail<T> {
    pub horizons: Vec<usize>,
    pub estimate: Vec<T>,
    pub se: Vec<T>,
    pub ci_low: Vec<T>,
    pub ci_high: Vec<T>,
    pub replicas: usize,
    pub horizon: usize,
    pub window: usize,
    /// Replicas with a disagreement inside the trailing window.
    pub censored: usize,
}

#[allow(clippy::too_many_arguments)]
pub fn coupling_time_tail<T: Scalar>(
    kernel: &dyn Kernel<T>,
    past_x: &Past,
    past_y: &Past,
    horizons: &[usize],
    horizon: usize,
    window: usize,
    replicas: usize,
    stream: RngStream,
    workers: usize,
    z: f64,
) -> Result<CouplingTail<T>, Error> {
    let max_h = horizons.iter().copied().max().ok_or_else(|| Error::Horizon("no horizons given".into()))?;
    if max_h + window > horizon {
        return Err(Error::Horizon(format!("max horizon {max_h} + window {window} exceeds T = {horizon}")));
    }
    if replicas == 0 {
        return Err(Error::param("replicas", "must be positive"));
    }
    let last: Vec<i64> = map_indexed(workers, replicas, |r| {
        let mut rng = stream.child(tags::COUPLING, r as u64).generator();
        run_coupled(kernel, past_x, past_y, horizon, &mut rng, false).2
    });
    let nf = replicas as f64;
    let mut out = CouplingTail {
        horizons: horizons.to_vec(),
        estimate: Vec::new(),
        se: Vec::new(),
        ci_low: Vec::new(),
        ci_high: Vec::new(),
        replicas,
        horizon,
        window,
        censored: last.iter().filter(|l| !coupled(**l, horizon, window)).count(),
    };
    for &n in horizons {
        let k = last.iter().filter(|l| **l >= n as i64).count();
        let p = k as f64 / nf;
        let (lo, hi) = wilson(k, replicas, z);
        out.estimate.push(T::lit(p));
        out.se.push(T::lit((p * (1.0 - p) / nf).sqrt()));
        out.ci_low.push(T::lit(lo));
        out.ci_high.push(T::lit(hi));
    }
    Ok(out)
}

impl<T: Scalar> CouplingTail<T> {
    /// Columns `n, tailEstimate, ciLow, ciHigh, replicas, censored`.
    pub fn csv(&self) -> String {
        let mut out = String::from("n,tailEstimate,ciLow,ciHigh,replicas,censored\n");
        for i in 0..self.horizons.len() {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{},{}\n",
                self.horizons[i], self.estimate[i], self.ci_low[i], self.ci_high[i], self.replicas, self.censored
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::models::{FiniteMemoryKernel, FiniteMemoryParams};

    #[test]
    fn equal_laws_always_agree() {
        let mut rng = RngStream::root(1).generator();
        for _ in 0..1000 {
            let (a, b) = greedy_couple_step(&[0.3, 0.7], &[0.3, 0.7], &mut rng).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn disjoint_laws_never_agree() {
        let mut rng = RngStream::root(1).generator();
        for _ in 0..1000 {
            let (a, b) = greedy_couple_step(&[1.0, 0.0], &[0.0, 1.0], &mut rng).unwrap();
            assert_eq!((a, b), (Symbol::PLUS, Symbol::MINUS));
        }
    }

    #[test]
    fn rejects_unnormalised_input() {
        let mut rng = RngStream::root(1).generator();
        assert!(greedy_couple_step(&[0.5, 0.6], &[0.5, 0.5], &mut rng).is_err());
    }

    #[test]
    fn agreement_probability_and_marginals() {
        let (p, q) = ([0.9, 0.1], [0.6, 0.4]);
        let mut rng = RngStream::root(11).generator();
        let n = 200_000;
        let (mut eq, mut a0, mut b0) = (0usize, 0usize, 0usize);
        for _ in 0..n {
            let (a, b) = greedy_couple_step(&p, &q, &mut rng).unwrap();
            eq += (a == b) as usize;
            a0 += (a == Symbol::PLUS) as usize;
            b0 += (b == Symbol::PLUS) as usize;
        }
        let within = |count: usize, prob: f64| ((count as f64 / n as f64) - prob).abs() < 4.0 * (prob * (1.0 - prob) / n as f64).sqrt();
        assert!(within(eq, 0.7));
        assert!(within(a0, 0.9));
        assert!(within(b0, 0.6));
    }

    #[test]
    fn identical_pasts_never_disagree() {
        let table = vec![vec![0.8, 0.2], vec![0.3, 0.7]];
        let k = FiniteMemoryKernel::new(FiniteMemoryParams { alphabet: Alphabet::spin(), order: 1, table }).unwrap();
        let mut rng = RngStream::root(2).generator();
        let c = couple_chains(&k, &Past::plus(), &Past::plus(), 100, 25, &mut rng).unwrap();
        assert_eq!(c.last_disagreement, -1);
        assert!(c.coupled_at_horizon);
        assert_eq!(c.symbols_x, c.symbols_y);
    }

    #[test]
    fn markov_chains_stay_glued() {
        let table = vec![vec![0.8, 0.2], vec![0.3, 0.7]];
        let k = FiniteMemoryKernel::new(FiniteMemoryParams { alphabet: Alphabet::spin(), order: 1, table }).unwrap();
        for r in 0..50 {
            let mut rng = RngStream::root(2).child(tags::COUPLING, r).generator();
            let c = couple_chains(&k, &Past::plus(), &Past::minus(), 60, 10, &mut rng).unwrap();
            if let Some(t) = (0..c.symbols_x.len()).find(|&t| c.symbols_x[t] == c.symbols_y[t]) {
                assert!(c.last_disagreement < t as i64);
            }
        }
    }

    #[test]
    fn tail_horizon_misconfiguration() {
        let k = FiniteMemoryKernel::iid(Alphabet::spin(), vec![0.5, 0.5]).unwrap();
        let r: Result<CouplingTail<f64>, _> = coupling_time_tail(&k, &Past::plus(), &Past::minus(), &[0, 10], 12, 5, 10, RngStream::root(0), 1, 1.96);
        assert!(r.is_err());
        let ok: CouplingTail<f64> = coupling_time_tail(&k, &Past::plus(), &Past::minus(), &[0, 1, 5], 12, 5, 200, RngStream::root(0), 1, 1.96).unwrap();
        assert!(ok.estimate.iter().all(|e| *e == 0.0));
    }
}
