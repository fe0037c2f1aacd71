//! Variation rates, oscillations and the uniqueness criteria built on them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::alphabet::Symbol;
use crate::kernel::{Bound, Estimate, Kernel, L2Bounds};
use crate::past::{History, Past};
use crate::rng::{tags, RngStream, StreamRng};
use crate::scalar::Scalar;
use crate::series::{SeriesClassification, SlopeThresholds, TailCertificate, Verdict};
use crate::Error;

/// How the suprema in `var_k` and `osc_k` are approximated when no closed
/// form is available.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchBudget {
    /// Prefixes are enumerated exhaustively when `|S|^k` is at most this.
    pub exhaustive_limit: usize,
    /// Random prefixes drawn otherwise.
    pub random_prefixes: usize,
    /// Random eventually-periodic pasts used when the family declares no extremal pair.
    pub random_pasts: usize,
    /// Longest suffix and period of a random past.
    pub max_random_period: usize,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self { exhaustive_limit: 1 << 12, random_prefixes: 512, random_pasts: 16, max_random_period: 6, seed: 0 }
    }
}

impl SearchBudget {
    pub fn validate(&self) -> Result<(), Error> {
        if self.exhaustive_limit == 0 && self.random_prefixes == 0 {
            return Err(Error::Budget("search budget of zero".into()));
        }
        if self.random_pasts == 0 || self.max_random_period == 0 {
            return Err(Error::Budget("random past budget of zero".into()));
        }
        Ok(())
    }

    fn rng(&self, k: usize) -> StreamRng {
        RngStream::root(self.seed).child(tags::SEARCH, k as u64).generator()
    }
}

/// Prefixes (most recent first) to try, plus whether they are all of them.
fn prefixes<T: Scalar>(kernel: &dyn Kernel<T>, len: usize, budget: &SearchBudget, rng: &mut StreamRng) -> (Vec<Vec<Symbol>>, bool) {
    let n = kernel.alphabet().len();
    match kernel.alphabet().paths(len) {
        Some(total) if total <= budget.exhaustive_limit => {
            let all = (0..total)
                .map(|mut idx| {
                    let mut v = vec![Symbol(0); len];
                    for slot in v.iter_mut().rev() {
                        *slot = Symbol((idx % n) as u8);
                        idx /= n;
                    }
                    v
                })
                .collect();
            (all, true)
        }
        _ => {
            let mut out: Vec<Vec<Symbol>> = (0..n).map(|a| vec![Symbol(a as u8); len]).collect();
            for _ in 0..budget.random_prefixes {
                out.push((0..len).map(|_| Symbol(rng.random_range(0..n) as u8)).collect());
            }
            (out, false)
        }
    }
}

fn random_past(n: usize, max_period: usize, rng: &mut StreamRng) -> Past {
    let l = rng.random_range(0..=max_period);
    let p = rng.random_range(1..=max_period);
    let suffix = (0..l).map(|_| Symbol(rng.random_range(0..n) as u8)).collect();
    let tail = (0..p).map(|_| Symbol(rng.random_range(0..n) as u8)).collect();
    Past::new(suffix, tail).expect("non-empty tail")
}

/// Pasts over which the past supremum runs, plus whether they are exact maximisers.
fn candidate_pasts<T: Scalar>(kernel: &dyn Kernel<T>, budget: &SearchBudget, rng: &mut StreamRng) -> (Vec<Past>, bool) {
    if let Some((hi, lo)) = kernel.extremal_pasts() {
        return (vec![hi, lo], true);
    }
    let n = kernel.alphabet().len();
    let mut out: Vec<Past> = (0..n).map(|a| Past::constant(Symbol(a as u8))).collect();
    for a in 0..n {
        for b in 0..n {
            if a != b {
                out.push(Past::alternating(Symbol(a as u8), Symbol(b as u8)));
            }
        }
    }
    for _ in 0..budget.random_pasts {
        out.push(random_past(n, budget.max_random_period, rng));
    }
    (out, false)
}

/// Conditional law given the most-recent-first prefix glued onto `past`.
fn law<T: Scalar>(kernel: &dyn Kernel<T>, recent: &[Symbol], past: &Past, out: &mut [T]) {
    let full = past.prepend(recent);
    kernel.conditional(&History::of_past(&full), out);
}

/// `var_k(g) = max_a sup_ω sup_{x,y} |g(a ω_{-k}^{-1} x) − g(a ω_{-k}^{-1} y)|`.
pub fn variation_rate<T: Scalar>(kernel: &dyn Kernel<T>, k: usize, budget: &SearchBudget) -> Result<Estimate<T>, Error> {
    budget.validate()?;
    if let Some(v) = kernel.variation_closed_form(k) {
        return Ok(Estimate::exact(v));
    }
    if matches!(kernel.finite_memory(), Some(m) if m <= k) {
        return Ok(Estimate::exact(T::zero()));
    }
    let mut rng = budget.rng(k);
    let (prefs, all_prefixes) = prefixes(kernel, k, budget, &mut rng);
    let (pasts, pasts_exact) = candidate_pasts(kernel, budget, &mut rng);
    let n = kernel.alphabet().len();
    let mut hi = vec![T::zero(); n];
    let mut lo = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    let mut best = T::zero();
    for pre in &prefs {
        hi.fill(T::neg_infinity());
        lo.fill(T::infinity());
        for past in &pasts {
            law(kernel, pre, past, &mut p);
            for a in 0..n {
                hi[a] = hi[a].max(p[a]);
                lo[a] = lo[a].min(p[a]);
            }
        }
        for a in 0..n {
            best = best.max(hi[a] - lo[a]);
        }
    }
    let bound = if all_prefixes && pasts_exact { Bound::Exact } else { Bound::LowerBound };
    Ok(Estimate { value: best, bound })
}

/// `osc_k(g) = Σ_a sup_ω sup_{b,b'} |g(a ω b x) − g(a ω b' x)|` with the flip at lag `k`.
pub fn oscillation<T: Scalar>(kernel: &dyn Kernel<T>, k: usize, budget: &SearchBudget) -> Result<Estimate<T>, Error> {
    budget.validate()?;
    if k == 0 {
        return Err(Error::param("k", "oscillation lags start at 1"));
    }
    if let Some(e) = kernel.oscillation_closed_form(k) {
        return Ok(e);
    }
    if matches!(kernel.finite_memory(), Some(m) if m < k) {
        return Ok(Estimate::exact(T::zero()));
    }
    let mut rng = budget.rng(k);
    let (prefs, all_prefixes) = prefixes(kernel, k - 1, budget, &mut rng);
    let finite_exact = matches!(kernel.finite_memory(), Some(m) if m == k);
    let pasts = if finite_exact {
        vec![Past::constant(Symbol(0))]
    } else {
        let (mut v, _) = candidate_pasts(kernel, budget, &mut rng);
        if let Some((hi, lo)) = kernel.extremal_pasts() {
            // Extremal pasts maximise differences between pasts, not single flips.
            v = vec![hi, lo];
            let n = kernel.alphabet().len();
            for _ in 0..budget.random_pasts {
                v.push(random_past(n, budget.max_random_period, &mut rng));
            }
        }
        v
    };
    let n = kernel.alphabet().len();
    let mut sup = vec![T::zero(); n];
    let laws: Vec<Vec<T>> = vec![vec![T::zero(); n]; n];
    let mut laws = laws;
    let mut recent = Vec::with_capacity(k);
    for pre in &prefs {
        for past in &pasts {
            for (b, slot) in laws.iter_mut().enumerate() {
                recent.clear();
                recent.extend_from_slice(pre);
                recent.push(Symbol(b as u8));
                law(kernel, &recent, past, slot);
            }
            for a in 0..n {
                let (mut mx, mut mn) = (T::neg_infinity(), T::infinity());
                for l in &laws {
                    mx = mx.max(l[a]);
                    mn = mn.min(l[a]);
                }
                sup[a] = sup[a].max(mx - mn);
            }
        }
    }
    let value = crate::scalar::compensated_sum(sup.iter().copied());
    let bound = if all_prefixes && finite_exact { Bound::Exact } else { Bound::LowerBound };
    Ok(Estimate { value, bound })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DobrushinVerdict {
    Satisfied,
    Violated,
    Inconclusive,
}

/// `Σ_k osc_k` in the summed-over-symbols form and in the total-variation
/// normalisation (half of it).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DobrushinSum<T> {
    pub terms: Vec<Estimate<T>>,
    /// Partial sums of the summed form, indexed from `k = 1`.
    pub summed: SeriesClassification<T>,
    /// Certified upper bound on the full summed series, if available.
    pub summed_upper: Option<T>,
    pub summed_verdict: DobrushinVerdict,
    /// Half the summed form: the total-variation oscillation.
    pub normalized_partial: T,
    pub normalized_upper: Option<T>,
    pub normalized_verdict: DobrushinVerdict,
}

fn compare_with_one<T: Scalar>(upper: Option<T>, partial: T, partial_is_lower: bool) -> DobrushinVerdict {
    match upper {
        Some(u) if u < T::one() => DobrushinVerdict::Satisfied,
        _ if partial_is_lower && partial >= T::one() => DobrushinVerdict::Violated,
        _ => DobrushinVerdict::Inconclusive,
    }
}

pub fn dobrushin_sum<T: Scalar>(kernel: &dyn Kernel<T>, k_max: usize, budget: &SearchBudget) -> Result<DobrushinSum<T>, Error> {
    if k_max == 0 {
        return Err(Error::param("k_max", "must be at least 1"));
    }
    let terms = (1..=k_max).map(|k| oscillation(kernel, k, budget)).collect::<Result<Vec<_>, _>>()?;
    let values: Vec<T> = terms.iter().map(|e| e.value).collect();
    let tail = if matches!(kernel.finite_memory(), Some(m) if m <= k_max) {
        TailCertificate::Finite { bound: T::zero() }
    } else {
        kernel.oscillation_tail_bound(k_max).map_or(TailCertificate::None, |bound| TailCertificate::Finite { bound })
    };
    let summed = SeriesClassification::from_terms(1, &values, tail, SlopeThresholds::default());
    let all_upper = terms.iter().all(|e| e.bound != Bound::LowerBound);
    let all_lower = terms.iter().all(|e| e.bound != Bound::UpperBound);
    let summed_upper = if all_upper { summed.total_upper_bound() } else { None };
    let partial = summed.last().unwrap_or_else(T::zero);
    let half = T::lit(0.5);
    let normalized_upper = summed_upper.map(|u| u * half);
    Ok(DobrushinSum {
        summed_verdict: compare_with_one(summed_upper, partial, all_lower),
        normalized_verdict: compare_with_one(normalized_upper, partial * half, all_lower),
        normalized_partial: partial * half,
        normalized_upper,
        summed_upper,
        summed,
        terms,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Ell2Criterion<T> {
    /// `var_k` for `k = 1 ..= k_max`.
    pub variations: Vec<Estimate<T>>,
    /// Partial sums of `var_k²`.
    pub series: SeriesClassification<T>,
    pub bounds: Option<L2Bounds<T>>,
    pub verdict: Verdict,
    /// True when the verdict rests on an analytic certificate.
    pub certified: bool,
}

pub fn ell2_criterion<T: Scalar>(kernel: &dyn Kernel<T>, k_max: usize, budget: &SearchBudget) -> Result<Ell2Criterion<T>, Error> {
    if k_max == 0 {
        return Err(Error::param("k_max", "must be at least 1"));
    }
    let variations = (1..=k_max).map(|k| variation_rate(kernel, k, budget)).collect::<Result<Vec<_>, _>>()?;
    let squares: Vec<T> = variations.iter().map(|e| e.value * e.value).collect();
    let tail = if matches!(kernel.finite_memory(), Some(m) if m <= k_max) { TailCertificate::Finite { bound: T::zero() } } else { TailCertificate::None };
    let series = SeriesClassification::from_terms(1, &squares, tail, SlopeThresholds::default());
    let bounds = kernel.l2_bounds(k_max).transpose()?;
    let (mut verdict, mut certified) = match series.tail {
        TailCertificate::Finite { .. } => (Verdict::Convergent, true),
        _ => (series.verdict, false),
    };
    if let Some(b) = &bounds {
        if matches!(b.upper.tail, TailCertificate::Finite { .. }) {
            (verdict, certified) = (Verdict::Convergent, true);
        } else if b.lower.as_ref().is_some_and(|l| l.tail == TailCertificate::Divergent) {
            (verdict, certified) = (Verdict::Divergent, true);
        }
    }
    Ok(Ell2Criterion { variations, series, bounds, verdict, certified })
}
