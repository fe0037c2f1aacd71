//! Mixtures of majority rules over nested blocks of the recent past.
//!
//! `g(a | x) = Σ_j λ_j ψ(a · mean(x_{-1}, …, x_{-m_j}))` on the spin
//! alphabet, for a finite list of odd block lengths `m_1 < m_2 < …`.

use serde::{Deserialize, Serialize};

use super::link::Psi;
use crate::alphabet::{Alphabet, Symbol};
use crate::kernel::{fingerprint_of, BoxCursor, Cursor, Estimate, Kernel, L2Bounds};
use crate::past::{History, Past, SpinSums};
use crate::scalar::Scalar;
use crate::series::{SeriesClassification, SlopeThresholds, TailCertificate};
use crate::Error;

/// The infinite geometric family `m_j = M^j`, `λ_j = (1-ρ) ρ^{j-1}` whose
/// renormalised truncation a parameter set represents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricFamily<T> {
    pub m_ratio: usize,
    pub lambda_ratio: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BkfParams<T> {
    pub m: Vec<usize>,
    pub lambda: Vec<T>,
    pub psi: Psi<T>,
    /// Witness for the lacunarity condition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<T>,
    /// Infinite geometric family the blocks truncate, used for the bound series.
    /// Serialised as `geometric` since `family` tags the model.
    #[serde(default, rename = "geometric", skip_serializing_if = "Option::is_none")]
    pub family: Option<GeometricFamily<T>>,
}

impl<T: Scalar> BkfParams<T> {
    /// First `blocks` members of a geometric family, weights renormalised.
    pub fn geometric(m_ratio: usize, lambda_ratio: T, blocks: usize, psi: Psi<T>, r0: Option<T>) -> Result<Self, Error> {
        if blocks == 0 {
            return Err(Error::param("blocks", "need at least one block"));
        }
        if !(lambda_ratio > T::zero() && lambda_ratio < T::one()) {
            return Err(Error::param("family.lambda_ratio", "must lie in (0, 1)"));
        }
        let mut m = Vec::with_capacity(blocks);
        let mut mj: usize = 1;
        for _ in 0..blocks {
            mj = mj.checked_mul(m_ratio).ok_or_else(|| Error::param("family.m_ratio", "block length overflows"))?;
            m.push(mj);
        }
        let raw: Vec<T> = (0..blocks).map(|j| lambda_ratio.powi(j as i32)).collect();
        let total = crate::scalar::compensated_sum(raw.iter().copied());
        let lambda = raw.into_iter().map(|l| l / total).collect();
        let p = Self { m, lambda, psi, r0, family: Some(GeometricFamily { m_ratio, lambda_ratio }) };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.m.is_empty() || self.m.len() != self.lambda.len() {
            return Err(Error::param("m", "need one weight per block and at least one block"));
        }
        if self.m.iter().any(|m| m % 2 == 0) {
            return Err(Error::param("m", "block lengths must be odd"));
        }
        if self.m.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("m", "block lengths must be strictly increasing"));
        }
        if self.lambda.iter().any(|l| !(*l > T::zero())) {
            return Err(Error::param("lambda", "weights must be positive"));
        }
        let total = crate::scalar::compensated_sum(self.lambda.iter().copied());
        let tol = T::lit(1e-15).max(T::epsilon() * T::lit(4.0));
        if (total - T::one()).abs() > tol {
            return Err(Error::param("lambda", format!("weights sum to {total}, not 1")));
        }
        self.psi.validate()?;
        if let Some(r0) = self.r0 {
            if !(r0 >= T::zero() && r0 < T::one()) {
                return Err(Error::param("r0", "must lie in [0, 1)"));
            }
        }
        if let Some(f) = &self.family {
            if !(f.lambda_ratio > T::zero() && f.lambda_ratio < T::one()) {
                return Err(Error::param("family.lambda_ratio", "must lie in (0, 1)"));
            }
            let mut mj = 1usize;
            for (j, m) in self.m.iter().enumerate() {
                mj = mj.saturating_mul(f.m_ratio);
                let want = f.lambda_ratio.powi(j as i32);
                let ratio = self.lambda[j] / self.lambda[0];
                if *m != mj || (ratio - want).abs() > T::lit(1e-9) * want {
                    return Err(Error::param("family", "blocks do not match the declared geometric family"));
                }
            }
        }
        Ok(())
    }

    pub fn epsilon(&self) -> T {
        self.psi.epsilon()
    }

    /// True iff `r0` is supplied, `ψ(r0) > ψ(-r0)` and
    /// `m_{j+1} ≥ 4 m_j / (1 - r0)` for every consecutive pair (and for the
    /// declared family ratio, when present).
    pub fn is_lacunary(&self) -> bool {
        let Some(r0) = self.r0 else { return false };
        if !(self.psi.eval(r0) > self.psi.eval(-r0)) {
            return false;
        }
        let factor = T::lit(4.0) / (T::one() - r0);
        let ok = |lo: usize, hi: usize| T::from_usize_lossy(hi) >= factor * T::from_usize_lossy(lo);
        let pairs = self.m.windows(2).all(|w| ok(w[0], w[1]));
        match &self.family {
            Some(f) => pairs && ok(1, f.m_ratio),
            None => pairs,
        }
    }

    /// Terms `m_n (Σ_{k≥n} λ_k)²` for `n = 1..=n_max` and a certificate for
    /// the remainder beyond `n_max`. With a declared family the terms are
    /// those of the infinite family; otherwise of the finite mixture.
    pub fn bound_terms(&self, n_max: usize) -> (Vec<T>, TailCertificate<T>) {
        match &self.family {
            Some(f) => {
                let m = T::from_usize_lossy(f.m_ratio);
                let q = m * f.lambda_ratio * f.lambda_ratio;
                let terms: Vec<T> = (0..n_max).map(|i| m * q.powi(i as i32)).collect();
                let tail =
                    if q >= T::one() { TailCertificate::Divergent } else { TailCertificate::Finite { bound: m * q.powi(n_max as i32) / (T::one() - q) } };
                (terms, tail)
            }
            None => {
                let j = self.m.len();
                let mut tails = vec![T::zero(); j + 1];
                for i in (0..j).rev() {
                    tails[i] = tails[i + 1] + self.lambda[i];
                }
                let term = |i: usize| if i < j { T::from_usize_lossy(self.m[i]) * tails[i] * tails[i] } else { T::zero() };
                let terms: Vec<T> = (0..n_max).map(term).collect();
                let rest = crate::scalar::compensated_sum((n_max..j).map(term));
                (terms, TailCertificate::Finite { bound: rest })
            }
        }
    }

    /// `(1-r0)/4 · (ψ(r0) - ψ(-r0))² · Σ_{n≥2} m_n (Σ_{k≥n} λ_k)²`; requires
    /// lacunarity.
    pub fn lower_bound_series(&self, n_max: usize) -> Result<SeriesClassification<T>, Error> {
        if !self.is_lacunary() {
            return Err(Error::Unsupported("lower bound series requires a lacunary block sequence with witness r0".into()));
        }
        let r0 = self.r0.expect("lacunary implies r0");
        let gap = self.psi.eval(r0) - self.psi.eval(-r0);
        let pre = (T::one() - r0) / T::lit(4.0) * gap * gap;
        let (terms, tail) = self.bound_terms(n_max);
        let scaled: Vec<T> = terms.iter().skip(1).map(|t| *t * pre).collect();
        Ok(SeriesClassification::from_terms(2, &scaled, scale_tail(tail, pre), SlopeThresholds::default()))
    }

    /// `(1-ε)² Σ_{n≥1} m_n (Σ_{k≥n} λ_k)²`.
    pub fn upper_bound_series(&self, n_max: usize) -> SeriesClassification<T> {
        let e = T::one() - self.epsilon();
        let pre = e * e;
        let (terms, tail) = self.bound_terms(n_max);
        let scaled: Vec<T> = terms.iter().map(|t| *t * pre).collect();
        SeriesClassification::from_terms(1, &scaled, scale_tail(tail, pre), SlopeThresholds::default())
    }
}

fn scale_tail<T: Scalar>(tail: TailCertificate<T>, c: T) -> TailCertificate<T> {
    match tail {
        TailCertificate::Finite { bound } => TailCertificate::Finite { bound: bound * c },
        other => other,
    }
}

#[derive(Debug)]
pub struct BkfKernel<T> {
    params: BkfParams<T>,
    alphabet: Alphabet,
    fingerprint: u64,
}

impl<T: Scalar> BkfKernel<T> {
    pub fn new(params: BkfParams<T>) -> Result<Self, Error> {
        params.validate()?;
        let fingerprint = fingerprint_of("bkf", &params);
        Ok(Self { params, alphabet: Alphabet::spin(), fingerprint })
    }

    pub fn params(&self) -> &BkfParams<T> {
        &self.params
    }

    fn m_max(&self) -> usize {
        *self.params.m.last().expect("nonempty")
    }

    #[inline]
    fn plus_prob(&self, block_sum: impl Fn(usize) -> i64) -> (T, T) {
        let mut plus = crate::scalar::CompensatedSum::new();
        let mut minus = crate::scalar::CompensatedSum::new();
        for (m, l) in self.params.m.iter().zip(&self.params.lambda) {
            let r = T::from_i64(block_sum(*m)).expect("i64 fits") / T::from_usize_lossy(*m);
            plus.add(*l * self.params.psi.eval(r));
            minus.add(*l * self.params.psi.eval(-r));
        }
        (plus.value(), minus.value())
    }
}

impl<T: Scalar> Kernel<T> for BkfKernel<T> {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn non_null_bound(&self) -> T {
        self.params.epsilon()
    }

    fn conditional(&self, history: &History<'_>, out: &mut [T]) {
        let (p, m) = self.plus_prob(|n| history.spin_sum(n));
        out[Symbol::PLUS.index()] = p;
        out[Symbol::MINUS.index()] = m;
    }

    fn cursor<'a>(&'a self, past: &'a Past) -> BoxCursor<'a, T> {
        Box::new(BkfCursor { kernel: self, past: SpinSums::new(past), cum: vec![0] })
    }

    fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    fn memory_scale(&self) -> usize {
        self.m_max()
    }

    fn finite_memory(&self) -> Option<usize> {
        Some(self.m_max())
    }

    fn extremal_pasts(&self) -> Option<(Past, Past)> {
        Some((Past::plus(), Past::minus()))
    }

    fn variation_closed_form(&self, k: usize) -> Option<T> {
        let gap = T::one() - T::lit(2.0) * self.params.epsilon();
        let blocks = self.params.m.iter().zip(&self.params.lambda).filter(|(m, _)| **m > k);
        match &self.params.psi {
            Psi::Linear { .. } => Some(gap * crate::scalar::compensated_sum(blocks.map(|(m, l)| *l * T::from_usize_lossy(m - k) / T::from_usize_lossy(*m)))),
            Psi::Step { .. } => Some(gap * crate::scalar::compensated_sum(blocks.map(|(_, l)| *l))),
            Psi::Tabulated { .. } => None,
        }
    }

    fn oscillation_closed_form(&self, k: usize) -> Option<Estimate<T>> {
        if k == 0 {
            return None;
        }
        let two = T::lit(2.0);
        let gap = T::one() - two * self.params.epsilon();
        let blocks = || self.params.m.iter().zip(&self.params.lambda).filter(|(m, _)| **m >= k);
        Some(match &self.params.psi {
            Psi::Linear { .. } => Estimate::exact(two * gap * crate::scalar::compensated_sum(blocks().map(|(m, l)| *l / T::from_usize_lossy(*m)))),
            Psi::Step { .. } => Estimate::exact(two * gap * crate::scalar::compensated_sum(blocks().map(|(_, l)| *l))),
            psi @ Psi::Tabulated { .. } => {
                let lip = psi.lipschitz();
                Estimate::upper(two * crate::scalar::compensated_sum(blocks().map(|(m, l)| *l * (two * lip / T::from_usize_lossy(*m)).min(gap))))
            }
        })
    }

    fn oscillation_tail_bound(&self, k_max: usize) -> Option<T> {
        let m_max = self.m_max();
        Some(crate::scalar::compensated_sum((k_max + 1..=m_max).map(|k| self.oscillation_closed_form(k).expect("k ≥ 1").value)))
    }

    fn l2_bounds(&self, n_max: usize) -> Option<Result<L2Bounds<T>, Error>> {
        let lower = self.params.lower_bound_series(n_max).ok();
        Some(Ok(L2Bounds { lower, upper: self.params.upper_bound_series(n_max) }))
    }
}

struct BkfCursor<'a, T> {
    kernel: &'a BkfKernel<T>,
    past: SpinSums,
    /// `cum[t]` is the spin sum of the first `t` simulated symbols.
    cum: Vec<i64>,
}

impl<'a, T: Scalar> Cursor<'a, T> for BkfCursor<'a, T> {
    fn probs(&mut self, out: &mut [T]) {
        let t = self.cum.len() - 1;
        let cum = &self.cum;
        let past = &self.past;
        let (p, m) = self.kernel.plus_prob(|n| if n <= t { cum[t] - cum[t - n] } else { cum[t] + past.sum(n - t) });
        out[Symbol::PLUS.index()] = p;
        out[Symbol::MINUS.index()] = m;
    }

    fn push(&mut self, s: Symbol) {
        let last = self.cum[self.cum.len() - 1];
        self.cum.push(last + s.spin());
    }

    fn depth(&self) -> usize {
        self.cum.len() - 1
    }

    fn fork(&self) -> BoxCursor<'a, T> {
        Box::new(BkfCursor { kernel: self.kernel, past: self.past.clone(), cum: self.cum.clone() })
    }
}
