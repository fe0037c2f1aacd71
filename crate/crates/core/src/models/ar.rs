//! Binary autoregressive kernels `g(a | x) = φ(a Σ_n β_n x_{-n} + a δ)`.
//!
//! `β` is an explicit prefix optionally followed by a power-law tail
//! `c / j^s`. Tail contributions of periodic pasts are summed in closed form
//! through Hurwitz zeta values, and the cursor accumulates the path part of
//! the field with an online (relaxed) FFT convolution.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::link::Link;
use crate::alphabet::{Alphabet, Symbol};
use crate::kernel::{fingerprint_of, BoxCursor, Cursor, Estimate, Kernel, L2Bounds, MEMORY_SCALE_CAP};
use crate::past::{History, Past};
use crate::scalar::{compensated_sum, CompensatedSum, Scalar};
use crate::series::{SeriesClassification, SlopeThresholds, TailCertificate};
use crate::special::{hurwitz_zeta, riemann_zeta, Certified};
use crate::Error;

/// `β_j = c / j^exponent` for `j ≥ start_index`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerTail<T> {
    pub c: T,
    pub exponent: T,
    pub start_index: usize,
}

/// `β_1, β_2, …`: `explicit[j-1]` for `j ≤ explicit.len()`, then zero until
/// the tail's start index, then the tail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaSeq<T> {
    #[serde(default)]
    pub explicit: Vec<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<PowerTail<T>>,
}

impl<T: Scalar> BetaSeq<T> {
    pub fn finite(explicit: Vec<T>) -> Self {
        Self { explicit, tail: None }
    }

    pub fn power_law(c: T, exponent: T) -> Self {
        Self { explicit: Vec::new(), tail: Some(PowerTail { c, exponent, start_index: 1 }) }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.explicit.iter().any(|b| !b.is_finite()) {
            return Err(Error::param("beta.explicit", "entries must be finite"));
        }
        if let Some(t) = &self.tail {
            if !(t.exponent > T::one()) {
                return Err(Error::param("beta.tail.exponent", "must exceed 1 for absolute summability"));
            }
            if !t.c.is_finite() {
                return Err(Error::param("beta.tail.c", "must be finite"));
            }
            if t.start_index <= self.explicit.len() || t.start_index == 0 {
                return Err(Error::param("beta.tail.start_index", "must come after the explicit prefix"));
            }
        }
        Ok(())
    }

    /// Active tail (with nonzero coefficient), if any.
    fn active_tail(&self) -> Option<&PowerTail<T>> {
        self.tail.as_ref().filter(|t| t.c != T::zero())
    }

    /// Index past which every coefficient vanishes, for finitely supported β.
    pub fn support(&self) -> Option<usize> {
        if self.active_tail().is_some() {
            None
        } else {
            Some(self.explicit.iter().rposition(|b| *b != T::zero()).map_or(0, |i| i + 1))
        }
    }

    #[inline]
    pub fn get(&self, j: usize) -> T {
        if j == 0 {
            return T::zero();
        }
        if j <= self.explicit.len() {
            return self.explicit[j - 1];
        }
        match &self.tail {
            Some(t) if j >= t.start_index => t.c * T::from_usize_lossy(j).powf(-t.exponent),
            _ => T::zero(),
        }
    }

    pub fn all_nonnegative(&self) -> bool {
        self.explicit.iter().all(|b| *b >= T::zero()) && self.tail.as_ref().is_none_or(|t| t.c >= T::zero())
    }

    /// `Σ_{k ≥ from} |β_k|`-style tail of the power law: `|c| ζ(s, max(from, start))`.
    fn power_tail_from(&self, from: usize) -> Result<Certified<T>, Error> {
        match self.active_tail() {
            Some(t) => {
                let a = from.max(t.start_index);
                Ok(hurwitz_zeta(t.exponent, T::from_usize_lossy(a))?.scale(t.c.abs()))
            }
            None => Ok(Certified::exact(T::zero())),
        }
    }

    /// `Σ_{k > n} |β_k|` with a certified error.
    pub fn abs_tail(&self, n: usize) -> Result<Certified<T>, Error> {
        let explicit = compensated_sum(self.explicit.iter().skip(n).map(|b| b.abs()));
        Ok(self.power_tail_from(n + 1)?.add(Certified::exact(explicit)))
    }

    /// `Σ_{q ≥ 0} β_{a + q p}` for `a ≥ 1`.
    pub fn progression_sum(&self, a: usize, p: usize) -> Result<Certified<T>, Error> {
        debug_assert!(a >= 1 && p >= 1);
        let mut acc = CompensatedSum::new();
        let mut j = a;
        match self.active_tail() {
            Some(t) => {
                while j < t.start_index {
                    acc.add(self.get(j));
                    j += p;
                }
                let pf = T::from_usize_lossy(p);
                let z = hurwitz_zeta(t.exponent, T::from_usize_lossy(j) / pf)?.scale(t.c * pf.powf(-t.exponent));
                Ok(z.add(Certified::exact(acc.value())))
            }
            None => {
                while j <= self.explicit.len() {
                    acc.add(self.explicit[j - 1]);
                    j += p;
                }
                Ok(Certified::exact(acc.value()))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArParams<T> {
    pub phi: Link<T>,
    pub beta: BetaSeq<T>,
    #[serde(default)]
    pub delta: T,
}

impl<T: Scalar> ArParams<T> {
    /// Long-range Ising chain: logit link, `β_j = c / j^{1+ε}` with `c`
    /// fixed by `Σ_j β_j = beta_sum`.
    pub fn ising(epsilon: T, beta_sum: T, delta: T) -> Result<Self, Error> {
        if !(epsilon > T::zero()) {
            return Err(Error::param("epsilon", "must be positive"));
        }
        let z = riemann_zeta(T::one() + epsilon)?;
        let p = Self { phi: Link::Logit, beta: BetaSeq::power_law(beta_sum / z.value, T::one() + epsilon), delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.beta.validate()?;
        self.phi.validate()?;
        if !self.delta.is_finite() {
            return Err(Error::param("delta", "must be finite"));
        }
        let r = self.field_radius()?;
        if r > self.phi.domain() {
            return Err(Error::param("phi.knots", format!("table must cover the field range |r| ≤ {r}")));
        }
        Ok(())
    }

    /// All `β_j ≥ 0` and `δ ≥ 0`.
    pub fn attractive(&self) -> bool {
        self.beta.all_nonnegative() && self.delta >= T::zero()
    }

    /// Certified upper bound on `sup |Σ β_n x_{-n} + δ|`.
    pub fn field_radius(&self) -> Result<T, Error> {
        let b = self.beta.abs_tail(0)?;
        Ok(b.value + b.error + self.delta.abs())
    }

    /// Bi-Lipschitz constant `γ_φ` of the variation sandwich
    /// `(1/γ_φ) Σ_{n>k} |β_n| ≤ var_k ≤ γ_φ Σ_{n>k} |β_n|` (the left
    /// inequality for attractive parameters).
    pub fn gamma_phi(&self) -> Result<T, Error> {
        let r = self.field_radius()?;
        let two = T::lit(2.0);
        Ok((two * self.phi.lipschitz_upper()).max(T::one() / (two * self.phi.lipschitz_lower(r))))
    }
}

/// Largest block size handled by the direct loop in the online convolution.
const DIRECT_BLOCK: usize = 32;
/// Finitely supported β up to this length use a plain sliding dot product.
const DIRECT_SUPPORT: usize = 64;
/// Cached past-field tables are dropped once this many pasts are stored.
const PAST_CACHE_LIMIT: usize = 256;

struct Level<T: Scalar> {
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    /// FFT of `(β_0 = 0, β_1, …, β_{2L-1})`, pre-scaled by `1/(2L)`.
    spectrum: Vec<Complex<T>>,
}

pub struct ArKernel<T: Scalar> {
    params: ArParams<T>,
    alphabet: Alphabet,
    fingerprint: u64,
    gamma: T,
    support: Option<usize>,
    /// `β_0 ..= β_{2·DIRECT_BLOCK}` (or the whole finite support).
    beta_dense: Vec<T>,
    levels: Vec<OnceLock<Level<T>>>,
    past_fields: Mutex<HashMap<Past, Arc<Vec<T>>>>,
}

impl<T: Scalar> std::fmt::Debug for ArKernel<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ArKernel").field("params", &self.params).field("gamma", &self.gamma).finish()
    }
}

impl<T: Scalar> ArKernel<T> {
    pub fn new(params: ArParams<T>) -> Result<Self, Error> {
        params.validate()?;
        let r = params.field_radius()?;
        let gamma = params.phi.eval(-r);
        let support = params.beta.support();
        let dense_len = support.unwrap_or(0).max(2 * DIRECT_BLOCK) + 1;
        let beta_dense = (0..dense_len).map(|j| params.beta.get(j)).collect();
        let fingerprint = fingerprint_of("ar", &params);
        Ok(Self {
            params,
            alphabet: Alphabet::spin(),
            fingerprint,
            gamma,
            support,
            beta_dense,
            levels: (0..usize::BITS as usize).map(|_| OnceLock::new()).collect(),
            past_fields: Mutex::new(HashMap::new()),
        })
    }

    pub fn params(&self) -> &ArParams<T> {
        &self.params
    }

    /// `Σ_{i ≥ 1} β_{t+i} x_{-i}`: the contribution of the fixed past to the
    /// field felt by the symbol at time `t`.
    pub fn past_field(&self, past: &Past, t: usize) -> Certified<T> {
        if let Some(k) = self.support {
            if t >= k {
                return Certified::exact(T::zero());
            }
        }
        let beta = &self.params.beta;
        let suffix = past.suffix();
        let l = suffix.len();
        let mut acc = CompensatedSum::new();
        for (i, s) in suffix.iter().enumerate() {
            acc.add(beta.get(t + i + 1) * T::lit(s.spin() as f64));
        }
        let mut out = Certified::exact(acc.value());
        let p = past.period();
        for (r, s) in past.tail().iter().enumerate() {
            let sum = beta.progression_sum(t + l + 1 + r, p).expect("validated tail");
            out = out.add(sum.scale(T::lit(s.spin() as f64)));
        }
        out
    }

    /// Full field `Σ β_n x_{-n} + δ` of a history with its certified error.
    pub fn field(&self, history: &History<'_>) -> Certified<T> {
        let path = history.path();
        let t = path.len();
        let mut acc = CompensatedSum::new();
        for i in 1..=t {
            let b = self.beta(i);
            if b != T::zero() {
                acc.add(b * T::lit(path[t - i].spin() as f64));
            }
        }
        acc.add(self.params.delta);
        self.past_field(history.past(), t).add(Certified::exact(acc.value()))
    }

    #[inline]
    fn beta(&self, j: usize) -> T {
        if j < self.beta_dense.len() {
            self.beta_dense[j]
        } else {
            self.params.beta.get(j)
        }
    }

    #[inline]
    fn write_probs(&self, field: T, out: &mut [T]) {
        out[Symbol::PLUS.index()] = self.params.phi.eval(field);
        out[Symbol::MINUS.index()] = self.params.phi.eval(-field);
    }

    /// Past-field values for `t = 0 .. len`, shared between cursors.
    fn past_field_table(&self, past: &Past, len: usize) -> Arc<Vec<T>> {
        let old = {
            let cache = self.past_fields.lock().expect("cache lock");
            cache.get(past).cloned()
        };
        if let Some(v) = &old {
            if v.len() >= len {
                return v.clone();
            }
        }
        let old_len = old.as_ref().map_or(0, |v| v.len());
        let new_len = len.max(2 * old_len).max(64);
        let mut values = Vec::with_capacity(new_len);
        if let Some(v) = &old {
            values.extend_from_slice(v);
        }
        values.extend((old_len..new_len).map(|t| self.past_field(past, t).value));
        let table = Arc::new(values);
        let mut cache = self.past_fields.lock().expect("cache lock");
        if cache.len() >= PAST_CACHE_LIMIT {
            cache.clear();
        }
        let keep = match cache.get(past) {
            Some(v) if v.len() >= table.len() => v.clone(),
            _ => {
                cache.insert(past.clone(), table.clone());
                table
            }
        };
        keep
    }

    fn level(&self, l: usize) -> &Level<T> {
        let idx = l.trailing_zeros() as usize;
        self.levels[idx].get_or_init(|| {
            let n = 2 * l;
            let mut planner = FftPlanner::new();
            let forward = planner.plan_fft_forward(n);
            let inverse = planner.plan_fft_inverse(n);
            let scale = T::one() / T::from_usize_lossy(n);
            let mut spectrum: Vec<Complex<T>> = (0..n).map(|d| Complex::new(self.beta(d) * scale, T::zero())).collect();
            forward.process(&mut spectrum);
            Level { forward, inverse, spectrum }
        })
    }
}

impl<T: Scalar> Kernel<T> for ArKernel<T> {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn non_null_bound(&self) -> T {
        self.gamma
    }

    fn conditional(&self, history: &History<'_>, out: &mut [T]) {
        self.write_probs(self.field(history).value, out);
    }

    fn cursor<'a>(&'a self, past: &'a Past) -> BoxCursor<'a, T> {
        let mode = match self.support {
            Some(k) if k <= DIRECT_SUPPORT => Mode::Direct { support: k },
            _ => Mode::Online,
        };
        Box::new(ArCursor {
            kernel: self,
            past,
            fields: self.past_field_table(past, 64),
            spins: Vec::new(),
            pending: Vec::new(),
            mode,
            buf: Vec::new(),
            scratch: Vec::new(),
        })
    }

    fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    fn memory_scale(&self) -> usize {
        if let Some(k) = self.support {
            return k.max(1);
        }
        let t = self.params.beta.active_tail().expect("infinite support has a tail");
        let s = t.exponent.to_f64_lossy();
        let c = t.c.abs().to_f64_lossy();
        let n = (c / ((s - 1.0) * 1e-6)).powf(1.0 / (s - 1.0)).ceil();
        let floor = t.start_index.max(self.params.beta.explicit.len());
        if n.is_finite() && n < MEMORY_SCALE_CAP as f64 {
            (n as usize).max(floor).min(MEMORY_SCALE_CAP)
        } else {
            MEMORY_SCALE_CAP
        }
    }

    fn finite_memory(&self) -> Option<usize> {
        self.support
    }

    fn extremal_pasts(&self) -> Option<(Past, Past)> {
        self.params.attractive().then(|| (Past::plus(), Past::minus()))
    }

    fn oscillation_closed_form(&self, k: usize) -> Option<Estimate<T>> {
        if k == 0 {
            return None;
        }
        let (m, _) = self.params.phi.modulus(self.beta(k).abs());
        Some(Estimate::upper(T::lit(2.0) * m))
    }

    fn oscillation_tail_bound(&self, k_max: usize) -> Option<T> {
        let tail = self.params.beta.abs_tail(k_max).ok()?;
        let factor = match self.params.phi {
            Link::Logit => T::lit(2.0),
            Link::Tabulated { .. } => T::lit(4.0) * self.params.phi.lipschitz_upper(),
        };
        Some(factor * (tail.value + tail.error))
    }

    fn l2_bounds(&self, n_max: usize) -> Option<Result<L2Bounds<T>, Error>> {
        Some(ar_l2_bounds(&self.params, n_max))
    }
}

/// Comparison series `γ_φ^{∓2} Σ_{n≥1} (Σ_{k>n} |β_k|)²`, certified by the
/// integral test for power-law tails. The lower series needs attractive
/// parameters.
pub fn ar_l2_bounds<T: Scalar>(params: &ArParams<T>, n_max: usize) -> Result<L2Bounds<T>, Error> {
    if n_max == 0 {
        return Err(Error::Horizon("n_max must be at least 1".into()));
    }
    let gamma = params.gamma_phi()?;
    let beta = &params.beta;
    let tail_sq = |n: usize| -> Result<T, Error> {
        let t = beta.abs_tail(n)?.value;
        Ok(t * t)
    };
    let terms: Vec<T> = (1..=n_max).map(tail_sq).collect::<Result<_, _>>()?;
    let certificate = match beta.active_tail() {
        None => {
            let k = beta.support().unwrap_or(0);
            let rest = compensated_sum((n_max + 1..k.max(n_max + 1)).map(|n| tail_sq(n).unwrap_or_else(|_| T::zero())));
            TailCertificate::Finite { bound: rest }
        }
        Some(t) => {
            let s = t.exponent;
            let two = T::lit(2.0);
            if s <= T::lit(1.5) {
                TailCertificate::Divergent
            } else {
                let cut = n_max.max(t.start_index).max(beta.explicit.len());
                let direct = compensated_sum((n_max + 1..=cut).map(|n| tail_sq(n).unwrap_or_else(|_| T::zero())));
                let k = t.c.abs() / (s - T::one());
                let integral = k * k * T::from_usize_lossy(cut).powf(T::lit(3.0) - two * s) / (two * s - T::lit(3.0));
                TailCertificate::Finite { bound: direct + integral }
            }
        }
    };
    let scaled = |c: T| -> (Vec<T>, TailCertificate<T>) {
        let tail = match certificate {
            TailCertificate::Finite { bound } => TailCertificate::Finite { bound: bound * c },
            other => other,
        };
        (terms.iter().map(|x| *x * c).collect(), tail)
    };
    let (up_terms, up_tail) = scaled(gamma * gamma);
    let upper = SeriesClassification::from_terms(1, &up_terms, up_tail, SlopeThresholds::default());
    let lower = params.attractive().then(|| {
        let (lo_terms, lo_tail) = scaled(T::one() / (gamma * gamma));
        SeriesClassification::from_terms(1, &lo_terms, lo_tail, SlopeThresholds::default())
    });
    Ok(L2Bounds { lower, upper })
}

#[derive(Clone, Copy)]
enum Mode {
    Direct { support: usize },
    Online,
}

struct ArCursor<'a, T: Scalar> {
    kernel: &'a ArKernel<T>,
    past: &'a Past,
    fields: Arc<Vec<T>>,
    spins: Vec<T>,
    /// Online mode: `pending[u]` holds the part of `Σ_i β_i s_{u-i}` whose
    /// sources have been folded in; complete for `u ≤ depth`.
    pending: Vec<T>,
    mode: Mode,
    buf: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Scalar> ArCursor<'_, T> {
    fn path_field(&self) -> T {
        let t = self.spins.len();
        match self.mode {
            Mode::Direct { support } => {
                let mut acc = T::zero();
                for i in 1..=support.min(t) {
                    acc += self.kernel.beta_dense[i] * self.spins[t - i];
                }
                acc
            }
            Mode::Online => self.pending.get(t).copied().unwrap_or_else(T::zero),
        }
    }

    /// Folds the block ending at the newest symbol into the pending targets.
    fn fold(&mut self) {
        let t = self.spins.len() - 1;
        let l = 1usize << (t + 1).trailing_zeros();
        let start = t + 1 - l;
        if self.pending.len() < t + 1 + l {
            self.pending.resize(t + 1 + l, T::zero());
        }
        if l <= DIRECT_BLOCK {
            for r in 0..l {
                let mut acc = T::zero();
                for i in 0..l {
                    acc += self.kernel.beta_dense[l + r - i] * self.spins[start + i];
                }
                self.pending[t + 1 + r] += acc;
            }
            return;
        }
        let level = self.kernel.level(l);
        let n = 2 * l;
        self.buf.clear();
        self.buf.extend(self.spins[start..=t].iter().map(|s| Complex::new(*s, T::zero())));
        self.buf.resize(n, Complex::new(T::zero(), T::zero()));
        let need = level.forward.get_inplace_scratch_len().max(level.inverse.get_inplace_scratch_len());
        if self.scratch.len() < need {
            self.scratch.resize(need, Complex::new(T::zero(), T::zero()));
        }
        level.forward.process_with_scratch(&mut self.buf, &mut self.scratch[..need]);
        for (x, b) in self.buf.iter_mut().zip(&level.spectrum) {
            *x *= *b;
        }
        level.inverse.process_with_scratch(&mut self.buf, &mut self.scratch[..need]);
        for r in 0..l {
            self.pending[t + 1 + r] += self.buf[l + r].re;
        }
    }
}

impl<'a, T: Scalar> Cursor<'a, T> for ArCursor<'a, T> {
    fn probs(&mut self, out: &mut [T]) {
        let t = self.spins.len();
        if t >= self.fields.len() {
            self.fields = self.kernel.past_field_table(self.past, t + 1);
        }
        let field = self.path_field() + self.fields[t] + self.kernel.params.delta;
        self.kernel.write_probs(field, out);
    }

    fn push(&mut self, s: Symbol) {
        self.spins.push(T::lit(s.spin() as f64));
        if let Mode::Online = self.mode {
            self.fold();
        }
    }

    fn depth(&self) -> usize {
        self.spins.len()
    }

    fn fork(&self) -> BoxCursor<'a, T> {
        Box::new(ArCursor {
            kernel: self.kernel,
            past: self.past,
            fields: self.fields.clone(),
            spins: self.spins.clone(),
            pending: self.pending.clone(),
            mode: self.mode,
            buf: Vec::new(),
            scratch: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: Symbol = Symbol::PLUS;
    const M: Symbol = Symbol::MINUS;

    fn finite(beta: Vec<f64>, delta: f64) -> ArKernel<f64> {
        ArKernel::new(ArParams { phi: Link::Logit, beta: BetaSeq::finite(beta), delta }).unwrap()
    }

    #[test]
    fn zero_coupling_is_fair() {
        let k = finite(vec![0.0, 0.0], 0.0);
        let past = Past::plus();
        let mut out = [0.0; 2];
        k.conditional(&History::of_past(&past), &mut out);
        assert_eq!(out, [0.5, 0.5]);
    }

    #[test]
    fn hand_evaluated_single_coupling() {
        let k = finite(vec![0.5], 0.0);
        let past = Past::new(vec![P], vec![M]).unwrap();
        let v = k.eval(P, &History::of_past(&past));
        assert!((v - 0.731_058_578_630_004_9).abs() < 1e-15);
    }

    #[test]
    fn attractive_extremal_order() {
        let k: ArKernel<f64> = ArKernel::new(ArParams::ising(0.3, 0.9, 0.0).unwrap()).unwrap();
        let (hi, lo) = (Past::plus(), Past::minus());
        assert!(k.eval(P, &History::of_past(&hi)) >= k.eval(P, &History::of_past(&lo)));
        assert!(k.extremal_pasts().is_some());
    }

    #[test]
    fn past_field_matches_long_direct_sum() {
        // Finite prefix + tail starting later, periodic past.
        let params = ArParams {
            phi: Link::Logit,
            beta: BetaSeq { explicit: vec![0.1, -0.05, 0.2], tail: Some(PowerTail { c: 0.3, exponent: 2.5, start_index: 6 }) },
            delta: 0.1,
        };
        let k = ArKernel::new(params.clone()).unwrap();
        let past = Past::new(vec![M, P, M, M], vec![P, P, M]).unwrap();
        for t in [0usize, 1, 5, 17] {
            let direct: f64 = (1..2_000_000).map(|i| params.beta.get(t + i) * past.lookup(i).spin() as f64).sum();
            let got = k.past_field(&past, t);
            // The truncated direct sum misses ~ c n^{-1.5}/1.5 ≈ 7e-11.
            assert!((got.value - direct).abs() < 2e-10, "t={t}: {} vs {direct}", got.value);
            assert!(got.error < 1e-13);
        }
    }

    #[test]
    fn online_cursor_matches_direct_conditional() {
        let k: ArKernel<f64> = ArKernel::new(ArParams::ising(0.3, 0.9, 0.05).unwrap()).unwrap();
        let past = Past::alternating(P, M);
        let n: usize = 700;
        let path: Vec<Symbol> = (0..n).map(|i| if (i * i + 3 * i) % 7 < 3 { P } else { M }).collect();
        let mut c = k.cursor(&past);
        let (mut a, mut b) = ([0.0; 2], [0.0; 2]);
        for t in 0..n {
            c.probs(&mut a);
            if t % 37 == 0 || t == n - 1 || t.is_power_of_two() {
                k.conditional(&History::new(&path[..t], &past), &mut b);
                assert!((a[0] - b[0]).abs() < 1e-13, "t={t}: {a:?} vs {b:?}");
            }
            c.push(path[t]);
        }
    }

    #[test]
    fn fork_continues_identically() {
        let k: ArKernel<f64> = ArKernel::new(ArParams::ising(0.8, 0.9, 0.0).unwrap()).unwrap();
        let past = Past::minus();
        let mut c = k.cursor(&past);
        for i in 0..100 {
            c.push(if i % 3 == 0 { P } else { M });
        }
        let mut f = c.fork();
        let (mut a, mut b) = ([0.0; 2], [0.0; 2]);
        for i in 0..200 {
            c.probs(&mut a);
            f.probs(&mut b);
            assert_eq!(a, b);
            let s = if i % 5 == 0 { M } else { P };
            c.push(s);
            f.push(s);
        }
    }

    #[test]
    fn l2_dichotomy_is_certified() {
        use crate::series::Verdict;
        let slow = ar_l2_bounds(&ArParams::ising(0.3, 0.9, 0.0).unwrap(), 200).unwrap();
        assert_eq!(slow.lower.unwrap().verdict, Verdict::Divergent);
        let fast = ar_l2_bounds(&ArParams::ising(0.8, 0.9, 0.0).unwrap(), 200).unwrap();
        assert_eq!(fast.upper.verdict, Verdict::Convergent);
        let fin = ar_l2_bounds::<f64>(&ArParams { phi: Link::Logit, beta: BetaSeq::finite(vec![0.5, 0.25]), delta: 0.0 }, 10).unwrap();
        assert_eq!(fin.upper.verdict, Verdict::Convergent);
        assert!((fin.upper.last().unwrap() - fin.upper.partial_sums[0]).abs() < 1e-15);
    }

    #[test]
    fn ising_normalisation() {
        let p = ArParams::<f64>::ising(0.3, 0.9, 0.0).unwrap();
        let c = p.beta.tail.as_ref().unwrap().c;
        assert!((c - 0.228_894_106_082_770_6).abs() < 1e-14);
        let total = p.beta.abs_tail(0).unwrap();
        assert!((total.value - 0.9).abs() < 1e-14);
    }
}
