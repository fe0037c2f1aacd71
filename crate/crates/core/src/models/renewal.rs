//! Renewal kernel: `g(+1 | x) = q_{r(x)}` where `r` is the number of `-1`
//! symbols since the most recent `+1` (so `x_{-1} = +1` gives `q_0`), and an
//! all-minus history gives `q_∞`.

use serde::{Deserialize, Serialize};

use crate::alphabet::{Alphabet, Symbol};
use crate::kernel::{fingerprint_of, BoxCursor, Cursor, Estimate, Kernel, L2Bounds, MEMORY_SCALE_CAP};
use crate::past::{History, Past};
use crate::scalar::{compensated_sum, Scalar};
use crate::series::{SeriesClassification, SlopeThresholds, TailCertificate};
use crate::special::hurwitz_zeta;
use crate::Error;

/// How `q_i - q_∞` decays past the explicit prefix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RenewalDecay<T> {
    /// `q_i = q_∞`.
    Constant,
    /// `q_i = q_∞ + a (i+1)^{-p}`.
    PowerLaw { a: T, p: T },
    /// `q_i = q_∞ + a ρ^i`.
    Geometric { a: T, rho: T },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenewalParams<T> {
    #[serde(default)]
    pub explicit: Vec<T>,
    pub q_inf: T,
    pub decay: RenewalDecay<T>,
}

impl<T: Scalar> RenewalParams<T> {
    pub fn power_law(q_inf: T, a: T, p: T) -> Self {
        Self { explicit: Vec::new(), q_inf, decay: RenewalDecay::PowerLaw { a, p } }
    }

    #[inline]
    pub fn q(&self, i: usize) -> T {
        if i < self.explicit.len() {
            return self.explicit[i];
        }
        match self.decay {
            RenewalDecay::Constant => self.q_inf,
            RenewalDecay::PowerLaw { a, p } => self.q_inf + a * T::from_usize_lossy(i + 1).powf(-p),
            RenewalDecay::Geometric { a, rho } => self.q_inf + a * rho.powi(i.min(i32::MAX as usize) as i32),
        }
    }

    /// `sup_i q_i`, attained at `i = 0` for a valid parameter set.
    pub fn q_max(&self) -> T {
        self.q(0)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let open = |x: T| x > T::zero() && x < T::one();
        if !open(self.q_inf) {
            return Err(Error::param("q_inf", "must lie in (0, 1)"));
        }
        match self.decay {
            RenewalDecay::Constant => {}
            RenewalDecay::PowerLaw { a, p } => {
                if !(a >= T::zero()) || !(p > T::zero()) {
                    return Err(Error::param("decay", "power law needs a ≥ 0 and p > 0"));
                }
            }
            RenewalDecay::Geometric { a, rho } => {
                if !(a >= T::zero()) || !(rho >= T::zero() && rho < T::one()) {
                    return Err(Error::param("decay", "geometric decay needs a ≥ 0 and ρ in [0, 1)"));
                }
            }
        }
        // q_i = 1 is accepted (absorbing renewal); it makes γ = 0.
        let n = self.explicit.len() + 1;
        for i in 0..=n {
            let q = self.q(i);
            if !(q > T::zero() && q <= T::one()) {
                return Err(Error::param("q", format!("q_{i} must lie in (0, 1]")));
            }
            if i < n && self.q(i + 1) > self.q(i) {
                return Err(Error::param("q", format!("sequence increases at index {i}")));
            }
            if self.q(i) < self.q_inf {
                return Err(Error::param("q", format!("q_{i} lies below q_inf")));
            }
        }
        Ok(())
    }

    /// `Σ_{i ≥ from} (q_i - q_∞)^power` for `power ∈ {1, 2}`, when finite.
    fn excess_tail(&self, from: usize, power: i32) -> Option<T> {
        let direct = compensated_sum((from..self.explicit.len()).map(|i| (self.q(i) - self.q_inf).powi(power)));
        let start = from.max(self.explicit.len());
        let pw = T::lit(power as f64);
        let tail = match self.decay {
            RenewalDecay::Constant => T::zero(),
            RenewalDecay::PowerLaw { a, p } => {
                if a == T::zero() {
                    T::zero()
                } else {
                    let s = p * pw;
                    let z = hurwitz_zeta(s, T::from_usize_lossy(start + 1)).ok()?;
                    a.powi(power) * (z.value + z.error)
                }
            }
            RenewalDecay::Geometric { a, rho } => {
                let r = rho.powi(power);
                a.powi(power) * r.powi(start as i32) / (T::one() - r)
            }
        };
        Some(direct + tail)
    }
}

#[derive(Debug)]
pub struct RenewalKernel<T> {
    params: RenewalParams<T>,
    alphabet: Alphabet,
    fingerprint: u64,
}

impl<T: Scalar> RenewalKernel<T> {
    pub fn new(params: RenewalParams<T>) -> Result<Self, Error> {
        params.validate()?;
        let fingerprint = fingerprint_of("renewal", &params);
        Ok(Self { params, alphabet: Alphabet::spin(), fingerprint })
    }

    pub fn params(&self) -> &RenewalParams<T> {
        &self.params
    }

    /// `r` of a history, `None` when no `+1` occurs.
    pub fn age(history: &History<'_>) -> Option<usize> {
        let path = history.path();
        if let Some(i) = path.iter().rposition(|s| *s == Symbol::PLUS) {
            return Some(path.len() - 1 - i);
        }
        history.past().first_occurrence(Symbol::PLUS).map(|k| path.len() + k - 1)
    }

    #[inline]
    fn q_of(&self, age: Option<usize>) -> T {
        age.map_or(self.params.q_inf, |r| self.params.q(r))
    }
}

impl<T: Scalar> Kernel<T> for RenewalKernel<T> {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn non_null_bound(&self) -> T {
        self.params.q_inf.min(T::one() - self.params.q_max())
    }

    fn conditional(&self, history: &History<'_>, out: &mut [T]) {
        let q = self.q_of(Self::age(history));
        out[Symbol::PLUS.index()] = q;
        out[Symbol::MINUS.index()] = T::one() - q;
    }

    fn cursor<'a>(&'a self, past: &'a Past) -> BoxCursor<'a, T> {
        let age = past.first_occurrence(Symbol::PLUS).map(|k| k - 1);
        Box::new(RenewalCursor { kernel: self, age, depth: 0 })
    }

    fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    fn memory_scale(&self) -> usize {
        let n = self.params.explicit.len();
        let target = T::lit(1e-6);
        let scale = match self.params.decay {
            RenewalDecay::Constant => n,
            RenewalDecay::PowerLaw { a, p } => {
                let i = (a / target).powf(T::one() / p).to_f64_lossy();
                if i.is_finite() && i < MEMORY_SCALE_CAP as f64 {
                    (i.ceil() as usize).max(n)
                } else {
                    MEMORY_SCALE_CAP
                }
            }
            RenewalDecay::Geometric { a, rho } => {
                if a <= target || rho == T::zero() {
                    n
                } else {
                    let i = ((target / a).ln() / rho.ln()).to_f64_lossy();
                    if i.is_finite() && i < MEMORY_SCALE_CAP as f64 {
                        (i.ceil() as usize).max(n)
                    } else {
                        MEMORY_SCALE_CAP
                    }
                }
            }
        };
        scale.clamp(1, MEMORY_SCALE_CAP)
    }

    fn finite_memory(&self) -> Option<usize> {
        match self.params.decay {
            RenewalDecay::Constant => Some(self.params.explicit.len()),
            RenewalDecay::PowerLaw { a, .. } | RenewalDecay::Geometric { a, .. } if a == T::zero() => Some(self.params.explicit.len()),
            _ => None,
        }
    }

    fn extremal_pasts(&self) -> Option<(Past, Past)> {
        // Flipping a -1 to +1 can only shorten the age, and q is nonincreasing.
        Some((Past::plus(), Past::minus()))
    }

    fn variation_closed_form(&self, k: usize) -> Option<T> {
        Some(self.params.q(k) - self.params.q_inf)
    }

    fn oscillation_closed_form(&self, k: usize) -> Option<Estimate<T>> {
        (k >= 1).then(|| Estimate::exact(T::lit(2.0) * (self.params.q(k - 1) - self.params.q_inf)))
    }

    fn oscillation_tail_bound(&self, k_max: usize) -> Option<T> {
        self.params.excess_tail(k_max, 1).map(|s| T::lit(2.0) * s)
    }

    fn l2_bounds(&self, n_max: usize) -> Option<Result<L2Bounds<T>, Error>> {
        let terms: Vec<T> = (1..=n_max).map(|k| (self.params.q(k) - self.params.q_inf).powi(2)).collect();
        let tail = match self.params.excess_tail(n_max + 1, 2) {
            Some(b) => TailCertificate::Finite { bound: b },
            None => TailCertificate::Divergent,
        };
        let exact = SeriesClassification::from_terms(1, &terms, tail, SlopeThresholds::default());
        Some(Ok(L2Bounds { lower: Some(exact.clone()), upper: exact }))
    }
}

struct RenewalCursor<'a, T> {
    kernel: &'a RenewalKernel<T>,
    age: Option<usize>,
    depth: usize,
}

impl<'a, T: Scalar> Cursor<'a, T> for RenewalCursor<'a, T> {
    fn probs(&mut self, out: &mut [T]) {
        let q = self.kernel.q_of(self.age);
        out[Symbol::PLUS.index()] = q;
        out[Symbol::MINUS.index()] = T::one() - q;
    }

    fn push(&mut self, s: Symbol) {
        self.age = if s == Symbol::PLUS { Some(0) } else { self.age.map(|r| r + 1) };
        self.depth += 1;
    }

    fn depth(&self) -> usize {
        self.depth
    }

    fn fork(&self) -> BoxCursor<'a, T> {
        Box::new(RenewalCursor { kernel: self.kernel, age: self.age, depth: self.depth })
    }
}
