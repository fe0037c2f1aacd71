//! The monotone maps used by the binary families: `ψ` on `[-1, 1]` for BKF
//! mixtures and `φ` on the real line for autoregressive kernels.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::Error;

fn check_table<T: Scalar>(field: &str, knots: &[T], values: &[T]) -> Result<(), Error> {
    if knots.len() < 2 || knots.len() != values.len() {
        return Err(Error::param(field, "need at least two knots and one value per knot"));
    }
    if knots[0] != T::zero() {
        return Err(Error::param(field, "first knot must be 0"));
    }
    if (values[0] - T::lit(0.5)).abs() > T::lit(1e-15) {
        return Err(Error::param(field, "value at 0 must be 1/2 (antisymmetry)"));
    }
    if knots.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param(field, "knots must be strictly increasing"));
    }
    Ok(())
}

/// Piecewise-linear interpolation on `[0, knots.last]`, extended by
/// `f(-r) = 1 - f(r)` and clamped beyond the last knot.
fn interpolate<T: Scalar>(knots: &[T], values: &[T], r: T) -> T {
    let a = r.abs();
    let last = knots.len() - 1;
    let v = if a >= knots[last] {
        values[last]
    } else {
        let i = knots.partition_point(|k| *k <= a) - 1;
        let w = (a - knots[i]) / (knots[i + 1] - knots[i]);
        values[i] + w * (values[i + 1] - values[i])
    };
    if r < T::zero() {
        T::one() - v
    } else {
        v
    }
}

fn max_slope<T: Scalar>(knots: &[T], values: &[T]) -> T {
    knots.windows(2).zip(values.windows(2)).map(|(k, v)| (v[1] - v[0]) / (k[1] - k[0])).fold(T::zero(), T::max)
}

/// Nondecreasing `ψ: [-1, 1] → [ε, 1-ε]` with `ψ(r) + ψ(-r) = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Psi<T> {
    /// `1-ε` for `r > 0`, `ε` for `r < 0`. Window means of odd blocks never
    /// vanish, so the value `1/2` used at `r = 0` is never observed.
    Step { epsilon: T },
    /// `1/2 + (1/2 - ε) r`.
    Linear { epsilon: T },
    /// Piecewise linear through `(knots[i], values[i])` on `[0, 1]`.
    Tabulated { epsilon: T, knots: Vec<T>, values: Vec<T> },
}

impl<T: Scalar> Psi<T> {
    pub fn epsilon(&self) -> T {
        match self {
            Psi::Step { epsilon } | Psi::Linear { epsilon } | Psi::Tabulated { epsilon, .. } => *epsilon,
        }
    }

    #[inline]
    pub fn eval(&self, r: T) -> T {
        let half = T::lit(0.5);
        match self {
            Psi::Step { epsilon } => {
                if r > T::zero() {
                    T::one() - *epsilon
                } else if r < T::zero() {
                    *epsilon
                } else {
                    half
                }
            }
            Psi::Linear { epsilon } => half + (half - *epsilon) * r,
            Psi::Tabulated { knots, values, .. } => interpolate(knots, values, r),
        }
    }

    /// Upper bound on `|ψ(r) - ψ(s)| / |r - s|`; infinite for the step.
    pub fn lipschitz(&self) -> T {
        match self {
            Psi::Step { .. } => T::infinity(),
            Psi::Linear { epsilon } => T::lit(0.5) - *epsilon,
            Psi::Tabulated { knots, values, .. } => max_slope(knots, values),
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let eps = self.epsilon();
        if !(eps > T::zero() && eps < T::lit(0.5)) {
            return Err(Error::param("psi.epsilon", "must lie in (0, 1/2)"));
        }
        if let Psi::Tabulated { knots, values, .. } = self {
            check_table("psi.knots", knots, values)?;
            if knots[knots.len() - 1] != T::one() {
                return Err(Error::param("psi.knots", "last knot must be 1"));
            }
            if values.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::param("psi.values", "must be nondecreasing"));
            }
            if values[values.len() - 1] > T::one() - eps {
                return Err(Error::param("psi.values", "must stay within [ε, 1-ε]"));
            }
        }
        // Grid check of the stated invariants (exact 0 excluded for the step).
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(64.0));
        let grid = 400;
        let mut prev = T::neg_infinity();
        for i in 0..=grid {
            let r = T::from_usize_lossy(i) / T::from_usize_lossy(grid) * T::lit(2.0) - T::one();
            if r == T::zero() {
                continue;
            }
            let v = self.eval(r);
            if (v + self.eval(-r) - T::one()).abs() > tol {
                return Err(Error::param("psi", "ψ(r) + ψ(-r) = 1 violated"));
            }
            if v < prev - tol || v < eps - tol || v > T::one() - eps + tol {
                return Err(Error::param("psi", "ψ must be nondecreasing with range in [ε, 1-ε]"));
            }
            prev = v;
        }
        Ok(())
    }
}

/// Increasing link `φ: ℝ → (0, 1)` with `φ(r) + φ(-r) = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Link<T> {
    /// `φ(r) = 1 / (1 + e^{-2r})`.
    Logit,
    /// Piecewise linear through `(knots[i], values[i])` on `[0, knots.last]`;
    /// the chain's field must stay inside the table.
    Tabulated { knots: Vec<T>, values: Vec<T> },
}

impl<T: Scalar> Link<T> {
    #[inline]
    pub fn eval(&self, r: T) -> T {
        match self {
            Link::Logit => T::one() / (T::one() + (-(r + r)).exp()),
            Link::Tabulated { knots, values } => interpolate(knots, values, r),
        }
    }

    /// Largest `r` at which the link is defined by data (`∞` for logit).
    pub fn domain(&self) -> T {
        match self {
            Link::Logit => T::infinity(),
            Link::Tabulated { knots, .. } => knots[knots.len() - 1],
        }
    }

    /// `sup φ'`.
    pub fn lipschitz_upper(&self) -> T {
        match self {
            Link::Logit => T::lit(0.5),
            Link::Tabulated { knots, values } => max_slope(knots, values),
        }
    }

    /// `inf_{|r| ≤ radius} φ'`.
    pub fn lipschitz_lower(&self, radius: T) -> T {
        match self {
            Link::Logit => {
                let p = self.eval(radius);
                T::lit(2.0) * p * (T::one() - p)
            }
            Link::Tabulated { knots, values } => knots
                .windows(2)
                .zip(values.windows(2))
                .filter(|(k, _)| k[0] < radius || k[0] == T::zero())
                .map(|(k, v)| (v[1] - v[0]) / (k[1] - k[0]))
                .fold(T::infinity(), T::min),
        }
    }

    /// `sup_h φ(h + b) - φ(h - b)` for `b ≥ 0`, or an upper bound on it.
    pub fn modulus(&self, b: T) -> (T, bool) {
        match self {
            Link::Logit => (b.tanh(), true),
            Link::Tabulated { .. } => ((T::lit(2.0) * b * self.lipschitz_upper()).min(T::one()), false),
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if let Link::Tabulated { knots, values } = self {
            check_table("phi.knots", knots, values)?;
            if values.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::param("phi.values", "must be strictly increasing"));
            }
            if !(values[values.len() - 1] < T::one()) {
                return Err(Error::param("phi.values", "must stay below 1"));
            }
        }
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(64.0));
        let span = self.domain().min(T::lit(8.0));
        let grid = 400;
        let mut prev = T::neg_infinity();
        for i in 0..=grid {
            let r = (T::from_usize_lossy(i) / T::from_usize_lossy(grid) * T::lit(2.0) - T::one()) * span;
            let v = self.eval(r);
            if (v + self.eval(-r) - T::one()).abs() > tol {
                return Err(Error::param("phi", "φ(r) + φ(-r) = 1 violated"));
            }
            // Rounding may saturate the link near 0 and 1.
            let saturated = v == prev && (v <= tol || v >= T::one() - tol);
            if !(v > prev) && !saturated {
                return Err(Error::param("phi", "φ must be strictly increasing"));
            }
            prev = v;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_variants_are_valid_and_antisymmetric() {
        let tab: Psi<f64> = Psi::Tabulated { epsilon: 0.2, knots: vec![0.0, 0.5, 1.0], values: vec![0.5, 0.7, 0.8] };
        for psi in [Psi::Step { epsilon: 0.1_f64 }, Psi::Linear { epsilon: 0.25 }, tab.clone()] {
            psi.validate().unwrap();
        }
        assert_eq!(Psi::Step { epsilon: 0.1 }.eval(1.0), 0.9);
        assert_eq!(Psi::Linear { epsilon: 0.25 }.eval(-1.0 / 3.0), 5.0 / 12.0);
        assert!((tab.eval(-0.25) - 0.4).abs() < 1e-15);
        assert!(Psi::Linear { epsilon: 0.6_f64 }.validate().is_err());
        let bad: Psi<f64> = Psi::Tabulated { epsilon: 0.2, knots: vec![0.0, 0.5, 1.0], values: vec![0.5, 0.9, 0.8] };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn logit_is_increasing_with_half_at_zero() {
        let phi: Link<f64> = Link::Logit;
        phi.validate().unwrap();
        assert_eq!(phi.eval(0.0), 0.5);
        assert!((phi.eval(0.5) - 0.731_058_578_630_004_9).abs() < 1e-15);
        assert!((phi.modulus(0.3).0 - (phi.eval(0.3) - phi.eval(-0.3))).abs() < 1e-15);
    }

    #[test]
    fn tabulated_link_constants() {
        let phi: Link<f64> = Link::Tabulated { knots: vec![0.0, 1.0, 2.0], values: vec![0.5, 0.8, 0.9] };
        phi.validate().unwrap();
        assert!((phi.lipschitz_upper() - 0.3).abs() < 1e-15);
        assert!((phi.lipschitz_lower(1.5_f64) - 0.1).abs() < 1e-15);
        assert!((phi.lipschitz_lower(0.5_f64) - 0.3).abs() < 1e-15);
        let flat: Link<f64> = Link::Tabulated { knots: vec![0.0, 1.0], values: vec![0.5, 0.5] };
        assert!(flat.validate().is_err());
    }
}
