//! Classification of partial-sum sequences as convergent or divergent.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Convergent,
    Divergent,
    Inconclusive,
}

/// Analytic statement about the remainder `Σ_{n > N} a_n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TailCertificate<T> {
    /// No analytic information.
    None,
    /// The remainder is at most `bound`.
    Finite { bound: T },
    /// The remainder is certified infinite.
    Divergent,
}

/// Slope thresholds for the log-log growth fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeThresholds {
    pub converge_below: f64,
    pub diverge_above: f64,
}

impl Default for SlopeThresholds {
    fn default() -> Self {
        Self { converge_below: 0.05, diverge_above: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesClassification<T> {
    /// Index of the first summand; `partial_sums[i]` sums indices
    /// `first_index ..= first_index + i`.
    pub first_index: usize,
    pub partial_sums: Vec<T>,
    pub tail: TailCertificate<T>,
    /// Fitted log-log growth exponent of the partial sums over the last decade.
    pub slope: Option<T>,
    pub verdict: Verdict,
}

impl<T: Scalar> SeriesClassification<T> {
    /// Classifies the cumulative sums of `terms` (indexed from `first_index`).
    pub fn from_terms(first_index: usize, terms: &[T], tail: TailCertificate<T>, thresholds: SlopeThresholds) -> Self {
        let mut acc = crate::scalar::CompensatedSum::new();
        let partial_sums = terms
            .iter()
            .map(|t| {
                acc.add(*t);
                acc.value()
            })
            .collect();
        Self::from_partial_sums(first_index, partial_sums, tail, thresholds)
    }

    pub fn from_partial_sums(first_index: usize, partial_sums: Vec<T>, tail: TailCertificate<T>, thresholds: SlopeThresholds) -> Self {
        let xs: Vec<T> = (0..partial_sums.len()).map(|i| T::from_usize_lossy(first_index + i)).collect();
        let slope = last_decade_slope(&xs, &partial_sums);
        let verdict = match tail {
            TailCertificate::Finite { .. } => Verdict::Convergent,
            TailCertificate::Divergent => Verdict::Divergent,
            TailCertificate::None => slope_verdict(slope, &partial_sums, thresholds),
        };
        Self { first_index, partial_sums, tail, slope, verdict }
    }

    pub fn last(&self) -> Option<T> {
        self.partial_sums.last().copied()
    }

    /// Certified upper bound on the infinite sum, if the tail is finite.
    pub fn total_upper_bound(&self) -> Option<T> {
        match self.tail {
            TailCertificate::Finite { bound } => Some(self.last().unwrap_or_else(T::zero) + bound),
            _ => None,
        }
    }
}

/// Verdict from the fitted slope alone.
pub fn slope_verdict<T: Scalar>(slope: Option<T>, sums: &[T], thresholds: SlopeThresholds) -> Verdict {
    match slope {
        Some(s) if s.to_f64_lossy() < thresholds.converge_below => Verdict::Convergent,
        Some(s) if s.to_f64_lossy() > thresholds.diverge_above && grows(sums) => Verdict::Divergent,
        _ => Verdict::Inconclusive,
    }
}

fn grows<T: Scalar>(sums: &[T]) -> bool {
    match (sums.first(), sums.last()) {
        (Some(a), Some(b)) => b > a,
        _ => false,
    }
}

/// Least-squares slope of `log y` against `log x` over points with
/// `x ≥ x_max / 10`. Zero sequences have slope zero; sequences with fewer than
/// two positive points in the decade have no slope.
pub fn last_decade_slope<T: Scalar>(xs: &[T], ys: &[T]) -> Option<T> {
    let x_max = xs.iter().copied().fold(T::zero(), T::max);
    if x_max <= T::zero() {
        return None;
    }
    let lo = x_max / T::lit(10.0);
    let window: Vec<(T, T)> = xs.iter().zip(ys).filter(|(x, _)| **x >= lo && **x > T::zero()).map(|(x, y)| (*x, *y)).collect();
    if window.len() >= 2 && window.iter().all(|(_, y)| *y == T::zero()) {
        return Some(T::zero());
    }
    let pts: Vec<(T, T)> = window.into_iter().filter(|(_, y)| *y > T::zero()).map(|(x, y)| (x.ln(), y.ln())).collect();
    fit_slope(&pts)
}

/// Ordinary least-squares slope; `None` for fewer than two distinct abscissae.
pub fn fit_slope<T: Scalar>(pts: &[(T, T)]) -> Option<T> {
    if pts.len() < 2 {
        return None;
    }
    let n = T::from_usize_lossy(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<T>() / n;
    let my = pts.iter().map(|p| p.1).sum::<T>() / n;
    let sxx: T = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx <= T::zero() {
        return None;
    }
    let sxy: T = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_growth_slope_is_recovered() {
        let xs: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(0.4)).collect();
        let s = last_decade_slope(&xs, &ys).unwrap();
        assert!((s - 0.4).abs() < 1e-12);
    }

    #[test]
    fn certificates_override_slope() {
        let terms = vec![1.0_f64; 100];
        let c = SeriesClassification::from_terms(1, &terms, TailCertificate::Finite { bound: 0.0 }, SlopeThresholds::default());
        assert_eq!(c.verdict, Verdict::Convergent);
        let d = SeriesClassification::from_terms(1, &[1e-9_f64; 10], TailCertificate::Divergent, SlopeThresholds::default());
        assert_eq!(d.verdict, Verdict::Divergent);
    }

    #[test]
    fn slope_rules() {
        let th = SlopeThresholds::default();
        let linear = SeriesClassification::from_terms(1, &vec![1.0_f64; 200], TailCertificate::None, th);
        assert_eq!(linear.verdict, Verdict::Divergent);
        let zero = SeriesClassification::from_terms(1, &vec![0.0_f64; 200], TailCertificate::None, th);
        assert_eq!(zero.verdict, Verdict::Convergent);
        assert_eq!(zero.slope, Some(0.0));
        let geometric: Vec<f64> = (0..200).map(|i| 0.5_f64.powi(i)).collect();
        let g = SeriesClassification::from_terms(1, &geometric, TailCertificate::None, th);
        assert_eq!(g.verdict, Verdict::Convergent);
        // N^{0.1} growth sits between the thresholds.
        let mid: Vec<f64> = (1..=1000).map(|n: i32| (n as f64).powf(0.1) - ((n - 1) as f64).powf(0.1)).collect();
        let m = SeriesClassification::from_terms(1, &mid, TailCertificate::None, th);
        assert_eq!(m.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn partial_sums_are_monotone_for_nonnegative_terms() {
        let terms: Vec<f64> = (1..5000).map(|i| 1.0 / (i as f64).powi(2)).collect();
        let c = SeriesClassification::from_terms(1, &terms, TailCertificate::None, SlopeThresholds::default());
        assert!(c.partial_sums.windows(2).all(|w| w[1] >= w[0]));
    }
}
