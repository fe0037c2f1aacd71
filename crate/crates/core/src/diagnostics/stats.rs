//! Small statistics helpers shared by the estimators.

use serde::{Deserialize, Serialize};

use crate::scalar::{CompensatedSum, Scalar};

/// Sample mean and standard error of the mean.
pub fn mean_se<T: Scalar>(xs: &[T]) -> (T, T) {
    let n = xs.len();
    if n == 0 {
        return (T::nan(), T::nan());
    }
    let nf = T::from_usize_lossy(n);
    let mean = crate::scalar::compensated_sum(xs.iter().copied()) / nf;
    if n == 1 {
        return (mean, T::zero());
    }
    let mut ss = CompensatedSum::new();
    for x in xs {
        ss.add((*x - mean) * (*x - mean));
    }
    let var = ss.value() / T::from_usize_lossy(n - 1);
    (mean, (var / nf).sqrt())
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted<T: Scalar>(sorted: &[T], q: f64) -> T {
    match sorted.len() {
        0 => T::nan(),
        1 => sorted[0],
        n => {
            let h = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = T::lit(h - lo as f64);
            sorted[lo] + (sorted[hi] - sorted[lo]) * frac
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantiles<T> {
    pub q10: T,
    pub q25: T,
    pub median: T,
    pub q75: T,
    pub q90: T,
}

impl<T: Scalar> Quantiles<T> {
    pub fn of(values: &[T]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        Self {
            q10: quantile_sorted(&v, 0.1),
            q25: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q75: quantile_sorted(&v, 0.75),
            q90: quantile_sorted(&v, 0.9),
        }
    }
}

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Least-squares `(slope, intercept)`; `None` without two distinct abscissae.
pub fn linear_fit<T: Scalar>(pts: &[(T, T)]) -> Option<(T, T)> {
    let slope = crate::series::fit_slope(pts)?;
    let n = T::from_usize_lossy(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<T>() / n;
    let my = pts.iter().map(|p| p.1).sum::<T>() / n;
    Some((slope, my - slope * mx))
}

/// Weighted least-squares nonincreasing fit (pool adjacent violators).
pub fn isotonic_nonincreasing<T: Scalar>(values: &[T], weights: &[T]) -> Vec<T> {
    // Blocks of (weighted mean, weight, length).
    let mut blocks: Vec<(T, T, usize)> = Vec::with_capacity(values.len());
    for (v, w) in values.iter().zip(weights) {
        blocks.push((*v, *w, 1));
        while blocks.len() >= 2 {
            let (m2, w2, l2) = blocks[blocks.len() - 1];
            let (m1, w1, l1) = blocks[blocks.len() - 2];
            if m1 >= m2 {
                break;
            }
            let w = w1 + w2;
            let m = if w > T::zero() { (m1 * w1 + m2 * w2) / w } else { (m1 + m2) / T::lit(2.0) };
            blocks.truncate(blocks.len() - 2);
            blocks.push((m, w, l1 + l2));
        }
    }
    blocks.into_iter().flat_map(|(m, _, l)| std::iter::repeat_n(m, l)).collect()
}
