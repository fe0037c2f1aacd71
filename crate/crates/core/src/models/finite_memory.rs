//! Kernels of finite order `k`, given as a table of conditional laws.
//!
//! Row `i` of the table is the law of the next symbol after the context
//! `(x_{-k}, …, x_{-1})` whose base-`|S|` digits, oldest first, spell `i`.

use serde::{Deserialize, Serialize};

use crate::alphabet::{Alphabet, Symbol};
use crate::kernel::{check_distribution, fingerprint_of, BoxCursor, Cursor, Estimate, Kernel, L2Bounds};
use crate::past::{History, Past};
use crate::scalar::{compensated_sum, Scalar};
use crate::series::{SeriesClassification, SlopeThresholds, TailCertificate};
use crate::Error;

/// Contexts enumerated by the closed-form criteria are capped here.
const MAX_ROWS: usize = 1 << 22;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteMemoryParams<T> {
    pub alphabet: Alphabet,
    pub order: usize,
    pub table: Vec<Vec<T>>,
}

impl<T: Scalar> FiniteMemoryParams<T> {
    /// Order-0 kernel with law `probs`.
    pub fn iid(alphabet: Alphabet, probs: Vec<T>) -> Self {
        Self { alphabet, order: 0, table: vec![probs] }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let rows = self.alphabet.paths(self.order).filter(|r| *r <= MAX_ROWS).ok_or_else(|| Error::param("order", "context table too large"))?;
        if self.table.len() != rows {
            return Err(Error::param("table", format!("expected {rows} rows, found {}", self.table.len())));
        }
        for (i, row) in self.table.iter().enumerate() {
            if row.len() != self.alphabet.len() {
                return Err(Error::param("table", format!("row {i} has {} entries", row.len())));
            }
            check_distribution(row, T::lit(1e-12)).map_err(|e| Error::param("table", format!("row {i}: {e}")))?;
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct FiniteMemoryKernel<T> {
    params: FiniteMemoryParams<T>,
    fingerprint: u64,
    gamma: T,
    rows: usize,
}

impl<T: Scalar> FiniteMemoryKernel<T> {
    pub fn new(params: FiniteMemoryParams<T>) -> Result<Self, Error> {
        params.validate()?;
        let gamma = params.table.iter().flatten().copied().fold(T::one(), T::min);
        let fingerprint = fingerprint_of("finite-memory", &params);
        let rows = params.table.len();
        Ok(Self { params, fingerprint, gamma, rows })
    }

    pub fn iid(alphabet: Alphabet, probs: Vec<T>) -> Result<Self, Error> {
        Self::new(FiniteMemoryParams::iid(alphabet, probs))
    }

    pub fn params(&self) -> &FiniteMemoryParams<T> {
        &self.params
    }

    pub fn order(&self) -> usize {
        self.params.order
    }

    pub fn table(&self) -> &[Vec<T>] {
        &self.params.table
    }

    /// Row index of the context formed by the last `order` symbols.
    pub fn context(&self, history: &History<'_>) -> usize {
        let n = self.params.alphabet.len();
        (1..=self.params.order).rev().fold(0, |acc, i| acc * n + history.lookup(i).index())
    }

    /// `max_a max_groups (max - min)` of column `a` over rows grouped by `key`.
    fn spread(&self, key: impl Fn(usize) -> usize, groups: usize) -> Vec<T> {
        let n = self.params.alphabet.len();
        let mut hi = vec![T::neg_infinity(); groups * n];
        let mut lo = vec![T::infinity(); groups * n];
        for (r, row) in self.params.table.iter().enumerate() {
            let g = key(r);
            for (a, v) in row.iter().enumerate() {
                hi[g * n + a] = hi[g * n + a].max(*v);
                lo[g * n + a] = lo[g * n + a].min(*v);
            }
        }
        (0..n).map(|a| (0..groups).map(|g| hi[g * n + a] - lo[g * n + a]).fold(T::zero(), T::max)).collect()
    }
}

impl<T: Scalar> Kernel<T> for FiniteMemoryKernel<T> {
    fn alphabet(&self) -> &Alphabet {
        &self.params.alphabet
    }

    fn non_null_bound(&self) -> T {
        self.gamma
    }

    fn conditional(&self, history: &History<'_>, out: &mut [T]) {
        out.copy_from_slice(&self.params.table[self.context(history)]);
    }

    fn cursor<'a>(&'a self, past: &'a Past) -> BoxCursor<'a, T> {
        let ctx = self.context(&History::of_past(past));
        Box::new(FiniteMemoryCursor { kernel: self, ctx, depth: 0 })
    }

    fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    fn memory_scale(&self) -> usize {
        self.params.order.max(1)
    }

    fn finite_memory(&self) -> Option<usize> {
        Some(self.params.order)
    }

    fn variation_closed_form(&self, k: usize) -> Option<T> {
        if k >= self.params.order {
            return Some(T::zero());
        }
        let n = self.params.alphabet.len();
        let modulus = n.pow(k as u32);
        Some(self.spread(|r| r % modulus, modulus).into_iter().fold(T::zero(), T::max))
    }

    fn oscillation_closed_form(&self, k: usize) -> Option<Estimate<T>> {
        if k == 0 {
            return None;
        }
        if k > self.params.order {
            return Some(Estimate::exact(T::zero()));
        }
        let n = self.params.alphabet.len();
        let w = n.pow(k as u32 - 1);
        // Drop digit k-1 (lag k) from the row index.
        let key = |r: usize| (r / (w * n)) * w + r % w;
        Some(Estimate::exact(compensated_sum(self.spread(key, self.rows / n))))
    }

    fn oscillation_tail_bound(&self, k_max: usize) -> Option<T> {
        Some(compensated_sum((k_max + 1..=self.params.order).map(|k| self.oscillation_closed_form(k).expect("k ≥ 1").value)))
    }

    fn l2_bounds(&self, n_max: usize) -> Option<Result<L2Bounds<T>, Error>> {
        let var2 = |k: usize| self.variation_closed_form(k).expect("closed form").powi(2);
        let terms: Vec<T> = (1..=n_max).map(var2).collect();
        let rest = compensated_sum((n_max + 1..self.params.order).map(var2));
        let exact = SeriesClassification::from_terms(1, &terms, TailCertificate::Finite { bound: rest }, SlopeThresholds::default());
        Some(Ok(L2Bounds { lower: Some(exact.clone()), upper: exact }))
    }
}

struct FiniteMemoryCursor<'a, T> {
    kernel: &'a FiniteMemoryKernel<T>,
    ctx: usize,
    depth: usize,
}

impl<'a, T: Scalar> Cursor<'a, T> for FiniteMemoryCursor<'a, T> {
    fn probs(&mut self, out: &mut [T]) {
        out.copy_from_slice(&self.kernel.params.table[self.ctx]);
    }

    fn push(&mut self, s: Symbol) {
        let n = self.kernel.params.alphabet.len();
        self.ctx = (self.ctx * n + s.index()) % self.kernel.rows;
        self.depth += 1;
    }

    fn depth(&self) -> usize {
        self.depth
    }

    fn fork(&self) -> BoxCursor<'a, T> {
        Box::new(FiniteMemoryCursor { kernel: self.kernel, ctx: self.ctx, depth: self.depth })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order_two() -> FiniteMemoryKernel<f64> {
        let table = vec![vec![0.9, 0.1], vec![0.6, 0.4], vec![0.3, 0.7], vec![0.2, 0.8]];
        FiniteMemoryKernel::new(FiniteMemoryParams { alphabet: Alphabet::spin(), order: 2, table }).unwrap()
    }

    #[test]
    fn context_digits_are_oldest_first() {
        let k = order_two();
        // x_{-2} = -1 (digit 1), x_{-1} = +1 (digit 0) → row 2.
        let past = Past::new(vec![Symbol::PLUS, Symbol::MINUS], vec![Symbol::PLUS]).unwrap();
        assert_eq!(k.context(&History::of_past(&past)), 2);
        let mut c = k.cursor(&past);
        c.push(Symbol::MINUS);
        // Context becomes (+1, -1) → row 1.
        let mut out = [0.0; 2];
        c.probs(&mut out);
        assert_eq!(out, [0.6, 0.4]);
    }

    #[test]
    fn closed_forms_match_brute_force() {
        let k = order_two();
        // var_1: rows sharing x_{-1}: {0, 2} and {1, 3}.
        assert!((k.variation_closed_form(1).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(k.variation_closed_form(2).unwrap(), 0.0);
        // osc_1 flips x_{-1}: pairs {0,1}, {2,3}; per-symbol max 0.3 each.
        assert!((k.oscillation_closed_form(1).unwrap().value - 0.6).abs() < 1e-15);
        // osc_2 flips x_{-2}: pairs {0,2}, {1,3}.
        assert!((k.oscillation_closed_form(2).unwrap().value - 1.2).abs() < 1e-15);
        assert_eq!(k.oscillation_closed_form(3).unwrap().value, 0.0);
    }

    #[test]
    fn rejects_bad_rows() {
        let p = FiniteMemoryParams { alphabet: Alphabet::spin(), order: 1, table: vec![vec![0.5, 0.5], vec![0.5, 0.6]] };
        assert!(FiniteMemoryKernel::new(p).is_err());
        let p = FiniteMemoryParams { alphabet: Alphabet::spin(), order: 1, table: vec![vec![0.5, 0.5]] };
        assert!(FiniteMemoryKernel::new(p).is_err());
    }
}
