//! Semi-infinite histories: an explicit suffix followed by a periodic tail.

use serde::{Deserialize, Serialize};

use crate::alphabet::{Alphabet, Symbol};
use crate::Error;

/// A past `x_{-1}, x_{-2}, ...` stored as an explicit suffix (most recent
/// first) followed by a pattern repeated forever.
///
/// Construction canonicalises the representation: the tail pattern is reduced
/// to its primitive period and the suffix is shortened while its oldest
/// symbol agrees with the periodic continuation. Two pasts with identical
/// lookups therefore compare equal and evaluate identically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "PastRepr", into = "PastRepr")]
pub struct Past {
    suffix: Vec<Symbol>,
    tail: Vec<Symbol>,
}

#[derive(Serialize, Deserialize)]
struct PastRepr {
    suffix: Vec<Symbol>,
    tail: Vec<Symbol>,
}

impl TryFrom<PastRepr> for Past {
    type Error = Error;
    fn try_from(r: PastRepr) -> Result<Self, Error> {
        Past::new(r.suffix, r.tail)
    }
}

impl From<Past> for PastRepr {
    fn from(p: Past) -> Self {
        PastRepr { suffix: p.suffix, tail: p.tail }
    }
}

fn primitive_period(tail: &[Symbol]) -> usize {
    let p = tail.len();
    (1..=p).filter(|d| p.is_multiple_of(*d)).find(|&d| (d..p).all(|i| tail[i] == tail[i - d])).unwrap_or(p)
}

impl Past {
    pub fn new(mut suffix: Vec<Symbol>, mut tail: Vec<Symbol>) -> Result<Self, Error> {
        if tail.is_empty() {
            return Err(Error::InvalidPast("tail period must be at least 1".into()));
        }
        let d = primitive_period(&tail);
        tail.truncate(d);
        // Fold the oldest suffix symbols into the tail while they continue it.
        while let Some(&last) = suffix.last() {
            if last == tail[tail.len() - 1] {
                suffix.pop();
                tail.rotate_right(1);
            } else {
                break;
            }
        }
        Ok(Self { suffix, tail })
    }

    /// `s, s, s, ...`
    pub fn constant(s: Symbol) -> Self {
        Self { suffix: Vec::new(), tail: vec![s] }
    }

    /// The all-`+1` past.
    pub fn plus() -> Self {
        Self::constant(Symbol::PLUS)
    }

    /// The all-`-1` past.
    pub fn minus() -> Self {
        Self::constant(Symbol::MINUS)
    }

    /// `x_{-1} = first`, then alternating.
    pub fn alternating(first: Symbol, second: Symbol) -> Self {
        Self::new(Vec::new(), vec![first, second]).expect("nonempty tail")
    }

    pub fn validate(&self, alphabet: &Alphabet) -> Result<(), Error> {
        match self.suffix.iter().chain(&self.tail).find(|s| !alphabet.contains(**s)) {
            Some(s) => Err(Error::InvalidPast(format!("symbol index {} outside alphabet of size {}", s.0, alphabet.len()))),
            None => Ok(()),
        }
    }

    pub fn suffix(&self) -> &[Symbol] {
        &self.suffix
    }

    pub fn tail(&self) -> &[Symbol] {
        &self.tail
    }

    pub fn period(&self) -> usize {
        self.tail.len()
    }

    /// `x_{-k}` for `k ≥ 1`.
    #[inline]
    pub fn lookup(&self, k: usize) -> Symbol {
        debug_assert!(k >= 1);
        let l = self.suffix.len();
        if k <= l {
            self.suffix[k - 1]
        } else {
            self.tail[(k - l - 1) % self.tail.len()]
        }
    }

    /// The same past with one tail period moved into the suffix.
    pub fn unrolled(&self) -> Past {
        let mut suffix = self.suffix.clone();
        suffix.extend_from_slice(&self.tail);
        Past::new(suffix, self.tail.clone()).expect("valid tail")
    }

    /// `recent` (most recent first) concatenated in front of this past.
    pub fn prepend(&self, recent: &[Symbol]) -> Past {
        let mut suffix = recent.to_vec();
        suffix.extend_from_slice(&self.suffix);
        Past::new(suffix, self.tail.clone()).expect("valid tail")
    }

    /// `Σ_{i=1}^{n} spin(x_{-i})` in closed form over the periodic tail.
    pub fn spin_sum(&self, n: usize) -> i64 {
        let l = self.suffix.len();
        let head = n.min(l);
        let mut acc: i64 = self.suffix[..head].iter().map(|s| s.spin()).sum();
        if n > l {
            let rest = n - l;
            let p = self.tail.len();
            let per: i64 = self.tail.iter().map(|s| s.spin()).sum();
            acc += per * (rest / p) as i64;
            acc += self.tail[..rest % p].iter().map(|s| s.spin()).sum::<i64>();
        }
        acc
    }

    /// Smallest `k ≥ 1` with `x_{-k} = s`.
    pub fn first_occurrence(&self, s: Symbol) -> Option<usize> {
        if let Some(i) = self.suffix.iter().position(|&x| x == s) {
            return Some(i + 1);
        }
        self.tail.iter().position(|&x| x == s).map(|i| self.suffix.len() + i + 1)
    }
}

/// A finite chain prefix `ω_0 .. ω_{t-1}` (chronological) glued in front of
/// a past. `lookup(1)` is the most recent symbol.
/// Prefix sums of a [`Past`] for `O(1)` spin sums over its last `n` symbols.
#[derive(Clone, Debug)]
pub struct SpinSums {
    suffix: Vec<i64>,
    tail: Vec<i64>,
}

impl SpinSums {
    pub fn new(past: &Past) -> Self {
        let scan = |xs: &[Symbol]| {
            let mut acc = vec![0i64];
            for s in xs {
                acc.push(acc[acc.len() - 1] + s.spin());
            }
            acc
        };
        Self { suffix: scan(&past.suffix), tail: scan(&past.tail) }
    }

    /// `Σ_{k=1}^{n} spin(x_{-k})`.
    #[inline]
    pub fn sum(&self, n: usize) -> i64 {
        let l = self.suffix.len() - 1;
        if n <= l {
            return self.suffix[n];
        }
        let rest = n - l;
        let p = self.tail.len() - 1;
        self.suffix[l] + self.tail[p] * (rest / p) as i64 + self.tail[rest % p]
    }
}

#[derive(Clone, Copy, Debug)]
pub struct History<'a> {
    path: &'a [Symbol],
    past: &'a Past,
}

impl<'a> History<'a> {
    pub fn new(path: &'a [Symbol], past: &'a Past) -> Self {
        Self { path, past }
    }

    pub fn of_past(past: &'a Past) -> Self {
        Self { path: &[], past }
    }

    pub fn path(&self) -> &'a [Symbol] {
        self.path
    }

    pub fn past(&self) -> &'a Past {
        self.past
    }

    /// Number of simulated symbols in front of the past.
    pub fn depth(&self) -> usize {
        self.path.len()
    }

    #[inline]
    pub fn lookup(&self, k: usize) -> Symbol {
        let t = self.path.len();
        if k <= t {
            self.path[t - k]
        } else {
            self.past.lookup(k - t)
        }
    }

    /// `Σ_{i=1}^{n} spin(lookup(i))`.
    pub fn spin_sum(&self, n: usize) -> i64 {
        let t = self.path.len();
        let inner = n.min(t);
        let mut acc: i64 = self.path[t - inner..].iter().map(|s| s.spin()).sum();
        if n > t {
            acc += self.past.spin_sum(n - t);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const P: Symbol = Symbol::PLUS;
    const M: Symbol = Symbol::MINUS;

    #[test]
    fn lookup_follows_suffix_then_tail() {
        let past = Past::new(vec![P, M, M], vec![P, M]).unwrap();
        let seq: Vec<_> = (1..=7).map(|k| past.lookup(k)).collect();
        assert_eq!(seq, vec![P, M, M, P, M, P, M]);
    }

    #[test]
    fn canonical_form_strips_redundancy() {
        let a = Past::new(vec![P, M, M, M], vec![M, M]).unwrap();
        assert_eq!(a.suffix(), &[P]);
        assert_eq!(a.tail(), &[M]);
        assert!(Past::new(vec![], vec![]).unwrap_err().to_string().contains("period"));
    }

    #[test]
    fn spin_sum_closed_form() {
        let past = Past::new(vec![P, M, M], vec![P, P, M]).unwrap();
        for n in 0..40 {
            let direct: i64 = (1..=n).map(|k| past.lookup(k).spin()).sum();
            assert_eq!(past.spin_sum(n), direct);
        }
    }

    #[test]
    fn spin_sums_match_closed_form() {
        let past = Past::new(vec![M, P, P, M], vec![P, M, M]).unwrap();
        let sums = SpinSums::new(&past);
        for n in 0..50 {
            assert_eq!(sums.sum(n), past.spin_sum(n));
        }
    }

    #[test]
    fn history_glues_path_before_past() {
        let past = Past::minus();
        let path = [P, P, M];
        let h = History::new(&path, &past);
        assert_eq!(h.lookup(1), M);
        assert_eq!(h.lookup(3), P);
        assert_eq!(h.lookup(4), M);
        assert_eq!(h.spin_sum(5), 1 - 1 - 1);
    }

    fn sym() -> impl Strategy<Value = Symbol> {
        (0u8..3).prop_map(Symbol)
    }

    proptest! {
        #[test]
        fn unrolling_preserves_lookup(suffix in prop::collection::vec(sym(), 0..12),
                                      tail in prop::collection::vec(sym(), 1..6)) {
            let raw_lookup = |k: usize| if k <= suffix.len() { suffix[k - 1] } else { tail[(k - suffix.len() - 1) % tail.len()] };
            let past = Past::new(suffix.clone(), tail.clone()).unwrap();
            let unrolled = past.unrolled();
            for k in 1..60 {
                prop_assert_eq!(past.lookup(k), raw_lookup(k));
                prop_assert_eq!(unrolled.lookup(k), raw_lookup(k));
            }
            prop_assert_eq!(&past, &unrolled);
        }

        #[test]
        fn first_occurrence_is_minimal(suffix in prop::collection::vec(sym(), 0..8),
                                       tail in prop::collection::vec(sym(), 1..4)) {
            let past = Past::new(suffix, tail).unwrap();
            for s in 0u8..3 {
                let s = Symbol(s);
                match past.first_occurrence(s) {
                    Some(k) => {
                        prop_assert_eq!(past.lookup(k), s);
                        prop_assert!((1..k).all(|j| past.lookup(j) != s));
                    }
                    None => prop_assert!((1..40).all(|j| past.lookup(j) != s)),
                }
            }
        }
    }
}
