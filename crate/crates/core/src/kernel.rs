//! The kernel abstraction: conditional laws `g(· | past)` plus the
//! closed-form structure families expose to the criterion evaluators.

use serde::{Deserialize, Serialize};

use crate::alphabet::{Alphabet, Symbol};
use crate::past::{History, Past};
use crate::scalar::Scalar;
use crate::series::SeriesClassification;
use crate::Error;

/// Memory scales are capped here; callers treat a capped value as a caveat.
pub const MEMORY_SCALE_CAP: usize = 100_000;

/// How a numeric quantity relates to the quantity it approximates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bound {
    Exact,
    LowerBound,
    UpperBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate<T> {
    pub value: T,
    pub bound: Bound,
}

impl<T: Scalar> Estimate<T> {
    pub fn exact(value: T) -> Self {
        Self { value, bound: Bound::Exact }
    }

    pub fn lower(value: T) -> Self {
        Self { value, bound: Bound::LowerBound }
    }

    pub fn upper(value: T) -> Self {
        Self { value, bound: Bound::UpperBound }
    }

    pub fn is_exact(&self) -> bool {
        self.bound == Bound::Exact
    }
}

/// Analytic comparison series for `Σ var_n²`.
///
/// `upper` dominates `Σ var_n²`. `lower`, when the family supports it, is
/// dominated by the weak-ℓ² sum along every trajectory for the extremal pair
/// of pasts, hence also by `Σ var_n²`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct L2Bounds<T> {
    pub lower: Option<SeriesClassification<T>>,
    pub upper: SeriesClassification<T>,
}

/// A probability kernel on a finite alphabet.
///
/// Implementations are immutable and shared read-only between workers.
pub trait Kernel<T: Scalar>: Send + Sync {
    fn alphabet(&self) -> &Alphabet;

    /// `γ` with `γ ≤ inf_{a, x} g(a | x)`.
    fn non_null_bound(&self) -> T;

    /// Writes `g(a | history)` for every `a` in canonical order into `out`.
    fn conditional(&self, history: &History<'_>, out: &mut [T]);

    /// Incremental evaluator for a chain started from `past`.
    fn cursor<'a>(&'a self, past: &'a Past) -> BoxCursor<'a, T>;

    /// Stable identity of the kernel's parameters.
    fn fingerprint(&self) -> u64;

    /// Characteristic memory length used for default burn-in.
    fn memory_scale(&self) -> usize;

    /// `Some(k)` if `g` only depends on the last `k` symbols.
    fn finite_memory(&self) -> Option<usize> {
        None
    }

    /// `(max, min)` pasts for monotone families: for every prefix, the
    /// supremum of `|g(aωx) - g(aωy)|` over pasts is attained at this pair.
    fn extremal_pasts(&self) -> Option<(Past, Past)> {
        None
    }

    /// Closed-form `var_k`, when the family has one.
    fn variation_closed_form(&self, _k: usize) -> Option<T> {
        None
    }

    /// Closed-form or analytic bound for `osc_k` in the summed-over-symbols
    /// form `Σ_a sup_ω sup_{b,b'} |Δ g(a)|`.
    fn oscillation_closed_form(&self, _k: usize) -> Option<Estimate<T>> {
        None
    }

    /// Certified upper bound on `Σ_{k > k_max} osc_k` (summed form).
    fn oscillation_tail_bound(&self, _k_max: usize) -> Option<T> {
        None
    }

    /// Analytic comparison series sandwiching `Σ_n var_n²`.
    fn l2_bounds(&self, _n_max: usize) -> Option<Result<L2Bounds<T>, Error>> {
        None
    }

    /// Single-symbol convenience wrapper around [`Kernel::conditional`].
    fn eval(&self, a: Symbol, history: &History<'_>) -> T {
        let mut out = vec![T::zero(); self.alphabet().len()];
        self.conditional(history, &mut out);
        out[a.index()]
    }
}

pub type BoxCursor<'a, T> = Box<dyn Cursor<'a, T> + 'a>;

/// Online evaluator of `g(· | ω_0 .. ω_{t-1} x̲)` as symbols are appended.
pub trait Cursor<'a, T: Scalar>: Send {
    /// Conditional law of the next symbol given the current history.
    fn probs(&mut self, out: &mut [T]);

    fn push(&mut self, s: Symbol);

    /// Number of symbols appended so far.
    fn depth(&self) -> usize;

    /// Independent copy of the current state.
    fn fork(&self) -> BoxCursor<'a, T>;
}

/// Generic cursor that stores the path and calls [`Kernel::conditional`].
pub struct PathCursor<'a, T: Scalar> {
    kernel: &'a dyn Kernel<T>,
    past: &'a Past,
    path: Vec<Symbol>,
}

impl<'a, T: Scalar> PathCursor<'a, T> {
    pub fn new(kernel: &'a dyn Kernel<T>, past: &'a Past) -> Self {
        Self { kernel, past, path: Vec::new() }
    }
}

impl<'a, T: Scalar> Cursor<'a, T> for PathCursor<'a, T> {
    fn probs(&mut self, out: &mut [T]) {
        self.kernel.conditional(&History::new(&self.path, self.past), out);
    }

    fn push(&mut self, s: Symbol) {
        self.path.push(s);
    }

    fn depth(&self) -> usize {
        self.path.len()
    }

    fn fork(&self) -> BoxCursor<'a, T> {
        Box::new(PathCursor { kernel: self.kernel, past: self.past, path: self.path.clone() })
    }
}

/// Checks that `p` is a probability vector to within `tol`.
pub fn check_distribution<T: Scalar>(p: &[T], tol: T) -> Result<(), Error> {
    if p.iter().any(|x| !(x.is_finite()) || *x < -tol) {
        return Err(Error::InvalidDistribution("negative or non-finite entry".into()));
    }
    let s = crate::scalar::compensated_sum(p.iter().copied());
    if (s - T::one()).abs() > tol {
        return Err(Error::InvalidDistribution(format!("entries sum to {s}")));
    }
    Ok(())
}

/// 64-bit fingerprint of a serialisable parameter block.
pub fn fingerprint_of<P: Serialize>(tag: &str, params: &P) -> u64 {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(tag.as_bytes());
    h.update(serde_json::to_vec(params).expect("parameters serialise"));
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 8 bytes"))
}
