//! Exact computations at small horizons by enumerating the path tree.
//!
//! Paths are enumerated in lexicographic order with `ω_0` most significant.
//! The tree is split at a fixed depth and the subtrees are evaluated
//! independently, so results do not depend on the worker count.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::alphabet::{Alphabet, Symbol};
use crate::kernel::{BoxCursor, Kernel};
use crate::models::FiniteMemoryKernel;
use crate::parallel::map_indexed;
use crate::past::{History, Past};
use crate::scalar::{CompensatedSum, Scalar};
use crate::Error;

/// Default cap on the number of enumerated paths.
pub const DEFAULT_BUDGET: usize = 1 << 24;

/// Depth at which the path tree is split into independent subtrees.
const SPLIT_DEPTH: usize = 6;

const MAX_SYMBOLS: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowLaw<T> {
    pub past: Past,
    pub t0: usize,
    pub t1: usize,
    pub symbols: usize,
    /// Probabilities over `S^{t1 − t0 + 1}` in lexicographic order.
    pub probs: Vec<T>,
    pub evaluations: u64,
    pub wall_seconds: f64,
}

impl<T: Scalar> WindowLaw<T> {
    pub fn width(&self) -> usize {
        self.t1 - self.t0 + 1
    }

    /// Law of the sub-window `[a, b] ⊂ [t0, t1]`.
    pub fn marginal(&self, a: usize, b: usize) -> Result<WindowLaw<T>, Error> {
        if a > b || a < self.t0 || b > self.t1 {
            return Err(Error::Horizon(format!("[{a}, {b}] is not inside [{}, {}]", self.t0, self.t1)));
        }
        let n = self.symbols;
        let cells = n.pow((b - a + 1) as u32);
        let below = n.pow((self.t1 - b) as u32);
        let mut acc = vec![CompensatedSum::new(); cells];
        for (i, p) in self.probs.iter().enumerate() {
            acc[(i / below) % cells].add(*p);
        }
        Ok(WindowLaw { past: self.past.clone(), t0: a, t1: b, symbols: n, probs: acc.iter().map(|c| c.value()).collect(), evaluations: 0, wall_seconds: 0.0 })
    }

    /// `sup_B |P[B] − Q[B]| = ½ Σ |p − q|`.
    pub fn tv(&self, other: &WindowLaw<T>) -> Result<T, Error> {
        if self.probs.len() != other.probs.len() || self.t0 != other.t0 {
            return Err(Error::Horizon("window laws over different windows".into()));
        }
        Ok(half_l1(&self.probs, &other.probs))
    }

    /// `configuration,probability` rows; symbols separated by spaces.
    pub fn csv(&self, alphabet: &Alphabet) -> String {
        let w = self.width();
        let n = self.symbols;
        let mut out = String::from("configuration,probability\n");
        for (i, p) in self.probs.iter().enumerate() {
            let mut digits = vec![0usize; w];
            let mut idx = i;
            for d in digits.iter_mut().rev() {
                *d = idx % n;
                idx /= n;
            }
            let labels: Vec<&str> = digits.iter().map(|d| alphabet.label(Symbol(*d as u8))).collect();
            out.push_str(&format!("{},{:.16e}\n", labels.join(" "), p));
        }
        out
    }
}

pub(crate) fn half_l1<T: Scalar>(p: &[T], q: &[T]) -> T {
    crate::scalar::compensated_sum(p.iter().zip(q).map(|(a, b)| (*a - *b).abs())) * T::lit(0.5)
}

fn check_budget(symbols: usize, depth: usize, budget: usize) -> Result<usize, Error> {
    let mut acc: usize = 1;
    for _ in 0..depth {
        acc =
            acc.checked_mul(symbols).filter(|v| *v <= budget).ok_or_else(|| Error::Budget(format!("{symbols}^{depth} paths exceed the budget of {budget}")))?;
    }
    Ok(acc)
}

fn digits(mut idx: usize, n: usize, len: usize) -> Vec<Symbol> {
    let mut v = vec![Symbol(0); len];
    for slot in v.iter_mut().rev() {
        *slot = Symbol((idx % n) as u8);
        idx /= n;
    }
    v
}

/// Follows `prefix` from the root, multiplying conditionals in path order.
fn walk<'a, T: Scalar>(root: &BoxCursor<'a, T>, prefix: &[Symbol], n: usize, evals: &mut u64) -> (BoxCursor<'a, T>, T) {
    let mut c = root.fork();
    let mut prob = T::one();
    let mut buf = [T::zero(); MAX_SYMBOLS];
    for s in prefix {
        c.probs(&mut buf[..n]);
        *evals += 1;
        prob *= buf[s.index()];
        c.push(*s);
    }
    (c, prob)
}

pub(crate) fn leaves_dfs<T: Scalar>(mut cursor: BoxCursor<'_, T>, prob: T, out: &mut [T], n: usize, evals: &mut u64) {
    let mut buf = [T::zero(); MAX_SYMBOLS];
    cursor.probs(&mut buf[..n]);
    *evals += 1;
    if out.len() == n {
        for a in 0..n {
            out[a] = prob * buf[a];
        }
        return;
    }
    let stride = out.len() / n;
    let mut owned = Some(cursor);
    for (a, chunk) in out.chunks_mut(stride).enumerate() {
        let mut child = if a + 1 == n { owned.take().expect("cursor") } else { owned.as_ref().expect("cursor").fork() };
        child.push(Symbol(a as u8));
        leaves_dfs(child, prob * buf[a], chunk, n, evals);
    }
}

/// Probabilities of every path `ω_0 … ω_{depth−1}` in lexicographic order.
fn path_probabilities<T: Scalar>(kernel: &dyn Kernel<T>, past: &Past, depth: usize, workers: usize) -> (Vec<T>, u64) {
    let n = kernel.alphabet().len();
    let split = SPLIT_DEPTH.min(depth - 1);
    let subtrees = n.pow(split as u32);
    let leaves_per = n.pow((depth - split) as u32);
    let parts: Vec<(Vec<T>, u64)> = map_indexed(workers, subtrees, |i| {
        let mut evals = 0u64;
        let root = kernel.cursor(past);
        let (c, prob) = walk(&root, &digits(i, n, split), n, &mut evals);
        let mut out = vec![T::zero(); leaves_per];
        leaves_dfs(c, prob, &mut out, n, &mut evals);
        (out, evals)
    });
    let evals = parts.iter().map(|p| p.1).sum();
    let mut all = Vec::with_capacity(subtrees * leaves_per);
    for (p, _) in parts {
        all.extend(p);
    }
    (all, evals)
}

/// Law of `(ω_{t0}, …, ω_{t1})` under the chain started from `past`.
pub fn exact_window_law<T: Scalar>(kernel: &dyn Kernel<T>, past: &Past, t0: usize, t1: usize, budget: usize, workers: usize) -> Result<WindowLaw<T>, Error> {
    if t0 > t1 {
        return Err(Error::Horizon(format!("empty window [{t0}, {t1}]")));
    }
    past.validate(kernel.alphabet())?;
    let n = kernel.alphabet().len();
    check_budget(n, t1 + 1, budget)?;
    let start = Instant::now();
    let (leaves, evaluations) = path_probabilities(kernel, past, t1 + 1, workers);
    let probs = if t0 == 0 {
        leaves
    } else {
        let cells = n.pow((t1 - t0 + 1) as u32);
        let mut acc = vec![CompensatedSum::new(); cells];
        for (i, p) in leaves.iter().enumerate() {
            acc[i % cells].add(*p);
        }
        acc.iter().map(|c| c.value()).collect()
    };
    Ok(WindowLaw { past: past.clone(), t0, t1, symbols: n, probs, evaluations, wall_seconds: start.elapsed().as_secs_f64() })
}

/// `sup_B |P^x[B] − P^y[B]|` over events of the window `[t0, t1]`.
pub fn exact_window_tv<T: Scalar>(
    kernel: &dyn Kernel<T>,
    past_x: &Past,
    past_y: &Past,
    t0: usize,
    t1: usize,
    budget: usize,
    workers: usize,
) -> Result<T, Error> {
    let a = exact_window_law(kernel, past_x, t0, t1, budget, workers)?;
    let b = exact_window_law(kernel, past_y, t0, t1, budget, workers)?;
    a.tv(&b)
}

/// Worst pointwise violation of `4γ d ≤ Δ ≤ 4(1 − γ) d`, with `Δ` the
/// squared-difference and `d` the Hellinger increment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SandwichCheck {
    pub steps: u64,
    pub violations: u64,
    pub max_violation: f64,
}

/// Tolerance for the pointwise sandwich check.
pub const SANDWICH_TOLERANCE: f64 = 1e-12;

impl SandwichCheck {
    /// Returns the squared-difference and Hellinger increments for one step.
    #[inline]
    pub fn record<T: Scalar>(&mut self, p: &[T], q: &[T], gamma: T) -> (T, T) {
        let (mut sq, mut hel) = (T::zero(), T::zero());
        for (a, b) in p.iter().zip(q) {
            let d = *a - *b;
            sq += d * d;
            let h = a.sqrt() - b.sqrt();
            hel += h * h;
        }
        let four = T::lit(4.0);
        let v = (four * gamma * hel - sq).max(sq - four * (T::one() - gamma) * hel).max(T::zero()).to_f64_lossy();
        self.steps += 1;
        if v > SANDWICH_TOLERANCE {
            self.violations += 1;
        }
        self.max_violation = self.max_violation.max(v);
        (sq, hel)
    }

    pub fn merge(&mut self, other: &SandwichCheck) {
        self.steps += other.steps;
        self.violations += other.violations;
        self.max_violation = self.max_violation.max(other.max_violation);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactIncrements<T> {
    /// `E^x[Σ_a (g(a ω_0^{n−1} x) − g(a ω_0^{n−1} y))²]` for `n = 0 ..= N`.
    pub squared: Vec<T>,
    /// `E^x[Σ_a (√g(a ω_0^{n−1} x) − √g(a ω_0^{n−1} y))²]`.
    pub hellinger: Vec<T>,
    pub sandwich: SandwichCheck,
    pub evaluations: u64,
    pub wall_seconds: f64,
}

impl<T: Scalar> ExactIncrements<T> {
    /// `E^x[D_N]`.
    pub fn weak_l2_expectation(&self) -> T {
        crate::scalar::compensated_sum(self.squared.iter().copied())
    }
}

struct IncAcc<T> {
    sq: Vec<CompensatedSum<T>>,
    hel: Vec<CompensatedSum<T>>,
    sandwich: SandwichCheck,
    evals: u64,
}

#[allow(clippy::too_many_arguments)]
fn increments_dfs<T: Scalar>(cx: BoxCursor<'_, T>, cy: BoxCursor<'_, T>, depth: usize, last: usize, prob: T, gamma: T, n: usize, acc: &mut IncAcc<T>) {
    let (mut cx, mut cy) = (cx, cy);
    let mut px = [T::zero(); MAX_SYMBOLS];
    let mut py = [T::zero(); MAX_SYMBOLS];
    cx.probs(&mut px[..n]);
    cy.probs(&mut py[..n]);
    acc.evals += 2;
    let (sq, hel) = acc.sandwich.record(&px[..n], &py[..n], gamma);
    acc.sq[depth].add(prob * sq);
    acc.hel[depth].add(prob * hel);
    if depth == last {
        return;
    }
    for (a, &pa) in px.iter().enumerate().take(n) {
        if pa == T::zero() {
            continue;
        }
        let (mut x, mut y) = (cx.fork(), cy.fork());
        x.push(Symbol(a as u8));
        y.push(Symbol(a as u8));
        increments_dfs(x, y, depth + 1, last, prob * pa, gamma, n, acc);
    }
}

/// Exact expected increments of the weak-ℓ² sum under `P^x` for `n = 0 ..= N`.
pub fn exact_increments<T: Scalar>(
    kernel: &dyn Kernel<T>,
    past_x: &Past,
    past_y: &Past,
    horizon: usize,
    budget: usize,
    workers: usize,
) -> Result<ExactIncrements<T>, Error> {
    past_x.validate(kernel.alphabet())?;
    past_y.validate(kernel.alphabet())?;
    let n = kernel.alphabet().len();
    check_budget(n, horizon + 1, budget)?;
    let start = Instant::now();
    let gamma = kernel.non_null_bound();
    let fresh =
        || IncAcc { sq: vec![CompensatedSum::new(); horizon + 1], hel: vec![CompensatedSum::new(); horizon + 1], sandwich: SandwichCheck::default(), evals: 0 };
    let split = SPLIT_DEPTH.min(horizon);
    let mut total = fresh();
    if split > 0 {
        increments_dfs(kernel.cursor(past_x), kernel.cursor(past_y), 0, split - 1, T::one(), gamma, n, &mut total);
    }
    let parts: Vec<IncAcc<T>> = map_indexed(workers, n.pow(split as u32), |i| {
        let mut acc = fresh();
        let prefix = digits(i, n, split);
        let (rx, ry) = (kernel.cursor(past_x), kernel.cursor(past_y));
        let (cx, prob) = walk(&rx, &prefix, n, &mut acc.evals);
        let mut cy = ry.fork();
        for s in &prefix {
            cy.push(*s);
        }
        if prob > T::zero() {
            increments_dfs(cx, cy, split, horizon, prob, gamma, n, &mut acc);
        }
        acc
    });
    for p in &parts {
        for d in 0..=horizon {
            total.sq[d].merge(&p.sq[d]);
            total.hel[d].merge(&p.hel[d]);
        }
        total.sandwich.merge(&p.sandwich);
        total.evals += p.evals;
    }
    Ok(ExactIncrements {
        squared: total.sq.iter().map(|c| c.value()).collect(),
        hellinger: total.hel.iter().map(|c| c.value()).collect(),
        sandwich: total.sandwich,
        evaluations: total.evals,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// `E^x[D_N]` by exact enumeration.
pub fn exact_weak_l2_expectation<T: Scalar>(
    kernel: &dyn Kernel<T>,
    past_x: &Past,
    past_y: &Past,
    horizon: usize,
    budget: usize,
    workers: usize,
) -> Result<T, Error> {
    Ok(exact_increments(kernel, past_x, past_y, horizon, budget, workers)?.weak_l2_expectation())
}

/// `n ↦ E^x[d_n]`.
pub fn exact_hellinger_increments<T: Scalar>(
    kernel: &dyn Kernel<T>,
    past_x: &Past,
    past_y: &Past,
    horizon: usize,
    budget: usize,
    workers: usize,
) -> Result<Vec<T>, Error> {
    Ok(exact_increments(kernel, past_x, past_y, horizon, budget, workers)?.hellinger)
}

/// A finite-memory kernel viewed as a Markov chain on contexts.
///
/// States are contexts in the kernel's table order; emitting `s` from
/// context `c` moves to `(c |S| + s) mod |S|^k`.
#[derive(Clone, Debug)]
pub struct MarkovChain<T> {
    symbols: usize,
    states: usize,
    /// `emit[c][s] = g(s | c)`.
    emit: Vec<Vec<T>>,
}

impl<T: Scalar> MarkovChain<T> {
    pub fn from_kernel(kernel: &FiniteMemoryKernel<T>) -> Self {
        let emit = kernel.table().to_vec();
        Self { symbols: kernel.alphabet().len(), states: emit.len(), emit }
    }

    pub fn states(&self) -> usize {
        self.states
    }

    #[inline]
    fn next(&self, c: usize, s: usize) -> usize {
        (c * self.symbols + s) % self.states
    }

    /// The context of `past` under `kernel`.
    pub fn initial_state(kernel: &FiniteMemoryKernel<T>, past: &Past) -> usize {
        kernel.context(&History::of_past(past))
    }

    /// Dense state transition matrix, row-major.
    pub fn transition_matrix(&self) -> Vec<Vec<T>> {
        let mut m = vec![vec![T::zero(); self.states]; self.states];
        for (c, row) in m.iter_mut().enumerate() {
            for s in 0..self.symbols {
                let d = self.next(c, s);
                row[d] += self.emit[c][s];
            }
        }
        m
    }

    /// One step of the state distribution.
    pub fn step(&self, dist: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.states];
        for c in 0..self.states {
            if dist[c] == T::zero() {
                continue;
            }
            for s in 0..self.symbols {
                out[self.next(c, s)] += dist[c] * self.emit[c][s];
            }
        }
        out
    }

    /// `dist · P^n`.
    pub fn evolve(&self, dist: &[T], n: usize) -> Vec<T> {
        (0..n).fold(dist.to_vec(), |d, _| self.step(&d))
    }

    pub fn point_mass(&self, c: usize) -> Vec<T> {
        let mut v = vec![T::zero(); self.states];
        v[c] = T::one();
        v
    }

    /// Stationary distribution by power iteration, to `tol` in ℓ¹.
    pub fn stationary(&self, tol: T, max_iter: usize) -> Result<Vec<T>, Error> {
        let mut d = vec![T::one() / T::from_usize_lossy(self.states); self.states];
        for _ in 0..max_iter {
            let e = self.step(&d);
            let diff = crate::scalar::compensated_sum(e.iter().zip(&d).map(|(a, b)| (*a - *b).abs()));
            d = e;
            if diff <= tol {
                return Ok(d);
            }
        }
        Err(Error::Budget(format!("power iteration did not reach {tol} in {max_iter} steps")))
    }

    /// Law of the emitted window `(ω_{t0}, …, ω_{t1})` from the state distribution `init` at time 0.
    pub fn window_law(&self, init: &[T], t0: usize, t1: usize) -> Vec<T> {
        let start = self.evolve(init, t0);
        // joint[(prefix, state)]
        let mut joint: Vec<T> = start;
        let mut cells = 1usize;
        for _ in t0..=t1 {
            let mut next = vec![T::zero(); cells * self.symbols * self.states];
            for w in 0..cells {
                for c in 0..self.states {
                    let p = joint[w * self.states + c];
                    if p == T::zero() {
                        continue;
                    }
                    for s in 0..self.symbols {
                        let idx = (w * self.symbols + s) * self.states + self.next(c, s);
                        next[idx] += p * self.emit[c][s];
                    }
                }
            }
            joint = next;
            cells *= self.symbols;
        }
        (0..cells).map(|w| crate::scalar::compensated_sum(joint[w * self.states..(w + 1) * self.states].iter().copied())).collect()
    }

    /// `E_{π⊗π}[½ ‖law_x([n, n+w−1]) − law_y([n, n+w−1])‖₁]` over independent stationary initial states.
    pub fn pair_window_tv(&self, pi: &[T], n: usize, w: usize) -> T {
        let laws: Vec<Vec<T>> = (0..self.states).map(|c| self.window_law(&self.point_mass(c), n, n + w - 1)).collect();
        let mut acc = CompensatedSum::new();
        for a in 0..self.states {
            for b in 0..self.states {
                acc.add(pi[a] * pi[b] * half_l1(&laws[a], &laws[b]));
            }
        }
        acc.value()
    }

    /// Stationary autocovariance of `ξ_t = e(ω_t)` at lag `j`.
    pub fn autocovariance(&self, pi: &[T], embedding: &[f64], j: usize) -> T {
        let e: Vec<T> = embedding.iter().map(|v| T::lit(*v)).collect();
        let h: Vec<T> = (0..self.states).map(|c| crate::scalar::compensated_sum((0..self.symbols).map(|s| self.emit[c][s] * e[s]))).collect();
        let mean = crate::scalar::compensated_sum(pi.iter().zip(&h).map(|(p, v)| *p * *v));
        // f_{m}(c) = E[ξ_m | state c at time 0]; f_0 = h, f_{m+1}(c) = Σ_s g(s|c) f_m(next(c,s)).
        let propagate = |f: &[T]| -> Vec<T> {
            (0..self.states).map(|c| crate::scalar::compensated_sum((0..self.symbols).map(|s| self.emit[c][s] * f[self.next(c, s)]))).collect()
        };
        let second = if j == 0 {
            crate::scalar::compensated_sum(
                (0..self.states).flat_map(|c| (0..self.symbols).map(move |s| (c, s))).map(|(c, s)| pi[c] * self.emit[c][s] * e[s] * e[s]),
            )
        } else {
            let mut f = h.clone();
            for _ in 1..j {
                f = propagate(&f);
            }
            crate::scalar::compensated_sum(
                (0..self.states).flat_map(|c| (0..self.symbols).map(move |s| (c, s))).map(|(c, s)| pi[c] * self.emit[c][s] * e[s] * f[self.next(c, s)]),
            )
        };
        second - mean * mean
    }
}
