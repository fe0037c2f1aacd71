//! Monte Carlo components checked against the exact oracles.

use gchain::coupling::{couple_chains, coupling_time_tail};
use gchain::models::{ArKernel, ArParams, BkfKernel, BkfParams, FiniteMemoryKernel, FiniteMemoryParams, Psi};
use gchain::oracle::{exact_window_law, MarkovChain, DEFAULT_BUDGET};
use gchain::parallel::map_indexed;
use gchain::sim::{sample_chain, sample_replicas, PastSampler};
use gchain::{Alphabet, Kernel, Past, RngStream, Symbol};

const R: usize = 40_000;

fn encode(s: &[Symbol], n: usize) -> usize {
    s.iter().fold(0, |acc, a| acc * n + a.index())
}

/// Pearson statistic standardised as `(χ² − df)/√(2 df)`, pooling sparse cells.
fn chi_square_z(counts: &[usize], probs: &[f64], total: usize) -> f64 {
    let nf = total as f64;
    let (mut chi, mut bins, mut po, mut pe) = (0.0, 0usize, 0.0, 0.0);
    for (o, p) in counts.iter().zip(probs) {
        let e = p * nf;
        if e >= 5.0 {
            chi += (*o as f64 - e).powi(2) / e;
            bins += 1;
        } else {
            po += *o as f64;
            pe += e;
        }
    }
    if pe > 0.0 {
        chi += (po - pe).powi(2) / pe;
        bins += 1;
    }
    let df = (bins.max(2) - 1) as f64;
    (chi - df) / (2.0 * df).sqrt()
}

fn bkf() -> BkfKernel<f64> {
    BkfKernel::new(BkfParams::geometric(3, 0.5, 3, Psi::Linear { epsilon: 0.2 }, None).unwrap()).unwrap()
}

fn markov2() -> FiniteMemoryKernel<f64> {
    let table = vec![vec![0.7, 0.3], vec![0.4, 0.6], vec![0.25, 0.75], vec![0.55, 0.45]];
    FiniteMemoryKernel::new(FiniteMemoryParams { alphabet: Alphabet::spin(), order: 2, table }).unwrap()
}

#[test]
fn simulated_windows_follow_the_exact_law() {
    let k = bkf();
    let past = Past::alternating(Symbol::PLUS, Symbol::MINUS);
    let law = exact_window_law(&k, &past, 0, 7, DEFAULT_BUDGET, 1).unwrap();
    let runs = sample_replicas(&k, &past, 7, R, RngStream::root(3), 2);
    let mut hist = vec![0usize; law.probs.len()];
    for t in &runs {
        hist[encode(&t.symbols, 2)] += 1;
    }
    let z = chi_square_z(&hist, &law.probs, R);
    assert!(z < 4.0, "chi-square z = {z}");
}

#[test]
fn coupled_marginals_follow_the_exact_laws() {
    let k = bkf();
    let (x, y) = (Past::plus(), Past::minus());
    let lx = exact_window_law(&k, &x, 0, 6, DEFAULT_BUDGET, 1).unwrap();
    let ly = exact_window_law(&k, &y, 0, 6, DEFAULT_BUDGET, 1).unwrap();
    let stream = RngStream::root(5);
    let runs = map_indexed(2, R, |r| couple_chains(&k, &x, &y, 6, 1, &mut stream.child(2, r as u64).generator()).unwrap());
    let (mut hx, mut hy) = (vec![0usize; 128], vec![0usize; 128]);
    for r in &runs {
        hx[encode(&r.symbols_x, 2)] += 1;
        hy[encode(&r.symbols_y, 2)] += 1;
    }
    assert!(chi_square_z(&hx, &lx.probs, R) < 4.0);
    assert!(chi_square_z(&hy, &ly.probs, R) < 4.0);
}

#[test]
fn coupling_tail_bounds_the_exact_window_distance() {
    let k = bkf();
    let (x, y) = (Past::plus(), Past::minus());
    let tail = coupling_time_tail(&k, &x, &y, &[0, 2, 4, 6], 40, 20, 20_000, RngStream::root(9), 1, 4.0).unwrap();
    for (i, n) in [0usize, 2, 4, 6].into_iter().enumerate() {
        let tv = exact_window_law(&k, &x, n, n + 2, DEFAULT_BUDGET, 1).unwrap().tv(&exact_window_law(&k, &y, n, n + 2, DEFAULT_BUDGET, 1).unwrap()).unwrap();
        assert!(tv <= tail.estimate[i] + 4.0 * tail.se[i], "n={n}: tv {tv} vs tail {}", tail.estimate[i]);
    }
    assert!(tail.estimate.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn stationary_pasts_match_the_markov_stationary_law() {
    let k = markov2();
    let chain = MarkovChain::from_kernel(&k);
    let pi = chain.stationary(1e-14, 100_000).unwrap();
    let sampler = PastSampler { burn_in: 60, suffix_len: 2, tail: Past::plus() };
    let n = 20_000;
    let mut hist = vec![0usize; pi.len()];
    for i in 0..n {
        let past = sampler.sample(&k, RngStream::root(17).child(3, i)).unwrap();
        hist[MarkovChain::initial_state(&k, &past)] += 1;
    }
    assert!(chi_square_z(&hist, &pi, n as usize) < 4.0);
}

#[test]
fn single_precision_kernels_agree_with_double() {
    let k32 = ArKernel::<f32>::new(ArParams::ising(0.8, 0.9, 0.0).unwrap()).unwrap();
    let k64 = ArKernel::<f64>::new(ArParams::ising(0.8, 0.9, 0.0).unwrap()).unwrap();
    let past = Past::minus();
    let a = exact_window_law(&k32, &past, 0, 8, DEFAULT_BUDGET, 1).unwrap();
    let b = exact_window_law(&k64, &past, 0, 8, DEFAULT_BUDGET, 1).unwrap();
    let worst = a.probs.iter().zip(&b.probs).map(|(p, q)| (f64::from(*p) - q).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-5, "{worst}");
    let t = sample_chain(&k32, &past, 100, &mut RngStream::root(1).generator());
    assert_eq!(t.symbols.len(), 101);
    assert!(k32.non_null_bound() > 0.0);
}
