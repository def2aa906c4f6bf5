//! Independent brute-force oracles shared by the integration tests.
//!
//! Nothing here calls into the library's numerical kernels: conditional
//! expectations are block loops, Walsh functions are digit products and
//! norms are closed forms.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded generator for test inputs.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `len` values uniform on `[-scale, scale]`.
pub fn uniform(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-scale..=scale)).collect()
}

/// Binary digit `k` (counted from the most significant of `bits`) of leaf `i`.
fn digit(i: usize, k: u32, bits: u32) -> usize {
    (i >> (bits - 1 - k)) & 1
}

/// Rademacher function `r_k` at leaf `i` of a grid with `bits` levels.
pub fn rademacher(k: u32, i: usize, bits: u32) -> f64 {
    if digit(i, k, bits) == 1 {
        -1.0
    } else {
        1.0
    }
}

/// Paley-ordered Walsh function `w_n = Π_k r_k^{n_k}` at leaf `i`.
pub fn walsh(n: usize, i: usize, bits: u32) -> f64 {
    let mut v = 1.0;
    for k in 0..bits {
        if (n >> k) & 1 == 1 {
            v *= rademacher(k, i, bits);
        }
    }
    v
}

/// Walsh coefficients by inner products, `O(4^N)`.
pub fn walsh_coeffs(f: &[f64]) -> Vec<f64> {
    let bits = f.len().trailing_zeros();
    let h = 1.0 / f.len() as f64;
    (0..f.len())
        .map(|n| {
            f.iter()
                .enumerate()
                .map(|(i, v)| v * walsh(n, i, bits))
                .sum::<f64>()
                * h
        })
        .collect()
}

/// Dense Walsh matrix `W[n][i] = w_n(i)`.
pub fn walsh_matrix(bits: u32) -> Vec<Vec<f64>> {
    let len = 1usize << bits;
    (0..len)
        .map(|n| (0..len).map(|i| walsh(n, i, bits)).collect())
        .collect()
}

/// All partial sums `s_0 f, ..., s_{2^N} f` from explicit coefficients.
pub fn all_partial_sums(f: &[f64], w: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let len = f.len();
    let h = 1.0 / len as f64;
    let mut out = vec![vec![0.0; len]];
    let mut acc = vec![0.0; len];
    for wn in w.iter().take(len) {
        let c: f64 = f.iter().zip(wn).map(|(a, b)| a * b).sum::<f64>() * h;
        for i in 0..len {
            acc[i] += c * wn[i];
        }
        out.push(acc.clone());
    }
    out
}

/// `E_n f` by averaging over blocks of `2^{N-n}` leaves.
pub fn cond_expect(f: &[f64], n: u32) -> Vec<f64> {
    let bits = f.len().trailing_zeros();
    let b = 1usize << (bits - n);
    let mut out = vec![0.0; f.len()];
    for (block, chunk) in f.chunks(b).enumerate() {
        let m = chunk.iter().sum::<f64>() / b as f64;
        out[block * b..(block + 1) * b].fill(m);
    }
    out
}

/// Levels `f_0, ..., f_N`, optionally centered so that `f_0 = 0`.
pub fn martingale(f: &[f64], center: bool) -> Vec<Vec<f64>> {
    let bits = f.len().trailing_zeros();
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    (0..=bits)
        .map(|n| {
            let mut l = cond_expect(f, n);
            if center {
                l.iter_mut().for_each(|v| *v -= mean);
            }
            l
        })
        .collect()
}

/// Differences `d_0 = f_0, d_n = f_n - f_{n-1}`.
pub fn differences(levels: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..levels.len())
        .map(|n| {
            if n == 0 {
                levels[0].clone()
            } else {
                levels[n]
                    .iter()
                    .zip(&levels[n - 1])
                    .map(|(a, b)| a - b)
                    .collect()
            }
        })
        .collect()
}

/// Square function `S(f) = (Σ_n |d_n|²)^{1/2}`.
pub fn square_function(levels: &[Vec<f64>]) -> Vec<f64> {
    let d = differences(levels);
    (0..levels[0].len())
        .map(|i| d.iter().map(|dn| dn[i] * dn[i]).sum::<f64>().sqrt())
        .collect()
}

/// Square-function process `S_n(f)`.
pub fn square_process(levels: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = differences(levels);
    let mut acc = vec![0.0; levels[0].len()];
    d.iter()
        .map(|dn| {
            for (a, v) in acc.iter_mut().zip(dn) {
                *a += v * v;
            }
            acc.iter().map(|a| a.sqrt()).collect()
        })
        .collect()
}

/// Doob maximal process `M_n(f) = max_{k<=n} |f_k|`.
pub fn maximal_process(levels: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut acc = vec![0.0_f64; levels[0].len()];
    levels
        .iter()
        .map(|l| {
            for (a, v) in acc.iter_mut().zip(l) {
                *a = a.max(v.abs());
            }
            acc.clone()
        })
        .collect()
}

/// `(2^-N Σ |f|^p)^{1/p}`.
pub fn lp(f: &[f64], p: f64) -> f64 {
    (f.iter().map(|v| v.abs().powf(p)).sum::<f64>() / f.len() as f64).powf(p.recip())
}

/// `max |a - b|`.
pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `max |a|`.
pub fn sup(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// `𝕊⁻` constant `sup_n sup E_{n-1}w / E_n w` of a positive weight.
pub fn s_minus_constant(w: &[f64]) -> f64 {
    let bits = w.len().trailing_zeros();
    let mut k = 1.0_f64;
    for n in 1..=bits {
        let cur = cond_expect(w, n);
        let prev = cond_expect(w, n - 1);
        for i in 0..w.len() {
            k = k.max(prev[i] / cur[i]);
        }
    }
    k
}

/// Proptest strategy: samples on a grid with `1..=max_bits` levels.
pub fn samples(max_bits: u32, scale: f64) -> impl proptest::strategy::Strategy<Value = Vec<f64>> {
    use proptest::prelude::*;
    (1..=max_bits).prop_flat_map(move |b| proptest::collection::vec(-scale..=scale, 1usize << b))
}
