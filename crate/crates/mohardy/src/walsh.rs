//! Walsh-Paley system on the dyadic grid: Rademacher and Walsh functions,
//! the fast Walsh transform, Dirichlet and Fejér kernels, partial sums,
//! Fejér means, the exact maximal Fejér operator and the `T₀` identity
//! `s_n f = w_n T₀(f w_n)`.
//!
//! Leaf `i` carries the binary digits of `x = i 2^-N`; the Rademacher
//! function `r_k` reads digit `k + 1` of `x`, which is bit `N - 1 - k` of `i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    expand, half_shift_index, martingale_of, AdaptedProcess, DyadicGrid, SampledFunction,
};
use crate::operators::martingale_transform;

/// Walsh-Fourier coefficients `f̂(n)`, `n = 0..2^N`, in Paley order.
#[derive(Clone, Debug, PartialEq)]
pub struct WalshSpectrum {
    grid: DyadicGrid,
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SpectrumJson {
    resolution: u32,
    ordering: String,
    coeffs: Vec<f64>,
}

impl WalshSpectrum {
    /// Validates length and finiteness.
    pub fn new(grid: DyadicGrid, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: coeffs.len(),
            });
        }
        if let Some((index, &value)) = coeffs.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { grid, coeffs })
    }

    /// The grid.
    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    /// Coefficients in Paley order.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `Σ_n f̂(n)²`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// One coefficient per line.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::new();
        for c in &self.coeffs {
            s.push_str(&format!("{c:?}\n"));
        }
        s
    }

    /// Parses one coefficient per line.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let f = SampledFunction::from_csv_str(text)?;
        Self::new(f.grid(), f.into_values())
    }

    /// `{"resolution": N, "ordering": "paley", "coeffs": [...]}`.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&SpectrumJson {
            resolution: self.grid.resolution(),
            ordering: "paley".into(),
            coeffs: self.coeffs.clone(),
        })
        .expect("spectrum serialises")
    }

    /// Parses the JSON form; only the Paley ordering is accepted.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: SpectrumJson = serde_json::from_str(text)?;
        if raw.ordering != "paley" {
            return Err(Error::invalid(
                "ordering",
                format!("unsupported ordering `{}`", raw.ordering),
            ));
        }
        Self::new(DyadicGrid::new(raw.resolution)?, raw.coeffs)
    }
}

/// `r_n` sampled on leaves; needs `n < N`.
pub fn rademacher(n: u32, grid: DyadicGrid) -> Result<SampledFunction> {
    if n >= grid.resolution() {
        return Err(Error::LevelOutOfRange {
            level: n,
            resolution: grid.resolution(),
        });
    }
    let shift = grid.resolution() - 1 - n;
    let v = (0..grid.len())
        .map(|i| if (i >> shift) & 1 == 0 { 1.0 } else { -1.0 })
        .collect();
    SampledFunction::new(grid, v)
}

fn bit_reverse(i: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        i.reverse_bits() >> (usize::BITS - bits)
    }
}

/// Sign of `w_m` at leaf `i`.
fn walsh_sign(m: usize, i: usize, bits: u32) -> f64 {
    if (m & bit_reverse(i, bits)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `w_n = Π_k r_k^{n_k}` sampled on leaves; needs `n < 2^N`.
pub fn walsh(n: usize, grid: DyadicGrid) -> Result<SampledFunction> {
    if n >= grid.len() {
        return Err(Error::IndexOutOfRange {
            index: n,
            limit: grid.len(),
        });
    }
    let bits = grid.resolution();
    SampledFunction::new(
        grid,
        (0..grid.len()).map(|i| walsh_sign(n, i, bits)).collect(),
    )
}

/// In-place unnormalised Walsh-Hadamard butterflies (natural order).
fn hadamard_in_place(v: &mut [f64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for block in v.chunks_mut(2 * h) {
            let (a, b) = block.split_at_mut(h);
            for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                let (s, d) = (*x + *y, *x - *y);
                *x = s;
                *y = d;
            }
        }
        h *= 2;
    }
}

fn bit_reverse_permute(v: &[f64], bits: u32) -> Vec<f64> {
    (0..v.len()).map(|j| v[bit_reverse(j, bits)]).collect()
}

/// Fast Walsh-Paley analysis `f̂(n) = ∫ f w_n`, in `O(N 2^N)`.
///
/// Reading leaves in bit-reversed order turns the Paley system into the
/// natural-order Hadamard system, so one butterfly pass yields Paley order.
pub fn analyze(f: &SampledFunction) -> WalshSpectrum {
    let grid = f.grid();
    let mut v = bit_reverse_permute(f.values(), grid.resolution());
    hadamard_in_place(&mut v);
    let scale = grid.leaf_measure();
    for c in &mut v {
        *c *= scale;
    }
    WalshSpectrum { grid, coeffs: v }
}

/// Inverse of [`analyze`]: `f = Σ_n f̂(n) w_n`.
pub fn synthesize(spectrum: &WalshSpectrum) -> SampledFunction {
    let grid = spectrum.grid;
    let mut v = spectrum.coeffs.clone();
    hadamard_in_place(&mut v);
    SampledFunction::from_vec_unchecked(grid, bit_reverse_permute(&v, grid.resolution()))
}

fn synthesize_coeffs(grid: DyadicGrid, coeffs: Vec<f64>) -> SampledFunction {
    synthesize(&WalshSpectrum { grid, coeffs })
}

/// Kernel family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelKind {
    /// `D_n = Σ_{k<n} w_k`.
    Dirichlet,
    /// `K_n = (1/n) Σ_{k=1}^n D_k`.
    Fejer,
}

/// A sampled Dirichlet or Fejér kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    /// Family.
    pub kind: KernelKind,
    /// Order `n`.
    pub order: usize,
    /// Leaf values.
    pub values: SampledFunction,
}

fn check_order(n: usize, grid: DyadicGrid) -> Result<()> {
    if n == 0 || n > grid.len() {
        return Err(Error::IndexOutOfRange {
            index: n,
            limit: grid.len() + 1,
        });
    }
    Ok(())
}

/// `D_n`, `1 <= n <= 2^N`.
pub fn dirichlet_kernel(n: usize, grid: DyadicGrid) -> Result<Kernel> {
    check_order(n, grid)?;
    let coeffs = (0..grid.len())
        .map(|j| if j < n { 1.0 } else { 0.0 })
        .collect();
    Ok(Kernel {
        kind: KernelKind::Dirichlet,
        order: n,
        values: synthesize_coeffs(grid, coeffs),
    })
}

/// `D_{2^k}(x) = 2^k 1_{[0,2^-k)}(x)`, `k <= N`.
pub fn dirichlet_dyadic(k: u32, grid: DyadicGrid) -> Result<SampledFunction> {
    grid.check_level(k)?;
    let shift = grid.resolution() - k;
    let top = 2f64.powi(k as i32);
    SampledFunction::new(
        grid,
        (0..grid.len())
            .map(|i| if i >> shift == 0 { top } else { 0.0 })
            .collect(),
    )
}

/// `K_n`, `1 <= n <= 2^N`, via `n K_n = Σ_{j<n} (n - j) w_j`.
pub fn fejer_kernel(n: usize, grid: DyadicGrid) -> Result<Kernel> {
    check_order(n, grid)?;
    let nf = n as f64;
    let coeffs = (0..grid.len())
        .map(|j| if j < n { (nf - j as f64) / nf } else { 0.0 })
        .collect();
    Ok(Kernel {
        kind: KernelKind::Fejer,
        order: n,
        values: synthesize_coeffs(grid, coeffs),
    })
}

/// Closed form `K_{2^m} = ½[2^-m D_{2^m}(x) + Σ_{j=0}^m 2^{j-m} D_{2^m}(x ∔ 2^{-j-1})]`, `m <= N`.
pub fn fejer_dyadic_closed_form(m: u32, grid: DyadicGrid) -> Result<SampledFunction> {
    let d = dirichlet_dyadic(m, grid)?;
    let dv = d.values();
    let scale = 2f64.powi(-(m as i32));
    let v = (0..grid.len())
        .map(|i| {
            let mut s = scale * dv[i];
            for j in 0..=m {
                s += 2f64.powi(j as i32 - m as i32) * dv[i ^ half_shift_index(j, grid)];
            }
            0.5 * s
        })
        .collect();
    SampledFunction::new(grid, v)
}

/// Pointwise majorant `Σ_{j<B} 2^{j-B} Σ_{i=j}^{B-1} [D_{2^i}(x) + D_{2^i}(x ∔ 2^{-j-1})]`
/// of `|K_n|`, where `2^{B-1} <= n < 2^B`; needs `1 <= n <= 2^N`.
pub fn fejer_bound(n: usize, grid: DyadicGrid) -> Result<SampledFunction> {
    check_order(n, grid)?;
    let b = usize::BITS - n.leading_zeros();
    let dyadic: Vec<SampledFunction> = (0..b)
        .map(|i| dirichlet_dyadic(i.min(grid.resolution()), grid))
        .collect::<Result<_>>()?;
    let v = (0..grid.len())
        .map(|x| {
            let mut s = 0.0;
            for j in 0..b {
                let t = x ^ half_shift_index(j, grid);
                let inner: f64 = (j..b)
                    .map(|i| dyadic[i as usize].values()[x] + dyadic[i as usize].values()[t])
                    .sum();
                s += 2f64.powi(j as i32 - b as i32) * inner;
            }
            s
        })
        .collect();
    SampledFunction::new(grid, v)
}

/// `∫ f(t) K(x ∔ t) dt` on leaves.
pub fn kernel_convolution(
    f: &SampledFunction,
    kernel: &SampledFunction,
) -> Result<SampledFunction> {
    let grid = f.grid();
    grid.ensure_same(&kernel.grid())?;
    let (fv, kv) = (f.values(), kernel.values());
    let h = grid.leaf_measure();
    let v = (0..grid.len())
        .map(|x| {
            fv.iter()
                .enumerate()
                .map(|(t, a)| a * kv[x ^ t])
                .sum::<f64>()
                * h
        })
        .collect();
    SampledFunction::new(grid, v)
}

/// `s_n f = Σ_{k<n} f̂(k) w_k`; `s_0 f = 0` and `s_n f = f` for `n >= 2^N`.
pub fn partial_sum(f: &SampledFunction, n: usize) -> SampledFunction {
    if n >= f.len() {
        return f.clone();
    }
    let mut spec = analyze(f);
    for c in spec.coeffs.iter_mut().skip(n) {
        *c = 0.0;
    }
    synthesize(&spec)
}

/// `T₀ g = Σ_{k>=1} n_{k-1} d_k g` with the binary digits `n_k` of `n`; needs `n < 2^N`.
pub fn transform_t0(g: &SampledFunction, n: usize) -> Result<SampledFunction> {
    let grid = g.grid();
    if n >= grid.len() {
        return Err(Error::IndexOutOfRange {
            index: n,
            limit: grid.len(),
        });
    }
    let entries = (0..=grid.resolution())
        .map(|k| SampledFunction::constant(grid, ((n >> k) & 1) as f64))
        .collect();
    let v = AdaptedProcess::new(entries)?;
    Ok(martingale_transform(&martingale_of(g, false), &v)?
        .terminal()
        .clone())
}

/// `s_n f` computed as `w_n T₀(f w_n)`; `n = 2^N` is handled on the once-refined grid.
pub fn partial_sum_via_t0(f: &SampledFunction, n: usize) -> Result<SampledFunction> {
    let grid = f.grid();
    if n > grid.len() {
        return Err(Error::IndexOutOfRange {
            index: n,
            limit: grid.len() + 1,
        });
    }
    if n == 0 {
        return Ok(SampledFunction::zeros(grid));
    }
    let (work_grid, fw) = if n == grid.len() {
        let fine = grid.refined();
        (
            fine,
            SampledFunction::new(fine, expand(fine, f.values(), grid.resolution()))?,
        )
    } else {
        (grid, f.clone())
    };
    let wn = walsh(n, work_grid)?;
    let g = fw.zip_with(&wn, |a, b| a * b)?;
    let s = transform_t0(&g, n)?.zip_with(&wn, |a, b| a * b)?;
    if work_grid == grid {
        Ok(s)
    } else {
        SampledFunction::new(grid, s.values().iter().step_by(2).copied().collect())
    }
}

/// `σ_n f = (1/n) Σ_{k=1}^n s_k f` for any `n >= 1`.
///
/// Since `f̂(j) = 0` for `j >= 2^N`, this is `Σ_{j<min(n,2^N)} (1 - j/n) f̂(j) w_j`,
/// which covers `n > 2^N` without truncation.
pub fn fejer_mean(f: &SampledFunction, n: usize) -> Result<SampledFunction> {
    if n == 0 {
        return Err(Error::invalid("n", "Fejér means start at n = 1"));
    }
    let spec = analyze(f);
    let nf = n as f64;
    let coeffs = spec
        .coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| {
            if j < n {
                c * (1.0 - j as f64 / nf)
            } else {
                0.0
            }
        })
        .collect();
    Ok(synthesize_coeffs(f.grid(), coeffs))
}

/// `σ_* f = sup_{n>=1} |σ_n f|`, exactly.
///
/// Orders `n <= 2^N + 1` are enumerated with running sums in `O(4^N)`. For
/// `n > 2^N`, `σ_n f = f + (A - 2^N f)/n` with `A = Σ_{k<=2^N} s_k f` is monotone
/// in `n` at every leaf and tends to `f`, so the tail contributes
/// `max(|σ_{2^N+1} f|, |f|)`.
pub fn maximal_fejer(f: &SampledFunction) -> SampledFunction {
    let grid = f.grid();
    let len = grid.len();
    let spec = analyze(f);
    let bits = grid.resolution();
    let mut s = vec![0.0_f64; len];
    let mut a = vec![0.0_f64; len];
    let mut best: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    for k in 1..=len {
        let c = spec.coeffs[k - 1];
        let m = k - 1;
        for i in 0..len {
            if c != 0.0 {
                s[i] += c * walsh_sign(m, i, bits);
            }
            a[i] += s[i];
            best[i] = best[i].max((a[i] / k as f64).abs());
        }
    }
    let next = (len + 1) as f64;
    for i in 0..len {
        best[i] = best[i].max(((a[i] + f.values()[i]) / next).abs());
    }
    SampledFunction::from_vec_unchecked(grid, best)
}

/// `sup_{n>=0} |σ_{2^n} f|`, exactly, with the tail `max(|σ_{2^{N+1}} f|, |f|)`.
pub fn maximal_fejer_dyadic(f: &SampledFunction) -> SampledFunction {
    let grid = f.grid();
    let mut best: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    for n in 0..=grid.resolution() + 1 {
        let sigma = fejer_mean(f, 1usize << n).expect("order is positive");
        for (b, v) in best.iter_mut().zip(sigma.values()) {
            *b = b.max(v.abs());
        }
    }
    SampledFunction::from_vec_unchecked(grid, best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: u32) -> DyadicGrid {
        DyadicGrid::new(n).unwrap()
    }

    fn sf(v: &[f64]) -> SampledFunction {
        SampledFunction::from_values(v.to_vec()).unwrap()
    }

    fn naive_analyze(f: &SampledFunction) -> Vec<f64> {
        let grid = f.grid();
        (0..grid.len())
            .map(|m| {
                let w = walsh(m, grid).unwrap();
                f.values()
                    .iter()
                    .zip(w.values())
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    * grid.leaf_measure()
            })
            .collect()
    }

    #[test]
    fn rademacher_and_walsh_examples() {
        assert_eq!(
            rademacher(0, g(2)).unwrap().values(),
            &[1.0, 1.0, -1.0, -1.0]
        );
        assert_eq!(
            rademacher(1, g(2)).unwrap().values(),
            &[1.0, -1.0, 1.0, -1.0]
        );
        assert!(rademacher(2, g(2)).is_err());
        assert_eq!(walsh(0, g(2)).unwrap().values(), &[1.0; 4]);
        assert_eq!(walsh(3, g(2)).unwrap().values(), &[1.0, -1.0, -1.0, 1.0]);
        assert!(walsh(4, g(2)).is_err());
    }

    #[test]
    fn gram_matrix_is_identity() {
        let grid = g(4);
        let ws: Vec<_> = (0..16).map(|m| walsh(m, grid).unwrap()).collect();
        for a in 0..16 {
            for b in 0..16 {
                let ip = ws[a].zip_with(&ws[b], |x, y| x * y).unwrap().mean();
                assert_eq!(ip, if a == b { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn transform_examples() {
        let f = sf(&[1.0, 3.0, 5.0, 7.0]);
        let s = analyze(&f);
        assert_eq!(s.coeffs(), &[4.0, -2.0, -1.0, 0.0]);
        assert_eq!(s.energy(), f.lp_norm(2.0).powi(2));
        assert_eq!(synthesize(&s), f);
        let w3 = walsh(3, g(3)).unwrap();
        let c = analyze(&w3);
        for (k, v) in c.coeffs().iter().enumerate() {
            assert_eq!(*v, if k == 3 { 1.0 } else { 0.0 });
        }
        assert!(analyze(&SampledFunction::zeros(g(3)))
            .coeffs()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn fast_matches_naive() {
        let grid = g(6);
        let f = SampledFunction::new(
            grid,
            (0..64).map(|i| ((i * 37 % 11) as f64).sin()).collect(),
        )
        .unwrap();
        let fast = analyze(&f);
        for (a, b) in fast.coeffs().iter().zip(naive_analyze(&f)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(
            dirichlet_kernel(2, g(2)).unwrap().values.values(),
            &[2.0, 2.0, 0.0, 0.0]
        );
        assert_eq!(
            dirichlet_kernel(1, g(2)).unwrap().values.values(),
            &[1.0; 4]
        );
        assert_eq!(
            dirichlet_kernel(3, g(2)).unwrap().values.values(),
            &[3.0, 1.0, 1.0, -1.0]
        );
        assert_eq!(
            fejer_kernel(2, g(2)).unwrap().values.values(),
            &[1.5, 1.5, 0.5, 0.5]
        );
        assert_eq!(fejer_kernel(1, g(3)).unwrap().values.values(), &[1.0; 8]);
        assert!(dirichlet_kernel(0, g(2)).is_err());
        assert!(fejer_kernel(5, g(2)).is_err());
        for m in 0..=4 {
            let avg = fejer_kernel(1 << m, g(4)).unwrap().values;
            assert_eq!(avg, fejer_dyadic_closed_form(m, g(4)).unwrap());
            assert_eq!(
                dirichlet_kernel(1 << m, g(4)).unwrap().values,
                dirichlet_dyadic(m, g(4)).unwrap()
            );
        }
        let k5 = fejer_kernel(5, g(4)).unwrap().values;
        let b = fejer_bound(5, g(4)).unwrap();
        for (k, bound) in k5.values().iter().zip(b.values()) {
            assert!(k.abs() <= bound + 1e-12);
        }
    }

    #[test]
    fn partial_sum_examples() {
        let f = sf(&[1.0, 3.0, 5.0, 7.0]);
        assert_eq!(partial_sum(&f, 2).values(), &[2.0, 2.0, 6.0, 6.0]);
        assert_eq!(partial_sum(&f, 4), f);
        assert_eq!(partial_sum(&f, 1).values(), &[4.0; 4]);
        let d3 = dirichlet_kernel(3, f.grid()).unwrap().values;
        assert!(
            kernel_convolution(&f, &d3)
                .unwrap()
                .max_abs_diff(&partial_sum(&f, 3))
                .unwrap()
                < 1e-12
        );
    }

    #[test]
    fn t0_examples() {
        let f = sf(&[1.0, 3.0, 5.0, 7.0]);
        assert_eq!(
            partial_sum_via_t0(&f, 2).unwrap().values(),
            &[2.0, 2.0, 6.0, 6.0]
        );
        assert_eq!(partial_sum_via_t0(&f, 1).unwrap().values(), &[4.0; 4]);
        for n in 0..=4 {
            let a = partial_sum_via_t0(&f, n).unwrap();
            assert!(
                a.max_abs_diff(&partial_sum(&f, n)).unwrap() < 1e-12,
                "n = {n}"
            );
        }
    }

    #[test]
    fn fejer_mean_examples() {
        let f = sf(&[1.0, 3.0, 5.0, 7.0]);
        assert_eq!(fejer_mean(&f, 2).unwrap().values(), &[3.0, 3.0, 5.0, 5.0]);
        let c = SampledFunction::constant(g(3), -2.0);
        for n in [1, 5, 8, 100] {
            assert!(fejer_mean(&c, n).unwrap().max_abs_diff(&c).unwrap() < 1e-12);
        }
        for n in [9, 40] {
            let direct = {
                let mut acc = vec![0.0; 4];
                for k in 1..=n {
                    for (a, v) in acc.iter_mut().zip(partial_sum(&f, k).values()) {
                        *a += v / n as f64;
                    }
                }
                SampledFunction::from_values(acc).unwrap()
            };
            assert!(fejer_mean(&f, n).unwrap().max_abs_diff(&direct).unwrap() < 1e-12);
        }
        assert!(fejer_mean(&f, 0).is_err());
    }

    #[test]
    fn maximal_fejer_examples() {
        let c = SampledFunction::constant(g(3), -1.5);
        assert!(maximal_fejer(&c)
            .values()
            .iter()
            .all(|&v| (v - 1.5).abs() < 1e-12));
        let f = sf(&[1.0, -3.0, 5.0, 0.5, 2.0, -1.0, 0.0, 4.0]);
        let m = maximal_fejer(&f);
        for (a, b) in m.values().iter().zip(f.values()) {
            assert!(*a >= b.abs());
        }
        let mut brute = vec![0.0_f64; 8];
        for n in 1..=(8usize << 6) {
            for (b, v) in brute.iter_mut().zip(fejer_mean(&f, n).unwrap().values()) {
                *b = b.max(v.abs());
            }
        }
        for (a, b) in m.values().iter().zip(&brute) {
            assert!(a + 1e-12 >= *b);
        }
    }

    #[test]
    fn spectrum_io_round_trip() {
        let s = analyze(&sf(&[1.0, 3.0, 5.0, 7.0]));
        let j = s.to_json_string();
        assert!(j.contains("\"ordering\":\"paley\""));
        assert_eq!(WalshSpectrum::from_json_str(&j).unwrap(), s);
        assert_eq!(WalshSpectrum::from_csv_str(&s.to_csv_string()).unwrap(), s);
        assert!(WalshSpectrum::from_json_str(
            r#"{"resolution":1,"ordering":"sequency","coeffs":[1,2]}"#
        )
        .is_err());
    }
}
