//! Martingale operators on the dyadic filtration: Doob maximal function,
//! square and conditional square functions, Hardy-space norms, martingale
//! transforms, the dual Doob, Stein and vector-valued maximal pairs, the
//! weak-type value and the translated dyadic maximal functions `U` and `V`.
//!
//! Sums over `n` stop at the grid resolution `N`, which is exact because
//! `d_n = 0` for `n > N`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    block_means, cond_expect_values, expand, predictable_envelope, AdaptedProcess, DyadicGrid,
    DyadicMartingale, SampledFunction,
};
use crate::musielak::{indicator_norm_of_leaves, luxemburg_norm, MusielakFunction};

/// Which quadratic variation to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VariationKind {
    /// `S_n = (Σ_{i<=n} |d_i|²)^{1/2}`.
    #[serde(rename = "S")]
    Square,
    /// `s_n = (Σ_{i<=n} E_{i-1}|d_i|²)^{1/2}`.
    #[serde(rename = "s")]
    Conditional,
}

fn upto_level(m: &DyadicMartingale, upto: Option<u32>) -> Result<u32> {
    match upto {
        Some(n) => {
            m.grid().check_level(n)?;
            Ok(n)
        }
        None => Ok(m.resolution()),
    }
}

/// Running maxima `M_n = max_{i<=n} |f_i|` for `n = 0..=N`.
pub fn doob_maximal_process(m: &DyadicMartingale) -> AdaptedProcess {
    let grid = m.grid();
    let mut cur = vec![0.0_f64; grid.len()];
    let entries = m
        .levels()
        .iter()
        .map(|f| {
            for (c, v) in cur.iter_mut().zip(f.values()) {
                *c = c.max(v.abs());
            }
            SampledFunction::from_vec_unchecked(grid, cur.clone())
        })
        .collect();
    AdaptedProcess::from_entries_unchecked(grid, entries)
}

/// `M_n f = max_{0<=i<=n} |f_i|` pointwise (`upto = None` means all levels).
pub fn doob_maximal(m: &DyadicMartingale, upto: Option<u32>) -> Result<SampledFunction> {
    let n = upto_level(m, upto)?;
    Ok(doob_maximal_process(m).entry(n).clone())
}

/// The process `S_n` (or `s_n`) for `n = 0..=N`.
///
/// The level-0 term is `|d_0|² = |f_0|²` in both cases.
pub fn variation_process(m: &DyadicMartingale, kind: VariationKind) -> AdaptedProcess {
    let grid = m.grid();
    let mut acc = vec![0.0_f64; grid.len()];
    let mut entries = Vec::with_capacity(m.levels().len());
    for (i, d) in m.differences().iter().enumerate() {
        let sq: Vec<f64> = d.values().iter().map(|v| v * v).collect();
        let term = match kind {
            VariationKind::Square => sq,
            VariationKind::Conditional if i == 0 => sq,
            VariationKind::Conditional => cond_expect_values(grid, &sq, i as u32 - 1),
        };
        for (a, t) in acc.iter_mut().zip(&term) {
            *a += t;
        }
        entries.push(SampledFunction::from_vec_unchecked(
            grid,
            acc.iter().map(|a| a.sqrt()).collect(),
        ));
    }
    AdaptedProcess::from_entries_unchecked(grid, entries)
}

/// `S_n(f)` or `s_n(f)` pointwise (`upto = None` means `n = N`).
pub fn variation(
    m: &DyadicMartingale,
    kind: VariationKind,
    upto: Option<u32>,
) -> Result<SampledFunction> {
    let n = upto_level(m, upto)?;
    Ok(variation_process(m, kind).entry(n).clone())
}

/// `Σ_n |d_n|` pointwise.
pub fn difference_sum(m: &DyadicMartingale) -> SampledFunction {
    let grid = m.grid();
    let mut acc = vec![0.0_f64; grid.len()];
    for d in m.differences() {
        for (a, v) in acc.iter_mut().zip(d.values()) {
            *a += v.abs();
        }
    }
    SampledFunction::from_vec_unchecked(grid, acc)
}

/// The process `|f_n|`.
pub fn abs_process(m: &DyadicMartingale) -> AdaptedProcess {
    let entries = m.levels().iter().map(SampledFunction::abs).collect();
    AdaptedProcess::from_entries_unchecked(m.grid(), entries)
}

/// The five Hardy-space norms and the `G` norm of one martingale, all in the same `φ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardyNormReport {
    /// `‖M(f)‖_φ`.
    pub h_max: f64,
    /// `‖S(f)‖_φ`.
    pub h_square: f64,
    /// `‖s(f)‖_φ`.
    pub h_cond: f64,
    /// `‖λ_∞‖_φ` for the minimal predictable envelope of `|f_n|`.
    pub p: f64,
    /// `‖λ_∞‖_φ` for the minimal predictable envelope of `S_n(f)`.
    pub q: f64,
    /// `‖Σ_n |d_n|‖_φ`.
    pub g: f64,
}

/// All Hardy-space quasi-norms of `m`.
///
/// The `P` and `Q` values are exact infima: the minimal predictable
/// envelope is pointwise below every admissible control.
pub fn hardy_norms(m: &DyadicMartingale, phi: &MusielakFunction) -> Result<HardyNormReport> {
    let maximal = doob_maximal(m, None)?;
    let square = variation(m, VariationKind::Square, None)?;
    let cond = variation(m, VariationKind::Conditional, None)?;
    let p_env = predictable_envelope(&abs_process(m))?;
    let q_env = predictable_envelope(&variation_process(m, VariationKind::Square))?;
    Ok(HardyNormReport {
        h_max: luxemburg_norm(phi, &maximal)?,
        h_square: luxemburg_norm(phi, &square)?,
        h_cond: luxemburg_norm(phi, &cond)?,
        p: luxemburg_norm(phi, p_env.terminal())?,
        q: luxemburg_norm(phi, q_env.terminal())?,
        g: luxemburg_norm(phi, &difference_sum(m))?,
    })
}

/// `(𝒯f)_n = Σ_{1<=k<=n} v_{k-1} d_k f` with `(𝒯f)_0 = 0`.
///
/// `v` must be adapted (so `v_{k-1}` is predictable for `d_k`) and bounded by 1.
pub fn martingale_transform(m: &DyadicMartingale, v: &AdaptedProcess) -> Result<DyadicMartingale> {
    let grid = m.grid();
    grid.ensure_same(&v.grid())?;
    for (k, e) in v.entries().iter().enumerate() {
        if let Some(i) = e.values().iter().position(|x| !(x.abs() <= 1.0)) {
            return Err(Error::InvalidMultiplier(format!(
                "|v_{k}| = {} > 1 at leaf {i}",
                e.values()[i].abs()
            )));
        }
    }
    let mut acc = vec![0.0_f64; grid.len()];
    let mut levels = vec![SampledFunction::zeros(grid)];
    for k in 1..=grid.resolution() as usize {
        let d = m.differences()[k].values();
        let w = v.entries()[k - 1].values();
        for i in 0..grid.len() {
            acc[i] += w[i] * d[i];
        }
        levels.push(SampledFunction::from_vec_unchecked(grid, acc.clone()));
    }
    Ok(DyadicMartingale::from_levels_unchecked(grid, levels))
}

fn check_nonnegative(gs: &[SampledFunction]) -> Result<DyadicGrid> {
    let grid = gs
        .first()
        .ok_or_else(|| Error::invalid("gs", "at least one function required"))?
        .grid();
    for g in gs {
        grid.ensure_same(&g.grid())?;
        if let Some((index, &value)) = g.values().iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::NegativeValue { index, value });
        }
    }
    Ok(grid)
}

fn check_levels(grid: DyadicGrid, count: usize, shift: u32) -> Result<()> {
    let last = shift as usize + count - 1;
    if last > grid.resolution() as usize {
        return Err(Error::LevelOutOfRange {
            level: last as u32,
            resolution: grid.resolution(),
        });
    }
    Ok(())
}

/// Pair `(Σ_k E_k g_k, Σ_k g_k)` where `gs[j]` is paired with level `k = shift + j`.
pub fn dual_doob_sum(
    gs: &[SampledFunction],
    shift: u32,
) -> Result<(SampledFunction, SampledFunction)> {
    let grid = check_nonnegative(gs)?;
    check_levels(grid, gs.len(), shift)?;
    let mut lhs = vec![0.0_f64; grid.len()];
    let mut rhs = vec![0.0_f64; grid.len()];
    for (j, g) in gs.iter().enumerate() {
        let e = cond_expect_values(grid, g.values(), shift + j as u32);
        for i in 0..grid.len() {
            lhs[i] += e[i];
            rhs[i] += g.values()[i];
        }
    }
    Ok((
        SampledFunction::from_vec_unchecked(grid, lhs),
        SampledFunction::from_vec_unchecked(grid, rhs),
    ))
}

/// The sequence `g_k = |d_{k+1} f|²`, `k = 0..N-1`, to be paired with levels starting at 0.
pub fn squared_differences(m: &DyadicMartingale) -> Vec<SampledFunction> {
    m.differences()[1..]
        .iter()
        .map(|d| d.map(|v| v * v))
        .collect()
}

/// Pair `((Σ_k [E_k g_k]^r)^{1/r}, (Σ_k g_k^r)^{1/r})` with `gs[j]` at level `shift + j`.
pub fn stein_sum(
    gs: &[SampledFunction],
    r: f64,
    shift: u32,
) -> Result<(SampledFunction, SampledFunction)> {
    if !(r > 1.0 && r.is_finite()) {
        return Err(Error::invalid("r", "the Stein pair needs 1 < r < ∞"));
    }
    let grid = check_nonnegative(gs)?;
    check_levels(grid, gs.len(), shift)?;
    let mut lhs = vec![0.0_f64; grid.len()];
    let mut rhs = vec![0.0_f64; grid.len()];
    for (j, g) in gs.iter().enumerate() {
        let e = cond_expect_values(grid, g.values(), shift + j as u32);
        for i in 0..grid.len() {
            lhs[i] += e[i].powf(r);
            rhs[i] += g.values()[i].powf(r);
        }
    }
    let root = |v: Vec<f64>| {
        SampledFunction::from_vec_unchecked(
            grid,
            v.into_iter().map(|x| x.powf(r.recip())).collect(),
        )
    };
    Ok((root(lhs), root(rhs)))
}

/// Pair `((Σ_j [M f_j]^r)^{1/r}, (Σ_j |f_j|^r)^{1/r})` with uncentered martingales of `f_j`.
pub fn vector_maximal(
    fs: &[SampledFunction],
    r: f64,
) -> Result<(SampledFunction, SampledFunction)> {
    if !(r > 1.0 && r.is_finite()) {
        return Err(Error::invalid("r", "needs 1 < r < ∞"));
    }
    let grid = fs
        .first()
        .ok_or_else(|| Error::invalid("fs", "at least one function required"))?
        .grid();
    let mut lhs = vec![0.0_f64; grid.len()];
    let mut rhs = vec![0.0_f64; grid.len()];
    for f in fs {
        grid.ensure_same(&f.grid())?;
        let mf = doob_maximal(&crate::grid::martingale_of(f, false), None)?;
        for i in 0..grid.len() {
            lhs[i] += mf.values()[i].powf(r);
            rhs[i] += f.values()[i].abs().powf(r);
        }
    }
    let root = |v: Vec<f64>| {
        SampledFunction::from_vec_unchecked(
            grid,
            v.into_iter().map(|x| x.powf(r.recip())).collect(),
        )
    };
    Ok((root(lhs), root(rhs)))
}

/// `sup_{ρ>0} ρ ‖1_{M(f)>ρ}‖_φ`, computed exactly.
///
/// The supremum is approached as `ρ` increases to a distinct value `v` of
/// `M(f)`, where it equals `v ‖1_{M(f)>=v}‖_φ`; the maximum over those values is returned.
pub fn weak_type_value(m: &DyadicMartingale, phi: &MusielakFunction) -> Result<f64> {
    let maximal = doob_maximal(m, None)?;
    weak_type_of(&maximal, phi)
}

/// [`weak_type_value`] for an arbitrary nonnegative function.
pub fn weak_type_of(g: &SampledFunction, phi: &MusielakFunction) -> Result<f64> {
    let vals = g.values();
    let mut order: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 0.0).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let mut best = 0.0_f64;
    let mut end = 0;
    while end < order.len() {
        let v = vals[order[end]];
        while end < order.len() && vals[order[end]] == v {
            end += 1;
        }
        best = best.max(v * indicator_norm_of_leaves(phi, g.grid(), &order[..end])?);
    }
    Ok(best)
}

/// Level-`n` block averages of `f` with respect to `ν = w dx` (Lebesgue when `w` is `None`).
fn weighted_block_averages(
    f: &SampledFunction,
    nu: Option<&SampledFunction>,
    n: u32,
) -> Result<Vec<f64>> {
    let grid = f.grid();
    match nu {
        None => Ok(block_means(grid, f.values(), n)),
        Some(w) => {
            grid.ensure_same(&w.grid())?;
            if let Some(index) = w.values().iter().position(|&v| !(v > 0.0)) {
                return Err(Error::NonPositiveWeight { index });
            }
            let fw: Vec<f64> = f
                .values()
                .iter()
                .zip(w.values())
                .map(|(a, b)| a * b)
                .collect();
            let num = block_means(grid, &fw, n);
            let den = block_means(grid, w.values(), n);
            Ok(num.iter().zip(&den).map(|(a, b)| a / b).collect())
        }
    }
}

/// `U_{ν,r,n}(f)(x) = Σ_{j<n} 2^{(j-n)r} |avg_ν of f over I ∔ 2^{-j-1}|`,
/// where `I` is the unique dyadic interval of length `2^{-n}` containing `x`.
pub fn u_maximal(
    f: &SampledFunction,
    nu: Option<&SampledFunction>,
    r: f64,
    n: u32,
) -> Result<SampledFunction> {
    let grid = f.grid();
    grid.check_level(n)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid("r", "must be positive"));
    }
    let avg = weighted_block_averages(f, nu, n)?;
    let coarse: Vec<f64> = (0..avg.len())
        .map(|a| {
            (0..n)
                .map(|j| {
                    2f64.powf((j as f64 - n as f64) * r) * avg[a ^ (1usize << (n - 1 - j))].abs()
                })
                .sum()
        })
        .collect();
    Ok(SampledFunction::from_vec_unchecked(
        grid,
        expand(grid, &coarse, n),
    ))
}

/// `V_{ν,r,n}(f)(x) = Σ_{j<n} Σ_{i=j}^{n-1} 2^{(j-n)r} 2^{(i-n)r} 2^{n-i} |avg_ν of f over J_{i,j}|`
/// where `J_{i,j}` is the dyadic interval of length `2^{-i}` containing `x ∔ 2^{-j-1}`.
pub fn v_maximal(
    f: &SampledFunction,
    nu: Option<&SampledFunction>,
    r: f64,
    n: u32,
) -> Result<SampledFunction> {
    let grid = f.grid();
    grid.check_level(n)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid("r", "must be positive"));
    }
    let avgs: Vec<Vec<f64>> = (0..n)
        .map(|i| weighted_block_averages(f, nu, i))
        .collect::<Result<_>>()?;
    let coarse: Vec<f64> = (0..1usize << n)
        .map(|a| {
            let mut s = 0.0;
            for j in 0..n {
                let shifted = a ^ (1usize << (n - 1 - j));
                for i in j..n {
                    let weight = 2f64.powf(
                        (j as f64 - n as f64) * r + (i as f64 - n as f64) * r + (n - i) as f64,
                    );
                    s += weight * avgs[i as usize][shifted >> (n - i)].abs();
                }
            }
            s
        })
        .collect();
    Ok(SampledFunction::from_vec_unchecked(
        grid,
        expand(grid, &coarse, n),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::martingale_of;

    fn sf(v: &[f64]) -> SampledFunction {
        SampledFunction::from_values(v.to_vec()).unwrap()
    }

    #[test]
    fn doob_examples() {
        let m = martingale_of(&sf(&[1.0, 3.0, 5.0, 7.0]), false);
        assert_eq!(
            doob_maximal(&m, None).unwrap().values(),
            &[4.0, 4.0, 6.0, 7.0]
        );
        let c = martingale_of(&sf(&[-2.5; 8]), false);
        assert!(doob_maximal(&c, None)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 2.5));
        assert_eq!(doob_maximal(&m, Some(0)).unwrap().values(), &[4.0; 4]);
        assert!(doob_maximal(&m, Some(3)).is_err());
    }

    #[test]
    fn variation_examples() {
        let r1 = martingale_of(&sf(&[1.0, -1.0, 1.0, -1.0]), true);
        let r0 = martingale_of(&sf(&[1.0, 1.0, -1.0, -1.0]), true);
        for m in [&r1, &r0] {
            for kind in [VariationKind::Square, VariationKind::Conditional] {
                let v = variation(m, kind, None).unwrap();
                assert!(v.values().iter().all(|&x| (x - 1.0).abs() < 1e-15));
            }
        }
        let z = martingale_of(&SampledFunction::zeros(DyadicGrid::new(3).unwrap()), true);
        assert!(variation(&z, VariationKind::Square, None)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn hardy_norm_examples() {
        let p2 = MusielakFunction::power(2.0).unwrap();
        let r0 = martingale_of(&sf(&[1.0, 1.0, -1.0, -1.0]), true);
        let rep = hardy_norms(&r0, &p2).unwrap();
        for v in [rep.h_max, rep.h_square, rep.h_cond, rep.p, rep.q, rep.g] {
            assert!((v - 1.0).abs() < 1e-9, "{rep:?}");
        }
        let z = martingale_of(&SampledFunction::zeros(DyadicGrid::new(3).unwrap()), true);
        let rz = hardy_norms(&z, &p2).unwrap();
        assert_eq!(
            [rz.h_max, rz.h_square, rz.h_cond, rz.p, rz.q, rz.g],
            [0.0; 6]
        );
    }

    #[test]
    fn transform_examples() {
        let grid = DyadicGrid::new(2).unwrap();
        let f = sf(&[1.0, -1.0, 1.0, -1.0]);
        let m = martingale_of(&f, true);
        let v = AdaptedProcess::new(vec![
            SampledFunction::constant(grid, 1.0),
            SampledFunction::constant(grid, -1.0),
            SampledFunction::constant(grid, 0.0),
        ])
        .unwrap();
        let t = martingale_transform(&m, &v).unwrap();
        assert_eq!(t.terminal().values(), &[-1.0, 1.0, -1.0, 1.0]);
        let ones = AdaptedProcess::new(vec![SampledFunction::constant(grid, 1.0); 3]).unwrap();
        assert_eq!(
            martingale_transform(&m, &ones).unwrap().terminal(),
            m.terminal()
        );
        let big = AdaptedProcess::new(vec![SampledFunction::constant(grid, 1.5); 3]).unwrap();
        assert!(matches!(
            martingale_transform(&m, &big),
            Err(Error::InvalidMultiplier(_))
        ));
    }

    #[test]
    fn dual_doob_and_stein_examples() {
        let g1 = sf(&[1.0, 1.0, 0.0, 0.0]);
        let (l, r) = dual_doob_sum(std::slice::from_ref(&g1), 1).unwrap();
        assert_eq!(l, g1);
        assert_eq!(r, g1);
        let c = sf(&[0.5; 4]);
        let (l, r) = dual_doob_sum(&[c.clone(), c.clone()], 1).unwrap();
        assert_eq!(l.values(), &[1.0; 4]);
        assert_eq!(r.values(), &[1.0; 4]);
        assert!(dual_doob_sum(&[sf(&[-1.0, 0.0])], 0).is_err());
        let (l, r) = stein_sum(&[g1.clone(), sf(&[1.0, 2.0, 3.0, 4.0])], 2.0, 1).unwrap();
        assert!(l.max_abs_diff(&r).unwrap() < 1e-15);
        assert!(stein_sum(&[g1], 1.0, 0).is_err());
    }

    #[test]
    fn squared_differences_rebuild_conditional_square() {
        let m = martingale_of(&sf(&[3.0, -1.0, 0.5, 2.0, -4.0, 1.0, 0.0, 2.5]), true);
        let (lhs, _) = dual_doob_sum(&squared_differences(&m), 0).unwrap();
        let s = variation(&m, VariationKind::Conditional, None).unwrap();
        for (a, b) in lhs.values().iter().zip(s.values()) {
            assert!((a - b * b).abs() < 1e-12);
        }
    }

    #[test]
    fn weak_type_examples() {
        let p2 = MusielakFunction::power(2.0).unwrap();
        let c = martingale_of(&sf(&[3.0; 8]), false);
        assert!((weak_type_value(&c, &p2).unwrap() - 3.0).abs() < 1e-8);
        let z = martingale_of(&SampledFunction::zeros(DyadicGrid::new(2).unwrap()), false);
        assert_eq!(weak_type_value(&z, &p2).unwrap(), 0.0);
    }

    #[test]
    fn u_v_examples() {
        let grid = DyadicGrid::new(3).unwrap();
        let one = SampledFunction::constant(grid, 1.0);
        let u = u_maximal(&one, None, 1.0, 2).unwrap();
        assert!(u.values().iter().all(|&v| (v - 0.75).abs() < 1e-15));
        let z = SampledFunction::zeros(grid);
        assert!(v_maximal(&z, None, 0.75, 3)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
        let f = sf(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let u1 = u_maximal(&f, None, 0.5, 1).unwrap();
        assert!((u1.values()[0] - 2f64.powf(-0.5) * 6.5).abs() < 1e-12);
        assert!((u1.values()[7] - 2f64.powf(-0.5) * 2.5).abs() < 1e-12);
        assert!(u_maximal(&f, None, 1.0, 4).is_err());
    }
}
