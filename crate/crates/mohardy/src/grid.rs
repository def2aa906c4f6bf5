//! Exact dyadic probability space on `[0,1)`.
//!
//! A grid of resolution `N` has `2^N` leaves; leaf `i` stands for the interval
//! `[i 2^-N, (i+1) 2^-N)`. The filtration `F_0 ⊂ … ⊂ F_N` is generated by the
//! dyadic intervals of length `2^-n`, so an `F_n`-atom is a block of
//! `2^(N-n)` consecutive leaves and conditional expectation is a block average.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the resolution when no override is configured.
pub const DEFAULT_MAX_RESOLUTION: u32 = 24;

/// Environment variable overriding [`DEFAULT_MAX_RESOLUTION`].
pub const MAX_RESOLUTION_ENV: &str = "MOHARDY_MAX_RESOLUTION";

/// Sentinel encoding `tau = ∞`; strictly greater than every admissible level.
pub const TAU_INFINITY: u32 = u32::MAX;

/// Current grid cap, honouring [`MAX_RESOLUTION_ENV`] when it parses.
pub fn max_resolution() -> u32 {
    std::env::var(MAX_RESOLUTION_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<u32>().ok())
        .map(|n| n.min(30))
        .unwrap_or(DEFAULT_MAX_RESOLUTION)
}

/// The dyadic grid of resolution `N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicGrid {
    resolution: u32,
}

impl DyadicGrid {
    /// Grid with `2^resolution` leaves; fails above the grid cap.
    pub fn new(resolution: u32) -> Result<Self> {
        let cap = max_resolution();
        if resolution > cap {
            return Err(Error::ResolutionTooLarge {
                requested: resolution,
                cap,
            });
        }
        Ok(Self { resolution })
    }

    /// One level finer than `self`, bypassing the cap by at most one level.
    pub(crate) fn refined(self) -> Self {
        Self {
            resolution: self.resolution + 1,
        }
    }

    /// The resolution `N`.
    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    /// Number of leaves `2^N`.
    pub fn len(&self) -> usize {
        1usize << self.resolution
    }

    /// Always false: a grid has at least one leaf.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lebesgue measure `2^-N` of one leaf.
    pub fn leaf_measure(&self) -> f64 {
        (self.len() as f64).recip()
    }

    /// Midpoint of leaf `i`, used as the `x`-sample of x-dependent families.
    pub fn midpoint(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.leaf_measure()
    }

    /// Number of leaves in one `F_level` atom.
    pub fn block_len(&self, level: u32) -> usize {
        1usize << (self.resolution - level)
    }

    /// Index of the `F_level` atom containing leaf `i`.
    pub fn atom_of(&self, i: usize, level: u32) -> usize {
        i >> (self.resolution - level)
    }

    /// Fails unless `level <= N`.
    pub fn check_level(&self, level: u32) -> Result<()> {
        if level > self.resolution {
            Err(Error::LevelOutOfRange {
                level,
                resolution: self.resolution,
            })
        } else {
            Ok(())
        }
    }

    /// Fails unless `i < 2^N`.
    pub fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.len() {
            Err(Error::IndexOutOfRange {
                index: i,
                limit: self.len(),
            })
        } else {
            Ok(())
        }
    }

    pub(crate) fn ensure_same(&self, other: &DyadicGrid) -> Result<()> {
        if self.resolution != other.resolution {
            Err(Error::GridMismatch {
                left: self.resolution,
                right: other.resolution,
            })
        } else {
            Ok(())
        }
    }
}

/// A real function on `[0,1)` stored as its `2^N` leaf values.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    grid: DyadicGrid,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SampledFunctionJson {
    resolution: u32,
    values: Vec<f64>,
}

impl SampledFunction {
    /// Wraps `values`, checking the length against the grid and finiteness.
    pub fn new(grid: DyadicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { grid, values })
    }

    /// Wraps `values`, inferring the resolution from the length.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let len = values.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(len));
        }
        let grid = DyadicGrid::new(len.trailing_zeros())?;
        Self::new(grid, values)
    }

    pub(crate) fn from_vec_unchecked(grid: DyadicGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    /// The zero function.
    pub fn zeros(grid: DyadicGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// The constant function `c`.
    pub fn constant(grid: DyadicGrid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Indicator of a boolean leaf mask.
    pub fn indicator(grid: DyadicGrid, mask: &[bool]) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: mask.len(),
            });
        }
        Ok(Self {
            grid,
            values: mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        })
    }

    /// The underlying grid.
    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    /// Leaf values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Consumes the function, returning the leaf values.
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Number of leaves.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false: a grid has at least one leaf.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Integral over `[0,1)`.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.leaf_measure()
    }

    /// Largest absolute value.
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `L^p` norm for `p >= 1` (use `f64::INFINITY` for the sup norm); a quasi-norm for `p < 1`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.sup_abs();
        }
        let s: f64 = self.values.iter().map(|v| v.abs().powf(p)).sum();
        (s * self.grid.leaf_measure()).powf(p.recip())
    }

    /// Pointwise absolute value.
    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    /// Pointwise map; the closure must keep values finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two functions on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// `self * c`.
    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    /// Largest pointwise distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Parses one value per line; the resolution is inferred from the count.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(false)
            .from_reader(text.as_bytes());
        let mut values = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            let field = record.get(0).unwrap_or("");
            if field.is_empty() {
                continue;
            }
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                position: line + 1,
                message: format!("`{field}` is not a number"),
            })?;
            values.push(v);
        }
        Self::from_values(values)
    }

    /// One value per line, shortest round-trip representation.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 20);
        for v in &self.values {
            out.push_str(&format!("{v:?}\n"));
        }
        out
    }

    /// Parses `{"resolution": N, "values": [...]}`.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: SampledFunctionJson = serde_json::from_str(text)?;
        let grid = DyadicGrid::new(raw.resolution)?;
        Self::new(grid, raw.values)
    }

    /// Serializes to `{"resolution": N, "values": [...]}`.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&SampledFunctionJson {
            resolution: self.grid.resolution,
            values: self.values.clone(),
        })
        .expect("plain numeric payload serializes")
    }

    /// Reads CSV or JSON; JSON is recognised by a leading `{`.
    pub fn read_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if text.trim_start().starts_with('{') {
            Self::from_json_str(&text)
        } else {
            Self::from_csv_str(&text)
        }
    }
}

/// Block averages of `values` over `F_level` atoms, one entry per atom.
pub(crate) fn block_means(grid: DyadicGrid, values: &[f64], level: u32) -> Vec<f64> {
    let b = grid.block_len(level);
    let inv = (b as f64).recip();
    values
        .chunks(b)
        .map(|c| c.iter().sum::<f64>() * inv)
        .collect()
}

/// Block maxima of `values` over `F_level` atoms, one entry per atom.
pub(crate) fn block_maxima(grid: DyadicGrid, values: &[f64], level: u32) -> Vec<f64> {
    values
        .chunks(grid.block_len(level))
        .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

/// Broadcasts one value per `F_level` atom back to leaves.
pub(crate) fn expand(grid: DyadicGrid, coarse: &[f64], level: u32) -> Vec<f64> {
    let b = grid.block_len(level);
    let mut out = Vec::with_capacity(grid.len());
    for &c in coarse {
        out.extend(std::iter::repeat_n(c, b));
    }
    out
}

/// Leaf values of `E_level(values)`.
pub(crate) fn cond_expect_values(grid: DyadicGrid, values: &[f64], level: u32) -> Vec<f64> {
    expand(grid, &block_means(grid, values, level), level)
}

/// True when `values` is constant on every `F_level` atom; returns the first offending atom.
pub(crate) fn first_nonconstant_atom(
    grid: DyadicGrid,
    values: &[f64],
    level: u32,
) -> Option<usize> {
    values
        .chunks(grid.block_len(level))
        .position(|c| c.iter().any(|&v| v != c[0]))
}

/// Conditional expectation `E_n f`: the block average over atoms of `F_n`.
pub fn cond_expect(f: &SampledFunction, n: u32) -> Result<SampledFunction> {
    f.grid.check_level(n)?;
    Ok(SampledFunction::from_vec_unchecked(
        f.grid,
        cond_expect_values(f.grid, &f.values, n),
    ))
}

/// The martingale `f_n = E_n f`, `n = 0..=N`, with its differences.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicMartingale {
    grid: DyadicGrid,
    levels: Vec<SampledFunction>,
    diffs: Vec<SampledFunction>,
}

impl DyadicMartingale {
    pub(crate) fn from_levels_unchecked(grid: DyadicGrid, levels: Vec<SampledFunction>) -> Self {
        debug_assert_eq!(levels.len(), grid.resolution() as usize + 1);
        let mut diffs = Vec::with_capacity(levels.len());
        diffs.push(levels[0].clone());
        for n in 1..levels.len() {
            let d: Vec<f64> = levels[n]
                .values
                .iter()
                .zip(&levels[n - 1].values)
                .map(|(a, b)| a - b)
                .collect();
            diffs.push(SampledFunction::from_vec_unchecked(grid, d));
        }
        Self {
            grid,
            levels,
            diffs,
        }
    }

    /// Builds a martingale from explicit levels `f_0..f_N`, checking
    /// `F_n`-measurability exactly and `E_{n-1} d_n = 0` up to `1e-9` relative.
    pub fn from_levels(levels: Vec<SampledFunction>) -> Result<Self> {
        let grid = levels
            .first()
            .ok_or_else(|| Error::invalid("levels", "at least one level required"))?
            .grid;
        if levels.len() != grid.resolution() as usize + 1 {
            return Err(Error::LengthMismatch {
                expected: grid.resolution() as usize + 1,
                found: levels.len(),
            });
        }
        for (n, f) in levels.iter().enumerate() {
            grid.ensure_same(&f.grid)?;
            if let Some(atom) = first_nonconstant_atom(grid, &f.values, n as u32) {
                return Err(Error::NotAdapted {
                    level: n as u32,
                    atom,
                });
            }
        }
        let m = Self::from_levels_unchecked(grid, levels);
        let scale = m.levels.iter().map(|f| f.sup_abs()).fold(1.0, f64::max);
        for n in 1..=grid.resolution() {
            let e = block_means(grid, &m.diffs[n as usize].values, n - 1);
            if let Some(atom) = e.iter().position(|v| v.abs() > 1e-9 * scale) {
                return Err(Error::NotAdapted { level: n, atom });
            }
        }
        Ok(m)
    }

    /// The grid.
    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    /// Resolution `N`.
    pub fn resolution(&self) -> u32 {
        self.grid.resolution()
    }

    /// Level `f_n`.
    pub fn level(&self, n: u32) -> &SampledFunction {
        &self.levels[n as usize]
    }

    /// All levels `f_0..f_N`.
    pub fn levels(&self) -> &[SampledFunction] {
        &self.levels
    }

    /// The terminal value `f_N`.
    pub fn terminal(&self) -> &SampledFunction {
        &self.levels[self.levels.len() - 1]
    }

    /// Difference `d_n = f_n - f_{n-1}` for `1 <= n <= N`; `d_0 := f_0`.
    pub fn difference(&self, n: u32) -> &SampledFunction {
        &self.diffs[n as usize]
    }

    /// All differences, index 0 holding `f_0`.
    pub fn differences(&self) -> &[SampledFunction] {
        &self.diffs
    }

    /// True when every level vanishes identically.
    pub fn is_zero(&self) -> bool {
        self.levels
            .iter()
            .all(|f| f.values.iter().all(|&v| v == 0.0))
    }
}

/// Levels `E_n f`; with `center` the global mean is removed first and `f_0 ≡ 0`.
pub fn martingale_of(f: &SampledFunction, center: bool) -> DyadicMartingale {
    let grid = f.grid;
    let n_res = grid.resolution();
    let base: Vec<f64> = if center {
        let m = f.mean();
        f.values.iter().map(|v| v - m).collect()
    } else {
        f.values.clone()
    };
    let mut coarse: Vec<Vec<f64>> = vec![Vec::new(); n_res as usize + 1];
    coarse[n_res as usize] = base;
    for n in (0..n_res).rev() {
        let finer = &coarse[n as usize + 1];
        coarse[n as usize] = finer.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect();
    }
    if center {
        coarse[0] = vec![0.0];
    }
    let levels = coarse
        .iter()
        .enumerate()
        .map(|(n, c)| SampledFunction::from_vec_unchecked(grid, expand(grid, c, n as u32)))
        .collect();
    DyadicMartingale::from_levels_unchecked(grid, levels)
}

/// An adapted sequence `x_0..x_N` (`x_n` is `F_n`-measurable).
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptedProcess {
    grid: DyadicGrid,
    entries: Vec<SampledFunction>,
}

impl AdaptedProcess {
    /// Validates lengths and exact `F_n`-measurability of each entry.
    pub fn new(entries: Vec<SampledFunction>) -> Result<Self> {
        let grid = entries
            .first()
            .ok_or_else(|| Error::invalid("entries", "at least one entry required"))?
            .grid;
        if entries.len() != grid.resolution() as usize + 1 {
            return Err(Error::LengthMismatch {
                expected: grid.resolution() as usize + 1,
                found: entries.len(),
            });
        }
        for (n, x) in entries.iter().enumerate() {
            grid.ensure_same(&x.grid)?;
            if let Some(atom) = first_nonconstant_atom(grid, &x.values, n as u32) {
                return Err(Error::NotAdapted {
                    level: n as u32,
                    atom,
                });
            }
        }
        Ok(Self { grid, entries })
    }

    pub(crate) fn from_entries_unchecked(grid: DyadicGrid, entries: Vec<SampledFunction>) -> Self {
        Self { grid, entries }
    }

    /// The grid.
    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    /// Entry `x_n`.
    pub fn entry(&self, n: u32) -> &SampledFunction {
        &self.entries[n as usize]
    }

    /// All entries.
    pub fn entries(&self) -> &[SampledFunction] {
        &self.entries
    }

    /// The last entry `x_N`, which is also `sup_n x_n` for nondecreasing sequences.
    pub fn terminal(&self) -> &SampledFunction {
        &self.entries[self.entries.len() - 1]
    }
}

/// A validated stopping time with values in `{0..N} ∪ {∞}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StoppingTimeMap {
    grid: DyadicGrid,
    tau: Vec<u32>,
}

impl StoppingTimeMap {
    /// The constant stopping time `value` (use [`TAU_INFINITY`] for `∞`).
    pub fn constant(grid: DyadicGrid, value: u32) -> Result<Self> {
        validate_stopping_time(grid, vec![value; grid.len()])
    }

    /// The grid.
    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    /// Raw leaf values; `∞` is [`TAU_INFINITY`].
    pub fn values(&self) -> &[u32] {
        &self.tau
    }

    /// `tau` at leaf `i`.
    pub fn at(&self, i: usize) -> u32 {
        self.tau[i]
    }

    /// Leaf mask of `B_tau = {tau < ∞}`.
    pub fn finite_mask(&self) -> Vec<bool> {
        self.tau.iter().map(|&t| t != TAU_INFINITY).collect()
    }

    /// Values with `∞` mapped to `None`.
    pub fn to_options(&self) -> Vec<Option<u32>> {
        self.tau
            .iter()
            .map(|&t| (t != TAU_INFINITY).then_some(t))
            .collect()
    }
}

/// Accepts `raw` iff every `{tau = n}` is a union of `F_n` atoms.
pub fn validate_stopping_time(grid: DyadicGrid, raw: Vec<u32>) -> Result<StoppingTimeMap> {
    if raw.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            found: raw.len(),
        });
    }
    let n_res = grid.resolution();
    if let Some(i) = raw.iter().position(|&t| t > n_res && t != TAU_INFINITY) {
        return Err(Error::invalid(
            "tau",
            format!("value {} at leaf {i} is neither a level nor ∞", raw[i]),
        ));
    }
    for n in 0..=n_res {
        for (atom, block) in raw.chunks(grid.block_len(n)).enumerate() {
            let hits = block.iter().filter(|&&t| t == n).count();
            if hits != 0 && hits != block.len() {
                return Err(Error::NotMeasurable { level: n, atom });
            }
        }
    }
    Ok(StoppingTimeMap { grid, tau: raw })
}

/// The stopped martingale: level `n` equals `f_{nu ∧ n}` pointwise.
pub fn stopped(m: &DyadicMartingale, nu: &StoppingTimeMap) -> Result<DyadicMartingale> {
    m.grid.ensure_same(&nu.grid)?;
    let grid = m.grid;
    let levels = (0..=grid.resolution())
        .map(|n| {
            let v = (0..grid.len())
                .map(|i| m.levels[nu.tau[i].min(n) as usize].values[i])
                .collect();
            SampledFunction::from_vec_unchecked(grid, v)
        })
        .collect();
    Ok(DyadicMartingale::from_levels_unchecked(grid, levels))
}

/// Minimal nondecreasing adapted `lambda` with `lambda_{n-1} >= x_n` for `n >= 1`.
///
/// `lambda_0` is the largest value of `x_1`, `lambda_n = max(lambda_{n-1}, M_n x_{n+1})`
/// where `M_n` is the block maximum over `F_n` atoms, and `lambda_N = lambda_{N-1}`.
pub fn predictable_envelope(x: &AdaptedProcess) -> Result<AdaptedProcess> {
    let grid = x.grid;
    for e in &x.entries {
        if let Some((index, &value)) = e.values.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::NegativeValue { index, value });
        }
    }
    let n_res = grid.resolution();
    let mut out: Vec<SampledFunction> = Vec::with_capacity(n_res as usize + 1);
    let mut prev: Vec<f64> = vec![0.0; grid.len()];
    for n in 0..=n_res {
        let cur: Vec<f64> = if n < n_res {
            let majorant = expand(
                grid,
                &block_maxima(grid, &x.entries[n as usize + 1].values, n),
                n,
            );
            if n == 0 {
                majorant
            } else {
                prev.iter().zip(&majorant).map(|(a, b)| a.max(*b)).collect()
            }
        } else {
            prev.clone()
        };
        out.push(SampledFunction::from_vec_unchecked(grid, cur.clone()));
        prev = cur;
    }
    Ok(AdaptedProcess::from_entries_unchecked(grid, out))
}

/// Dyadic addition of leaf indices: bitwise exclusive-or.
pub fn dyadic_add(i: usize, j: usize, grid: DyadicGrid) -> Result<usize> {
    grid.check_index(i)?;
    grid.check_index(j)?;
    Ok(i ^ j)
}

/// Image of a leaf set under dyadic translation by leaf `t`.
pub fn translate_set(set: &BTreeSet<usize>, t: usize, grid: DyadicGrid) -> Result<BTreeSet<usize>> {
    grid.check_index(t)?;
    set.iter().map(|&i| dyadic_add(i, t, grid)).collect()
}

/// Leaf index of the point `2^-(j+1)`, i.e. the translation `x ∔ 2^-(j+1)` on leaves.
/// Returns 0 (the identity) when the point is finer than the grid.
pub fn half_shift_index(j: u32, grid: DyadicGrid) -> usize {
    if j < grid.resolution() {
        1usize << (grid.resolution() - 1 - j)
    } else {
        0
    }
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

    #[test]
    fn cond_expect_block_average() {
        let f = sf(&[1.0, 3.0, 5.0, 7.0]);
        assert_eq!(cond_expect(&f, 1).unwrap().values(), &[2.0, 2.0, 6.0, 6.0]);
        assert_eq!(cond_expect(&f, 0).unwrap().values(), &[4.0; 4]);
        assert_eq!(cond_expect(&f, 2).unwrap(), f);
        assert!(matches!(
            cond_expect(&f, 3),
            Err(Error::LevelOutOfRange { .. })
        ));
    }

    #[test]
    fn martingale_examples() {
        let m = martingale_of(&sf(&[1.0, -1.0, 1.0, -1.0]), true);
        assert_eq!(m.level(0).values(), &[0.0; 4]);
        assert_eq!(m.level(1).values(), &[0.0; 4]);
        assert_eq!(m.level(2).values(), &[1.0, -1.0, 1.0, -1.0]);

        let c = martingale_of(&SampledFunction::constant(g(3), 2.5), true);
        assert!(c.is_zero());

        let u = martingale_of(&sf(&[1.0, 3.0, 5.0, 7.0]), false);
        assert_eq!(u.level(0).values(), &[4.0; 4]);
        assert_eq!(u.level(1).values(), &[2.0, 2.0, 6.0, 6.0]);
        assert_eq!(u.difference(2).values(), &[-1.0, 1.0, -1.0, 1.0]);
    }

    #[test]
    fn stopped_examples() {
        let m = martingale_of(&sf(&[1.0, 3.0, 5.0, 7.0, -2.0, 0.0, 4.0, 8.0]), true);
        let grid = m.grid();
        let one = StoppingTimeMap::constant(grid, 1).unwrap();
        let s = stopped(&m, &one).unwrap();
        for n in 0..=3 {
            assert_eq!(s.level(n), m.level(n.min(1)));
        }
        let inf = StoppingTimeMap::constant(grid, TAU_INFINITY).unwrap();
        assert_eq!(stopped(&m, &inf).unwrap(), m);
        let zero = StoppingTimeMap::constant(grid, 0).unwrap();
        assert!(stopped(&m, &zero).unwrap().is_zero());
    }

    #[test]
    fn envelope_examples() {
        let grid = g(2);
        let x = AdaptedProcess::new(vec![
            SampledFunction::zeros(grid),
            sf(&[2.0, 2.0, 0.0, 0.0]),
            sf(&[1.0, 3.0, 1.0, 1.0]),
        ])
        .unwrap();
        let lam = predictable_envelope(&x).unwrap();
        assert_eq!(lam.entry(0).values(), &[2.0; 4]);
        assert_eq!(lam.entry(1).values(), &[3.0, 3.0, 2.0, 2.0]);
        assert_eq!(lam.entry(2).values(), &[3.0, 3.0, 2.0, 2.0]);

        let c = AdaptedProcess::new(vec![SampledFunction::constant(grid, 1.5); 3]).unwrap();
        let lc = predictable_envelope(&c).unwrap();
        assert!(lc
            .entries()
            .iter()
            .all(|e| e.values().iter().all(|&v| v == 1.5)));

        let z = AdaptedProcess::new(vec![SampledFunction::zeros(grid); 3]).unwrap();
        let lz = predictable_envelope(&z).unwrap();
        assert!(lz.entries().iter().all(|e| e.sup_abs() == 0.0));

        let neg = AdaptedProcess::new(vec![SampledFunction::constant(grid, -1.0); 3]).unwrap();
        assert!(predictable_envelope(&neg).is_err());
    }

    #[test]
    fn dyadic_addition_examples() {
        let grid = g(2);
        assert_eq!(dyadic_add(1, 2, grid).unwrap(), 3);
        assert_eq!(dyadic_add(3, 3, grid).unwrap(), 0);
        assert!(dyadic_add(4, 0, grid).is_err());
        let a: BTreeSet<usize> = [0, 1].into_iter().collect();
        let b: BTreeSet<usize> = [2, 3].into_iter().collect();
        assert_eq!(translate_set(&a, 2, grid).unwrap(), b);
        assert_eq!(translate_set(&a, 0, grid).unwrap(), a);
    }

    #[test]
    fn stopping_time_validation() {
        assert!(StoppingTimeMap::constant(g(3), 3).is_ok());
        let bad = validate_stopping_time(g(2), vec![1, TAU_INFINITY, 2, 2]);
        assert!(matches!(
            bad,
            Err(Error::NotMeasurable { level: 1, atom: 0 })
        ));
        assert!(validate_stopping_time(g(2), vec![1, 1, 2, TAU_INFINITY]).is_ok());
        assert!(validate_stopping_time(g(2), vec![5, 5, 5, 5]).is_err());
    }

    #[test]
    fn io_round_trip() {
        let f = sf(&[0.1, -2.5, 1e-300, 3.0]);
        assert_eq!(
            SampledFunction::from_csv_str(&f.to_csv_string()).unwrap(),
            f
        );
        assert_eq!(
            SampledFunction::from_json_str(&f.to_json_string()).unwrap(),
            f
        );
        assert!(SampledFunction::from_csv_str("1\n2\n3\n").is_err());
        assert!(matches!(
            SampledFunction::from_csv_str("1\nabc\n"),
            Err(Error::Parse { position: 2, .. })
        ));
    }

    #[test]
    fn from_levels_rejects_non_martingale() {
        let grid = g(1);
        let bad = DyadicMartingale::from_levels(vec![
            SampledFunction::zeros(grid),
            SampledFunction::constant(grid, 1.0),
        ]);
        assert!(bad.is_err());
        let good =
            DyadicMartingale::from_levels(vec![SampledFunction::zeros(grid), sf(&[1.0, -1.0])]);
        assert!(good.is_ok());
    }

    #[test]
    fn resolution_cap() {
        assert!(
            DyadicGrid::new(DEFAULT_MAX_RESOLUTION + 1).is_err()
                || std::env::var(MAX_RESOLUTION_ENV).is_ok()
        );
        assert_eq!(half_shift_index(0, g(3)), 4);
        assert_eq!(half_shift_index(2, g(3)), 1);
        assert_eq!(half_shift_index(3, g(3)), 0);
    }
}
