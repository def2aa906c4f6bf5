//! Constructive atomic decompositions, the weighted stopping time, atom
//! validation, atomic quasi-norms, the Davis decomposition and the
//! localisation identity `T(a 1_A) = T(a) 1_A`.
//!
//! Every construction stops the martingale at a nondecreasing family of
//! stopping times `ν^k`, sets `a^k = (f^{ν^{k+1}} - f^{ν^k}) / μ^k` and checks
//! both the atoms and the reconstruction `Σ_k μ^k a^k_n = f_n` before returning.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    block_means, cond_expect_values, first_nonconstant_atom, martingale_of, predictable_envelope,
    stopped, validate_stopping_time, AdaptedProcess, DyadicGrid, DyadicMartingale, SampledFunction,
    StoppingTimeMap, TAU_INFINITY,
};
use crate::musielak::{indicator_norm, luxemburg_norm, weight_s_constants, MusielakFunction};
use crate::operators::{abs_process, doob_maximal_process, variation_process, VariationKind};

/// Tolerance of the atom size bound and of the reconstruction check.
pub const ATOM_TOL: f64 = 1e-9;

/// Regularity constant of the dyadic filtration.
pub const DYADIC_R: f64 = 2.0;

/// The functional an atom is measured with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AtomKind {
    /// Conditional square function `s`.
    #[serde(rename = "s")]
    Conditional,
    /// Square function `S`.
    #[serde(rename = "S")]
    Square,
    /// Doob maximal function `M`.
    #[serde(rename = "M")]
    Maximal,
}

impl AtomKind {
    /// The functional of `a`, pointwise.
    pub fn functional(self, a: &DyadicMartingale) -> SampledFunction {
        match self {
            AtomKind::Conditional => variation_process(a, VariationKind::Conditional)
                .terminal()
                .clone(),
            AtomKind::Square => variation_process(a, VariationKind::Square)
                .terminal()
                .clone(),
            AtomKind::Maximal => doob_maximal_process(a).terminal().clone(),
        }
    }
}

/// Which stopping-time construction produced a decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Construction {
    /// `ν^k = inf{n : s_{n+1}(f) > 2^k}`, `μ^k = 2^{k+1} ‖1_B‖`.
    Conditional,
    /// `ν^k = inf{n : λ_n > 2^k}` for the envelope of `|f_n|`, `μ^k = 3·2^k ‖1_B‖`.
    P,
    /// `ν^k = inf{n : λ_n > 2^k}` for the envelope of `S_n(f)`, `μ^k = 2^{k+1} ‖1_B‖`.
    Q,
    /// Weighted stopping times over `|f_n|`, `μ^k = 3·2^k ‖1_B‖`.
    Maximal,
    /// Weighted stopping times over `S_n(f)`, `μ^k = 3·2^k ‖1_B‖`.
    Square,
}

/// One term `μ^k a^k` with its stopping time.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomTriple {
    /// Dyadic level `k`.
    pub k: i32,
    /// Multiplier `μ^k`.
    pub mu: f64,
    /// `‖1_{B_{ν^k}}‖_φ` used for `μ^k`.
    pub indicator_norm: f64,
    /// The atom `a^k`.
    pub atom: DyadicMartingale,
    /// The stopping time `ν^k`.
    pub nu: StoppingTimeMap,
}

/// An atomic decomposition of one martingale.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicDecomposition {
    /// Atom functional.
    pub kind: AtomKind,
    /// Stopping-time construction.
    pub construction: Construction,
    /// Aggregation exponent in `(0, 1]`.
    pub r: f64,
    /// Triples ordered by increasing `k`; triples with `μ^k = 0` are omitted.
    pub triples: Vec<AtomTriple>,
    /// The Musielak-Orlicz function of the norms.
    pub phi: MusielakFunction,
}

fn dyadic_range(values: impl Iterator<Item = f64>) -> Option<(i32, i32)> {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for v in values {
        if v > 0.0 {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (hi > 0.0).then(|| (lo.log2().floor() as i32 - 1, hi.log2().ceil() as i32))
}

fn process_range(x: &AdaptedProcess) -> Option<(i32, i32)> {
    dyadic_range(x.entries().iter().flat_map(|e| e.values().iter().copied()))
}

/// `inf{n >= 0 : x_{n + offset} > λ}` leafwise for an adapted process.
fn first_exceedance(x: &AdaptedProcess, lambda: f64, offset: u32) -> Result<StoppingTimeMap> {
    let grid = x.grid();
    let last = grid.resolution();
    let raw = (0..grid.len())
        .map(|i| {
            (0..=last)
                .filter(|n| n + offset <= last)
                .find(|&n| x.entry(n + offset).values()[i] > lambda)
                .unwrap_or(TAU_INFINITY)
        })
        .collect();
    validate_stopping_time(grid, raw)
}

fn check_centered(m: &DyadicMartingale) -> Result<()> {
    if let Some(index) = m.level(0).values().iter().position(|&v| v != 0.0) {
        return Err(Error::invalid(
            "martingale",
            format!("decompositions need a centered martingale (f_0 != 0 at leaf {index})"),
        ));
    }
    Ok(())
}

fn assemble(
    m: &DyadicMartingale,
    phi: &MusielakFunction,
    kind: AtomKind,
    construction: Construction,
    factor: f64,
    k_range: Option<(i32, i32)>,
    mut nu_of: impl FnMut(i32) -> Result<StoppingTimeMap>,
) -> Result<AtomicDecomposition> {
    let grid = m.grid();
    let mut triples = Vec::new();
    if let Some((k_min, k_max)) = k_range {
        let mut nu = nu_of(k_min)?;
        for k in k_min..=k_max {
            let next = nu_of(k + 1)?;
            if next.values().iter().zip(nu.values()).any(|(a, b)| a < b) {
                return Err(Error::AtomValidation {
                    k,
                    message: "stopping times are not nondecreasing in k".into(),
                });
            }
            let mask = nu.finite_mask();
            let ind = indicator_norm(phi, grid, &mask)?;
            let mu = factor * 2f64.powi(k) * ind;
            if mu > 0.0 {
                let hi = stopped(m, &next)?;
                let lo = stopped(m, &nu)?;
                let levels = hi
                    .levels()
                    .iter()
                    .zip(lo.levels())
                    .map(|(a, b)| a.zip_with(b, |x, y| (x - y) / mu))
                    .collect::<Result<Vec<_>>>()?;
                let atom = DyadicMartingale::from_levels_unchecked(grid, levels);
                let report = validate_atom(&atom, &nu, phi, kind)?;
                if !report.pass {
                    return Err(Error::AtomValidation {
                        k,
                        message: format!("{report:?}"),
                    });
                }
                triples.push(AtomTriple {
                    k,
                    mu,
                    indicator_norm: ind,
                    atom,
                    nu: nu.clone(),
                });
            }
            nu = next;
        }
    }
    let dec = AtomicDecomposition {
        kind,
        construction,
        r: 1.0,
        triples,
        phi: phi.clone(),
    };
    dec.check_reconstruction(m)?;
    Ok(dec)
}

/// Decomposition into `(φ,∞)_s`-atoms with `ν^k = inf{n : s_{n+1}(f) > 2^k}`.
pub fn s_atomic_decompose(
    m: &DyadicMartingale,
    phi: &MusielakFunction,
) -> Result<AtomicDecomposition> {
    check_centered(m)?;
    let s = variation_process(m, VariationKind::Conditional);
    let range = process_range(&s);
    assemble(
        m,
        phi,
        AtomKind::Conditional,
        Construction::Conditional,
        2.0,
        range,
        |k| first_exceedance(&s, 2f64.powi(k), 1),
    )
}

/// Which predictable control drives [`pq_atomic_decompose`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PqKind {
    /// Envelope of `|f_n|`, producing `M`-atoms.
    P,
    /// Envelope of `S_n(f)`, producing `S`-atoms.
    Q,
}

/// Decomposition driven by the minimal predictable envelope `λ` of `|f_n|` (P) or
/// `S_n(f)` (Q), with `ν^k = inf{n >= 0 : λ_n > 2^k}`.
///
/// P-atoms use `μ^k = 3·2^k ‖1_B‖` because both stopped martingales contribute
/// to the maximal function of the atom; Q-atoms use `2^{k+1} ‖1_B‖`.
pub fn pq_atomic_decompose(
    m: &DyadicMartingale,
    phi: &MusielakFunction,
    kind: PqKind,
) -> Result<AtomicDecomposition> {
    check_centered(m)?;
    let base = match kind {
        PqKind::P => abs_process(m),
        PqKind::Q => variation_process(m, VariationKind::Square),
    };
    let lambda = predictable_envelope(&base)?;
    let range = process_range(&lambda);
    let (atom_kind, construction, factor) = match kind {
        PqKind::P => (AtomKind::Maximal, Construction::P, 3.0),
        PqKind::Q => (AtomKind::Square, Construction::Q, 2.0),
    };
    assemble(m, phi, atom_kind, construction, factor, range, |k| {
        first_exceedance(&lambda, 2f64.powi(k), 0)
    })
}

/// Stopping time `τ_λ = inf{n : x ∈ G_{n+1}}` with
/// `G_n = {E_{n-1}(1_{γ_n > λ} w) / w_{n-1} >= 1/(RK)}`, `R = 2` and `K` the
/// `𝕊⁻` constant of `w_n = E_n w`.
///
/// The comparison carries a relative rounding allowance of `1e-12` so that the
/// dyadic equality case `E_{n-1}(1_child) = 1/2` is kept inside `G_n`.
pub fn weighted_stopping_time(
    gamma: &AdaptedProcess,
    w: &SampledFunction,
    lambda: f64,
) -> Result<StoppingTimeMap> {
    let grid = gamma.grid();
    grid.ensure_same(&w.grid())?;
    let gamma0 = gamma.entry(0).sup_abs();
    if !(lambda > gamma0) {
        return Err(Error::ThresholdTooSmall { lambda, gamma0 });
    }
    for e in gamma.entries() {
        if let Some((index, &value)) = e.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::NegativeValue { index, value });
        }
    }
    let k = weight_s_constants(w)?.k_minus;
    let rk = DYADIC_R * k;
    let mut tau = vec![TAU_INFINITY; grid.len()];
    for n in 0..grid.resolution() {
        let g = gamma.entry(n + 1).values();
        let hit: Vec<f64> = g
            .iter()
            .zip(w.values())
            .map(|(&x, &wv)| if x > lambda { wv } else { 0.0 })
            .collect();
        let num = block_means(grid, &hit, n);
        let den = block_means(grid, w.values(), n);
        let b = grid.block_len(n);
        for (atom, (a, d)) in num.iter().zip(&den).enumerate() {
            if rk * a >= d * (1.0 - 1e-12) && *a > 0.0 {
                for t in &mut tau[atom * b..(atom + 1) * b] {
                    if *t == TAU_INFINITY {
                        *t = n;
                    }
                }
            }
        }
    }
    validate_stopping_time(grid, tau)
}

/// `w({ν < ∞}) / w({sup_n γ_n > λ})`, the ratio bounded by `RK` for weighted stopping times.
pub fn stopping_measure_ratio(
    nu: &StoppingTimeMap,
    gamma: &AdaptedProcess,
    w: &SampledFunction,
    lambda: f64,
) -> f64 {
    let mut big = 0.0;
    let mut stop = 0.0;
    for i in 0..w.len() {
        let sup = gamma
            .entries()
            .iter()
            .map(|e| e.values()[i])
            .fold(0.0, f64::max);
        if sup > lambda {
            big += w.values()[i];
        }
        if nu.at(i) != TAU_INFINITY {
            stop += w.values()[i];
        }
    }
    if stop == 0.0 {
        0.0
    } else {
        stop / big
    }
}

/// Decomposition into `M`- (or `S`-) atoms from weighted stopping times at
/// `λ = 2^k`, with weight `w(x) = φ(x, t_star)` and `μ^k = 3·2^k ‖1_B‖`.
pub fn maximal_atomic_decompose(
    m: &DyadicMartingale,
    phi: &MusielakFunction,
    kind: AtomKind,
    t_star: f64,
) -> Result<AtomicDecomposition> {
    check_centered(m)?;
    let grid = m.grid();
    let w = SampledFunction::new(
        grid,
        (0..grid.len())
            .map(|i| phi.eval(grid.midpoint(i), t_star))
            .collect(),
    )
    .map_err(|_| Error::NonFinitePhi { index: 0 })?;
    if let Some(index) = w.values().iter().position(|&v| !(v > 0.0)) {
        return Err(Error::NonPositiveWeight { index });
    }
    let (gamma, construction) = match kind {
        AtomKind::Maximal => (abs_process(m), Construction::Maximal),
        AtomKind::Square => (
            variation_process(m, VariationKind::Square),
            Construction::Square,
        ),
        AtomKind::Conditional => {
            return Err(Error::invalid(
                "kind",
                "weighted construction supports M and S atoms",
            ));
        }
    };
    let range = process_range(&gamma);
    assemble(m, phi, kind, construction, 3.0, range, |k| {
        weighted_stopping_time(&gamma, &w, 2f64.powi(k))
    })
}

/// Outcome of [`validate_atom`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomReport {
    /// True when both conditions hold within tolerance.
    pub pass: bool,
    /// `max |a_n|` over `{ν >= n}`, all `n` (must vanish).
    pub support_violation: f64,
    /// Largest value of the kind functional on `B_ν`.
    pub size: f64,
    /// `‖1_{B_ν}‖_φ^{-1}` (infinite when `B_ν` is empty).
    pub bound: f64,
    /// `bound - size`.
    pub margin: f64,
}

/// Checks `a_n = 0` on `{ν >= n}` and `sup_{B_ν} T(a) <= ‖1_{B_ν}‖_φ^{-1}` (+1e-9).
pub fn validate_atom(
    a: &DyadicMartingale,
    nu: &StoppingTimeMap,
    phi: &MusielakFunction,
    kind: AtomKind,
) -> Result<AtomReport> {
    let grid = a.grid();
    grid.ensure_same(&nu.grid())?;
    let mut support_violation = 0.0_f64;
    for (n, level) in a.levels().iter().enumerate() {
        for (i, v) in level.values().iter().enumerate() {
            let t = nu.at(i);
            if t == TAU_INFINITY || t as usize >= n {
                support_violation = support_violation.max(v.abs());
            }
        }
    }
    let mask = nu.finite_mask();
    let ind = indicator_norm(phi, grid, &mask)?;
    let bound = if ind > 0.0 {
        ind.recip()
    } else {
        f64::INFINITY
    };
    let func = kind.functional(a);
    let size = func
        .values()
        .iter()
        .zip(&mask)
        .filter(|(_, &b)| b)
        .map(|(v, _)| *v)
        .fold(0.0, f64::max);
    let scale = a.levels().iter().map(|l| l.sup_abs()).fold(1.0, f64::max);
    let allowance = ATOM_TOL + 4.0 * f64::EPSILON * bound.min(1e300);
    let pass = support_violation <= 1e-12 * scale && size <= bound + allowance;
    Ok(AtomReport {
        pass,
        support_violation,
        size,
        bound,
        margin: bound - size,
    })
}

impl AtomicDecomposition {
    /// Sets the aggregation exponent `r ∈ (0,1]`.
    pub fn with_r(mut self, r: f64) -> Result<Self> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::invalid("r", "must lie in (0, 1]"));
        }
        self.r = r;
        Ok(self)
    }

    /// `Σ_k μ^k a^k_n` for every level `n`.
    pub fn reconstruct(&self, grid: DyadicGrid) -> Vec<SampledFunction> {
        let mut levels = vec![vec![0.0_f64; grid.len()]; grid.resolution() as usize + 1];
        for t in &self.triples {
            for (acc, l) in levels.iter_mut().zip(t.atom.levels()) {
                for (x, v) in acc.iter_mut().zip(l.values()) {
                    *x += t.mu * v;
                }
            }
        }
        levels
            .into_iter()
            .map(|v| SampledFunction::from_vec_unchecked(grid, v))
            .collect()
    }

    /// Errors when `Σ_k μ^k a^k_n` differs from `f_n` by more than `1e-9 · max(1, sup|f|)`.
    pub fn check_reconstruction(&self, m: &DyadicMartingale) -> Result<()> {
        let grid = m.grid();
        let scale = m.terminal().sup_abs().max(1.0);
        for (n, (rec, f)) in self.reconstruct(grid).iter().zip(m.levels()).enumerate() {
            for (index, (a, b)) in rec.values().iter().zip(f.values()).enumerate() {
                let error = (a - b).abs();
                if !(error <= ATOM_TOL * scale) {
                    return Err(Error::Reconstruction {
                        level: n as u32,
                        index,
                        error,
                    });
                }
            }
        }
        Ok(())
    }

    /// `‖(Σ_k [μ^k 1_{B_{ν^k}} / ‖1_{B_{ν^k}}‖_φ]^r)^{1/r}‖_φ`.
    pub fn atomic_norm(&self) -> Result<f64> {
        let Some(first) = self.triples.first() else {
            return Ok(0.0);
        };
        let grid = first.atom.grid();
        let mut acc = vec![0.0_f64; grid.len()];
        for t in &self.triples {
            let c = (t.mu / t.indicator_norm).powf(self.r);
            for (a, &b) in acc.iter_mut().zip(&t.nu.finite_mask()) {
                if b {
                    *a += c;
                }
            }
        }
        let f = SampledFunction::from_vec_unchecked(
            grid,
            acc.into_iter().map(|v| v.powf(self.r.recip())).collect(),
        );
        luxemburg_norm(&self.phi, &f)
    }

    /// Lossless JSON export: `{kind, construction, r, phi, triples: [{k, mu, nu, atom_final}]}`.
    pub fn to_json_string(&self) -> String {
        let json = DecompositionJson {
            kind: self.kind,
            construction: self.construction,
            r: self.r,
            phi: self.phi.label().to_string(),
            triples: self
                .triples
                .iter()
                .map(|t| TripleJson {
                    k: t.k,
                    mu: t.mu,
                    indicator_norm: t.indicator_norm,
                    nu: t.nu.to_options(),
                    atom_final: t.atom.terminal().values().to_vec(),
                })
                .collect(),
        };
        serde_json::to_string(&json).expect("decomposition serialises")
    }

    /// Inverse of [`to_json_string`](Self::to_json_string); `phi` must match the exported label.
    pub fn from_json_str(text: &str, phi: &MusielakFunction) -> Result<Self> {
        let raw: DecompositionJson = serde_json::from_str(text)?;
        if raw.phi != phi.label() {
            return Err(Error::invalid(
                "phi",
                format!(
                    "decomposition was built for `{}`, not `{}`",
                    raw.phi,
                    phi.label()
                ),
            ));
        }
        let triples = raw
            .triples
            .into_iter()
            .map(|t| {
                let atom_final = SampledFunction::from_values(t.atom_final)?;
                let grid = atom_final.grid();
                let nu = validate_stopping_time(
                    grid,
                    t.nu.into_iter()
                        .map(|v| v.unwrap_or(TAU_INFINITY))
                        .collect(),
                )?;
                Ok(AtomTriple {
                    k: t.k,
                    mu: t.mu,
                    indicator_norm: t.indicator_norm,
                    atom: martingale_of(&atom_final, false),
                    nu,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kind: raw.kind,
            construction: raw.construction,
            r: raw.r,
            triples,
            phi: phi.clone(),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct TripleJson {
    k: i32,
    mu: f64,
    indicator_norm: f64,
    nu: Vec<Option<u32>>,
    atom_final: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DecompositionJson {
    kind: AtomKind,
    construction: Construction,
    r: f64,
    phi: String,
    triples: Vec<TripleJson>,
}

/// Which control drives [`davis_decompose`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DavisKind {
    /// `λ_n = S_n(f)`.
    S,
    /// `λ_n = 2 M_n(f)`, which dominates `|d_n f|`.
    M,
}

/// `f = h + g` with `h` collecting the compensated jumps where `λ_k > 2 λ_{k-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DavisPair {
    /// Big-jump part.
    pub h: DyadicMartingale,
    /// Remainder.
    pub g: DyadicMartingale,
    /// Control used for the split (`λ_0 = 0`).
    pub lambda: AdaptedProcess,
}

/// Davis decomposition of a centered martingale.
pub fn davis_decompose(m: &DyadicMartingale, kind: DavisKind) -> Result<DavisPair> {
    check_centered(m)?;
    let grid = m.grid();
    let mut lambda: Vec<SampledFunction> = match kind {
        DavisKind::S => variation_process(m, VariationKind::Square)
            .entries()
            .to_vec(),
        DavisKind::M => doob_maximal_process(m)
            .entries()
            .iter()
            .map(|e| e.scale(2.0))
            .collect(),
    };
    lambda[0] = SampledFunction::zeros(grid);
    let mut h_acc = vec![0.0_f64; grid.len()];
    let mut g_acc = vec![0.0_f64; grid.len()];
    let mut h_levels = vec![SampledFunction::zeros(grid)];
    let mut g_levels = vec![SampledFunction::zeros(grid)];
    for k in 1..=grid.resolution() {
        let d = m.difference(k).values();
        let (lk, lp) = (lambda[k as usize].values(), lambda[k as usize - 1].values());
        let big: Vec<f64> = (0..grid.len())
            .map(|i| if lk[i] > 2.0 * lp[i] { d[i] } else { 0.0 })
            .collect();
        let small: Vec<f64> = (0..grid.len()).map(|i| d[i] - big[i]).collect();
        let eb = cond_expect_values(grid, &big, k - 1);
        let es = cond_expect_values(grid, &small, k - 1);
        for i in 0..grid.len() {
            h_acc[i] += big[i] - eb[i];
            g_acc[i] += small[i] - es[i];
        }
        h_levels.push(SampledFunction::from_vec_unchecked(grid, h_acc.clone()));
        g_levels.push(SampledFunction::from_vec_unchecked(grid, g_acc.clone()));
    }
    Ok(DavisPair {
        h: DyadicMartingale::from_levels_unchecked(grid, h_levels),
        g: DyadicMartingale::from_levels_unchecked(grid, g_levels),
        lambda: AdaptedProcess::from_entries_unchecked(grid, lambda),
    })
}

/// Slacks of the two pointwise Davis inequalities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DavisReport {
    /// `max_n max_x |f_n - h_n - g_n|`.
    pub split_error: f64,
    /// `min` of `2λ_n + 2Σ_{k<=n} E_{k-1}(λ_k - λ_{k-1}) - Σ_{k<=n} |d_k h|`.
    pub jump_slack: f64,
    /// `min` of `4λ_{k-1} - |d_k g|`.
    pub remainder_slack: f64,
}

/// Evaluates the split error and the pointwise bounds of a [`DavisPair`].
pub fn davis_report(m: &DyadicMartingale, pair: &DavisPair) -> DavisReport {
    let grid = m.grid();
    let mut split_error = 0.0_f64;
    for n in 0..=grid.resolution() {
        let (f, h, g) = (
            m.level(n).values(),
            pair.h.level(n).values(),
            pair.g.level(n).values(),
        );
        for i in 0..grid.len() {
            split_error = split_error.max((f[i] - h[i] - g[i]).abs());
        }
    }
    let mut jump_slack = f64::INFINITY;
    let mut remainder_slack = f64::INFINITY;
    let mut dh_sum = vec![0.0_f64; grid.len()];
    let mut comp = vec![0.0_f64; grid.len()];
    for k in 1..=grid.resolution() {
        let (lk, lp) = (
            pair.lambda.entry(k).values(),
            pair.lambda.entry(k - 1).values(),
        );
        let inc: Vec<f64> = lk.iter().zip(lp).map(|(a, b)| a - b).collect();
        let e = cond_expect_values(grid, &inc, k - 1);
        let (dh, dg) = (pair.h.difference(k).values(), pair.g.difference(k).values());
        for i in 0..grid.len() {
            dh_sum[i] += dh[i].abs();
            comp[i] += e[i];
            jump_slack = jump_slack.min(2.0 * lk[i] + 2.0 * comp[i] - dh_sum[i]);
            remainder_slack = remainder_slack.min(4.0 * lp[i] - dg[i].abs());
        }
    }
    DavisReport {
        split_error,
        jump_slack,
        remainder_slack,
    }
}

/// Checks `A ∈ F_ν`, i.e. `A ∩ {ν <= n} ∈ F_n` for every `n`.
pub fn check_stopped_sigma_algebra(nu: &StoppingTimeMap, a_mask: &[bool]) -> Result<()> {
    let grid = nu.grid();
    if a_mask.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            found: a_mask.len(),
        });
    }
    for n in 0..=grid.resolution() {
        let v: Vec<f64> = (0..grid.len())
            .map(|i| if a_mask[i] && nu.at(i) <= n { 1.0 } else { 0.0 })
            .collect();
        if let Some(atom) = first_nonconstant_atom(grid, &v, n) {
            return Err(Error::NotMeasurable { level: n, atom });
        }
    }
    Ok(())
}

/// Verifies `T(a 1_A) = T(a) 1_A` for `T ∈ {S, s, M}` and `A ∈ F_ν`;
/// returns the largest pointwise discrepancy (the identity holds when it is at most `1e-12`).
pub fn atom_localization_check(
    kind: AtomKind,
    a: &DyadicMartingale,
    nu: &StoppingTimeMap,
    a_mask: &[bool],
) -> Result<f64> {
    check_stopped_sigma_algebra(nu, a_mask)?;
    let grid = a.grid();
    let ind = SampledFunction::indicator(grid, a_mask)?;
    let localized = martingale_of(&a.terminal().zip_with(&ind, |x, y| x * y)?, false);
    let lhs = kind.functional(&localized);
    let rhs = kind.functional(a).zip_with(&ind, |x, y| x * y)?;
    lhs.max_abs_diff(&rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sf(v: &[f64]) -> SampledFunction {
        SampledFunction::from_values(v.to_vec()).unwrap()
    }

    fn p2() -> MusielakFunction {
        MusielakFunction::power(2.0).unwrap()
    }

    fn r0() -> DyadicMartingale {
        martingale_of(&sf(&[1.0, 1.0, -1.0, -1.0]), true)
    }

    #[test]
    fn s_decomposition_of_r0() {
        let dec = s_atomic_decompose(&r0(), &p2()).unwrap();
        assert_eq!(dec.triples.len(), 1);
        let t = &dec.triples[0];
        assert_eq!(t.k, -1);
        assert!(t.nu.values().iter().all(|&v| v == 0));
        assert!((t.mu - 1.0).abs() < 1e-9);
        assert!(t.atom.terminal().max_abs_diff(r0().terminal()).unwrap() < 1e-9);
    }

    #[test]
    fn zero_martingale_gives_empty_decompositions() {
        let z = martingale_of(&SampledFunction::zeros(DyadicGrid::new(3).unwrap()), true);
        assert!(s_atomic_decompose(&z, &p2()).unwrap().triples.is_empty());
        assert!(pq_atomic_decompose(&z, &p2(), PqKind::P)
            .unwrap()
            .triples
            .is_empty());
        assert!(maximal_atomic_decompose(&z, &p2(), AtomKind::Maximal, 1.0)
            .unwrap()
            .triples
            .is_empty());
        assert_eq!(
            s_atomic_decompose(&z, &p2())
                .unwrap()
                .atomic_norm()
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn p_and_m_decompositions_of_r0() {
        let dec = pq_atomic_decompose(&r0(), &p2(), PqKind::P).unwrap();
        assert_eq!(dec.triples.len(), 1);
        assert!((dec.triples[0].mu - 1.5).abs() < 1e-9);
        let dec = maximal_atomic_decompose(&r0(), &p2(), AtomKind::Maximal, 1.0).unwrap();
        assert_eq!(
            dec.triples.iter().map(|t| t.k).collect::<Vec<_>>(),
            vec![-1]
        );
        assert!((dec.triples[0].mu - 1.5).abs() < 1e-9);
    }

    #[test]
    fn weighted_stopping_time_example() {
        let grid = DyadicGrid::new(2).unwrap();
        let gamma = AdaptedProcess::new(vec![
            SampledFunction::zeros(grid),
            sf(&[2.0, 2.0, 0.0, 0.0]),
            sf(&[1.0, 1.0, 3.0, 1.0]),
        ])
        .unwrap();
        let w = SampledFunction::constant(grid, 1.0);
        let tau = weighted_stopping_time(&gamma, &w, 1.5).unwrap();
        assert_eq!(tau.values(), &[0, 0, 0, 0]);
        assert!(stopping_measure_ratio(&tau, &gamma, &w, 1.5) <= 2.0 * 1.0);
        let zero = AdaptedProcess::new(vec![SampledFunction::zeros(grid); 3]).unwrap();
        let t = weighted_stopping_time(&zero, &w, 0.1).unwrap();
        assert!(t.values().iter().all(|&v| v == TAU_INFINITY));
        assert!(matches!(
            weighted_stopping_time(&zero, &w, 0.0),
            Err(Error::ThresholdTooSmall { .. })
        ));
    }

    #[test]
    fn validate_atom_examples() {
        let grid = DyadicGrid::new(2).unwrap();
        let nu0 = StoppingTimeMap::constant(grid, 0).unwrap();
        let z = martingale_of(&SampledFunction::zeros(grid), true);
        assert!(
            validate_atom(&z, &nu0, &p2(), AtomKind::Conditional)
                .unwrap()
                .pass
        );
        let rep = validate_atom(&r0(), &nu0, &p2(), AtomKind::Conditional).unwrap();
        assert!(rep.pass && rep.margin.abs() < 1e-9);
        let doubled = martingale_of(&sf(&[2.0, 2.0, -2.0, -2.0]), true);
        assert!(
            !validate_atom(&doubled, &nu0, &p2(), AtomKind::Conditional)
                .unwrap()
                .pass
        );
    }

    #[test]
    fn atomic_norm_single_triple() {
        let dec = s_atomic_decompose(&r0(), &p2()).unwrap();
        assert!((dec.atomic_norm().unwrap() - dec.triples[0].mu).abs() < 1e-9);
    }

    #[test]
    fn davis_examples() {
        for kind in [DavisKind::S, DavisKind::M] {
            let pair = davis_decompose(&r0(), kind).unwrap();
            assert_eq!(pair.h.terminal(), r0().terminal());
            assert!(pair.g.is_zero());
        }
        let z = martingale_of(&SampledFunction::zeros(DyadicGrid::new(2).unwrap()), true);
        let pair = davis_decompose(&z, DavisKind::S).unwrap();
        assert!(pair.h.is_zero() && pair.g.is_zero());
    }

    #[test]
    fn localization_examples() {
        let dec = s_atomic_decompose(
            &martingale_of(&sf(&[3.0, -1.0, 2.0, 0.0, 1.0, -4.0, 0.5, 2.0]), true),
            &p2(),
        )
        .unwrap();
        for t in &dec.triples {
            for kind in [AtomKind::Conditional, AtomKind::Square, AtomKind::Maximal] {
                let all = vec![true; 8];
                assert!(atom_localization_check(kind, &t.atom, &t.nu, &all).unwrap() <= 1e-12);
                let none = vec![false; 8];
                assert!(atom_localization_check(kind, &t.atom, &t.nu, &none).unwrap() <= 1e-12);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let m = martingale_of(&sf(&[3.0, -1.0, 2.0, 0.0, 1.0, -4.0, 0.5, 2.0]), true);
        let dec = s_atomic_decompose(&m, &p2()).unwrap();
        let back = AtomicDecomposition::from_json_str(&dec.to_json_string(), &p2()).unwrap();
        assert_eq!(back, dec);
    }
}
