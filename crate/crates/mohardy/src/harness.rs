//! Random martingale generators, inequality verification campaigns,
//! the five-space table, Fejér convergence tables, atom campaigns and
//! CSV/JSON report emission.
//!
//! Every trial draws from its own ChaCha stream derived from
//! `(seed, resolution, trial)`, so parallel and serial runs produce
//! byte-identical reports.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atoms::{
    maximal_atomic_decompose, pq_atomic_decompose, s_atomic_decompose, AtomKind,
    AtomicDecomposition, PqKind,
};
use crate::error::{Error, Result};
use crate::grid::{
    martingale_of, max_resolution, AdaptedProcess, DyadicGrid, DyadicMartingale, SampledFunction,
};
use crate::musielak::{
    check_s_condition, complementary, luxemburg_norm, power_rescale, q_phi, type_exponents, Family,
    MusielakFunction, TGrid, Weight, DEFAULT_K_MAX,
};
use crate::operators::{
    doob_maximal, dual_doob_sum, hardy_norms, martingale_transform, stein_sum, u_maximal,
    v_maximal, variation, vector_maximal, weak_type_value, HardyNormReport, VariationKind,
};
use crate::walsh::{fejer_mean, maximal_fejer, maximal_fejer_dyadic, partial_sum};

/// Clipping level of the heavy-tailed law.
pub const HEAVY_CLIP: f64 = 1e3;

/// Default ratio-stability limit across resolutions.
pub const DEFAULT_STABILITY: f64 = 4.0;

/// Tolerance added to classical ceilings.
pub const CEILING_TOL: f64 = 1e-6;

/// Leaf sampling law of the random generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Law {
    /// Uniform on `[-1, 1]`.
    Bounded,
    /// Standard normal.
    Gaussian,
    /// Student t with 3 degrees of freedom, clipped at `±1e3`.
    Heavy,
    /// One to three normal spikes on a zero background.
    Sparse,
}

impl FromStr for Law {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bounded" => Ok(Law::Bounded),
            "gaussian" => Ok(Law::Gaussian),
            "heavy" => Ok(Law::Heavy),
            "sparse" => Ok(Law::Sparse),
            other => Err(Error::UnknownLaw(other.to_string())),
        }
    }
}

/// The trial stream for `(seed, resolution, trial)`.
pub fn trial_rng(seed: u64, resolution: u32, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((resolution as u64) << 40) | trial as u64);
    rng
}

/// Leaf samples of the given law.
pub fn sample_function(law: Law, grid: DyadicGrid, rng: &mut impl Rng) -> SampledFunction {
    let v: Vec<f64> = match law {
        Law::Bounded => (0..grid.len())
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect(),
        Law::Gaussian => (0..grid.len())
            .map(|_| rng.sample(StandardNormal))
            .collect(),
        Law::Heavy => {
            let t = StudentT::new(3.0).expect("three degrees of freedom");
            (0..grid.len())
                .map(|_| rng.sample::<f64, _>(t).clamp(-HEAVY_CLIP, HEAVY_CLIP))
                .collect()
        }
        Law::Sparse => {
            let mut v = vec![0.0; grid.len()];
            let spikes = rng.random_range(1..=3usize);
            for _ in 0..spikes {
                let i = rng.random_range(0..grid.len());
                let z: f64 = rng.sample(StandardNormal);
                v[i] += z.signum() * (1.0 + z.abs());
            }
            v
        }
    };
    SampledFunction::from_vec_unchecked(grid, v)
}

/// `n` spikes of height 1 at distinct random leaves.
pub fn sparse_spikes(grid: DyadicGrid, n: usize, rng: &mut impl Rng) -> SampledFunction {
    let mut v = vec![0.0; grid.len()];
    let mut placed = 0;
    while placed < n.min(grid.len()) {
        let i = rng.random_range(0..grid.len());
        if v[i] == 0.0 {
            v[i] = 1.0;
            placed += 1;
        }
    }
    SampledFunction::from_vec_unchecked(grid, v)
}

/// Centered martingale `f_n = E_n f - E f` from iid leaf samples.
pub fn generate_martingale(law: Law, grid: DyadicGrid, seed: u64) -> DyadicMartingale {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    martingale_of(&sample_function(law, grid, &mut rng), true)
}

/// Random adapted multipliers with `v_n` uniform on `[-1, 1]` per `F_n` atom.
pub fn random_multipliers(grid: DyadicGrid, rng: &mut impl Rng) -> AdaptedProcess {
    let entries = (0..=grid.resolution())
        .map(|n| {
            let b = grid.block_len(n);
            let mut v = Vec::with_capacity(grid.len());
            for _ in 0..grid.len() / b {
                let x: f64 = rng.random_range(-1.0..=1.0);
                v.extend(std::iter::repeat_n(x, b));
            }
            SampledFunction::from_vec_unchecked(grid, v)
        })
        .collect();
    AdaptedProcess::from_entries_unchecked(grid, entries)
}

/// `count` nonnegative functions with iid `|N(0,1)|` leaves.
pub fn random_nonnegative_batch(
    grid: DyadicGrid,
    count: usize,
    rng: &mut impl Rng,
) -> Vec<SampledFunction> {
    (0..count)
        .map(|_| {
            let v = (0..grid.len())
                .map(|_| rng.sample::<f64, _>(StandardNormal).abs())
                .collect();
            SampledFunction::from_vec_unchecked(grid, v)
        })
        .collect()
}

/// A weight with leaf values `2^U`, `U` uniform on `[-1, 1]`; its A_q and 𝕊 constants are at most 4.
pub fn random_weight(grid: DyadicGrid, rng: &mut impl Rng) -> SampledFunction {
    let v = (0..grid.len())
        .map(|_| 2f64.powf(rng.random_range(-1.0..=1.0)))
        .collect();
    SampledFunction::from_vec_unchecked(grid, v)
}

/// The inequality a campaign verifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Inequality {
    /// `‖M f‖_φ <= C ‖f‖_φ`.
    Doob,
    /// `sup_ρ ρ ‖1_{Mf>ρ}‖_φ <= C ‖f‖_φ`.
    Weak,
    /// `‖Σ E_k g_k‖_φ <= C ‖Σ g_k‖_φ`.
    DualDoob,
    /// `‖(Σ (M f_j)^r)^{1/r}‖_φ <= C ‖(Σ |f_j|^r)^{1/r}‖_φ`.
    FeffermanStein,
    /// `‖(Σ (E_k g_k)^r)^{1/r}‖_φ <= C ‖(Σ g_k^r)^{1/r}‖_φ`.
    Stein,
    /// `‖s f‖_φ <= C ‖S f‖_φ`.
    #[serde(rename = "s-vs-S")]
    SVsS,
    /// Two-sided `‖M f‖_φ ≈ ‖S f‖_φ`.
    Bdg,
    /// Pairwise equivalence of `H^M, H^S, H^s, P, Q`.
    FiveSpace,
    /// `‖𝒯 f‖_{H^M} <= C ‖f‖_{H^M}`.
    Transform,
    /// `sup_n ‖s_n f‖_φ <= C ‖f‖_φ`.
    PartialSum,
    /// `‖σ_* f‖_φ <= C ‖f‖_{H^M}`.
    MaximalFejer,
    /// `‖sup_n |σ_{2^n} f|‖_φ <= C ‖f‖_{H^M}`.
    MaximalFejerDyadic,
    /// `‖U f‖_p + ‖V f‖_p <= C ‖f‖_p`.
    UvMaximal,
}

impl Inequality {
    /// All campaign names.
    pub const ALL: [Inequality; 13] = [
        Inequality::Doob,
        Inequality::Weak,
        Inequality::DualDoob,
        Inequality::FeffermanStein,
        Inequality::Stein,
        Inequality::SVsS,
        Inequality::Bdg,
        Inequality::FiveSpace,
        Inequality::Transform,
        Inequality::PartialSum,
        Inequality::MaximalFejer,
        Inequality::MaximalFejerDyadic,
        Inequality::UvMaximal,
    ];

    /// CLI name.
    pub fn name(self) -> &'static str {
        match self {
            Inequality::Doob => "doob",
            Inequality::Weak => "weak",
            Inequality::DualDoob => "dual-doob",
            Inequality::FeffermanStein => "fefferman-stein",
            Inequality::Stein => "stein",
            Inequality::SVsS => "s-vs-S",
            Inequality::Bdg => "bdg",
            Inequality::FiveSpace => "five-space",
            Inequality::Transform => "transform",
            Inequality::PartialSum => "partial-sum",
            Inequality::MaximalFejer => "maximal-fejer",
            Inequality::MaximalFejerDyadic => "maximal-fejer-dyadic",
            Inequality::UvMaximal => "uv-maximal",
        }
    }
}

impl FromStr for Inequality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Inequality::ALL
            .into_iter()
            .find(|i| i.name() == s)
            .ok_or_else(|| Error::UnknownInequality(s.to_string()))
    }
}

/// Campaign configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Inequality to verify.
    pub inequality: Inequality,
    /// φ-spec (see [`crate::musielak::builtin`]).
    pub phi_spec: String,
    /// Grid resolutions.
    pub resolutions: Vec<u32>,
    /// Trials per resolution.
    pub trials: usize,
    /// Base seed.
    pub seed: u64,
    /// Exponent for Stein, Fefferman-Stein and U/V (default 2, 2 and 0.75).
    pub r: Option<f64>,
    /// Leaf law.
    pub law: Law,
    /// Annotate instead of rejecting when hypotheses fail.
    pub exploratory: bool,
    /// Allowed `max / min` of the per-resolution maximal ratios.
    pub stability: f64,
    /// Explicit ceiling; classical constants are used when `None`.
    pub ceiling: Option<f64>,
}

impl ExperimentConfig {
    /// A strict-mode configuration with gaussian leaves and the default stability limit.
    pub fn new(
        inequality: Inequality,
        phi_spec: &str,
        resolutions: Vec<u32>,
        trials: usize,
        seed: u64,
    ) -> Self {
        Self {
            inequality,
            phi_spec: phi_spec.to_string(),
            resolutions,
            trials,
            seed,
            r: None,
            law: Law::Gaussian,
            exploratory: false,
            stability: DEFAULT_STABILITY,
            ceiling: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials", "at least one trial required"));
        }
        if self.resolutions.is_empty() {
            return Err(Error::invalid(
                "resolutions",
                "at least one resolution required",
            ));
        }
        let cap = max_resolution();
        for &n in &self.resolutions {
            if n == 0 || n > cap {
                return Err(Error::ResolutionTooLarge { requested: n, cap });
            }
        }
        if !(self.stability >= 1.0) {
            return Err(Error::invalid("stability", "must be at least 1"));
        }
        Ok(())
    }
}

/// One checked hypothesis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    /// Short name.
    pub name: String,
    /// Measured value, if any.
    pub value: Option<f64>,
    /// Outcome.
    pub pass: bool,
    /// Human-readable detail.
    pub detail: String,
}

/// All hypotheses of one inequality for one `φ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    /// Resolution the samples were taken on.
    pub resolution: u32,
    /// Individual checks.
    pub checks: Vec<HypothesisCheck>,
    /// Conjunction of the checks.
    pub pass: bool,
}

struct Hyp {
    checks: Vec<HypothesisCheck>,
}

impl Hyp {
    fn push(&mut self, name: &str, value: Option<f64>, pass: bool, detail: impl Into<String>) {
        self.checks.push(HypothesisCheck {
            name: name.to_string(),
            value,
            pass,
            detail: detail.into(),
        });
    }
}

fn power_exponent(phi: &MusielakFunction) -> Option<f64> {
    match phi.family() {
        Family::Power {
            p,
            coef: Weight::Constant(c),
        } if *c == 1.0 => Some(*p),
        _ => None,
    }
}

/// Evaluates the sampled hypotheses of `inequality` for `phi` on a grid of the given resolution.
pub fn evaluate_hypotheses(
    inequality: Inequality,
    phi: &MusielakFunction,
    resolution: u32,
) -> Result<HypothesisReport> {
    let grid = DyadicGrid::new(resolution)?;
    let tgrid = TGrid::default();
    let mut h = Hyp { checks: Vec::new() };
    let types = type_exponents(phi, &tgrid, grid)?;
    let q = q_phi(phi, &tgrid, grid, 1e-3, DEFAULT_K_MAX);
    let upper_finite = types.upper.is_some();
    let a_inf = |h: &mut Hyp| match &q {
        Ok(q) => h.push("a-infinity", Some(*q), true, format!("q(phi) = {q}")),
        Err(e) => h.push("a-infinity", None, false, e.to_string()),
    };
    let doob_condition = |h: &mut Hyp| {
        let pass = matches!(&q, Ok(q) if *q < types.lower) && upper_finite;
        h.push(
            "q(phi) < p- <= p+ < inf",
            Some(types.lower),
            pass,
            format!(
                "p- = {}, p+ = {:?}, q = {:?}",
                types.lower,
                types.upper,
                q.as_ref().ok()
            ),
        );
    };
    match inequality {
        Inequality::Doob
        | Inequality::Weak
        | Inequality::FeffermanStein
        | Inequality::Stein
        | Inequality::Transform
        | Inequality::PartialSum => {
            a_inf(&mut h);
            doob_condition(&mut h);
        }
        Inequality::DualDoob => {
            h.push(
                "p- >= 1",
                Some(types.lower),
                types.lower >= 1.0,
                format!("p- = {}", types.lower),
            );
            match complementary(phi, &tgrid, grid) {
                Ok(star) => {
                    let st = type_exponents(&star, &tgrid, grid)?;
                    let qs = q_phi(&star, &tgrid, grid, 1e-3, DEFAULT_K_MAX);
                    let pass = matches!(&qs, Ok(q) if *q < st.lower) && st.upper.is_some();
                    h.push(
                        "Doob bounded on L^phi*",
                        Some(st.lower),
                        pass,
                        format!(
                            "phi*: p- = {}, p+ = {:?}, q = {:?}",
                            st.lower,
                            st.upper,
                            qs.ok()
                        ),
                    );
                }
                Err(e) => h.push("Doob bounded on L^phi*", None, false, e.to_string()),
            }
        }
        Inequality::SVsS => {
            a_inf(&mut h);
            h.push(
                "p- >= 2",
                Some(types.lower),
                types.lower >= 2.0,
                format!("p- = {}", types.lower),
            );
        }
        Inequality::Bdg | Inequality::FiveSpace => {
            a_inf(&mut h);
            h.push(
                "finite upper type",
                types.upper,
                upper_finite,
                format!("p+ = {:?}", types.upper),
            );
            let s = check_s_condition(phi, &tgrid, grid)?;
            h.push(
                "S-minus condition",
                Some(s.k_minus),
                s.k_minus.is_finite(),
                format!("K- = {}", s.k_minus),
            );
        }
        Inequality::MaximalFejer | Inequality::MaximalFejerDyadic => {
            a_inf(&mut h);
            h.push(
                "p- > 1/2",
                Some(types.lower),
                types.lower > 0.5,
                format!("p- = {}", types.lower),
            );
            h.push(
                "finite upper type",
                types.upper,
                upper_finite,
                format!("p+ = {:?}", types.upper),
            );
        }
        Inequality::UvMaximal => {
            let p = power_exponent(phi);
            h.push(
                "phi = t^p with p > 1",
                p,
                matches!(p, Some(p) if p > 1.0),
                "U/V are checked on Lebesgue L^p",
            );
        }
    }
    let pass = h.checks.iter().all(|c| c.pass);
    Ok(HypothesisReport {
        resolution,
        checks: h.checks,
        pass,
    })
}

/// Aggregate for one resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolutionRow {
    /// Grid resolution.
    pub resolution: u32,
    /// Trials run.
    pub trials: usize,
    /// Trials whose denominator vanished.
    pub skipped: usize,
    /// Largest observed ratio.
    pub max_ratio: f64,
    /// Median observed ratio.
    pub median_ratio: f64,
    /// Smallest observed ratio.
    pub min_ratio: f64,
    /// Trial index of the largest ratio.
    pub worst_seed_index: usize,
    /// Ratio finite and within the ceiling.
    pub pass: bool,
}

/// Outcome of [`verify`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// Configuration that produced the report.
    pub config: ExperimentConfig,
    /// Hypothesis checks.
    pub hypotheses: HypothesisReport,
    /// Ceiling applied to the maximal ratio, if any.
    pub ceiling: Option<f64>,
    /// Per-resolution aggregates.
    pub rows: Vec<ResolutionRow>,
    /// `max / min` of the per-resolution maximal ratios.
    pub drift: f64,
    /// Overall verdict.
    pub pass: bool,
}

impl VerificationReport {
    /// CSV with columns `inequality,phi_spec,resolution,trials,max_ratio,median_ratio,worst_seed_index,pass`.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from(
            "inequality,phi_spec,resolution,trials,max_ratio,median_ratio,worst_seed_index,pass\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},\"{}\",{},{},{:?},{:?},{},{}",
                self.config.inequality.name(),
                self.config.phi_spec,
                r.resolution,
                r.trials,
                r.max_ratio,
                r.median_ratio,
                r.worst_seed_index,
                r.pass
            );
        }
        s
    }

    /// Pretty JSON including the hypothesis report.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

fn ratio(a: f64, b: f64) -> Option<f64> {
    (b > 0.0).then(|| a / b)
}

fn symmetric(a: f64, b: f64) -> Option<f64> {
    (a > 0.0 && b > 0.0).then(|| (a / b).max(b / a))
}

/// The deterministic order schedule of the partial-sum campaign on a grid of `len` leaves:
/// every `n <= 64`, `2^m ± 1`, and the alternating-bit orders.
pub fn partial_sum_schedule(len: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (1..=64.min(len)).collect();
    let mut m = 1usize;
    while m <= len {
        v.extend([m - 1, m, m + 1]);
        m *= 2;
    }
    let (mut a, mut b) = (0usize, 0usize);
    for k in 0..usize::BITS {
        if k % 2 == 0 {
            a |= 1 << k;
        } else {
            b |= 1 << k;
        }
        v.extend([a, b]);
        if (1usize << k) > len {
            break;
        }
    }
    v.retain(|&n| n >= 1 && n <= len);
    v.sort_unstable();
    v.dedup();
    v
}

struct TrialContext<'a> {
    phi: &'a MusielakFunction,
    r: f64,
    law: Law,
}

fn trial_ratio(
    ineq: Inequality,
    ctx: &TrialContext<'_>,
    grid: DyadicGrid,
    rng: &mut ChaCha8Rng,
) -> Result<Option<f64>> {
    let phi = ctx.phi;
    let norm = |f: &SampledFunction| luxemburg_norm(phi, f);
    let m = martingale_of(&sample_function(ctx.law, grid, rng), true);
    Ok(match ineq {
        Inequality::Doob => ratio(norm(&doob_maximal(&m, None)?)?, norm(m.terminal())?),
        Inequality::Weak => ratio(weak_type_value(&m, phi)?, norm(m.terminal())?),
        Inequality::DualDoob => {
            let gs = random_nonnegative_batch(grid, grid.resolution() as usize, rng);
            let (l, r) = dual_doob_sum(&gs, 1)?;
            ratio(norm(&l)?, norm(&r)?)
        }
        Inequality::FeffermanStein => {
            let fs: Vec<SampledFunction> = (0..8)
                .map(|_| sample_function(ctx.law, grid, rng))
                .collect();
            let (l, r) = vector_maximal(&fs, ctx.r)?;
            ratio(norm(&l)?, norm(&r)?)
        }
        Inequality::Stein => {
            let gs = random_nonnegative_batch(grid, grid.resolution() as usize, rng);
            let (l, r) = stein_sum(&gs, ctx.r, 1)?;
            ratio(norm(&l)?, norm(&r)?)
        }
        Inequality::SVsS => ratio(
            norm(&variation(&m, VariationKind::Conditional, None)?)?,
            norm(&variation(&m, VariationKind::Square, None)?)?,
        ),
        Inequality::Bdg => symmetric(
            norm(&doob_maximal(&m, None)?)?,
            norm(&variation(&m, VariationKind::Square, None)?)?,
        ),
        Inequality::FiveSpace => {
            let rep = five_space_report(&m, phi)?;
            rep.ratios
                .iter()
                .map(|r| r.ratio)
                .fold(None, |acc: Option<f64>, x| {
                    Some(acc.map_or(x, |a| a.max(x)))
                })
        }
        Inequality::Transform => {
            let v = random_multipliers(grid, rng);
            let t = martingale_transform(&m, &v)?;
            ratio(
                norm(&doob_maximal(&t, None)?)?,
                norm(&doob_maximal(&m, None)?)?,
            )
        }
        Inequality::PartialSum => {
            let f = m.terminal();
            let base = norm(f)?;
            if base == 0.0 {
                None
            } else {
                let mut best = 0.0_f64;
                for n in partial_sum_schedule(grid.len()) {
                    best = best.max(norm(&partial_sum(f, n))? / base);
                }
                Some(best)
            }
        }
        Inequality::MaximalFejer => ratio(
            norm(&maximal_fejer(m.terminal()))?,
            norm(&doob_maximal(&m, None)?)?,
        ),
        Inequality::MaximalFejerDyadic => ratio(
            norm(&maximal_fejer_dyadic(m.terminal()))?,
            norm(&doob_maximal(&m, None)?)?,
        ),
        Inequality::UvMaximal => {
            let f = m.terminal();
            let n = grid.resolution();
            let u = norm(&u_maximal(f, None, ctx.r, n)?)?;
            let v = norm(&v_maximal(f, None, ctx.r, n)?)?;
            let b = norm(f)?;
            ratio(u.max(v), b)
        }
    })
}

fn default_r(ineq: Inequality) -> f64 {
    match ineq {
        Inequality::UvMaximal => 0.75,
        _ => 2.0,
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Runs a verification campaign.
///
/// In strict mode (the default) failing hypotheses abort with
/// [`Error::Hypothesis`] carrying the JSON hypothesis report; in exploratory
/// mode the campaign runs and the report is attached.
pub fn verify(config: &ExperimentConfig) -> Result<VerificationReport> {
    config.validate()?;
    let phi = crate::musielak::builtin(&config.phi_spec)?;
    let check_res = config
        .resolutions
        .iter()
        .copied()
        .max()
        .unwrap_or(1)
        .min(10);
    let hypotheses = evaluate_hypotheses(config.inequality, &phi, check_res)?;
    if !hypotheses.pass && !config.exploratory {
        return Err(Error::Hypothesis(
            serde_json::to_string(&hypotheses).expect("hypothesis report serialises"),
        ));
    }
    let r = config.r.unwrap_or_else(|| default_r(config.inequality));
    let ceiling = config
        .ceiling
        .or_else(|| match (config.inequality, power_exponent(&phi)) {
            (Inequality::Doob, Some(p)) if p > 1.0 => Some(p / (p - 1.0)),
            _ => None,
        });
    let ctx = TrialContext {
        phi: &phi,
        r,
        law: config.law,
    };
    let mut rows = Vec::with_capacity(config.resolutions.len());
    for &res in &config.resolutions {
        let grid = DyadicGrid::new(res)?;
        let outcomes: Vec<Option<f64>> = (0..config.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(config.seed, res, t);
                trial_ratio(config.inequality, &ctx, grid, &mut rng).map_err(|e| {
                    Error::TrialFailed {
                        trial: t,
                        seed: config.seed,
                        resolution: res,
                        source: Box::new(e),
                    }
                })
            })
            .collect::<Result<_>>()?;
        let mut ratios: Vec<f64> = outcomes.iter().flatten().copied().collect();
        let skipped = config.trials - ratios.len();
        let (worst_seed_index, max_ratio) = outcomes
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.map(|r| (i, r)))
            .fold((0, f64::NEG_INFINITY), |acc, (i, r)| {
                if r > acc.1 || r.is_nan() {
                    (i, r)
                } else {
                    acc
                }
            });
        ratios.sort_by(f64::total_cmp);
        let min_ratio = ratios.first().copied().unwrap_or(f64::NAN);
        let within = match ceiling {
            Some(c) => max_ratio <= c + CEILING_TOL,
            None => true,
        };
        rows.push(ResolutionRow {
            resolution: res,
            trials: config.trials,
            skipped,
            max_ratio,
            median_ratio: median(&ratios),
            min_ratio,
            worst_seed_index,
            pass: !ratios.is_empty() && max_ratio.is_finite() && within,
        });
    }
    let maxima: Vec<f64> = rows.iter().map(|r| r.max_ratio).collect();
    let hi = maxima.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = maxima.iter().copied().fold(f64::INFINITY, f64::min);
    let drift = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    let pass = rows.iter().all(|r| r.pass) && drift <= config.stability && hypotheses.pass;
    Ok(VerificationReport {
        config: config.clone(),
        hypotheses,
        ceiling,
        rows,
        drift,
        pass,
    })
}

/// One pairwise ratio of the five-space table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRatio {
    /// Numerator space.
    pub left: String,
    /// Denominator space.
    pub right: String,
    /// `max(a/b, b/a)`.
    pub ratio: f64,
}

/// Norms and the ten pairwise symmetric ratios among `H^M, H^S, H^s, P, Q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiveSpaceReport {
    /// All norms.
    pub norms: HardyNormReport,
    /// Pairwise ratios (empty when all norms vanish).
    pub ratios: Vec<PairRatio>,
}

/// The five-space equivalence table of one martingale.
pub fn five_space_report(m: &DyadicMartingale, phi: &MusielakFunction) -> Result<FiveSpaceReport> {
    let norms = hardy_norms(m, phi)?;
    let named = [
        ("H^M", norms.h_max),
        ("H^S", norms.h_square),
        ("H^s", norms.h_cond),
        ("P", norms.p),
        ("Q", norms.q),
    ];
    let mut ratios = Vec::new();
    for i in 0..named.len() {
        for j in i + 1..named.len() {
            if let Some(r) = symmetric(named[i].1, named[j].1) {
                ratios.push(PairRatio {
                    left: named[i].0.into(),
                    right: named[j].0.into(),
                    ratio: r,
                });
            }
        }
    }
    Ok(FiveSpaceReport { norms, ratios })
}

/// One entry of a Fejér convergence table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FejerRow {
    /// Order `n`.
    pub n: usize,
    /// `‖σ_n f - f‖_φ`.
    pub sigma_error: f64,
    /// `‖s_n f - f‖_φ`.
    pub partial_error: f64,
}

/// Order used as the analytic limit entry of [`fejer_convergence`].
pub const LIMIT_ORDER: usize = 1 << 60;

/// Errors of `σ_n f` and `s_n f` against `f` along a sorted schedule, followed by the
/// limit entry at `n = 2^60`.
pub fn fejer_convergence(
    f: &SampledFunction,
    phi: &MusielakFunction,
    schedule: &[usize],
) -> Result<Vec<FejerRow>> {
    if schedule.windows(2).any(|w| w[0] > w[1]) || schedule.contains(&0) {
        return Err(Error::invalid("schedule", "must be sorted and positive"));
    }
    let mut rows = Vec::with_capacity(schedule.len() + 1);
    for &n in schedule.iter().chain(std::iter::once(&LIMIT_ORDER)) {
        let sigma = fejer_mean(f, n)?;
        let s = partial_sum(f, n);
        rows.push(FejerRow {
            n,
            sigma_error: luxemburg_norm(phi, &sigma.zip_with(f, |a, b| a - b)?)?,
            partial_error: luxemburg_norm(phi, &s.zip_with(f, |a, b| a - b)?)?,
        });
    }
    Ok(rows)
}

/// Which decomposition an atom campaign runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CampaignKind {
    /// Conditional square-function atoms.
    #[serde(rename = "s")]
    S,
    /// Envelope of `|f_n|`.
    P,
    /// Envelope of `S_n(f)`.
    Q,
    /// Weighted stopping times over `|f_n|`.
    M,
    /// Weighted stopping times over `S_n(f)`.
    #[serde(rename = "S")]
    Square,
}

impl FromStr for CampaignKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "s" => Ok(CampaignKind::S),
            "S" => Ok(CampaignKind::Square),
            "M" => Ok(CampaignKind::M),
            "P" => Ok(CampaignKind::P),
            "Q" => Ok(CampaignKind::Q),
            other => Err(Error::invalid(
                "kind",
                format!("unknown decomposition kind `{other}`"),
            )),
        }
    }
}

/// Builds the decomposition of the requested kind.
pub fn decompose(
    m: &DyadicMartingale,
    phi: &MusielakFunction,
    kind: CampaignKind,
    t_star: f64,
) -> Result<AtomicDecomposition> {
    match kind {
        CampaignKind::S => s_atomic_decompose(m, phi),
        CampaignKind::P => pq_atomic_decompose(m, phi, PqKind::P),
        CampaignKind::Q => pq_atomic_decompose(m, phi, PqKind::Q),
        CampaignKind::M => maximal_atomic_decompose(m, phi, AtomKind::Maximal, t_star),
        CampaignKind::Square => maximal_atomic_decompose(m, phi, AtomKind::Square, t_star),
    }
}

/// Atom campaign configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomCampaignConfig {
    /// Decomposition kind.
    pub kind: CampaignKind,
    /// Resolution.
    pub resolution: u32,
    /// Number of random martingales.
    pub trials: usize,
    /// Base seed.
    pub seed: u64,
    /// Aggregation exponent in `(0, 1]`.
    pub r: f64,
    /// Weight parameter of the weighted constructions.
    pub t_star: f64,
    /// Leaf law.
    pub law: Law,
}

/// Aggregates of an atom campaign.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomCampaignReport {
    /// Configuration.
    pub config: AtomCampaignConfig,
    /// Trials whose martingale vanished.
    pub skipped: usize,
    /// Total atoms validated.
    pub atoms: usize,
    /// Smallest `atomic_norm / direct norm`.
    pub min_norm_ratio: f64,
    /// Largest `atomic_norm / direct norm`.
    pub max_norm_ratio: f64,
    /// Largest ratio of the aggregated maximal-Fejér-on-atoms quantity (kind M only).
    pub max_fejer_atom_ratio: Option<f64>,
}

fn direct_norm(kind: CampaignKind, norms: &HardyNormReport) -> f64 {
    match kind {
        CampaignKind::S => norms.h_cond,
        CampaignKind::P => norms.p,
        CampaignKind::Q => norms.q,
        CampaignKind::M => norms.h_max,
        CampaignKind::Square => norms.h_square,
    }
}

/// `‖Σ_k (μ^k)^r [σ_* a^k]^r 1_{ν^k=∞}‖_{φ_{1/r}} / ‖Σ_k 2^{kr} 1_{ν^k<∞}‖_{φ_{1/r}}`.
pub fn fejer_atom_ratio(
    dec: &AtomicDecomposition,
    phi: &MusielakFunction,
    r: f64,
) -> Result<Option<f64>> {
    let Some(first) = dec.triples.first() else {
        return Ok(None);
    };
    let grid = first.atom.grid();
    let phi_r = power_rescale(phi, r.recip())?;
    let mut lhs = vec![0.0_f64; grid.len()];
    let mut rhs = vec![0.0_f64; grid.len()];
    for t in &dec.triples {
        let sigma = maximal_fejer(t.atom.terminal());
        let c = 2f64.powf(t.k as f64 * r);
        for i in 0..grid.len() {
            if t.nu.at(i) == crate::grid::TAU_INFINITY {
                lhs[i] += (t.mu * sigma.values()[i]).powf(r);
            } else {
                rhs[i] += c;
            }
        }
    }
    let l = luxemburg_norm(&phi_r, &SampledFunction::from_vec_unchecked(grid, lhs))?;
    let b = luxemburg_norm(&phi_r, &SampledFunction::from_vec_unchecked(grid, rhs))?;
    Ok(ratio(l, b))
}

/// Decomposes `trials` random martingales, validating every atom and the
/// reconstruction; the first failure aborts with its fingerprint.
pub fn atom_campaign(
    config: &AtomCampaignConfig,
    phi: &MusielakFunction,
) -> Result<AtomCampaignReport> {
    let grid = DyadicGrid::new(config.resolution)?;
    if !(config.r > 0.0 && config.r <= 1.0) {
        return Err(Error::invalid("r", "must lie in (0, 1]"));
    }
    type Trial = Option<(usize, f64, Option<f64>)>;
    let outcomes: Vec<Trial> = (0..config.trials)
        .into_par_iter()
        .map(|t| -> Result<Trial> {
            let run = || -> Result<Trial> {
                let mut rng = trial_rng(config.seed, config.resolution, t);
                let m = martingale_of(&sample_function(config.law, grid, &mut rng), true);
                if m.is_zero() {
                    return Ok(None);
                }
                let dec = decompose(&m, phi, config.kind, config.t_star)?.with_r(config.r)?;
                let direct = direct_norm(config.kind, &hardy_norms(&m, phi)?);
                let fejer = if config.kind == CampaignKind::M {
                    fejer_atom_ratio(&dec, phi, config.r)?
                } else {
                    None
                };
                Ok(Some((
                    dec.triples.len(),
                    dec.atomic_norm()? / direct,
                    fejer,
                )))
            };
            run().map_err(|e| Error::TrialFailed {
                trial: t,
                seed: config.seed,
                resolution: config.resolution,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let mut report = AtomCampaignReport {
        config: config.clone(),
        skipped: 0,
        atoms: 0,
        min_norm_ratio: f64::INFINITY,
        max_norm_ratio: 0.0,
        max_fejer_atom_ratio: None,
    };
    for o in outcomes {
        match o {
            None => report.skipped += 1,
            Some((atoms, ratio, fejer)) => {
                report.atoms += atoms;
                report.min_norm_ratio = report.min_norm_ratio.min(ratio);
                report.max_norm_ratio = report.max_norm_ratio.max(ratio);
                if let Some(f) = fejer {
                    report.max_fejer_atom_ratio =
                        Some(report.max_fejer_atom_ratio.map_or(f, |g: f64| g.max(f)));
                }
            }
        }
    }
    Ok(report)
}
