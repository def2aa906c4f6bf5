//! Musielak-Orlicz functions, modulars, Luxemburg norms and the sampled
//! checkers for uniform type, the A_q condition and the 𝕊 condition.
//!
//! Every `t`-quantifier is sampled on a [`TGrid`]; reported constants are
//! certificates for the sample, not proofs.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::{block_means, expand, DyadicGrid, SampledFunction};

/// Relative tolerance of the Luxemburg bisection.
pub const LUXEMBURG_REL_TOL: f64 = 1e-10;

/// Iteration budget of the Luxemburg bisection (bracketing plus bisection).
pub const LUXEMBURG_MAX_ITER: usize = 200;

/// Number of points of the Legendre u-grid.
pub const LEGENDRE_POINTS: usize = 512;

/// Number of points of the s-grid used by the uniform-type check.
pub const S_POINTS: usize = 64;

/// Default pass threshold for [`q_phi`].
pub const DEFAULT_K_MAX: f64 = 1e6;

/// Margin used for exponents that the families only attain up to an arbitrary epsilon.
pub const TYPE_EPS: f64 = 0.05;

/// Log-spaced evaluation abscissae `t_1 < … < t_M`.
#[derive(Clone, Debug, PartialEq)]
pub struct TGrid {
    points: Vec<f64>,
}

impl TGrid {
    /// `m` log-spaced points on `[t_min, t_max]`; needs `t_min > 0`,
    /// `t_max / t_min >= 1e6` and `m >= 64`.
    pub fn new(t_min: f64, t_max: f64, m: usize) -> Result<Self> {
        if !(t_min > 0.0 && t_min.is_finite()) {
            return Err(Error::invalid("t_min", "must be positive and finite"));
        }
        if !(t_max.is_finite() && t_max / t_min >= 1e6 * (1.0 - 1e-12)) {
            return Err(Error::invalid(
                "t_max",
                "ratio t_max/t_min must be at least 1e6",
            ));
        }
        if m < 64 {
            return Err(Error::invalid("m", "at least 64 points required"));
        }
        Ok(Self {
            points: log_space(t_min, t_max, m),
        })
    }

    /// The abscissae.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Smallest abscissa.
    pub fn t_min(&self) -> f64 {
        self.points[0]
    }

    /// Largest abscissa.
    pub fn t_max(&self) -> f64 {
        self.points[self.points.len() - 1]
    }
}

impl Default for TGrid {
    /// 128 points on `[1e-6, 1e6]`.
    fn default() -> Self {
        Self::new(1e-6, 1e6, 128).expect("default grid satisfies its invariants")
    }
}

fn log_space(a: f64, b: f64, m: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..m)
        .map(|k| {
            if k == 0 {
                a
            } else if k + 1 == m {
                b
            } else {
                (la + (lb - la) * k as f64 / (m - 1) as f64).exp()
            }
        })
        .collect()
}

/// An `x`-dependent coefficient, constant or sampled on leaves.
#[derive(Clone, Debug, PartialEq)]
pub enum Weight {
    /// The same value for every `x`.
    Constant(f64),
    /// A leaf-sampled function evaluated at the leaf containing `x`.
    Sampled(SampledFunction),
}

impl Weight {
    /// Value at `x ∈ [0,1)`.
    pub fn at(&self, x: f64) -> f64 {
        match self {
            Weight::Constant(c) => *c,
            Weight::Sampled(w) => w.values()[leaf_at(x, w.len())],
        }
    }

    fn min_value(&self) -> f64 {
        match self {
            Weight::Constant(c) => *c,
            Weight::Sampled(w) => w.values().iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Weight {
        match self {
            Weight::Constant(c) => Weight::Constant(f(*c)),
            Weight::Sampled(w) => Weight::Sampled(w.map(f)),
        }
    }

    fn is_constant(&self) -> bool {
        matches!(self, Weight::Constant(_))
    }
}

fn leaf_at(x: f64, len: usize) -> usize {
    ((x * len as f64) as usize).min(len - 1)
}

/// The catalogued families.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// `c(x) t^p`.
    Power { p: f64, coef: Weight },
    /// `e^t - t - 1`.
    OrliczExp,
    /// `t^α (1 + |log t|)`.
    LogLow { alpha: f64 },
    /// `t^α (1 + log(1+t))`.
    LogGrow { alpha: f64 },
    /// `t^α / log(e+t)`.
    LogDamp { alpha: f64 },
    /// `t^p + w(x) t^q`.
    DoublePhase { p: f64, q: f64, w: Weight },
    /// `t^{p(x)}`.
    VarExp { p: SampledFunction },
    /// `t^α / ((log(e+x))^β + (log(e+t))^γ)`.
    XLog { alpha: f64, beta: f64, gamma: f64 },
    /// Piecewise linear through `(0,0)` and the table, extended with the last slope.
    Tabulated { t: Vec<f64>, phi: Vec<f64> },
    /// `0` for `t <= c(x)`, `+∞` beyond; the complementary function of `c(x) t`.
    Indicator { coef: Weight },
    /// `φ(x, t^r)`.
    Rescaled {
        inner: Box<MusielakFunction>,
        r: f64,
    },
    /// `sup_u [u t - φ(x,u)]` over a log-spaced u-grid.
    Legendre {
        inner: Box<MusielakFunction>,
        u: Vec<f64>,
    },
}

/// Uniform lower and upper type exponents; `upper = None` means no upper type.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TypeExponents {
    /// Lower type exponent `p⁻`.
    pub lower: f64,
    /// Upper type exponent `p⁺`, if any.
    pub upper: Option<f64>,
}

/// A Musielak-Orlicz function `φ(x,t)` with its family metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct MusielakFunction {
    family: Family,
    label: String,
}

impl MusielakFunction {
    /// Wraps a family; `label` is used in reports.
    pub fn new(family: Family, label: impl Into<String>) -> Self {
        Self {
            family,
            label: label.into(),
        }
    }

    /// `t^p`.
    pub fn power(p: f64) -> Result<Self> {
        Self::scaled_power(p, 1.0)
    }

    /// `c t^p`.
    pub fn scaled_power(p: f64, c: f64) -> Result<Self> {
        positive("p", p)?;
        positive("c", c)?;
        let label = if c == 1.0 {
            format!("power:p={p}")
        } else {
            format!("{c}*t^{p}")
        };
        Ok(Self::new(
            Family::Power {
                p,
                coef: Weight::Constant(c),
            },
            label,
        ))
    }

    /// `w(x) t^p` with a strictly positive weight.
    pub fn weighted_power(p: f64, w: SampledFunction) -> Result<Self> {
        positive("p", p)?;
        check_positive_weight(&w)?;
        Ok(Self::new(
            Family::Power {
                p,
                coef: Weight::Sampled(w),
            },
            format!("wpower:p={p},w=<sampled>"),
        ))
    }

    /// `t^p + w(x) t^q` with `0 < p <= q` and `w >= 0`.
    pub fn double_phase(p: f64, q: f64, w: Weight) -> Result<Self> {
        positive("p", p)?;
        if !(q >= p && q.is_finite()) {
            return Err(Error::invalid("q", "must satisfy q >= p"));
        }
        if w.min_value() < 0.0 {
            return Err(Error::invalid("w", "must be nonnegative"));
        }
        Ok(Self::new(
            Family::DoublePhase { p, q, w },
            format!("double-phase:p={p},q={q}"),
        ))
    }

    /// Piecewise-linear Orlicz function through `(0,0)` and the given table.
    pub fn tabulated(t: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if t.is_empty() || t.len() != phi.len() {
            return Err(Error::invalid("table", "needs matching nonempty columns"));
        }
        let mut prev = (0.0, 0.0);
        for (&a, &b) in t.iter().zip(&phi) {
            if !(a > prev.0 && b >= prev.1 && b.is_finite()) {
                return Err(Error::invalid(
                    "table",
                    "t must increase strictly from 0 and phi must be nondecreasing",
                ));
            }
            prev = (a, b);
        }
        if prev.1 <= 0.0 {
            return Err(Error::invalid("table", "phi must become positive"));
        }
        Ok(Self::new(Family::Tabulated { t, phi }, "tabulated"))
    }

    /// The family.
    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Report label (the φ-spec when parsed from one).
    pub fn label(&self) -> &str {
        &self.label
    }

    /// `φ(x,t)`; zero for `t <= 0`.
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match &self.family {
            Family::Power { p, coef } => coef.at(x) * t.powf(*p),
            Family::OrliczExp => {
                if t < 1e-3 {
                    let t2 = t * t;
                    t2 * (0.5 + t * (1.0 / 6.0 + t / 24.0))
                } else {
                    t.exp_m1() - t
                }
            }
            Family::LogLow { alpha } => t.powf(*alpha) * (1.0 + t.ln().abs()),
            Family::LogGrow { alpha } => t.powf(*alpha) * (1.0 + t.ln_1p()),
            Family::LogDamp { alpha } => t.powf(*alpha) / (std::f64::consts::E + t).ln(),
            Family::DoublePhase { p, q, w } => t.powf(*p) + w.at(x) * t.powf(*q),
            Family::VarExp { p } => t.powf(p.values()[leaf_at(x, p.len())]),
            Family::XLog { alpha, beta, gamma } => {
                let e = std::f64::consts::E;
                t.powf(*alpha) / ((e + x).ln().powf(*beta) + (e + t).ln().powf(*gamma))
            }
            Family::Tabulated { t: ts, phi } => tabulated_eval(ts, phi, t),
            Family::Indicator { coef } => {
                if t <= coef.at(x) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Family::Rescaled { inner, r } => inner.eval(x, t.powf(*r)),
            Family::Legendre { inner, u } => legendre_eval(inner, u, x, t).0,
        }
    }

    /// Nominal type exponents of the family, when known analytically.
    pub fn nominal_types(&self) -> Option<TypeExponents> {
        let t = |lower: f64, upper: Option<f64>| Some(TypeExponents { lower, upper });
        match &self.family {
            Family::Power { p, .. } => t(*p, Some(*p)),
            Family::OrliczExp => t(2.0, None),
            Family::LogLow { alpha } => t(alpha - TYPE_EPS, Some(alpha + TYPE_EPS)),
            Family::LogGrow { alpha } => t(*alpha, Some(alpha + TYPE_EPS)),
            Family::LogDamp { alpha } => t(alpha - TYPE_EPS, Some(*alpha)),
            Family::DoublePhase { p, q, w } => {
                if w.min_value() == 0.0 && w.is_constant() {
                    t(*p, Some(*p))
                } else {
                    t(*p, Some(*q))
                }
            }
            Family::VarExp { p } => {
                let lo = p.values().iter().copied().fold(f64::INFINITY, f64::min);
                let hi = p.values().iter().copied().fold(0.0, f64::max);
                t(lo, Some(hi))
            }
            Family::XLog { alpha, .. } => t(alpha - TYPE_EPS, Some(*alpha)),
            Family::Tabulated { .. } => None,
            Family::Indicator { .. } => None,
            Family::Rescaled { inner, r } => inner.nominal_types().map(|e| TypeExponents {
                lower: e.lower * r,
                upper: e.upper.map(|u| u * r),
            }),
            Family::Legendre { inner, .. } => inner.nominal_types().and_then(|e| {
                let lower = e.upper.filter(|&u| u > 1.0).map(conjugate)?;
                let upper = (e.lower > 1.0).then(|| conjugate(e.lower));
                Some(TypeExponents { lower, upper })
            }),
        }
    }

    /// True when `φ(x,t)` does not depend on `x`.
    pub fn is_x_independent(&self) -> bool {
        match &self.family {
            Family::Power { coef, .. } | Family::Indicator { coef } => coef.is_constant(),
            Family::DoublePhase { w, .. } => w.is_constant(),
            Family::VarExp { p } => p.values().iter().all(|&v| v == p.values()[0]),
            Family::XLog { beta, .. } => *beta == 0.0,
            Family::Rescaled { inner, .. } | Family::Legendre { inner, .. } => {
                inner.is_x_independent()
            }
            _ => true,
        }
    }

    /// Checks `φ(x,0) = 0`, nonnegativity, monotonicity and growth on the sample.
    pub fn check_invariants(&self, tgrid: &TGrid, grid: DyadicGrid) -> Result<()> {
        for i in 0..grid.len() {
            let x = grid.midpoint(i);
            if self.eval(x, 0.0) != 0.0 {
                return Err(Error::FamilyDefect(format!("phi(x,0) != 0 at leaf {i}")));
            }
            let mut prev = 0.0;
            for &t in tgrid.points() {
                let v = self.eval(x, t);
                if v.is_nan() || v < 0.0 {
                    return Err(Error::FamilyDefect(format!("phi({x},{t}) = {v}")));
                }
                if v < prev * (1.0 - 1e-12) {
                    return Err(Error::FamilyDefect(format!(
                        "phi(x,.) decreases near t = {t} at leaf {i}"
                    )));
                }
                prev = v;
            }
            if !(self.eval(x, tgrid.t_max()) > self.eval(x, tgrid.t_min())) {
                return Err(Error::FamilyDefect(format!(
                    "phi(x,.) does not grow at leaf {i}"
                )));
            }
        }
        Ok(())
    }
}

fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, "must be positive and finite"))
    }
}

fn check_positive_weight(w: &SampledFunction) -> Result<()> {
    match w.values().iter().position(|&v| v <= 0.0) {
        Some(index) => Err(Error::NonPositiveWeight { index }),
        None => Ok(()),
    }
}

fn tabulated_eval(ts: &[f64], phi: &[f64], t: f64) -> f64 {
    let k = ts.partition_point(|&a| a < t);
    let n = ts.len();
    let (x0, y0, x1, y1) = if k == 0 {
        (0.0, 0.0, ts[0], phi[0])
    } else if k < n {
        (ts[k - 1], phi[k - 1], ts[k], phi[k])
    } else if n >= 2 {
        (ts[n - 2], phi[n - 2], ts[n - 1], phi[n - 1])
    } else {
        (0.0, 0.0, ts[0], phi[0])
    };
    y0 + (y1 - y0) * (t - x0) / (x1 - x0)
}

/// Returns the Legendre value and the index of the maximising u (None when `u = 0` wins).
fn legendre_eval(inner: &MusielakFunction, u: &[f64], x: f64, t: f64) -> (f64, Option<usize>) {
    let mut best = 0.0;
    let mut arg = None;
    for (k, &uk) in u.iter().enumerate() {
        let v = uk * t - inner.eval(x, uk);
        if v > best {
            best = v;
            arg = Some(k);
        }
    }
    (best, arg)
}

/// Parses a φ-spec: `family ":" key "=" value {"," key "=" value}`.
///
/// Families: `power(p)`, `wpower(p, w)`, `orlicz-exp`, `loglow(alpha)`,
/// `loggrow(alpha)`, `logdamp(alpha)`, `double-phase(p, q, w)`, `varexp(pfile)`,
/// `xlog(alpha, beta, gamma)` and `tabulated(file)`. Weights are `one`, `zero`
/// or a CSV path; `pfile` and `file` are CSV paths.
pub fn builtin(spec: &str) -> Result<MusielakFunction> {
    let (family, params) = parse_spec(spec)?;
    let get = |key: &str| -> Result<&(usize, String)> {
        params
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v)
            .ok_or_else(|| Error::invalid(key, format!("required by `{family}`")))
    };
    let num = |key: &str| -> Result<f64> {
        let (pos, v) = get(key)?;
        v.parse::<f64>().map_err(|_| Error::Parse {
            position: *pos,
            message: format!("`{v}` is not a number"),
        })
    };
    let allowed: &[&str] = match family.as_str() {
        "power" => &["p"],
        "wpower" => &["p", "w"],
        "orlicz-exp" => &[],
        "loglow" | "loggrow" | "logdamp" => &["alpha"],
        "double-phase" => &["p", "q", "w"],
        "varexp" => &["pfile"],
        "xlog" => &["alpha", "beta", "gamma"],
        "tabulated" => &["file"],
        _ => {
            return Err(Error::Parse {
                position: 0,
                message: format!("unknown family `{family}`"),
            })
        }
    };
    for (k, (pos, _)) in &params {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::Parse {
                position: *pos - k.len() - 1,
                message: format!("unknown key `{k}` for family `{family}`"),
            });
        }
    }
    let phi = match family.as_str() {
        "power" => MusielakFunction::power(num("p")?)?,
        "wpower" => {
            let p = num("p")?;
            positive("p", p)?;
            let w = parse_weight(&get("w")?.1)?;
            if w.min_value() <= 0.0 {
                return Err(Error::invalid(
                    "w",
                    "wpower needs a strictly positive weight",
                ));
            }
            MusielakFunction::new(Family::Power { p, coef: w }, spec)
        }
        "orlicz-exp" => MusielakFunction::new(Family::OrliczExp, spec),
        "loglow" => {
            let alpha = num("alpha")?;
            at_least("alpha", alpha, 1.0)?;
            MusielakFunction::new(Family::LogLow { alpha }, spec)
        }
        "loggrow" => {
            let alpha = num("alpha")?;
            positive("alpha", alpha)?;
            MusielakFunction::new(Family::LogGrow { alpha }, spec)
        }
        "logdamp" => {
            let alpha = num("alpha")?;
            at_least("alpha", alpha, 1.0)?;
            MusielakFunction::new(Family::LogDamp { alpha }, spec)
        }
        "double-phase" => {
            MusielakFunction::double_phase(num("p")?, num("q")?, parse_weight(&get("w")?.1)?)?
        }
        "varexp" => {
            let p = SampledFunction::read_path(Path::new(&get("pfile")?.1))?;
            if p.values().iter().any(|&v| v <= 0.0) {
                return Err(Error::invalid("pfile", "exponents must be positive"));
            }
            MusielakFunction::new(Family::VarExp { p }, spec)
        }
        "xlog" => {
            let (alpha, beta, gamma) = (num("alpha")?, num("beta")?, num("gamma")?);
            if !(alpha > 1.0) {
                return Err(Error::invalid("alpha", "must exceed 1"));
            }
            positive("beta", beta)?;
            if !(0.0..=2.0 * alpha * (1.0 + 2f64.ln())).contains(&gamma) {
                return Err(Error::invalid(
                    "gamma",
                    "must lie in [0, 2 alpha (1 + log 2)]",
                ));
            }
            MusielakFunction::new(Family::XLog { alpha, beta, gamma }, spec)
        }
        "tabulated" => {
            let (t, v) = read_table(Path::new(&get("file")?.1))?;
            MusielakFunction::tabulated(t, v)?
        }
        _ => unreachable!("family checked above"),
    };
    Ok(MusielakFunction {
        label: spec.to_string(),
        ..phi
    })
}

fn at_least(name: &str, v: f64, lo: f64) -> Result<()> {
    if v >= lo && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be at least {lo}")))
    }
}

type Params = Vec<(String, (usize, String))>;

fn parse_spec(spec: &str) -> Result<(String, Params)> {
    let (family, rest, offset) = match spec.find(':') {
        Some(c) => (&spec[..c], &spec[c + 1..], c + 1),
        None => (spec, "", spec.len()),
    };
    if family.is_empty() {
        return Err(Error::Parse {
            position: 0,
            message: "missing family name".into(),
        });
    }
    let mut params: Params = Vec::new();
    if rest.is_empty() {
        return Ok((family.to_string(), params));
    }
    let mut pos = offset;
    for item in rest.split(',') {
        let Some(eq) = item.find('=') else {
            return Err(Error::Parse {
                position: pos,
                message: format!("expected `key=value`, found `{item}`"),
            });
        };
        let (key, value) = (&item[..eq], &item[eq + 1..]);
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::Parse {
                position: pos,
                message: format!("invalid key `{key}`"),
            });
        }
        if value.is_empty() {
            return Err(Error::Parse {
                position: pos + eq + 1,
                message: format!("empty value for `{key}`"),
            });
        }
        if params.iter().any(|(k, _)| k == key) {
            return Err(Error::Parse {
                position: pos,
                message: format!("duplicate key `{key}`"),
            });
        }
        params.push((key.to_string(), (pos + eq + 1, value.to_string())));
        pos += item.len() + 1;
    }
    Ok((family.to_string(), params))
}

fn parse_weight(value: &str) -> Result<Weight> {
    match value {
        "one" => Ok(Weight::Constant(1.0)),
        "zero" => Ok(Weight::Constant(0.0)),
        path => {
            let w = SampledFunction::read_path(Path::new(path))?;
            if let Some(index) = w.values().iter().position(|&v| v < 0.0) {
                return Err(Error::NonPositiveWeight { index });
            }
            Ok(Weight::Sampled(w))
        }
    }
}

fn read_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let (mut t, mut v) = (Vec::new(), Vec::new());
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let parse = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse {
                    position: line + 1,
                    message: "expected two numeric columns `t,phi`".into(),
                })
        };
        t.push(parse(0)?);
        v.push(parse(1)?);
    }
    Ok((t, v))
}

/// Modular with possibly infinite value; NaN is reported with its leaf.
fn modular_raw(
    phi: &MusielakFunction,
    grid: DyadicGrid,
    abs_values: &[f64],
    scale: f64,
) -> Result<f64> {
    let mut s = 0.0;
    for (i, &a) in abs_values.iter().enumerate() {
        let v = phi.eval(grid.midpoint(i), a * scale);
        if v.is_nan() {
            return Err(Error::NonFinitePhi { index: i });
        }
        s += v;
    }
    Ok(s * grid.leaf_measure())
}

/// `2^-N Σ φ(x_i, |f_i|)` with `x_i` the leaf midpoints.
pub fn modular(phi: &MusielakFunction, f: &SampledFunction) -> Result<f64> {
    let grid = f.grid();
    let mut s = 0.0;
    for (i, &v) in f.values().iter().enumerate() {
        let p = phi.eval(grid.midpoint(i), v.abs());
        if !p.is_finite() {
            return Err(Error::NonFinitePhi { index: i });
        }
        s += p;
    }
    Ok(s * grid.leaf_measure())
}

/// `inf{λ > 0 : modular(f/λ) <= 1}` by bracketed bisection.
///
/// The bracket starts at `λ = 1` and is doubled (or halved) until it straddles
/// the unit level; bisection then stops at relative width `1e-10`. The upper end
/// of the final bracket is returned, so `modular(f / norm) <= 1` always holds.
pub fn luxemburg_norm(phi: &MusielakFunction, f: &SampledFunction) -> Result<f64> {
    let abs: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    luxemburg_of_abs(phi, f.grid(), &abs)
}

pub(crate) fn luxemburg_of_abs(
    phi: &MusielakFunction,
    grid: DyadicGrid,
    abs: &[f64],
) -> Result<f64> {
    if abs.iter().all(|&a| a == 0.0) {
        return Ok(0.0);
    }
    unit_level_bisection(|lam: f64| modular_raw(phi, grid, abs, lam.recip()))
}

/// Smallest `λ` (within `1e-10` relative) with `m(λ) <= 1` for a nonincreasing modular `m`.
fn unit_level_bisection(m: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let mut iterations = 0usize;
    let mut step = || -> Result<()> {
        iterations += 1;
        if iterations > LUXEMBURG_MAX_ITER {
            Err(Error::NonConvergence { iterations })
        } else {
            Ok(())
        }
    };
    let mut lam = 1.0_f64;
    let (mut lo, mut hi);
    if m(lam)? > 1.0 {
        loop {
            step()?;
            lam *= 2.0;
            if m(lam)? <= 1.0 {
                break;
            }
        }
        lo = lam / 2.0;
        hi = lam;
    } else {
        loop {
            step()?;
            lam /= 2.0;
            if m(lam)? > 1.0 {
                break;
            }
        }
        lo = lam;
        hi = lam * 2.0;
    }
    while hi - lo > LUXEMBURG_REL_TOL * hi {
        step()?;
        let mid = 0.5 * (lo + hi);
        if m(mid)? <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `‖1_B‖_φ` for a leaf mask `B`.
pub fn indicator_norm(phi: &MusielakFunction, grid: DyadicGrid, mask: &[bool]) -> Result<f64> {
    let abs: Vec<f64> = mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    luxemburg_of_abs(phi, grid, &abs)
}

/// `‖1_B‖_φ` for `B` given as a list of leaf indices.
///
/// For `x`-independent `φ` only `|B|` matters and each modular evaluation is a
/// single call of `φ`.
pub(crate) fn indicator_norm_of_leaves(
    phi: &MusielakFunction,
    grid: DyadicGrid,
    leaves: &[usize],
) -> Result<f64> {
    if leaves.is_empty() {
        return Ok(0.0);
    }
    let h = grid.leaf_measure();
    if phi.is_x_independent() {
        let mass = leaves.len() as f64 * h;
        let x = grid.midpoint(leaves[0]);
        return unit_level_bisection(|lam| {
            let v = phi.eval(x, lam.recip());
            if v.is_nan() {
                Err(Error::NonFinitePhi { index: leaves[0] })
            } else {
                Ok(v * mass)
            }
        });
    }
    unit_level_bisection(|lam| {
        let mut s = 0.0;
        for &i in leaves {
            let v = phi.eval(grid.midpoint(i), lam.recip());
            if v.is_nan() {
                return Err(Error::NonFinitePhi { index: i });
            }
            s += v;
        }
        Ok(s * h)
    })
}

/// `φ_r(x,t) := φ(x, t^r)`; satisfies `‖|f|^r‖_φ = ‖f‖_{φ_r}^r`.
pub fn power_rescale(phi: &MusielakFunction, r: f64) -> Result<MusielakFunction> {
    positive("r", r)?;
    if r == 1.0 {
        return Ok(phi.clone());
    }
    let label = format!("({})_r={r}", phi.label);
    Ok(match &phi.family {
        Family::Power { p, coef } => MusielakFunction::new(
            Family::Power {
                p: p * r,
                coef: coef.clone(),
            },
            label,
        ),
        Family::Rescaled { inner, r: r0 } => MusielakFunction::new(
            Family::Rescaled {
                inner: inner.clone(),
                r: r0 * r,
            },
            label,
        ),
        _ => MusielakFunction::new(
            Family::Rescaled {
                inner: Box::new(phi.clone()),
                r,
            },
            label,
        ),
    })
}

/// Complementary function `φ*(x,t) = sup_u [u t - φ(x,u)]`.
///
/// Power families use the closed form `(c p)^{-1/(p-1)} t^{p'} / p'`
/// (and the `0/∞` indicator for `p = 1`). Every other family gets a numeric
/// Legendre transform over 512 log-spaced `u` in `[t_min/100, 100 t_max]`;
/// attaining the supremum on the boundary of that grid for any leaf midpoint
/// of `grid` and any `t` of `tgrid` is an error.
pub fn complementary(
    phi: &MusielakFunction,
    tgrid: &TGrid,
    grid: DyadicGrid,
) -> Result<MusielakFunction> {
    let label = format!("({})*", phi.label);
    if let Family::Power { p, coef } = &phi.family {
        let p = *p;
        if coef.min_value() <= 0.0 {
            return Err(Error::ComplementaryUnavailable(
                "coefficient vanishes".into(),
            ));
        }
        if p > 1.0 {
            let pp = conjugate(p);
            let c = coef.map(|c| (c * p).powf(-1.0 / (p - 1.0)) / pp);
            return Ok(MusielakFunction::new(
                Family::Power { p: pp, coef: c },
                label,
            ));
        }
        if p == 1.0 {
            return Ok(MusielakFunction::new(
                Family::Indicator { coef: coef.clone() },
                label,
            ));
        }
        return Err(Error::ComplementaryUnavailable(format!(
            "t^{p} with p < 1 has an infinite complementary function"
        )));
    }
    let u = log_space(
        tgrid.t_min() / 100.0,
        tgrid.t_max() * 100.0,
        LEGENDRE_POINTS,
    );
    let xs: Vec<f64> = if phi.is_x_independent() {
        vec![0.5]
    } else {
        (0..grid.len()).map(|i| grid.midpoint(i)).collect()
    };
    for &x in &xs {
        for &t in tgrid.points() {
            match legendre_eval(phi, &u, x, t).1 {
                Some(0) => return Err(Error::BoundaryAttained { t, side: "lower" }),
                Some(k) if k + 1 == u.len() => {
                    return Err(Error::BoundaryAttained { t, side: "upper" })
                }
                _ => {}
            }
        }
    }
    Ok(MusielakFunction::new(
        Family::Legendre {
            inner: Box::new(phi.clone()),
            u,
        },
        label,
    ))
}

/// Which side of the uniform-type definition to test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeSide {
    /// `φ(x,st) <= C s^p φ(x,t)` for `s ∈ (0,1)`.
    Lower,
    /// `φ(x,st) <= C s^p φ(x,t)` for `s ∈ [1,∞)`.
    Upper,
}

/// Outcome of [`check_uniform_type`].
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TypeReport {
    /// Exponent probed.
    pub p: f64,
    /// Side probed.
    pub side: TypeSide,
    /// Observed `sup φ(x,st) / (s^p φ(x,t))`.
    pub constant: f64,
    /// True when the ratio keeps growing toward the extreme end of the s-grid.
    pub divergent: bool,
}

impl TypeReport {
    /// True when the sample certifies the type.
    pub fn holds(&self) -> bool {
        self.constant.is_finite() && !self.divergent
    }
}

/// The 64-point s-grid: `[1e-3, 1)` for the lower side, `[1, 1e3]` for the upper side.
pub fn s_grid(side: TypeSide) -> Vec<f64> {
    match side {
        TypeSide::Lower => (0..S_POINTS)
            .map(|k| 10f64.powf(-3.0 * (1.0 - k as f64 / S_POINTS as f64)))
            .collect(),
        TypeSide::Upper => log_space(1.0, 1e3, S_POINTS),
    }
}

/// Samples `sup φ(x,st) / (s^p φ(x,t))` over leaf midpoints, `t ∈ tgrid` and the s-grid.
///
/// The ratio is declared divergent when it is infinite or when its value at the
/// extreme end of the s-grid exceeds 1.5 times its value at the geometric middle.
pub fn check_uniform_type(
    phi: &MusielakFunction,
    p: f64,
    side: TypeSide,
    tgrid: &TGrid,
    grid: DyadicGrid,
) -> Result<TypeReport> {
    positive("p", p)?;
    let s = s_grid(side);
    let mut per_s = vec![0.0_f64; s.len()];
    let leaves: Vec<usize> = if phi.is_x_independent() {
        vec![0]
    } else {
        (0..grid.len()).collect()
    };
    for &i in &leaves {
        let x = grid.midpoint(i);
        for &t in tgrid.points() {
            let base = phi.eval(x, t);
            if base == 0.0 {
                return Err(Error::FamilyDefect(format!(
                    "phi(x,t) = 0 at leaf {i}, t = {t}"
                )));
            }
            if !base.is_finite() {
                continue;
            }
            for (k, &sk) in s.iter().enumerate() {
                let r = phi.eval(x, sk * t) / (sk.powf(p) * base);
                if r.is_nan() {
                    per_s[k] = f64::INFINITY;
                } else {
                    per_s[k] = per_s[k].max(r);
                }
            }
        }
    }
    let constant = per_s.iter().copied().fold(0.0, f64::max);
    let extreme = match side {
        TypeSide::Lower => per_s[0],
        TypeSide::Upper => per_s[s.len() - 1],
    };
    let middle = per_s[s.len() / 2];
    let divergent = !constant.is_finite() || extreme > 1.5 * middle;
    Ok(TypeReport {
        p,
        side,
        constant,
        divergent,
    })
}

/// Largest lower (smallest upper) exponent certified by [`check_uniform_type`],
/// found by bisection on `[0.01, 64]`; `None` when no exponent passes.
pub fn estimate_type_exponent(
    phi: &MusielakFunction,
    side: TypeSide,
    tgrid: &TGrid,
    grid: DyadicGrid,
) -> Result<Option<f64>> {
    let holds =
        |p: f64| -> Result<bool> { Ok(check_uniform_type(phi, p, side, tgrid, grid)?.holds()) };
    let (mut lo, mut hi) = (0.01_f64, 64.0_f64);
    match side {
        TypeSide::Lower => {
            if !holds(lo)? {
                return Ok(None);
            }
            if holds(hi)? {
                return Ok(Some(hi));
            }
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if holds(mid)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(Some(lo))
        }
        TypeSide::Upper => {
            if !holds(hi)? {
                return Ok(None);
            }
            if holds(lo)? {
                return Ok(Some(lo));
            }
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if holds(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Ok(Some(hi))
        }
    }
}

/// Type exponents: nominal family values when available, sampled estimates otherwise.
pub fn type_exponents(
    phi: &MusielakFunction,
    tgrid: &TGrid,
    grid: DyadicGrid,
) -> Result<TypeExponents> {
    if let Some(e) = phi.nominal_types() {
        return Ok(e);
    }
    let lower = estimate_type_exponent(phi, TypeSide::Lower, tgrid, grid)?.unwrap_or(0.0);
    let upper = estimate_type_exponent(phi, TypeSide::Upper, tgrid, grid)?;
    Ok(TypeExponents { lower, upper })
}

/// `φ(x_i, t_j)` for every `t_j` of the grid (rows) and every leaf `i` (columns).
fn phi_table(phi: &MusielakFunction, tgrid: &TGrid, grid: DyadicGrid) -> Vec<Vec<f64>> {
    let xs: Vec<f64> = (0..grid.len()).map(|i| grid.midpoint(i)).collect();
    tgrid
        .points()
        .iter()
        .map(|&t| xs.iter().map(|&x| phi.eval(x, t)).collect())
        .collect()
}

/// Outcome of [`check_aq`].
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WeightReport {
    /// Exponent probed.
    pub q: f64,
    /// Observed constant `K`.
    pub k: f64,
    /// True when `K` is finite.
    pub pass: bool,
}

fn aq_constant_from_table(table: &[Vec<f64>], grid: DyadicGrid, q: f64) -> f64 {
    let mut k_max = 1.0_f64;
    for row in table {
        if row.iter().any(|v| !v.is_finite()) {
            continue;
        }
        if row.iter().any(|&v| v <= 0.0) {
            return f64::INFINITY;
        }
        for n in 0..=grid.resolution() {
            for block in row.chunks(grid.block_len(n)) {
                let k = if q == 1.0 {
                    let mean = block.iter().sum::<f64>() / block.len() as f64;
                    let min = block.iter().copied().fold(f64::INFINITY, f64::min);
                    mean / min
                } else {
                    let a = 1.0 / (q - 1.0);
                    let min = block.iter().copied().fold(f64::INFINITY, f64::min);
                    let len = block.len() as f64;
                    let e1 = block.iter().map(|v| v / min).sum::<f64>() / len;
                    let e2 = block.iter().map(|v| (min / v).powf(a)).sum::<f64>() / len;
                    e1 * e2.powf(q - 1.0)
                };
                k_max = k_max.max(k);
            }
        }
    }
    k_max
}

/// Sampled uniform A_q constant of `φ`.
///
/// For `q > 1`, `K = sup E_n(φ(·,t)) [E_n(φ(·,t)^{-1/(q-1)})]^{q-1}` over levels,
/// atoms and `t ∈ tgrid`; for `q = 1`, `K = sup E_n(φ(·,t)) / φ(·,t)`.
/// Columns where `φ` overflows are skipped.
pub fn check_aq(
    phi: &MusielakFunction,
    q: f64,
    tgrid: &TGrid,
    grid: DyadicGrid,
) -> Result<WeightReport> {
    if !(q >= 1.0) {
        return Err(Error::invalid("q", "must be at least 1"));
    }
    let k = if phi.is_x_independent() {
        1.0
    } else {
        aq_constant_from_table(&phi_table(phi, tgrid, grid), grid, q)
    };
    Ok(WeightReport {
        q,
        k,
        pass: k.is_finite(),
    })
}

/// `q(φ) = inf{q : φ ∈ A_q}` on the sample, by bisection over `[1, 64]`
/// against the pass threshold `k_max`.
pub fn q_phi(
    phi: &MusielakFunction,
    tgrid: &TGrid,
    grid: DyadicGrid,
    tol: f64,
    k_max: f64,
) -> Result<f64> {
    if phi.is_x_independent() {
        return Ok(1.0);
    }
    let table = phi_table(phi, tgrid, grid);
    let passes = |q: f64| aq_constant_from_table(&table, grid, q) <= k_max;
    if passes(1.0) {
        return Ok(1.0);
    }
    if !passes(64.0) {
        return Err(Error::AInfinityFails { k_max });
    }
    let (mut lo, mut hi) = (1.0_f64, 64.0_f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if passes(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Outcome of [`check_s_condition`].
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SConditionReport {
    /// Two-sided constant `max(K⁻, K⁺)`.
    pub k: f64,
    /// `𝕊⁻` constant: `sup φ_{n-1} / φ_n`.
    pub k_minus: f64,
    /// `𝕊⁺` constant: `sup φ_n / φ_{n-1}`.
    pub k_plus: f64,
}

/// Sampled 𝕊 constants of the weight martingale `φ_n(·,t) = E_n φ(·,t)`.
pub fn check_s_condition(
    phi: &MusielakFunction,
    tgrid: &TGrid,
    grid: DyadicGrid,
) -> Result<SConditionReport> {
    if phi.is_x_independent() {
        return Ok(SConditionReport {
            k: 1.0,
            k_minus: 1.0,
            k_plus: 1.0,
        });
    }
    let table = phi_table(phi, tgrid, grid);
    let (mut k_minus, mut k_plus) = (1.0_f64, 1.0_f64);
    for row in &table {
        if row.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let mut prev = block_means(grid, row, 0);
        for n in 1..=grid.resolution() {
            let cur = block_means(grid, row, n);
            for (j, &c) in cur.iter().enumerate() {
                let p = prev[j / 2];
                k_minus = k_minus.max(p / c);
                k_plus = k_plus.max(c / p);
            }
            prev = cur;
        }
    }
    Ok(SConditionReport {
        k: k_minus.max(k_plus),
        k_minus,
        k_plus,
    })
}

/// 𝕊 constants of a single weight `w` (the martingale `w_n = E_n w`).
pub fn weight_s_constants(w: &SampledFunction) -> Result<SConditionReport> {
    check_positive_weight(w)?;
    let grid = w.grid();
    let (mut k_minus, mut k_plus) = (1.0_f64, 1.0_f64);
    let mut prev = block_means(grid, w.values(), 0);
    for n in 1..=grid.resolution() {
        let cur = block_means(grid, w.values(), n);
        for (j, &c) in cur.iter().enumerate() {
            let p = prev[j / 2];
            k_minus = k_minus.max(p / c);
            k_plus = k_plus.max(c / p);
        }
        prev = cur;
    }
    Ok(SConditionReport {
        k: k_minus.max(k_plus),
        k_minus,
        k_plus,
    })
}

/// `∫ f g`.
pub fn pairing(f: &SampledFunction, g: &SampledFunction) -> Result<f64> {
    Ok(f.zip_with(g, |a, b| a * b)?.mean())
}

/// Outcome of [`dual_pairing_check`].
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DualPairingReport {
    /// Best `∫ f g` found over the normalised candidates.
    pub best: f64,
    /// `‖f‖_φ`.
    pub norm: f64,
    /// The contract ceiling `2‖f‖_φ`.
    pub upper: f64,
    /// `‖f‖_φ / best`, the lower-bound constant certified by the sample.
    pub c_report: f64,
}

/// Maximises `∫ f g` over `samples` random `g` (plus the Young-extremal
/// candidate) normalised to `‖g‖_{φ*} <= 1`.
pub fn dual_pairing_check(
    phi: &MusielakFunction,
    f: &SampledFunction,
    samples: usize,
    seed: u64,
    tgrid: &TGrid,
) -> Result<DualPairingReport> {
    let grid = f.grid();
    let lower = check_uniform_type(phi, 1.0, TypeSide::Lower, tgrid, grid)?;
    if !lower.holds() {
        return Err(Error::Hypothesis(
            "phi is not of uniformly lower type 1 on the sample".into(),
        ));
    }
    let norm = luxemburg_norm(phi, f)?;
    if norm == 0.0 {
        return Ok(DualPairingReport {
            best: 0.0,
            norm: 0.0,
            upper: 0.0,
            c_report: 1.0,
        });
    }
    let star = complementary(phi, tgrid, grid)?;
    let normalise = |g: SampledFunction| -> Result<Option<SampledFunction>> {
        let n = luxemburg_norm(&star, &g)?;
        Ok((n > 0.0 && n.is_finite()).then(|| g.scale(n.recip())))
    };
    let mut best = 0.0_f64;
    let mut candidates: Vec<SampledFunction> = Vec::with_capacity(samples + 2);
    candidates.push(f.map(f64::signum));
    let extremal: Vec<f64> = f
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let x = grid.midpoint(i);
            let t = v.abs() / norm;
            let h = (t * 1e-6).max(1e-12);
            let d =
                (phi.eval(x, t + h) - phi.eval(x, (t - h).max(0.0))) / (t + h - (t - h).max(0.0));
            v.signum() * d
        })
        .collect();
    if extremal.iter().all(|v| v.is_finite()) {
        candidates.push(SampledFunction::new(grid, extremal)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let v: Vec<f64> = (0..grid.len())
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        candidates.push(SampledFunction::new(grid, v)?);
    }
    for g in candidates {
        if let Some(g) = normalise(g)? {
            best = best.max(pairing(f, &g)?);
        }
    }
    Ok(DualPairingReport {
        best,
        norm,
        upper: 2.0 * norm,
        c_report: if best > 0.0 {
            norm / best
        } else {
            f64::INFINITY
        },
    })
}

/// Leaf values of `E_n(w)` broadcast to leaves, used for weight martingales.
pub fn weight_level(w: &SampledFunction, n: u32) -> Result<SampledFunction> {
    let grid = w.grid();
    grid.check_level(n)?;
    SampledFunction::new(grid, expand(grid, &block_means(grid, w.values(), n), n))
}
