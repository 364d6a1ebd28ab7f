//! Growth functionals under a scale triple.
//!
//! Limits are replaced by tail statistics: the upper estimate is the maximum
//! of the per-radius ratio over the final quarter of the grid, the lower
//! estimate the minimum. Every estimate keeps its full ratio series and a
//! coarse trend label so convergence can be judged by eye.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nevanlinna::{self, CountingData, ZeroCountOptions};
use crate::scale::{ScaleFunction, ScaleTriple};
use crate::series::PowerSeries;

pub const DEFAULT_TAIL_FRACTION: f64 = 0.25;
pub const DEFAULT_GRID_POINTS: usize = 48;

/// `points` radii in geometric progression from `r_min` to `r_max` inclusive.
pub fn geometric_grid(r_min: f64, r_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(r_min > 0.0 && r_max > r_min && points >= 2) {
        return Err(Error::Argument(format!(
            "grid needs 0 < r_min < r_max and at least 2 points (got {r_min}, {r_max}, {points})"
        )));
    }
    let (a, b) = (r_min.ln(), r_max.ln());
    Ok((0..points)
        .map(|i| {
            if i + 1 == points {
                r_max
            } else {
                (a + (b - a) * i as f64 / (points - 1) as f64).exp()
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// `log T(r, f)`.
    LogT,
    /// `log log M(r, f)`.
    Log2M,
    /// `log n(r, 1/f)`.
    LogN,
    /// `log N(r, 1/f)`.
    LogCountingN,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthSample {
    pub quantity: Quantity,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub source: String,
}

impl GrowthSample {
    pub fn new(quantity: Quantity, radii: Vec<f64>, values: Vec<f64>, source: String) -> Result<Self> {
        if radii.is_empty() || radii.len() != values.len() {
            return Err(Error::Argument("sample needs equally many radii and values".into()));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Argument("sample radii must be strictly increasing".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Degenerate(format!(
                "{source}: {quantity:?} is not finite at r = {}",
                radii[i]
            )));
        }
        Ok(Self { quantity, radii, values, source })
    }

    /// Rows `r, value, ratio` with ratios taken from an estimate on this sample.
    pub fn write_csv<W: Write>(&self, est: Option<&OrderEstimate>, mut w: W) -> Result<()> {
        writeln!(w, "r,value,ratio")?;
        for (r, v) in self.radii.iter().zip(&self.values) {
            let ratio = est
                .and_then(|e| e.radii.iter().position(|x| x == r).map(|i| e.ratios[i]))
                .map_or(String::new(), |x| format!("{x:.17e}"));
            writeln!(w, "{r:.17e},{v:.17e},{ratio}")?;
        }
        Ok(())
    }
}

/// Closed-form expression in `r` used by [`Profile`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Formula {
    Const { c: f64 },
    /// `c·r^rho`.
    Power { c: f64, rho: f64 },
    /// `c·exp(r^rho)`.
    ExpPower { c: f64, rho: f64 },
    /// `c·ln r`.
    Log { c: f64 },
    Sum { terms: Vec<Formula> },
    Product { terms: Vec<Formula> },
    Max { terms: Vec<Formula> },
    /// `ln(e^major − e^minor)`, `−∞` unless `major > minor`.
    DominantDiff { major: Box<Formula>, minor: Box<Formula> },
}

impl Formula {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Formula::Const { c } => *c,
            Formula::Power { c, rho } => c * r.powf(*rho),
            Formula::ExpPower { c, rho } => c * r.powf(*rho).exp(),
            Formula::Log { c } => c * r.ln(),
            Formula::Sum { terms } => terms.iter().map(|t| t.eval(r)).sum(),
            Formula::Product { terms } => terms.iter().map(|t| t.eval(r)).product(),
            Formula::Max { terms } => terms.iter().map(|t| t.eval(r)).fold(f64::NEG_INFINITY, f64::max),
            Formula::DominantDiff { major, minor } => {
                let (a, b) = (major.eval(r), minor.eval(r));
                if a > b {
                    a + (-(b - a).exp_m1()).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }
}

/// Closed-form growth of a model function: `ln M(r)` and optionally `T(r)`.
/// When `t` is absent, `T` is taken as `ln M` (an upper bound, sharp up to
/// bounded factors for the shipped models).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profile {
    pub name: String,
    pub log_m: Formula,
    #[serde(default)]
    pub t: Option<Formula>,
}

impl Profile {
    /// `e^{c z^n}`: `ln M = c r^n`, `T = c r^n / π`.
    pub fn exp_monomial(c: f64, n: f64) -> Self {
        Self {
            name: format!("exp({c} z^{n})"),
            log_m: Formula::Power { c, rho: n },
            t: Some(Formula::Power { c: c / PI, rho: n }),
        }
    }

    /// `e^{e^z}`: `ln M = e^r`, `T ~ e^r / sqrt(2π³ r)`.
    pub fn exp_exp() -> Self {
        Self {
            name: "exp(exp z)".into(),
            log_m: Formula::ExpPower { c: 1.0, rho: 1.0 },
            t: Some(Formula::Product {
                terms: vec![
                    Formula::ExpPower { c: 1.0, rho: 1.0 },
                    Formula::Power { c: (2.0 * PI.powi(3)).sqrt().recip(), rho: -0.5 },
                ],
            }),
        }
    }

    /// Degree `d` polynomial with leading coefficient modulus `lead`.
    pub fn polynomial(d: u32, lead: f64) -> Self {
        let f = Formula::Sum {
            terms: vec![Formula::Log { c: d as f64 }, Formula::Const { c: lead.ln() }],
        };
        Self { name: format!("poly(deg {d})"), log_m: f.clone(), t: Some(f) }
    }

    fn t_formula(&self) -> &Formula {
        self.t.as_ref().unwrap_or(&self.log_m)
    }

    /// `a·f` for a constant `a ≠ 0`: both `ln M` and `T` shift by at most `ln⁺|a|`.
    pub fn scaled(&self, a: f64) -> Self {
        let shift = |f: &Formula| Formula::Sum {
            terms: vec![f.clone(), Formula::Const { c: a.abs().ln() }],
        };
        Self { name: format!("{a}*{}", self.name), log_m: shift(&self.log_m), t: Some(shift(self.t_formula())) }
    }

    /// Upper envelope for `f ± g`: `ln M ≤ max + ln 2`, `T ≤ T_f + T_g + ln 2`.
    pub fn sum_upper(f: &Self, g: &Self) -> Self {
        Self {
            name: format!("({})+({}) upper", f.name, g.name),
            log_m: Formula::Sum {
                terms: vec![
                    Formula::Max { terms: vec![f.log_m.clone(), g.log_m.clone()] },
                    Formula::Const { c: std::f64::consts::LN_2 },
                ],
            },
            t: Some(Formula::Sum {
                terms: vec![
                    f.t_formula().clone(),
                    g.t_formula().clone(),
                    Formula::Const { c: std::f64::consts::LN_2 },
                ],
            }),
        }
    }

    /// Lower envelope for `f + g` when `g` dominates: `ln M ≥ ln(M_g − M_f)`.
    pub fn sum_lower(f: &Self, g: &Self) -> Self {
        let d = Formula::DominantDiff { major: Box::new(g.log_m.clone()), minor: Box::new(f.log_m.clone()) };
        Self { name: format!("({})+({}) lower", f.name, g.name), log_m: d, t: None }
    }

    /// Upper envelope for `f·g`: `ln M ≤ ln M_f + ln M_g`, `T ≤ T_f + T_g`.
    pub fn product_upper(f: &Self, g: &Self) -> Self {
        Self {
            name: format!("({})*({}) upper", f.name, g.name),
            log_m: Formula::Sum { terms: vec![f.log_m.clone(), g.log_m.clone()] },
            t: Some(Formula::Sum { terms: vec![f.t_formula().clone(), g.t_formula().clone()] }),
        }
    }

    pub fn value(&self, quantity: Quantity, r: f64) -> Result<f64> {
        match quantity {
            Quantity::LogT => Ok(self.t_formula().eval(r).ln()),
            Quantity::Log2M => Ok(self.log_m.eval(r).ln()),
            q => Err(Error::Argument(format!("profiles do not supply {q:?}"))),
        }
    }
}

pub enum Source<'a> {
    Series(&'a PowerSeries),
    Profile(&'a Profile),
    Counting(&'a CountingData),
}

/// Samples `quantity` on `radii`.
pub fn sample(src: Source<'_>, quantity: Quantity, radii: &[f64]) -> Result<GrowthSample> {
    let (values, name) = match src {
        Source::Series(f) => {
            let name = format!("{:?}", f.provenance());
            let values = match quantity {
                Quantity::LogT => radii
                    .iter()
                    .map(|r| Ok(nevanlinna::characteristic_entire(f, r.ln())?.ln()))
                    .collect::<Result<Vec<_>>>()?,
                Quantity::Log2M => radii
                    .iter()
                    .map(|r| Ok(f.log_max_modulus(r.ln())?.ln()))
                    .collect::<Result<Vec<_>>>()?,
                Quantity::LogN | Quantity::LogCountingN => {
                    let c = CountingData::from_series(f, radii, &ZeroCountOptions::default())?;
                    return sample(Source::Counting(&c), quantity, c.radii()).map(|mut s| {
                        s.source = name;
                        s
                    });
                }
            };
            (values, name)
        }
        Source::Profile(p) => (
            radii.iter().map(|&r| p.value(quantity, r)).collect::<Result<Vec<_>>>()?,
            p.name.clone(),
        ),
        Source::Counting(c) => {
            let values = radii
                .iter()
                .map(|&r| match quantity {
                    Quantity::LogN => Ok((count_at(c, r)? as f64).ln()),
                    Quantity::LogCountingN => Ok(c.integrated_count(r.ln())?.ln()),
                    q => Err(Error::Argument(format!("counting data does not supply {q:?}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            (values, "counting data".into())
        }
    };
    GrowthSample::new(quantity, radii.to_vec(), values, name)
}

/// `n(r)` from step data.
fn count_at(c: &CountingData, r: f64) -> Result<u64> {
    let radii = c.radii();
    if r > *radii.last().unwrap() {
        return Err(Error::Argument(format!("r = {r} is beyond the counting data")));
    }
    Ok(match radii.iter().rposition(|&x| x <= r) {
        Some(i) => c.counts()[i],
        None => c.count_at_zero(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Upper,
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Converging,
    Increasing,
    Decreasing,
    Oscillating,
}

/// Relative change between quarter means below which a ratio series counts as settled.
const TREND_RTOL: f64 = 0.01;

/// Compares the means of the last three quarters of `ratios`.
pub fn classify_trend(ratios: &[f64]) -> Trend {
    let n = ratios.len();
    if n < 4 {
        return Trend::Converging;
    }
    let mean = |k: usize| {
        let (a, b) = (k * n / 4, (k + 1) * n / 4);
        ratios[a..b].iter().sum::<f64>() / (b - a) as f64
    };
    let (q2, q3, q4) = (mean(1), mean(2), mean(3));
    let (d1, d2) = (q3 - q2, q4 - q3);
    let tol = TREND_RTOL * q4.abs().max(1e-3);
    if d2.abs() <= tol {
        Trend::Converging
    } else if d1 > 0.0 && d2 > 0.0 {
        Trend::Increasing
    } else if d1 < 0.0 && d2 < 0.0 {
        Trend::Decreasing
    } else if d2.abs() < d1.abs() {
        Trend::Converging
    } else {
        Trend::Oscillating
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderEstimate {
    pub value: f64,
    pub mode: Mode,
    pub trend: Trend,
    pub tail_fraction: f64,
    /// Radii whose denominator was positive, in grid order.
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Tail statistic over `ratios` (already restricted to valid radii).
fn tail_statistic(radii: Vec<f64>, ratios: Vec<f64>, mode: Mode, log_space: bool) -> Result<OrderEstimate> {
    if ratios.is_empty() {
        return Err(Error::Degenerate(
            "scale denominator vanishes on the whole grid; move the grid past the freeze point".into(),
        ));
    }
    let k = ((ratios.len() as f64 * DEFAULT_TAIL_FRACTION).ceil() as usize).max(1);
    let tail = &ratios[ratios.len() - k..];
    let value = match mode {
        Mode::Upper => tail.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Mode::Lower => tail.iter().copied().fold(f64::INFINITY, f64::min),
    };
    let trend = classify_trend(&ratios);
    let (value, ratios) = if log_space {
        (value.exp(), ratios.iter().map(|x| x.exp()).collect())
    } else {
        (value, ratios)
    };
    Ok(OrderEstimate {
        value,
        mode,
        trend,
        tail_fraction: DEFAULT_TAIL_FRACTION,
        radii,
        ratios,
        note: None,
    })
}

/// Ratios `α(v_i)/β(log γ(r_i))` over radii with a positive denominator;
/// a `None` numerator (zero count) contributes ratio 0.
fn order_ratios(radii: &[f64], values: &[Option<f64>], t: &ScaleTriple, alpha: &ScaleFunction) -> (Vec<f64>, Vec<f64>) {
    let mut rs = Vec::new();
    let mut out = Vec::new();
    for (&r, v) in radii.iter().zip(values) {
        let den = t.denominator(r);
        if den > 0.0 && den.is_finite() {
            rs.push(r);
            out.push(v.map_or(0.0, |v| alpha.eval(v) / den));
        }
    }
    (rs, out)
}

/// `(α,β,γ)`-order (upper) or lower order from a sample of `log T` or `log log M`.
pub fn estimate_order(s: &GrowthSample, t: &ScaleTriple, mode: Mode) -> Result<OrderEstimate> {
    let values: Vec<Option<f64>> = s.values.iter().map(|&v| Some(v)).collect();
    let (radii, ratios) = order_ratios(&s.radii, &values, t, &t.alpha);
    tail_statistic(radii, ratios, mode, false)
}

/// Type (upper) or lower type at order `rho`: tail statistic of
/// `exp(α(v)) / exp(β(log γ(r)))^rho`, computed in log space.
pub fn estimate_type(s: &GrowthSample, t: &ScaleTriple, rho: f64, mode: Mode) -> Result<OrderEstimate> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Argument(format!("type needs 0 < rho < inf, got {rho}")));
    }
    let mut radii = Vec::new();
    let mut logs = Vec::new();
    for (&r, &v) in s.radii.iter().zip(&s.values) {
        let den = t.denominator(r);
        if den > 0.0 && den.is_finite() {
            radii.push(r);
            logs.push(t.alpha.eval(v) - rho * den);
        }
    }
    tail_statistic(radii, logs, mode, true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountForm {
    NBased,
    #[serde(rename = "N_based")]
    CountingBased,
}

/// Exponent of convergence of the zeros (upper) or its lower variant.
/// `log_wrap` replaces `α` by `α∘log`. Radii with no zeros yet contribute ratio 0.
pub fn estimate_lambda(
    c: &CountingData,
    t: &ScaleTriple,
    form: CountForm,
    log_wrap: bool,
    mode: Mode,
) -> Result<OrderEstimate> {
    let alpha = if log_wrap { t.alpha.compose_with_log() } else { t.alpha.clone() };
    let values: Vec<Option<f64>> = c
        .radii()
        .iter()
        .zip(c.counts())
        .map(|(&r, &n)| {
            let x = match form {
                CountForm::NBased => n as f64,
                CountForm::CountingBased => c.integrated_count(r.ln()).unwrap_or(0.0),
            };
            (x > 0.0).then(|| x.ln())
        })
        .collect();
    let degenerate = values.iter().all(|v| v.is_none());
    let (radii, ratios) = order_ratios(c.radii(), &values, t, &alpha);
    let mut est = tail_statistic(radii, ratios, mode, false)?;
    if degenerate {
        est.note = Some("no zeros on the sampled grid".into());
    }
    Ok(est)
}

/// Tail maximum of `T₁/T₂` from two `log T` samples on the same grid.
pub fn compare_characteristics(s1: &GrowthSample, s2: &GrowthSample) -> Result<f64> {
    if s1.radii != s2.radii {
        return Err(Error::Argument("samples must share the same grid".into()));
    }
    let diffs: Vec<f64> = s1.values.iter().zip(&s2.values).map(|(a, b)| a - b).collect();
    Ok(tail_statistic(s1.radii.clone(), diffs, Mode::Upper, true)?.value)
}
