//! Scale functions α, β, γ and sampled audits of their class conditions.
//!
//! Every scale is continuous, non-negative, constant below its freeze point
//! `x0` and non-decreasing without bound above it. Class membership (L1, L2,
//! L3, condition (ii)) is asymptotic or universally quantified, so the audits
//! here can only falsify a declaration on a finite grid; a "consistent"
//! verdict is evidence, never a proof.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tail statistic tolerance for the asymptotic audits (L2, condition (ii)).
pub const TREND_TOLERANCE: f64 = 0.05;

/// Relative slack for the exact inequality audits (L1, L3).
const INEQUALITY_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum ScaleKind {
    Identity,
    /// `log x` above the freeze point.
    LogPlus,
    /// `log^[p] x`.
    IteratedLog(u32),
    /// `x^c` with `0 < c <= 1`.
    Power(f64),
    /// `a·x + b` with `a > 0`.
    Linear { a: f64, b: f64 },
    /// Monotone piecewise-linear interpolant, extrapolated linearly past the last knot.
    UserTable(Vec<(f64, f64)>),
    /// `inner(log x)`.
    ComposedLog(Box<ScaleFunction>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaleFunction {
    kind: ScaleKind,
    x0: f64,
}

fn exp_tower(p: u32, mut x: f64) -> f64 {
    for _ in 0..p {
        x = x.exp();
    }
    x
}

fn log_tower(p: u32, mut x: f64) -> f64 {
    for _ in 0..p {
        x = x.ln();
    }
    x
}

impl ScaleFunction {
    pub fn identity() -> Self {
        Self {
            kind: ScaleKind::Identity,
            x0: 0.0,
        }
    }

    /// `log x`, frozen at value 1 below `x0 = e`.
    pub fn log_plus() -> Self {
        Self {
            kind: ScaleKind::LogPlus,
            x0: std::f64::consts::E,
        }
    }

    /// `log^[p] x`, frozen at value 0 below `exp^[p](0)`.
    pub fn iterated_log(p: u32) -> Result<Self> {
        if p == 0 {
            return Err(Error::Argument("iterated_log needs p >= 1".into()));
        }
        let x0 = exp_tower(p, 0.0);
        if !x0.is_finite() {
            return Err(Error::Argument(format!("iterated_log p = {p} is too deep")));
        }
        Ok(Self {
            kind: ScaleKind::IteratedLog(p),
            x0,
        })
    }

    pub fn power(c: f64) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::Argument(format!("power exponent {c} outside (0, 1]")));
        }
        Ok(Self {
            kind: ScaleKind::Power(c),
            x0: 0.0,
        })
    }

    pub fn linear(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0) || !b.is_finite() || !a.is_finite() {
            return Err(Error::Argument(format!("linear scale needs a > 0, got a = {a}")));
        }
        Ok(Self {
            kind: ScaleKind::Linear { a, b },
            x0: (-b / a).max(0.0),
        })
    }

    pub fn user_table(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Argument("user_table needs at least two knots".into()));
        }
        for w in knots.windows(2) {
            let ((x1, y1), (x2, y2)) = (w[0], w[1]);
            if !(x2 > x1) || y2 < y1 {
                return Err(Error::Argument(
                    "user_table knots must have increasing x and non-decreasing y".into(),
                ));
            }
        }
        let (xa, ya) = knots[knots.len() - 2];
        let (xb, yb) = knots[knots.len() - 1];
        if !((yb - ya) / (xb - xa) > 0.0) {
            return Err(Error::Argument(
                "user_table last segment must be strictly increasing".into(),
            ));
        }
        if knots[0].1 < 0.0 {
            return Err(Error::Argument("user_table values must be non-negative".into()));
        }
        let x0 = knots[0].0;
        Ok(Self {
            kind: ScaleKind::UserTable(knots),
            x0,
        })
    }

    /// Moves the freeze point. The value there must be finite and non-negative.
    pub fn with_freeze_point(mut self, x0: f64) -> Result<Self> {
        let v = self.raw(x0);
        if !x0.is_finite() || !v.is_finite() || v < 0.0 {
            return Err(Error::Argument(format!(
                "freeze point {x0} gives scale value {v}; need a finite non-negative value"
            )));
        }
        self.x0 = x0;
        Ok(self)
    }

    pub fn kind(&self) -> &ScaleKind {
        &self.kind
    }

    pub fn freeze_point(&self) -> f64 {
        self.x0
    }

    pub fn name(&self) -> String {
        match &self.kind {
            ScaleKind::Identity => "identity".into(),
            ScaleKind::LogPlus => "log_plus".into(),
            ScaleKind::IteratedLog(p) => format!("iterated_log({p})"),
            ScaleKind::Power(c) => format!("power({c})"),
            ScaleKind::Linear { a, b } => format!("linear({a},{b})"),
            ScaleKind::UserTable(k) => format!("user_table[{}]", k.len()),
            ScaleKind::ComposedLog(inner) => format!("{}∘log", inner.name()),
        }
    }

    fn raw(&self, x: f64) -> f64 {
        match &self.kind {
            ScaleKind::Identity => x,
            ScaleKind::LogPlus => x.ln(),
            ScaleKind::IteratedLog(p) => log_tower(*p, x),
            ScaleKind::Power(c) => x.powf(*c),
            ScaleKind::Linear { a, b } => a * x + b,
            ScaleKind::UserTable(knots) => {
                let i = knots.partition_point(|&(kx, _)| kx <= x);
                let (lo, hi) = if i == 0 {
                    (knots[0], knots[1])
                } else if i >= knots.len() {
                    (knots[knots.len() - 2], knots[knots.len() - 1])
                } else {
                    (knots[i - 1], knots[i])
                };
                lo.1 + (hi.1 - lo.1) * (x - lo.0) / (hi.0 - lo.0)
            }
            ScaleKind::ComposedLog(inner) => inner.eval(x.ln()),
        }
    }

    /// Value at `x`; the value at `x0` for every `x <= x0`.
    pub fn eval(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        self.raw(x.max(self.x0))
    }

    /// Smallest `x` with `s(x) >= y`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        let floor = self.eval(self.x0);
        if y.is_nan() || y < floor {
            return Err(Error::Domain(format!(
                "inverse of {} at {y} below its floor {floor}",
                self.name()
            )));
        }
        if y == floor {
            return Ok(self.x0);
        }
        let x = match &self.kind {
            ScaleKind::Identity => y,
            ScaleKind::LogPlus => y.exp(),
            ScaleKind::IteratedLog(p) => exp_tower(*p, y),
            ScaleKind::Linear { a, b } => (y - b) / a,
            ScaleKind::Power(c) => y.powf(1.0 / c),
            _ => return self.inverse_by_bisection(y),
        };
        Ok(x.max(self.x0))
    }

    fn inverse_by_bisection(&self, y: f64) -> Result<f64> {
        let mut lo = self.x0;
        let mut step = 1.0f64.max(self.x0.abs());
        let mut hi = self.x0 + step;
        while self.eval(hi) < y {
            lo = hi;
            step *= 2.0;
            hi = self.x0 + step;
            if !hi.is_finite() {
                return Err(Error::Domain(format!(
                    "inverse of {} at {y} is beyond f64 range",
                    self.name()
                )));
            }
        }
        while hi - lo > 1e-12 * hi.abs().max(1.0) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) >= y {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// `t(x) = s(log x)`, frozen below `exp(x0)`.
    pub fn compose_with_log(&self) -> ScaleFunction {
        ScaleFunction {
            x0: self.x0.exp(),
            kind: ScaleKind::ComposedLog(Box::new(self.clone())),
        }
    }
}

/// Serializable scale description, as written in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScaleSpec {
    Identity {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<f64>,
    },
    LogPlus {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<f64>,
    },
    IteratedLog {
        p: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<f64>,
    },
    Power {
        c: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<f64>,
    },
    Linear {
        a: f64,
        b: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<f64>,
    },
    UserTable {
        knots: Vec<(f64, f64)>,
    },
    ComposedLog {
        inner: Box<ScaleSpec>,
    },
}

impl ScaleSpec {
    pub fn build(&self) -> Result<ScaleFunction> {
        let (s, x0) = match self {
            ScaleSpec::Identity { x0 } => (ScaleFunction::identity(), *x0),
            ScaleSpec::LogPlus { x0 } => (ScaleFunction::log_plus(), *x0),
            ScaleSpec::IteratedLog { p, x0 } => (ScaleFunction::iterated_log(*p)?, *x0),
            ScaleSpec::Power { c, x0 } => (ScaleFunction::power(*c)?, *x0),
            ScaleSpec::Linear { a, b, x0 } => (ScaleFunction::linear(*a, *b)?, *x0),
            ScaleSpec::UserTable { knots } => (ScaleFunction::user_table(knots.clone())?, None),
            ScaleSpec::ComposedLog { inner } => (inner.build()?.compose_with_log(), None),
        };
        match x0 {
            Some(x0) => s.with_freeze_point(x0),
            None => Ok(s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleClass {
    /// `s(a+b) <= s(a) + s(b) + c` on all grid pairs.
    L1 { c: f64 },
    /// `s(x + K)/s(x) -> 1`; grid pairs are `(x, K)`.
    L2,
    /// Subadditivity on all grid pairs.
    L3,
    /// `s(log x) = o(s(x))`; the first entry of each grid pair is `x`.
    CondII,
}

impl ScaleClass {
    pub fn l1() -> Self {
        ScaleClass::L1 { c: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditVerdict {
    Consistent,
    Falsified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub property: String,
    pub grid: Vec<(f64, f64)>,
    pub worst_violation: f64,
    pub tolerance: f64,
    pub verdict: AuditVerdict,
    pub note: String,
}

impl AuditReport {
    fn new(property: String, grid: &[(f64, f64)], worst: f64, tolerance: f64) -> Self {
        let verdict = if worst > tolerance || worst.is_nan() {
            AuditVerdict::Falsified
        } else {
            AuditVerdict::Consistent
        };
        Self {
            property,
            grid: grid.to_vec(),
            worst_violation: worst,
            tolerance,
            verdict,
            note: "sampled check on a finite grid; consistent is not a proof".into(),
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.verdict == AuditVerdict::Consistent
    }
}

/// Max over the last quarter (by first coordinate) of `stat`.
fn tail_max(points: &mut [(f64, f64)]) -> f64 {
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let start = points.len() - (points.len().div_ceil(4)).max(1);
    points[start..]
        .iter()
        .map(|p| p.1)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn audit_class(s: &ScaleFunction, cls: ScaleClass, grid: &[(f64, f64)]) -> Result<AuditReport> {
    if grid.is_empty() {
        return Err(Error::Argument("audit grid is empty".into()));
    }
    let x0 = s.freeze_point();
    if grid.iter().any(|&(a, _)| a < x0) {
        return Err(Error::Argument(format!(
            "audit grid has points below the freeze point {x0}"
        )));
    }
    let report = match cls {
        ScaleClass::L1 { .. } | ScaleClass::L3 => {
            let c = match cls {
                ScaleClass::L1 { c } => c,
                _ => 0.0,
            };
            if grid.iter().any(|&(_, b)| b < x0) {
                return Err(Error::Argument(format!(
                    "audit grid has points below the freeze point {x0}"
                )));
            }
            let worst = grid
                .iter()
                .map(|&(a, b)| {
                    let lhs = s.eval(a + b);
                    let rhs = s.eval(a) + s.eval(b) + c;
                    ((lhs - rhs) / rhs.abs().max(1.0)).max(0.0)
                })
                .fold(0.0, f64::max);
            let name = match cls {
                ScaleClass::L1 { c } => format!("L1(c={c})"),
                _ => "L3".into(),
            };
            AuditReport::new(name, grid, worst, INEQUALITY_SLACK)
        }
        ScaleClass::L2 => {
            let mut pts: Vec<(f64, f64)> = grid
                .iter()
                .map(|&(x, k)| (x, (s.eval(x + k) / s.eval(x) - 1.0).abs()))
                .collect();
            AuditReport::new("L2".into(), grid, tail_max(&mut pts), TREND_TOLERANCE)
        }
        ScaleClass::CondII => {
            let mut pts: Vec<(f64, f64)> = grid
                .iter()
                .map(|&(x, _)| (x, (s.eval(x.ln()) / s.eval(x)).abs()))
                .collect();
            AuditReport::new(
                "cond_ii: s(log x) = o(s(x))".into(),
                grid,
                tail_max(&mut pts),
                TREND_TOLERANCE,
            )
        }
    };
    Ok(report)
}

/// Class declarations carried by a triple.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeclaredClasses {
    pub alpha_l1: bool,
    pub beta_l2: bool,
    pub gamma_l3: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaleTriple {
    pub alpha: ScaleFunction,
    pub beta: ScaleFunction,
    pub gamma: ScaleFunction,
    pub declared: DeclaredClasses,
    /// Constant used for the α ∈ L1 audit.
    pub l1_constant: f64,
}

impl ScaleTriple {
    /// Builds a triple declaring α ∈ L1, β ∈ L2, γ ∈ L3, auditing each
    /// declaration on [`construction_grid`].
    pub fn new(alpha: ScaleFunction, beta: ScaleFunction, gamma: ScaleFunction) -> Result<Self> {
        Self::with_l1_constant(alpha, beta, gamma, 1.0)
    }

    pub fn with_l1_constant(
        alpha: ScaleFunction,
        beta: ScaleFunction,
        gamma: ScaleFunction,
        c: f64,
    ) -> Result<Self> {
        let triple = Self {
            alpha,
            beta,
            gamma,
            declared: DeclaredClasses {
                alpha_l1: true,
                beta_l2: true,
                gamma_l3: true,
            },
            l1_constant: c,
        };
        for (label, s, cls) in [
            ("alpha", &triple.alpha, ScaleClass::L1 { c }),
            ("beta", &triple.beta, ScaleClass::L2),
            ("gamma", &triple.gamma, ScaleClass::L3),
        ] {
            let report = audit_class(s, cls, &construction_grid(s, cls))?;
            if !report.is_consistent() {
                return Err(Error::Argument(format!(
                    "{label} = {} falsifies its declared class {} (worst violation {:.3e})",
                    s.name(),
                    report.property,
                    report.worst_violation
                )));
            }
        }
        Ok(triple)
    }

    /// The classical triple (identity, identity, identity).
    pub fn classical() -> Self {
        Self::new(
            ScaleFunction::identity(),
            ScaleFunction::identity(),
            ScaleFunction::identity(),
        )
        .expect("identity triple is valid")
    }

    /// The hyper-order triple (log_plus, identity, identity).
    pub fn hyper() -> Self {
        Self::new(
            ScaleFunction::log_plus(),
            ScaleFunction::identity(),
            ScaleFunction::identity(),
        )
        .expect("log_plus triple is valid")
    }

    /// The (α(log), β, γ) triple.
    pub fn log_wrapped(&self) -> Result<Self> {
        Self::with_l1_constant(
            self.alpha.compose_with_log(),
            self.beta.clone(),
            self.gamma.clone(),
            self.l1_constant,
        )
    }

    /// `β(log γ(r))`.
    pub fn denominator(&self, r: f64) -> f64 {
        self.beta.eval(self.gamma.eval(r).ln())
    }

    pub fn describe(&self) -> String {
        format!(
            "({}, {}, {})",
            self.alpha.name(),
            self.beta.name(),
            self.gamma.name()
        )
    }
}

/// Geometric sample points from `max(x0, 1)` over six decades.
fn geometric_points(start: f64, n: usize) -> Vec<f64> {
    let ratio = 10f64.powf(6.0 / (n - 1) as f64);
    (0..n).map(|i| start * ratio.powi(i as i32)).collect()
}

/// Default grid used when a triple is constructed.
pub fn construction_grid(s: &ScaleFunction, cls: ScaleClass) -> Vec<(f64, f64)> {
    let start = s.freeze_point().max(1.0);
    let pts = geometric_points(start, 24);
    match cls {
        ScaleClass::L2 => pts.iter().map(|&x| (x, 1.0)).collect(),
        ScaleClass::CondII => pts.iter().map(|&x| (x, 0.0)).collect(),
        _ => pts
            .iter()
            .flat_map(|&a| pts.iter().step_by(3).map(move |&b| (a, b)))
            .collect(),
    }
}

/// Condition (ii) for a triple: `α(log^[p] x) = o(β(log γ(x)))` and
/// `α(log x) = o(α(x))`, both as tail statistics over the first coordinates
/// of `grid`.
pub fn audit_condition_ii(t: &ScaleTriple, p: u32, grid: &[(f64, f64)]) -> Result<Vec<AuditReport>> {
    if grid.is_empty() {
        return Err(Error::Argument("audit grid is empty".into()));
    }
    let mut iterated: Vec<(f64, f64)> = grid
        .iter()
        .map(|&(x, _)| (x, (t.alpha.eval(log_tower(p, x)) / t.denominator(x)).abs()))
        .collect();
    let mut self_log: Vec<(f64, f64)> = grid
        .iter()
        .map(|&(x, _)| (x, (t.alpha.eval(x.ln()) / t.alpha.eval(x)).abs()))
        .collect();
    Ok(vec![
        AuditReport::new(
            format!("cond_ii: alpha(log^[{p}] x) = o(beta(log gamma(x)))"),
            grid,
            tail_max(&mut iterated),
            TREND_TOLERANCE,
        ),
        AuditReport::new(
            "cond_ii: alpha(log x) = o(alpha(x))".into(),
            grid,
            tail_max(&mut self_log),
            TREND_TOLERANCE,
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eval_examples() {
        assert_eq!(ScaleFunction::identity().eval(5.0), 5.0);
        let l1 = ScaleFunction::iterated_log(1).unwrap();
        assert!((l1.eval(std::f64::consts::E) - 1.0).abs() < 1e-15);
        let lp = ScaleFunction::log_plus().with_freeze_point(1.0).unwrap();
        assert_eq!(lp.eval(0.5), 0.0);
        assert_eq!(ScaleFunction::log_plus().eval(0.5), 1.0);
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(ScaleFunction::identity().inverse(7.0).unwrap(), 7.0);
        let l1 = ScaleFunction::iterated_log(1).unwrap();
        assert!((l1.inverse(2.0).unwrap() - 7.389_056_098_930_65).abs() < 1e-12);
        assert!(ScaleFunction::log_plus().inverse(0.5).is_err());
    }

    #[test]
    fn compose_with_log_examples() {
        let t = ScaleFunction::identity().compose_with_log();
        assert!((t.eval(3f64.exp()) - 3.0).abs() < 1e-14);
        let t = ScaleFunction::iterated_log(1).unwrap().compose_with_log();
        let x = 1e40;
        assert!((t.eval(x) - x.ln().ln()).abs() < 1e-14);
        assert_eq!(t.eval(0.5), t.eval(t.freeze_point()));
    }

    #[test]
    fn audit_identity_is_subadditive_with_equality() {
        let g = ScaleFunction::identity();
        let grid: Vec<_> = (1..20).map(|i| (i as f64, (i * 3) as f64)).collect();
        let r = audit_class(&g, ScaleClass::L3, &grid).unwrap();
        assert!(r.is_consistent());
        assert_eq!(r.worst_violation, 0.0);
    }

    #[test]
    fn audit_square_is_not_subadditive() {
        let sq = ScaleFunction::user_table(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 4.0)]).unwrap();
        let r = audit_class(&sq, ScaleClass::L3, &[(1.0, 1.0)]).unwrap();
        assert_eq!(r.verdict, AuditVerdict::Falsified);
        assert!(r.worst_violation > 0.0);
    }

    #[test]
    fn audit_log_plus_l1_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let grid: Vec<_> = (0..1000)
            .map(|_| (rng.gen_range(10.0f64..1e6), rng.gen_range(10.0f64..1e6)))
            .collect();
        // brute force: log(a+b) <= log a + log b for a, b >= 2
        assert!(grid.iter().all(|&(a, b)| (a + b).ln() <= a.ln() + b.ln()));
        let r = audit_class(&ScaleFunction::log_plus(), ScaleClass::l1(), &grid).unwrap();
        assert!(r.is_consistent());
    }

    #[test]
    fn audit_errors() {
        assert!(audit_class(&ScaleFunction::identity(), ScaleClass::L3, &[]).is_err());
        assert!(audit_class(&ScaleFunction::log_plus(), ScaleClass::L3, &[(1.0, 5.0)]).is_err());
    }

    #[test]
    fn l2_and_cond_ii_trends() {
        let grid: Vec<_> = (0..40).map(|i| (10f64.powf(i as f64 / 4.0), 1.0)).collect();
        let r = audit_class(&ScaleFunction::identity(), ScaleClass::L2, &grid).unwrap();
        assert!(r.is_consistent());
        let r = audit_class(&ScaleFunction::identity(), ScaleClass::CondII, &grid).unwrap();
        assert!(r.is_consistent());
        // exp-like growth is not in L2
        let steep = ScaleFunction::user_table(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 1e9)]).unwrap();
        let grid: Vec<_> = (0..8).map(|i| (0.1 * i as f64, 1.0)).collect();
        let r = audit_class(&steep, ScaleClass::L2, &grid).unwrap();
        assert_eq!(r.verdict, AuditVerdict::Falsified);
    }

    #[test]
    fn condition_ii_for_classical_triple() {
        let t = ScaleTriple::classical();
        let grid: Vec<_> = (1..60).map(|i| (10f64.powi(i * 5), 0.0)).collect();
        let reports = audit_condition_ii(&t, 2, &grid).unwrap();
        assert!(reports.iter().all(|r| r.is_consistent()), "{reports:?}");
    }

    #[test]
    fn triple_construction_audits_declarations() {
        assert!(ScaleTriple::new(
            ScaleFunction::identity(),
            ScaleFunction::identity(),
            ScaleFunction::power(0.5).unwrap(),
        )
        .is_ok());
        let superadditive =
            ScaleFunction::user_table(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 4.0)]).unwrap();
        assert!(ScaleTriple::new(
            ScaleFunction::identity(),
            ScaleFunction::identity(),
            superadditive,
        )
        .is_err());
        let w = ScaleTriple::classical().log_wrapped().unwrap();
        assert!((w.alpha.eval(1e10) - 1e10_f64.ln()).abs() < 1e-12);
        let h = ScaleTriple::hyper().log_wrapped().unwrap();
        assert!((h.alpha.eval(1e10) - 1e10_f64.ln().ln()).abs() < 1e-12);
    }

    #[test]
    fn spec_round_trip_and_unknown_kind() {
        let json = r#"{"kind":"composed_log","inner":{"kind":"log_plus"}}"#;
        let spec: ScaleSpec = serde_json::from_str(json).unwrap();
        let s = spec.build().unwrap();
        assert!((s.eval(1e30) - 1e30_f64.ln().ln()).abs() < 1e-12);
        assert!(serde_json::from_str::<ScaleSpec>(r#"{"kind":"cubic"}"#).is_err());
    }

    fn random_table() -> impl Strategy<Value = ScaleFunction> {
        prop::collection::vec((0.01f64..5.0, 0.0f64..5.0), 2..12).prop_map(|steps| {
            let mut x = 0.0;
            let mut y = 0.0;
            let mut knots = vec![(0.0, 0.0)];
            for (dx, dy) in steps {
                x += dx;
                y += dy;
                knots.push((x, y));
            }
            let (lx, ly) = *knots.last().unwrap();
            knots.push((lx + 1.0, ly + 1.0));
            ScaleFunction::user_table(knots).unwrap()
        })
    }

    fn continuous_scale() -> impl Strategy<Value = ScaleFunction> {
        prop_oneof![
            Just(ScaleFunction::identity()),
            Just(ScaleFunction::log_plus()),
            (1u32..3).prop_map(|p| ScaleFunction::iterated_log(p).unwrap()),
            (0.05f64..1.0).prop_map(|c| ScaleFunction::power(c).unwrap()),
            (0.1f64..10.0, -5.0f64..5.0).prop_map(|(a, b)| ScaleFunction::linear(a, b).unwrap()),
            Just(ScaleFunction::log_plus().compose_with_log()),
            random_table(),
        ]
    }

    proptest! {
        #[test]
        fn eval_is_nondecreasing(s in continuous_scale(), xs in prop::collection::vec(0.0f64..1e4, 2..40)) {
            let mut xs = xs;
            xs.sort_by(f64::total_cmp);
            for w in xs.windows(2) {
                prop_assert!(s.eval(w[0]) <= s.eval(w[1]) + 1e-12 * s.eval(w[1]).abs());
            }
        }

        #[test]
        fn inverse_round_trip(s in continuous_scale(), u in 0.0f64..1.0) {
            let floor = s.eval(s.freeze_point());
            let y = floor + u * 5.0;
            let x = s.inverse(y).unwrap();
            prop_assert!((s.eval(x) - y).abs() <= 1e-9 * y.abs().max(1.0));
        }

        #[test]
        fn inverse_is_smallest_preimage(s in random_table(), u in 0.001f64..1.0) {
            let floor = s.eval(s.freeze_point());
            let y = floor + u * 20.0;
            let x = s.inverse(y).unwrap();
            prop_assert!(s.eval(x) >= y - 1e-9 * y.max(1.0));
            prop_assert!(s.eval(x - 1e-6) < y);
        }

        #[test]
        fn concave_scales_pass_l3(c in 0.05f64..1.0, pairs in prop::collection::vec((0.0f64..1e6, 0.0f64..1e6), 1..50)) {
            let s = ScaleFunction::power(c).unwrap();
            let r = audit_class(&s, ScaleClass::L3, &pairs).unwrap();
            prop_assert!(r.is_consistent(), "{:?}", r.worst_violation);
        }
    }
}
