//! Entire functions as truncated power series with extended-range coefficients.
//!
//! Besides coefficient access this module provides the Wiman–Valiron raw
//! material (maximum term, central index and its jump radii), the maximum
//! modulus on a circle, and circle evaluators used by the quadrature and
//! winding-number code.
//!
//! Evaluation on `|z| = r` sums only the terms within `e^-45` of the maximum
//! term, in ordinary `f64` after dividing by `μ(r)`. The result is accurate
//! to `O(N·eps)` relative to `μ(r)`; near zeros only that absolute accuracy
//! is available. Builtins also carry an exact closed form, which the
//! default circle evaluator prefers.

use std::f64::consts::{LN_2, PI};
use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::erfloat::{ExtendedComplex, ExtendedReal};
use crate::error::{Error, Result};

/// Default tail tolerance relative to `μ(r)` for the guaranteed radius.
pub const TAIL_TOL: f64 = 1e-12;

/// Terms below `μ(r)·e^-WINDOW_CUTOFF` are dropped from circle sums.
const WINDOW_CUTOFF: f64 = 45.0;

/// Radii probed when certifying truncation: 64 points, geometric on `[2^-6, 2^10]`.
fn radius_grid() -> impl Iterator<Item = f64> {
    (0..64).map(|k| 2f64.powf(-6.0 + 16.0 * k as f64 / 63.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Builtin(String),
    OdeSolution,
    Combination,
}

/// Named test subjects.
#[derive(Clone, Debug, PartialEq)]
pub enum Builtin {
    Exp,
    Sin,
    Cos,
    /// Polynomial with the given coefficients `c_0, c_1, …`.
    Poly(Vec<Complex64>),
    /// `e^{e^z}`.
    ExpExp,
}

impl Builtin {
    /// Parses a builtin name. Polynomials need their coefficients, so use
    /// [`Builtin::Poly`] directly for them.
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "exp" => Ok(Builtin::Exp),
            "sin" => Ok(Builtin::Sin),
            "cos" => Ok(Builtin::Cos),
            "exp_exp" => Ok(Builtin::ExpExp),
            "airy_like" => Err(Error::Argument(
                "airy_like is an ODE solution; build it with the ode module".into(),
            )),
            "poly" => Err(Error::Argument("poly needs a coefficient list".into())),
            other => Err(Error::Argument(format!("unknown builtin '{other}'"))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Builtin::Exp => "exp".into(),
            Builtin::Sin => "sin".into(),
            Builtin::Cos => "cos".into(),
            Builtin::Poly(c) => format!("poly(deg {})", c.len().saturating_sub(1)),
            Builtin::ExpExp => "exp_exp".into(),
        }
    }
}

/// A complex number in a config file: either a real number or `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexValue {
    pub fn to_c64(self) -> Complex64 {
        match self {
            ComplexValue::Real(x) => Complex64::new(x, 0.0),
            ComplexValue::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

/// Config descriptor of a series: `{"builtin": "exp"}` or `{"poly": [c0, c1, …]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeriesSpec {
    Builtin {
        builtin: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_terms: Option<usize>,
    },
    Poly {
        poly: Vec<ComplexValue>,
    },
}

impl SeriesSpec {
    pub fn builtin(name: &str) -> Self {
        SeriesSpec::Builtin { builtin: name.into(), n_terms: None }
    }

    pub fn poly(c: &[f64]) -> Self {
        SeriesSpec::Poly { poly: c.iter().map(|&x| ComplexValue::Real(x)).collect() }
    }

    pub fn resolve(&self) -> Result<Builtin> {
        match self {
            SeriesSpec::Builtin { builtin, .. } => Builtin::parse(builtin),
            SeriesSpec::Poly { poly } => {
                if poly.is_empty() {
                    return Err(Error::Argument("poly needs at least one coefficient".into()));
                }
                Ok(Builtin::Poly(poly.iter().map(|c| c.to_c64()).collect()))
            }
        }
    }

    pub fn is_polynomial(&self) -> bool {
        matches!(self, SeriesSpec::Poly { .. })
    }

    /// Builds the series; an explicit `n_terms` in the descriptor wins over `default_terms`.
    pub fn build(&self, default_terms: usize) -> Result<PowerSeries> {
        let n = match self {
            SeriesSpec::Builtin { n_terms: Some(n), .. } => *n,
            _ => default_terms,
        };
        PowerSeries::builtin(&self.resolve()?, n)
    }
}

/// Exact analytic form of a series, closed under derivative, sum and product.
#[derive(Clone, Debug, PartialEq)]
pub enum ClosedForm {
    /// `e^{a z}`.
    ExpLinear(Complex64),
    Sin,
    Cos,
    ExpExp,
    Polynomial(Vec<Complex64>),
    Scaled(Complex64, Box<ClosedForm>),
    Sum(Box<ClosedForm>, Box<ClosedForm>),
    Product(Box<ClosedForm>, Box<ClosedForm>),
}

/// `(cosh y, sinh y)` in extended range.
fn cosh_sinh(y: f64) -> Result<(ExtendedReal, ExtendedReal)> {
    let a = y.abs();
    let half = ExtendedReal::exp(a - LN_2)?;
    let t = (-2.0 * a).exp();
    let ch = half.mul_f64(1.0 + t);
    let sh = half.mul_f64(-(-2.0 * a).exp_m1()).mul_f64(y.signum());
    Ok((ch, sh))
}

fn horner(c: &[Complex64], z: Complex64) -> ExtendedComplex {
    // Extended Horner so large |z|^deg cannot overflow.
    let zz = ExtendedComplex::from_f64(z.re, z.im);
    let mut acc = ExtendedComplex::ZERO;
    for a in c.iter().rev() {
        acc = acc * zz + ExtendedComplex::from_f64(a.re, a.im);
    }
    acc
}

impl ClosedForm {
    pub fn eval(&self, z: Complex64) -> Result<ExtendedComplex> {
        Ok(match self {
            ClosedForm::ExpLinear(a) => {
                let w = a * z;
                ExtendedComplex::from_polar(w.re, w.im)?
            }
            ClosedForm::Sin => {
                let (ch, sh) = cosh_sinh(z.im)?;
                let (s, c) = z.re.sin_cos();
                ExtendedComplex::new(ch.mul_f64(s), sh.mul_f64(c))
            }
            ClosedForm::Cos => {
                let (ch, sh) = cosh_sinh(z.im)?;
                let (s, c) = z.re.sin_cos();
                ExtendedComplex::new(ch.mul_f64(c), -sh.mul_f64(s))
            }
            ClosedForm::ExpExp => {
                if z.re > 700.0 {
                    return Err(Error::ExponentOverflow(format!("exp(exp({z}))")));
                }
                let w = z.exp();
                ExtendedComplex::from_polar(w.re, w.im)?
            }
            ClosedForm::Polynomial(c) => horner(c, z),
            ClosedForm::Scaled(k, f) => f.eval(z)?.mul_c64(k.re, k.im),
            ClosedForm::Sum(f, g) => f.eval(z)? + g.eval(z)?,
            ClosedForm::Product(f, g) => f.eval(z)?.checked_mul(g.eval(z)?)?,
        })
    }

    pub fn derivative(&self) -> ClosedForm {
        use ClosedForm::*;
        match self {
            ExpLinear(a) => Scaled(*a, Box::new(ExpLinear(*a))),
            Sin => Cos,
            Cos => Scaled(Complex64::new(-1.0, 0.0), Box::new(Sin)),
            ExpExp => Product(Box::new(ExpLinear(Complex64::new(1.0, 0.0))), Box::new(ExpExp)),
            Polynomial(c) => Polynomial(
                c.iter()
                    .enumerate()
                    .skip(1)
                    .map(|(n, a)| a * n as f64)
                    .collect(),
            ),
            Scaled(k, f) => Scaled(*k, Box::new(f.derivative())),
            Sum(f, g) => Sum(Box::new(f.derivative()), Box::new(g.derivative())),
            Product(f, g) => Sum(
                Box::new(Product(Box::new(f.derivative()), g.clone())),
                Box::new(Product(f.clone(), Box::new(g.derivative()))),
            ),
        }
    }
}

/// Maximum term `μ(r)` (as a natural log) and central index `ν(r)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MaxTermResult {
    pub log_mu: f64,
    pub nu: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CombineOp {
    Add,
    Sub,
    CauchyProduct,
}

#[derive(Clone, Debug)]
pub struct PowerSeries {
    coeffs: Vec<ExtendedComplex>,
    ln_abs: Vec<f64>,
    provenance: Provenance,
    guaranteed_radius: f64,
    closed_form: Option<ClosedForm>,
    polynomial: bool,
}

/// `ln(1/n!)` for `n = 0..len`.
pub fn ln_inverse_factorials(len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut acc = 0.0;
    for n in 0..len {
        if n > 0 {
            acc -= (n as f64).ln();
        }
        out.push(acc);
    }
    out
}

/// `ln B_n` for the Bell numbers, `n = 0..len`, from
/// `B_{n+1} = Σ_k C(n,k) B_k` evaluated with log-sum-exp (all terms positive).
pub fn ln_bell_numbers(len: usize) -> Vec<f64> {
    let mut ln_fact = vec![0.0; len.max(1)];
    for n in 1..len {
        ln_fact[n] = ln_fact[n - 1] + (n as f64).ln();
    }
    let mut bell = Vec::with_capacity(len);
    if len == 0 {
        return bell;
    }
    bell.push(0.0);
    for n in 0..len.saturating_sub(1) {
        let terms: Vec<f64> = (0..=n)
            .map(|k| ln_fact[n] - ln_fact[k] - ln_fact[n - k] + bell[k])
            .collect();
        let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = terms.iter().map(|t| (t - m).exp()).sum();
        bell.push(m + s.ln());
    }
    bell
}

fn real_coeffs_from_ln(ln: &[f64], signs: impl Fn(usize) -> f64) -> Result<Vec<ExtendedComplex>> {
    ln.iter()
        .enumerate()
        .map(|(n, &l)| {
            let s = signs(n);
            if s == 0.0 {
                Ok(ExtendedComplex::ZERO)
            } else {
                Ok(ExtendedComplex::from_real(ExtendedReal::exp(l)?.mul_f64(s)))
            }
        })
        .collect()
}

impl PowerSeries {
    /// Builds a series from raw coefficients; the guaranteed radius is computed.
    pub fn from_coeffs(coeffs: Vec<ExtendedComplex>, provenance: Provenance) -> Result<Self> {
        Self::assemble(coeffs, provenance, None, false)
    }

    /// Exact polynomial: no truncation, infinite guaranteed radius.
    pub fn polynomial(coeffs: &[Complex64]) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Argument("polynomial needs at least one coefficient".into()));
        }
        let c = coeffs
            .iter()
            .map(|a| ExtendedComplex::from_f64(a.re, a.im))
            .collect();
        Self::assemble(
            c,
            Provenance::Builtin(Builtin::Poly(coeffs.to_vec()).name()),
            Some(ClosedForm::Polynomial(coeffs.to_vec())),
            true,
        )
    }

    fn assemble(
        coeffs: Vec<ExtendedComplex>,
        provenance: Provenance,
        closed_form: Option<ClosedForm>,
        polynomial: bool,
    ) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Argument("series needs at least one coefficient".into()));
        }
        let ln_abs = coeffs.iter().map(|c| c.ln_abs()).collect();
        let mut s = Self {
            coeffs,
            ln_abs,
            provenance,
            guaranteed_radius: 0.0,
            closed_form,
            polynomial,
        };
        s.guaranteed_radius = s.compute_guaranteed_radius();
        Ok(s)
    }

    pub fn builtin(b: &Builtin, n_terms: usize) -> Result<Self> {
        if n_terms < 1 {
            return Err(Error::Argument("n_terms must be >= 1".into()));
        }
        let inv_fact = ln_inverse_factorials(n_terms);
        let prov = Provenance::Builtin(b.name());
        let (coeffs, form) = match b {
            Builtin::Poly(c) => return Self::polynomial(c),
            Builtin::Exp => (
                real_coeffs_from_ln(&inv_fact, |_| 1.0)?,
                ClosedForm::ExpLinear(Complex64::new(1.0, 0.0)),
            ),
            Builtin::Sin => (
                real_coeffs_from_ln(&inv_fact, |n| match n % 4 {
                    1 => 1.0,
                    3 => -1.0,
                    _ => 0.0,
                })?,
                ClosedForm::Sin,
            ),
            Builtin::Cos => (
                real_coeffs_from_ln(&inv_fact, |n| match n % 4 {
                    0 => 1.0,
                    2 => -1.0,
                    _ => 0.0,
                })?,
                ClosedForm::Cos,
            ),
            Builtin::ExpExp => {
                let bell = ln_bell_numbers(n_terms);
                let ln: Vec<f64> = bell.iter().zip(&inv_fact).map(|(b, f)| 1.0 + b + f).collect();
                (real_coeffs_from_ln(&ln, |_| 1.0)?, ClosedForm::ExpExp)
            }
        };
        Self::assemble(coeffs, prov, Some(form), false)
    }

    pub fn coeffs(&self) -> &[ExtendedComplex] {
        &self.coeffs
    }

    pub fn n_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn guaranteed_radius(&self) -> f64 {
        self.guaranteed_radius
    }

    pub fn closed_form(&self) -> Option<&ClosedForm> {
        self.closed_form.as_ref()
    }

    pub fn is_polynomial(&self) -> bool {
        self.polynomial
    }

    /// Same coefficients, without the closed form: evaluation then always sums the series.
    pub fn without_closed_form(&self) -> Self {
        let mut s = self.clone();
        s.closed_form = None;
        s
    }

    /// Keeps only the first `n` coefficients (and drops the closed form).
    pub fn truncated(&self, n: usize) -> Result<Self> {
        let n = n.min(self.n_terms());
        Self::assemble(self.coeffs[..n].to_vec(), self.provenance.clone(), None, self.polynomial)
    }

    /// The stored coefficients read as an exact polynomial: no closed form,
    /// infinite guaranteed radius.
    pub fn as_exact_polynomial(&self) -> Result<Self> {
        Self::assemble(self.coeffs.clone(), self.provenance.clone(), None, true)
    }

    /// Multiplies every coefficient by `k`.
    pub fn scaled(&self, k: Complex64) -> Result<Self> {
        let coeffs = self.coeffs.iter().map(|c| c.mul_c64(k.re, k.im)).collect();
        let form = self
            .closed_form
            .as_ref()
            .map(|f| ClosedForm::Scaled(k, Box::new(f.clone())));
        Self::assemble(coeffs, Provenance::Combination, form, self.polynomial)
    }

    fn compute_guaranteed_radius(&self) -> f64 {
        if self.polynomial {
            return f64::INFINITY;
        }
        let nonzero: Vec<usize> = (0..self.n_terms())
            .filter(|&n| self.ln_abs[n].is_finite())
            .collect();
        if nonzero.is_empty() {
            return f64::INFINITY;
        }
        // Last tenth of the nonzero coefficients (at least ten of them).
        let w = (nonzero.len() / 10).max(10).min(nonzero.len());
        let window = &nonzero[nonzero.len() - w..];
        if window.len() < 2 {
            return 0.0;
        }
        // Least-squares slope of ln|a_n| over the window, then the upper
        // envelope line with that slope.
        let xm = window.iter().map(|&n| n as f64).sum::<f64>() / w as f64;
        let ym = window.iter().map(|&n| self.ln_abs[n]).sum::<f64>() / w as f64;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for &n in window {
            let dx = n as f64 - xm;
            sxy += dx * (self.ln_abs[n] - ym);
            sxx += dx * dx;
        }
        let slope = sxy / sxx;
        let intercept = window
            .iter()
            .map(|&n| self.ln_abs[n] - slope * n as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        let first_missing = self.n_terms() as f64;
        let mut best = 0.0;
        for r in radius_grid() {
            let log_r = r.ln();
            let ln_q = slope + log_r;
            if ln_q >= 0.0 {
                break;
            }
            let ln_tail = intercept + first_missing * ln_q - (-ln_q.exp()).ln_1p();
            let log_mu = self.scan_max_term(log_r).0;
            if ln_tail < TAIL_TOL.ln() + log_mu {
                best = r;
            } else {
                break;
            }
        }
        best
    }

    fn scan_max_term(&self, log_r: f64) -> (f64, usize) {
        let mut best = f64::NEG_INFINITY;
        let mut nu = 0;
        for (n, &l) in self.ln_abs.iter().enumerate() {
            if !l.is_finite() {
                continue;
            }
            let t = l + n as f64 * log_r;
            if t >= best {
                best = t;
                nu = n;
            }
        }
        (best, nu)
    }

    /// `μ(r) = max |a_n| r^n` and the largest index attaining it.
    pub fn max_term(&self, log_r: f64) -> Result<MaxTermResult> {
        let (log_mu, nu) = self.scan_max_term(log_r);
        if !log_mu.is_finite() {
            return Err(Error::Degenerate("all coefficients are zero".into()));
        }
        Ok(MaxTermResult { log_mu, nu })
    }

    /// Radii (as `log r`) where the central index changes, with the index
    /// taken from that radius on. Built from the upper convex hull of the
    /// points `(n, ln|a_n|)`, `n <= n_max`; collinear points are dropped so
    /// the largest index wins at every tie.
    pub fn central_index_jumps(&self, n_max: usize) -> Result<Vec<(f64, usize)>> {
        if self.coeffs[0].is_zero() {
            return Err(Error::Precondition(
                "a_0 = 0; divide out the zero at the origin first".into(),
            ));
        }
        let top = n_max.min(self.n_terms() - 1);
        let mut hull: Vec<usize> = Vec::new();
        for n in 0..=top {
            if !self.ln_abs[n].is_finite() {
                continue;
            }
            while hull.len() >= 2 {
                let i = hull[hull.len() - 2];
                let j = hull[hull.len() - 1];
                // Drop j unless it lies strictly above the chord from i to n.
                let lhs = (self.ln_abs[j] - self.ln_abs[i]) * (n - i) as f64;
                let rhs = (self.ln_abs[n] - self.ln_abs[i]) * (j - i) as f64;
                if lhs <= rhs {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(n);
        }
        Ok(hull
            .windows(2)
            .map(|w| {
                let (m, n) = (w[0], w[1]);
                ((self.ln_abs[m] - self.ln_abs[n]) / (n - m) as f64, n)
            })
            .collect())
    }

    /// `ln μ(r)` evaluated as `ln|a_0| + ∫_0^r ν(t)/t dt`, exactly over the step function `ν`.
    pub fn log_mu_from_jumps(&self, jumps: &[(f64, usize)], log_r: f64) -> f64 {
        let mut acc = self.ln_abs[0];
        for (k, &(start, nu)) in jumps.iter().enumerate() {
            if log_r <= start {
                break;
            }
            let end = jumps.get(k + 1).map_or(log_r, |j| j.0.min(log_r));
            acc += nu as f64 * (end - start);
        }
        acc
    }

    fn check_radius(&self, log_r: f64) -> Result<()> {
        let r = log_r.exp();
        if r > self.guaranteed_radius * (1.0 + 1e-12) {
            return Err(Error::Truncation {
                radius: r,
                guaranteed: self.guaranteed_radius,
                n_terms: self.n_terms(),
            });
        }
        Ok(())
    }

    /// Evaluator on `|z| = e^{log_r}`, using the closed form when there is one.
    pub fn circle(&self, log_r: f64) -> Result<CircleEvaluator> {
        match &self.closed_form {
            Some(form) => Ok(CircleEvaluator {
                radius: log_r.exp(),
                mode: Mode::Closed(form.clone()),
            }),
            None => self.series_circle(log_r),
        }
    }

    /// Evaluator that always sums the stored coefficients.
    pub fn series_circle(&self, log_r: f64) -> Result<CircleEvaluator> {
        self.check_radius(log_r)?;
        if self.coeffs.iter().all(|c| c.is_zero()) {
            return Ok(CircleEvaluator { radius: log_r.exp(), mode: Mode::Zero });
        }
        let MaxTermResult { log_mu, .. } = self.max_term(log_r)?;
        let cut = log_mu - WINDOW_CUTOFF;
        let keep: Vec<usize> = (0..self.n_terms())
            .filter(|&n| self.ln_abs[n] + n as f64 * log_r > cut)
            .collect();
        let lo = keep[0];
        let hi = *keep.last().unwrap();
        let b = (lo..=hi)
            .map(|n| {
                let t = self.ln_abs[n] + n as f64 * log_r;
                if !t.is_finite() || t <= cut {
                    return Complex64::new(0.0, 0.0);
                }
                let a = self.coeffs[n];
                let (x, y, _) = a.scaled_parts();
                // a / |a| times exp(t - log_mu)
                let m = x.hypot(y);
                Complex64::new(x / m, y / m) * (t - log_mu).exp()
            })
            .collect();
        Ok(CircleEvaluator {
            radius: log_r.exp(),
            mode: Mode::Window { log_mu, lo, b },
        })
    }

    /// `f(z)` at `z = e^{log_r}·e^{iθ}`.
    pub fn evaluate(&self, log_r: f64, theta: f64) -> Result<ExtendedComplex> {
        self.circle(log_r)?.value(theta)
    }

    /// `ln M(r, f)` and an angle where it is attained.
    pub fn max_modulus(&self, log_r: f64) -> Result<(f64, f64)> {
        let c = self.circle(log_r)?;
        c.max_modulus()
    }

    pub fn log_max_modulus(&self, log_r: f64) -> Result<f64> {
        Ok(self.max_modulus(log_r)?.0)
    }

    pub fn derivative(&self) -> Result<Self> {
        let coeffs: Vec<ExtendedComplex> = if self.n_terms() <= 1 {
            vec![ExtendedComplex::ZERO]
        } else {
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(n, a)| a.mul_f64((n + 1) as f64))
                .collect()
        };
        let form = self.closed_form.as_ref().map(|f| f.derivative());
        Self::assemble(coeffs, self.provenance.clone(), form, self.polynomial)
    }

    /// `f ± g` or the Cauchy product `f·g`. Exact polynomials are zero-padded
    /// to the other operand's length; two truncated series are cut to the
    /// shorter length.
    pub fn combine(f: &Self, g: &Self, op: CombineOp) -> Result<Self> {
        let len = match (f.polynomial, g.polynomial, op) {
            (true, true, CombineOp::CauchyProduct) => f.n_terms() + g.n_terms() - 1,
            (true, true, _) => f.n_terms().max(g.n_terms()),
            (true, false, _) => g.n_terms(),
            (false, true, _) => f.n_terms(),
            (false, false, _) => f.n_terms().min(g.n_terms()),
        };
        let at = |s: &Self, n: usize| s.coeffs.get(n).copied().unwrap_or(ExtendedComplex::ZERO);
        let coeffs: Vec<ExtendedComplex> = match op {
            CombineOp::Add => (0..len).map(|n| at(f, n) + at(g, n)).collect(),
            CombineOp::Sub => (0..len).map(|n| at(f, n) - at(g, n)).collect(),
            CombineOp::CauchyProduct => {
                let mut out = Vec::with_capacity(len);
                for n in 0..len {
                    let mut acc = ExtendedComplex::ZERO;
                    for m in 0..=n {
                        if m < f.n_terms() && n - m < g.n_terms() {
                            acc = acc + f.coeffs[m].checked_mul(g.coeffs[n - m])?;
                        }
                    }
                    out.push(acc);
                }
                out
            }
        };
        let form = match (&f.closed_form, &g.closed_form) {
            (Some(a), Some(b)) => Some(match op {
                CombineOp::Add => ClosedForm::Sum(Box::new(a.clone()), Box::new(b.clone())),
                CombineOp::Sub => ClosedForm::Sum(
                    Box::new(a.clone()),
                    Box::new(ClosedForm::Scaled(Complex64::new(-1.0, 0.0), Box::new(b.clone()))),
                ),
                CombineOp::CauchyProduct => {
                    ClosedForm::Product(Box::new(a.clone()), Box::new(b.clone()))
                }
            }),
            _ => None,
        };
        Self::assemble(
            coeffs,
            Provenance::Combination,
            form,
            f.polynomial && g.polynomial,
        )
    }

    /// Writes `n, ln|a_n|, arg(a_n)` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,ln_abs_a_n,arg_a_n")?;
        for (n, a) in self.coeffs.iter().enumerate() {
            writeln!(w, "{n},{:.17e},{:.17e}", self.ln_abs[n], a.arg())?;
        }
        Ok(())
    }
}

enum Mode {
    Closed(ClosedForm),
    /// Identically zero series.
    Zero,
    Window {
        log_mu: f64,
        lo: usize,
        b: Vec<Complex64>,
    },
}

/// Values of a series on one circle `|z| = r`.
pub struct CircleEvaluator {
    radius: f64,
    mode: Mode,
}

impl CircleEvaluator {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn uses_closed_form(&self) -> bool {
        matches!(self.mode, Mode::Closed(_))
    }

    /// `ln μ(r)` when evaluating from coefficients: the absolute accuracy scale.
    pub fn log_accuracy_scale(&self) -> Option<f64> {
        match &self.mode {
            Mode::Window { log_mu, .. } => Some(*log_mu),
            Mode::Zero => Some(f64::NEG_INFINITY),
            Mode::Closed(_) => None,
        }
    }

    fn window_sum(b: &[Complex64], lo: usize, theta: f64) -> Complex64 {
        let w = Complex64::from_polar(1.0, theta);
        let mut acc = Complex64::new(0.0, 0.0);
        for c in b.iter().rev() {
            acc = acc * w + c;
        }
        acc * Complex64::from_polar(1.0, lo as f64 * theta)
    }

    fn lift(s: Complex64, log_mu: f64) -> Result<ExtendedComplex> {
        ExtendedComplex::from_f64(s.re, s.im).scale(ExtendedReal::exp(log_mu)?)
    }

    pub fn value(&self, theta: f64) -> Result<ExtendedComplex> {
        match &self.mode {
            Mode::Closed(form) => form.eval(Complex64::from_polar(self.radius, theta)),
            Mode::Window { log_mu, lo, b } => Self::lift(Self::window_sum(b, *lo, theta), *log_mu),
            Mode::Zero => Ok(ExtendedComplex::ZERO),
        }
    }

    /// Values at `θ_j = 2πj/m`, `j = 0..m`.
    pub fn values_equispaced(&self, m: usize) -> Result<Vec<ExtendedComplex>> {
        match &self.mode {
            Mode::Zero => Ok(vec![ExtendedComplex::ZERO; m]),
            Mode::Closed(_) => (0..m)
                .map(|j| self.value(2.0 * PI * j as f64 / m as f64))
                .collect(),
            Mode::Window { log_mu, lo, b } => {
                if b.len() < 64 || m < 64 {
                    return (0..m)
                        .map(|j| self.value(2.0 * PI * j as f64 / m as f64))
                        .collect();
                }
                // Fold the trigonometric polynomial modulo m and inverse-FFT it.
                let mut buf = vec![Complex64::new(0.0, 0.0); m];
                for (i, c) in b.iter().enumerate() {
                    buf[(lo + i) % m] += c;
                }
                let fft = FftPlanner::<f64>::new().plan_fft_inverse(m);
                fft.process(&mut buf);
                buf.into_iter().map(|s| Self::lift(s, *log_mu)).collect()
            }
        }
    }

    /// `ln|f|` at `θ`.
    pub fn ln_abs(&self, theta: f64) -> Result<f64> {
        Ok(self.value(theta)?.ln_abs())
    }

    /// `(ln M(r), θ*)`: 64 equispaced angles, then golden-section refinement
    /// around the best three until the improvement falls below `1e-9` relative.
    pub fn max_modulus(&self) -> Result<(f64, f64)> {
        const START: usize = 64;
        let h = 2.0 * PI / START as f64;
        let vals: Vec<f64> = self
            .values_equispaced(START)?
            .iter()
            .map(|v| v.ln_abs())
            .collect();
        let mut order: Vec<usize> = (0..START).collect();
        order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
        let mut best = (vals[order[0]], order[0] as f64 * h);
        let invphi = (5f64.sqrt() - 1.0) / 2.0;
        for &i in order.iter().take(3) {
            let centre = i as f64 * h;
            let (mut a, mut b) = (centre - h, centre + h);
            let mut c = b - invphi * (b - a);
            let mut d = a + invphi * (b - a);
            let mut fc = self.ln_abs(c)?;
            let mut fd = self.ln_abs(d)?;
            let mut local = vals[i].max(fc).max(fd);
            for _ in 0..200 {
                if fc >= fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - invphi * (b - a);
                    fc = self.ln_abs(c)?;
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + invphi * (b - a);
                    fd = self.ln_abs(d)?;
                }
                let next = local.max(fc).max(fd);
                let gain = next - local;
                local = next;
                if (b - a) < 1e-12 || (gain >= 0.0 && gain < 1e-9 * local.abs().max(1e-300) && (b - a) < 1e-6) {
                    break;
                }
            }
            let (theta, v) = if fc >= fd { (c, fc) } else { (d, fd) };
            if v > best.0 {
                best = (v, theta);
            }
            if vals[i] > best.0 {
                best = (vals[i], centre);
            }
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn coeff(f: &PowerSeries, n: usize) -> f64 {
        let a = f.coeffs()[n];
        a.re.to_f64()
    }

    #[test]
    fn builtin_coefficients() {
        let e = PowerSeries::builtin(&Builtin::Exp, 4).unwrap();
        let want = [1.0, 1.0, 0.5, 1.0 / 6.0];
        for (n, w) in want.iter().enumerate() {
            assert!((coeff(&e, n) - w).abs() < 1e-15);
        }
        let s = PowerSeries::builtin(&Builtin::Sin, 4).unwrap();
        assert_eq!(coeff(&s, 0), 0.0);
        assert!((coeff(&s, 1) - 1.0).abs() < 1e-15);
        assert_eq!(coeff(&s, 2), 0.0);
        assert!((coeff(&s, 3) + 1.0 / 6.0).abs() < 1e-15);
        let ee = PowerSeries::builtin(&Builtin::ExpExp, 4).unwrap();
        let e1 = std::f64::consts::E;
        for (n, w) in [e1, e1, e1, 5.0 / 6.0 * e1].iter().enumerate() {
            assert!((coeff(&ee, n) / w - 1.0).abs() < 1e-14, "n = {n}");
        }
        assert!(Builtin::parse("gamma").is_err());
        assert!(Builtin::parse("airy_like").is_err());
        assert!(PowerSeries::builtin(&Builtin::Exp, 0).is_err());
    }

    #[test]
    fn bell_numbers_match_exact_triangle() {
        // Bell triangle in exact integers.
        let mut row = vec![1u128];
        let mut exact = vec![1u128];
        for _ in 0..25 {
            let mut next = vec![*row.last().unwrap()];
            for &v in &row {
                let last = *next.last().unwrap();
                next.push(last + v);
            }
            exact.push(next[0]);
            row = next;
        }
        let ln = ln_bell_numbers(26);
        for (n, &b) in exact.iter().enumerate() {
            assert!((ln[n] - (b as f64).ln()).abs() < 1e-12 * (1.0 + ln[n]), "B_{n}");
        }
    }

    #[test]
    fn evaluate_examples() {
        let e = PowerSeries::builtin(&Builtin::Exp, 30).unwrap();
        let one = e.evaluate(f64::NEG_INFINITY, 0.0).unwrap();
        assert!((one.re.to_f64() - 1.0).abs() < 1e-15);
        let v = e.without_closed_form().evaluate(0.0, 0.0).unwrap();
        assert!((v.re.to_f64() - std::f64::consts::E).abs() < 1e-14);
        let s = PowerSeries::builtin(&Builtin::Sin, 60).unwrap().without_closed_form();
        let v = s.evaluate(PI.ln(), 0.0).unwrap();
        assert!(v.abs().to_f64() < 1e-10);
    }

    #[test]
    fn evaluate_beyond_truncation_is_an_error() {
        let e = PowerSeries::builtin(&Builtin::Exp, 10).unwrap().without_closed_form();
        assert!(matches!(e.evaluate(100f64.ln(), 0.0), Err(Error::Truncation { .. })));
    }

    #[test]
    fn max_term_examples() {
        let p = PowerSeries::polynomial(&[c(0.0), c(0.0), c(0.0), c(1.0)]).unwrap();
        let m = p.max_term(10f64.ln()).unwrap();
        assert_eq!(m.nu, 3);
        assert!((m.log_mu - 3.0 * 10f64.ln()).abs() < 1e-13);
        let e = PowerSeries::builtin(&Builtin::Exp, 60).unwrap();
        // direct scan oracle over r^n/n!
        let r = 10.5f64;
        let mut best = (0.0f64, 0usize);
        let mut t = 1.0;
        for n in 0..60 {
            if n > 0 {
                t *= r / n as f64;
            }
            if t >= best.0 {
                best = (t, n);
            }
        }
        assert_eq!(e.max_term(r.ln()).unwrap().nu, best.1);
        assert_eq!(best.1, 10);
        assert_eq!(e.max_term(-30.0).unwrap().nu, 0);
        let z = PowerSeries::polynomial(&[c(0.0)]).unwrap();
        assert!(z.max_term(0.0).is_err());
    }

    #[test]
    fn central_index_jump_examples() {
        let p = PowerSeries::polynomial(&[c(1.0), c(1.0)]).unwrap();
        assert_eq!(p.central_index_jumps(10).unwrap(), vec![(0.0, 1)]);
        let p = PowerSeries::polynomial(&[c(1.0), c(0.0), c(1.0)]).unwrap();
        assert_eq!(p.central_index_jumps(10).unwrap(), vec![(0.0, 2)]);
        let e = PowerSeries::builtin(&Builtin::Exp, 40).unwrap();
        let j = e.central_index_jumps(39).unwrap();
        assert_eq!(j.len(), 39);
        for (k, &(lr, nu)) in j.iter().enumerate() {
            assert_eq!(nu, k + 1);
            assert!((lr - ((k + 1) as f64).ln()).abs() < 1e-12);
        }
        let s = PowerSeries::builtin(&Builtin::Sin, 10).unwrap();
        assert!(matches!(s.central_index_jumps(9), Err(Error::Precondition(_))));
    }

    #[test]
    fn ties_break_to_the_largest_index() {
        let p = PowerSeries::polynomial(&[c(1.0), c(0.0), c(1.0)]).unwrap();
        assert_eq!(p.max_term(0.0).unwrap().nu, 2);
        let e = PowerSeries::builtin(&Builtin::Exp, 20).unwrap();
        // at r = 3 the terms 2 and 3 tie: 9/2 = 27/6
        assert_eq!(e.max_term(3f64.ln()).unwrap().nu, 3);
    }

    #[test]
    fn log_max_modulus_closed_forms() {
        let e = PowerSeries::builtin(&Builtin::Exp, 80).unwrap();
        for r in [0.5, 3.0, 17.0, 200.0] {
            let m = e.log_max_modulus(f64::ln(r)).unwrap();
            assert!((m - r).abs() < 1e-9 * r, "r = {r}: {m}");
        }
        let cs = PowerSeries::builtin(&Builtin::Cos, 80).unwrap();
        for r in [0.5, 3.0, 17.0] {
            let m = cs.log_max_modulus(f64::ln(r)).unwrap();
            assert!((m - r.cosh().ln()).abs() < 1e-9 * r, "r = {r}");
        }
        // series path agrees at moderate radius
        let es = PowerSeries::builtin(&Builtin::Exp, 120).unwrap().without_closed_form();
        let m = es.log_max_modulus(10f64.ln()).unwrap();
        assert!((m - 10.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_examples() {
        let e = PowerSeries::builtin(&Builtin::Exp, 20).unwrap();
        let d = e.derivative().unwrap();
        assert_eq!(d.n_terms(), 19);
        for n in 0..19 {
            assert!((coeff(&d, n) / coeff(&e, n) - 1.0).abs() < 1e-14);
        }
        let s = PowerSeries::builtin(&Builtin::Sin, 20).unwrap().derivative().unwrap();
        let cs = PowerSeries::builtin(&Builtin::Cos, 19).unwrap();
        for n in 0..19 {
            assert!((coeff(&s, n) - coeff(&cs, n)).abs() < 1e-15);
        }
        let p = PowerSeries::polynomial(&[c(0.0), c(0.0), c(0.0), c(1.0)]).unwrap();
        let d = p.derivative().unwrap();
        assert_eq!(d.n_terms(), 3);
        assert_eq!(coeff(&d, 2), 3.0);
        assert_eq!(coeff(&d, 1), 0.0);
    }

    #[test]
    fn combine_examples() {
        let e = PowerSeries::builtin(&Builtin::Exp, 30).unwrap();
        let z = PowerSeries::combine(&e, &e, CombineOp::Sub).unwrap();
        assert!(z.coeffs().iter().all(|a| a.is_zero()));
        let sq = PowerSeries::combine(&e, &e, CombineOp::CauchyProduct).unwrap();
        let mut want = 1.0;
        for n in 0..30 {
            if n > 0 {
                want *= 2.0 / n as f64;
            }
            assert!((coeff(&sq, n) / want - 1.0).abs() < 1e-13);
        }
        let s = PowerSeries::builtin(&Builtin::Sin, 40).unwrap();
        let cs = PowerSeries::builtin(&Builtin::Cos, 40).unwrap();
        let s2 = PowerSeries::combine(&s, &s, CombineOp::CauchyProduct).unwrap();
        let c2 = PowerSeries::combine(&cs, &cs, CombineOp::CauchyProduct).unwrap();
        let one = PowerSeries::combine(&s2, &c2, CombineOp::Add).unwrap();
        assert!((coeff(&one, 0) - 1.0).abs() < 1e-15);
        for n in 1..40 {
            assert!(one.coeffs()[n].abs().to_f64() < 1e-12);
        }
        // a polynomial does not truncate a long series
        let p = PowerSeries::polynomial(&[c(0.0), c(1.0)]).unwrap();
        let h = PowerSeries::combine(&e, &p, CombineOp::Sub).unwrap();
        assert_eq!(h.n_terms(), 30);
        assert!(coeff(&h, 1).abs() < 1e-15);
    }

    #[test]
    fn guaranteed_radius_behaviour() {
        let p = PowerSeries::polynomial(&[c(1.0), c(2.0)]).unwrap();
        assert!(p.guaranteed_radius().is_infinite());
        let e60 = PowerSeries::builtin(&Builtin::Exp, 60).unwrap();
        let e200 = PowerSeries::builtin(&Builtin::Exp, 200).unwrap();
        assert!(e60.guaranteed_radius() >= 5.0);
        assert!(e200.guaranteed_radius() > e60.guaranteed_radius());
        // certified radius: the actual tail is below tolerance
        let r = e60.guaranteed_radius();
        let tail: f64 = (60..400)
            .map(|n| (n as f64 * r.ln() + ln_inverse_factorials(n + 1)[n]).exp())
            .sum();
        let mu = e60.max_term(r.ln()).unwrap().log_mu.exp();
        assert!(tail < TAIL_TOL * mu);
    }

    #[test]
    fn equispaced_values_match_pointwise() {
        let e = PowerSeries::builtin(&Builtin::Exp, 200).unwrap().without_closed_form();
        let circ = e.series_circle(30f64.ln()).unwrap();
        let fast = circ.values_equispaced(256).unwrap();
        for (j, v) in fast.iter().enumerate().step_by(17) {
            let slow = circ.value(2.0 * PI * j as f64 / 256.0).unwrap();
            // absolute agreement well below 1 while μ(30) ~ e^27
            assert!((*v - slow).abs().ln_abs() < 0.0, "j = {j}");
        }
    }

    #[test]
    fn csv_dump() {
        let e = PowerSeries::builtin(&Builtin::Exp, 3).unwrap();
        let mut out = Vec::new();
        e.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "n,ln_abs_a_n,arg_a_n");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("2,-6.93147180559945"));
    }
}
