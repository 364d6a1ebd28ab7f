//! Power-series solutions of `f^(k) + A_{k-1} f^(k-1) + … + A_0 f = F`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::erfloat::{ExtendedComplex, ExtendedReal};
use crate::error::{Error, Result};
use crate::series::{PowerSeries, Provenance, SeriesSpec};

pub const RESIDUAL_TOL: f64 = 1e-8;
pub const MAX_TERMS: usize = 1 << 16;

/// Convolution products below `e^-NEGLIGIBLE` times the largest are skipped.
const NEGLIGIBLE: f64 = 60.0;

/// Equation descriptor. Coefficients are stored as descriptors and built at
/// whatever length the recurrence needs, so a builtin `A_j` is never
/// silently truncated below the solution's length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearODE {
    pub k: usize,
    #[serde(rename = "A")]
    pub coeffs: Vec<SeriesSpec>,
    #[serde(rename = "F", default)]
    pub rhs: Option<SeriesSpec>,
}

impl LinearODE {
    pub fn new(coeffs: Vec<SeriesSpec>, rhs: Option<SeriesSpec>) -> Result<Self> {
        let eq = Self { k: coeffs.len(), coeffs, rhs };
        eq.validate()?;
        Ok(eq)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Argument("equation order k must be >= 1".into()));
        }
        if self.coeffs.len() != self.k {
            return Err(Error::Argument(format!(
                "expected {} coefficients A_0..A_{}, got {}",
                self.k,
                self.k - 1,
                self.coeffs.len()
            )));
        }
        for c in self.coeffs.iter().chain(&self.rhs) {
            c.resolve()?;
        }
        Ok(())
    }

    pub fn is_homogeneous(&self) -> bool {
        self.rhs.is_none()
    }

    fn materialize(&self, n: usize) -> Result<(Vec<PowerSeries>, Option<PowerSeries>)> {
        let a = self.coeffs.iter().map(|c| c.build(n)).collect::<Result<Vec<_>>>()?;
        let f = self.rhs.as_ref().map(|c| c.build(n)).transpose()?;
        Ok((a, f))
    }
}

/// `f(0), f'(0), …, f^(k-1)(0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialData(pub Vec<Complex64>);

impl InitialData {
    pub fn basis(k: usize, i: usize) -> Self {
        let mut v = vec![Complex64::new(0.0, 0.0); k];
        v[i] = Complex64::new(1.0, 0.0);
        Self(v)
    }

    /// Random complex vector of unit Euclidean norm.
    pub fn random_unit<R: Rng>(k: usize, rng: &mut R) -> Self {
        loop {
            let v: Vec<Complex64> = (0..k)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-3 {
                return Self(v.into_iter().map(|z| z / norm).collect());
            }
        }
    }
}

/// Solves the recurrence
/// `c_{n+k}(n+k)!/n! = F_n − Σ_j Σ_m a_{j,m} c_{n−m+j} (n−m+j)!/(n−m)!`.
pub fn solve_series(eq: &LinearODE, init: &InitialData, n_terms: usize) -> Result<PowerSeries> {
    eq.validate()?;
    let k = eq.k;
    if init.0.len() != k {
        return Err(Error::Argument(format!("need {k} initial values, got {}", init.0.len())));
    }
    if n_terms <= k {
        return Err(Error::Argument(format!("n_terms must exceed k = {k}")));
    }
    if eq.is_homogeneous() && init.0.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Err(Error::Argument("zero initial data gives the trivial solution".into()));
    }
    let (a, rhs) = eq.materialize(n_terms)?;
    let mut c: Vec<ExtendedComplex> = Vec::with_capacity(n_terms);
    let mut inv_fact = 1.0f64;
    for (i, z) in init.0.iter().enumerate() {
        if i > 0 {
            inv_fact /= i as f64;
        }
        c.push(ExtendedComplex::from_f64(z.re * inv_fact, z.im * inv_fact));
    }
    // d[j][i] = c_{i+j}(i+j)!/i!, the coefficients of f^(j), filled as c grows;
    // ld[j][i] = ln|d[j][i]| lets the convolution skip negligible products.
    let mut d: Vec<Vec<ExtendedComplex>> = vec![Vec::with_capacity(n_terms); k];
    let mut ld: Vec<Vec<f64>> = vec![Vec::with_capacity(n_terms); k];
    let push_derivs = |d: &mut Vec<Vec<ExtendedComplex>>, ld: &mut Vec<Vec<f64>>, c: &[ExtendedComplex]| {
        for (j, (dj, lj)) in d.iter_mut().zip(ld.iter_mut()).enumerate() {
            while dj.len() + j < c.len() {
                let i = dj.len();
                let ratio: f64 = (i + 1..=i + j).map(|x| x as f64).product();
                let v = c[i + j].mul_f64(ratio);
                lj.push(v.ln_abs());
                dj.push(v);
            }
        }
    };
    push_derivs(&mut d, &mut ld, &c);
    let la: Vec<Vec<f64>> = a.iter().map(|s| s.coeffs().iter().map(|x| x.ln_abs()).collect()).collect();
    for n in 0..n_terms - k {
        let f_n = rhs
            .as_ref()
            .and_then(|f| f.coeffs().get(n).copied())
            .unwrap_or(ExtendedComplex::ZERO);
        let mut biggest = f_n.ln_abs();
        for (j, laj) in la.iter().enumerate() {
            let top = n.min(laj.len() - 1);
            for m in 0..=top {
                biggest = biggest.max(laj[m] + ld[j][n - m]);
            }
        }
        // Products this far below the largest one cannot change the sum.
        let cut = biggest - NEGLIGIBLE;
        let mut acc = f_n;
        for (j, aj) in a.iter().enumerate() {
            let coeffs = aj.coeffs();
            let top = n.min(coeffs.len() - 1);
            for m in 0..=top {
                if la[j][m] + ld[j][n - m] < cut {
                    continue;
                }
                let t = coeffs[m].checked_mul(d[j][n - m]).map_err(|e| overflow(n, e))?;
                acc = acc - t;
            }
        }
        let ratio: f64 = (n + 1..=n + k).map(|x| x as f64).product();
        let next = acc.scale(ExtendedReal::from_f64(ratio.recip())).map_err(|e| overflow(n, e))?;
        c.push(next);
        push_derivs(&mut d, &mut ld, &c);
    }
    PowerSeries::from_coeffs(c, Provenance::OdeSolution)
}

fn overflow(n: usize, e: Error) -> Error {
    Error::ExponentOverflow(format!(
        "recurrence overflowed at n = {n} ({e}); the equation is too wild for this many terms"
    ))
}

/// Canonical solutions with `f^(i)(0) = δ_ij`.
pub fn fundamental_system(eq: &LinearODE, n_terms: usize) -> Result<Vec<PowerSeries>> {
    if !eq.is_homogeneous() {
        return Err(Error::Precondition("fundamental system needs a homogeneous equation".into()));
    }
    (0..eq.k)
        .map(|i| solve_series(eq, &InitialData::basis(eq.k, i), n_terms))
        .collect()
}

/// `Σ v_i f_i` coefficientwise; for a fundamental system this is the
/// solution with initial data `v`.
pub fn combine_solutions(basis: &[PowerSeries], v: &InitialData) -> Result<PowerSeries> {
    if basis.len() != v.0.len() || basis.is_empty() {
        return Err(Error::Argument("need one weight per basis solution".into()));
    }
    let n = basis.iter().map(|f| f.n_terms()).min().unwrap();
    let coeffs = (0..n)
        .map(|i| {
            basis.iter().zip(&v.0).fold(ExtendedComplex::ZERO, |acc, (f, w)| {
                acc + f.coeffs()[i].mul_c64(w.re, w.im)
            })
        })
        .collect();
    PowerSeries::from_coeffs(coeffs, Provenance::OdeSolution)
}

/// `max_θ |f^(k) + Σ A_j f^(j) − F| / scale` on `|z| = r`, where `scale` is
/// the largest of `μ(f^(k))`, `μ(A_j)·μ(f^(j))` and `μ(F)`. All quantities
/// are summed from coefficients.
pub fn residual_norm(eq: &LinearODE, f: &PowerSeries, log_r: f64, n_angles: usize) -> Result<f64> {
    eq.validate()?;
    let (a, rhs) = eq.materialize(f.n_terms())?;
    let mut derivs = vec![f.without_closed_form()];
    for _ in 0..eq.k {
        let next = derivs.last().unwrap().derivative()?;
        derivs.push(next);
    }
    let mut ln_scale = f64::NEG_INFINITY;
    let top = derivs[eq.k].series_circle(log_r)?;
    ln_scale = ln_scale.max(top.log_accuracy_scale().unwrap());
    let mut total = top.values_equispaced(n_angles)?;
    for (j, aj) in a.iter().enumerate() {
        let ca = aj.without_closed_form().series_circle(log_r)?;
        let cf = derivs[j].series_circle(log_r)?;
        ln_scale = ln_scale.max(ca.log_accuracy_scale().unwrap() + cf.log_accuracy_scale().unwrap());
        let va = ca.values_equispaced(n_angles)?;
        let vf = cf.values_equispaced(n_angles)?;
        for ((t, x), y) in total.iter_mut().zip(va).zip(vf) {
            *t = *t + x.checked_mul(y)?;
        }
    }
    if let Some(rhs) = rhs {
        let cr = rhs.without_closed_form().series_circle(log_r)?;
        ln_scale = ln_scale.max(cr.log_accuracy_scale().unwrap());
        for (t, x) in total.iter_mut().zip(cr.values_equispaced(n_angles)?) {
            *t = *t - x;
        }
    }
    let worst = total.iter().map(|v| v.ln_abs()).fold(f64::NEG_INFINITY, f64::max);
    Ok((worst - ln_scale).exp())
}

/// Solutions certified at `r_max`.
#[derive(Clone, Debug)]
pub struct CertifiedSystem {
    pub solutions: Vec<PowerSeries>,
    pub n_terms: usize,
    pub residuals: Vec<f64>,
}

const RESIDUAL_ANGLES: usize = 256;

/// Doubles `n_terms` from `start` until every solution has
/// `guaranteed_radius >= r_max` and `residual_norm < 1e-8` there; fails at `cap`.
pub fn solve_certified(
    eq: &LinearODE,
    inits: &[InitialData],
    r_max: f64,
    start: usize,
    cap: usize,
) -> Result<CertifiedSystem> {
    let cap = cap.min(MAX_TERMS);
    let mut n = start.max(eq.k + 1).next_power_of_two();
    let mut last_radius = 0.0;
    while n <= cap {
        let sols = if eq.is_homogeneous() && inits.len() == eq.k && (0..eq.k).all(|i| inits[i] == InitialData::basis(eq.k, i)) {
            fundamental_system(eq, n)?
        } else {
            inits.iter().map(|v| solve_series(eq, v, n)).collect::<Result<Vec<_>>>()?
        };
        last_radius = sols.iter().map(|s| s.guaranteed_radius()).fold(f64::INFINITY, f64::min);
        if last_radius >= r_max {
            let residuals = sols
                .iter()
                .map(|s| residual_norm(eq, s, r_max.ln(), RESIDUAL_ANGLES))
                .collect::<Result<Vec<_>>>();
            match residuals {
                Ok(res) if res.iter().all(|&x| x < RESIDUAL_TOL) => {
                    return Ok(CertifiedSystem { solutions: sols, n_terms: n, residuals: res });
                }
                Ok(_) | Err(Error::Truncation { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        n *= 2;
    }
    Err(Error::Truncation { radius: r_max, guaranteed: last_radius, n_terms: cap })
}
