//! Proximity function, characteristic and zero counting on circles.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::erfloat::ExtendedComplex;
use crate::error::{Error, Result};
use crate::series::{CircleEvaluator, PowerSeries};

pub const DEFAULT_START_ANGLES: usize = 128;
const MAX_ANGLES: usize = 1 << 16;
const PROXIMITY_RTOL: f64 = 1e-8;

/// Trapezoid estimate of `m(r, f)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Proximity {
    pub value: f64,
    pub n_angles: usize,
    /// False when the angle cap was hit before the stopping rule fired.
    pub converged: bool,
}

fn mean_log_plus(c: &CircleEvaluator, m: usize) -> Result<f64> {
    let vals = c.values_equispaced(m)?;
    Ok(vals.iter().map(|v| v.ln_abs().max(0.0)).sum::<f64>() / m as f64)
}

/// `m(r,f) = (1/2π)∫ log⁺|f(re^{iθ})| dθ` by the periodic trapezoid rule,
/// doubling the angle count until successive estimates agree to `1e-8`.
pub fn proximity(f: &PowerSeries, log_r: f64, n_angles_start: usize) -> Result<Proximity> {
    let c = f.circle(log_r)?;
    let mut m = n_angles_start.max(4);
    let mut prev = mean_log_plus(&c, m)?;
    while m < MAX_ANGLES {
        m *= 2;
        let next = mean_log_plus(&c, m)?;
        if (next - prev).abs() <= PROXIMITY_RTOL * next.abs() {
            return Ok(Proximity { value: next, n_angles: m, converged: true });
        }
        prev = next;
    }
    Ok(Proximity { value: prev, n_angles: m, converged: false })
}

/// `T(r,f)`, which equals `m(r,f)` for entire `f`.
pub fn characteristic_entire(f: &PowerSeries, log_r: f64) -> Result<f64> {
    Ok(proximity(f, log_r, DEFAULT_START_ANGLES)?.value)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZeroCountOptions {
    /// Minimum admissible `|f|` on the circle, relative to the accuracy scale.
    pub zero_margin: f64,
    /// Relative radius step suggested (and used by the retrying variant).
    pub perturbation: f64,
}

impl Default for ZeroCountOptions {
    fn default() -> Self {
        Self { zero_margin: 1e-8, perturbation: 1e-3 }
    }
}

const MAX_BISECTIONS: u32 = 40;

struct Winding<'a> {
    f: &'a CircleEvaluator,
    df: Option<CircleEvaluator>,
    ln_floor: Option<f64>,
    ln_margin: f64,
    radius: f64,
    suggested: [f64; 2],
}

impl Winding<'_> {
    fn near_zero(&self) -> Error {
        Error::ZeroNearContour { radius: self.radius, suggested: self.suggested }
    }

    /// Rejects values too small to carry a reliable argument.
    fn check(&self, v: &ExtendedComplex, theta: f64) -> Result<()> {
        let lv = v.ln_abs();
        let too_small = match (self.ln_floor, &self.df) {
            // coefficient sums: absolute accuracy is relative to μ(r)
            (Some(floor), _) => lv < self.ln_margin + floor,
            // closed forms: a Newton step |f/f'| shorter than margin·r means a zero hugs the circle
            (None, Some(df)) => lv < self.ln_margin + self.radius.ln() + df.ln_abs(theta)?,
            (None, None) => !lv.is_finite(),
        };
        if too_small {
            Err(self.near_zero())
        } else {
            Ok(())
        }
    }

    fn value(&self, theta: f64) -> Result<ExtendedComplex> {
        let v = self.f.value(theta)?;
        self.check(&v, theta)?;
        Ok(v)
    }

    fn increment(&self, t0: f64, a0: f64, t1: f64, a1: f64, depth: u32) -> Result<f64> {
        let d = wrap(a1 - a0);
        if d.abs() <= PI / 2.0 {
            return Ok(d);
        }
        if depth >= MAX_BISECTIONS {
            return Err(self.near_zero());
        }
        let tm = 0.5 * (t0 + t1);
        let am = self.value(tm)?.arg();
        Ok(self.increment(t0, a0, tm, am, depth + 1)? + self.increment(tm, am, t1, a1, depth + 1)?)
    }
}

fn wrap(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

/// `n(r, 1/f)`: the winding number of `f` along `|z| = r`.
pub fn zero_count(f: &PowerSeries, log_r: f64, opts: &ZeroCountOptions) -> Result<u64> {
    let circle = f.circle(log_r)?;
    let radius = log_r.exp();
    let df = if circle.uses_closed_form() {
        Some(f.derivative()?.circle(log_r)?)
    } else {
        None
    };
    let w = Winding {
        ln_floor: circle.log_accuracy_scale(),
        f: &circle,
        df,
        ln_margin: opts.zero_margin.ln(),
        radius,
        suggested: [radius * (1.0 - opts.perturbation), radius * (1.0 + opts.perturbation)],
    };
    // The winding number is at most the top index of the window, so a few
    // samples per possible zero resolve most increments without bisection.
    let nu = f.max_term(log_r)?.nu;
    let m = (4 * (nu + 1)).next_power_of_two().clamp(256, 1 << 20);
    let vals = circle.values_equispaced(m)?;
    for (j, v) in vals.iter().enumerate() {
        w.check(v, 2.0 * PI * j as f64 / m as f64)?;
    }
    let args: Vec<f64> = vals.iter().map(|v| v.arg()).collect();
    let mut total = 0.0;
    for j in 0..m {
        let t0 = 2.0 * PI * j as f64 / m as f64;
        let t1 = 2.0 * PI * (j + 1) as f64 / m as f64;
        total += w.increment(t0, args[j], t1, args[(j + 1) % m], 0)?;
    }
    let turns = total / (2.0 * PI);
    let k = turns.round();
    if (turns - k).abs() > 1e-6 || k < 0.0 {
        return Err(w.near_zero());
    }
    Ok(k as u64)
}

/// Zero count that dodges zeros on the contour: tries `r`, then `r(1+δ)`,
/// `r(1−δ)`, `r(1+2δ)`, … (up to 8 attempts). Returns the count and the radius used.
pub fn zero_count_perturbed(
    f: &PowerSeries,
    r: f64,
    opts: &ZeroCountOptions,
) -> Result<(u64, f64)> {
    let mut last = None;
    for attempt in 0u32..9 {
        let step = attempt.div_ceil(2) as f64 * opts.perturbation;
        let rr = if attempt % 2 == 1 { r * (1.0 + step) } else { r * (1.0 - step) };
        match zero_count(f, rr.ln(), opts) {
            Ok(n) => return Ok((n, rr)),
            Err(e @ Error::ZeroNearContour { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Step data `n(r_i)`; between samples `n(t) = counts[i]` on `[r_i, r_{i+1})`,
/// and `n(t) = count_at_zero` below the first radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingData {
    radii: Vec<f64>,
    counts: Vec<u64>,
    count_at_zero: u64,
}

impl CountingData {
    pub fn new(radii: Vec<f64>, counts: Vec<u64>, count_at_zero: u64) -> Result<Self> {
        if radii.is_empty() || radii.len() != counts.len() {
            return Err(Error::Argument("radii and counts must be nonempty and equally long".into()));
        }
        if radii[0] <= 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Argument("radii must be positive and strictly increasing".into()));
        }
        if counts.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Argument("counts must be nondecreasing".into()));
        }
        if counts[0] < count_at_zero {
            return Err(Error::Argument("counts must include the zero at the origin".into()));
        }
        Ok(Self { radii, counts, count_at_zero })
    }

    /// Counts zeros of `f` on each radius, perturbing radii that hit a zero.
    pub fn from_series(f: &PowerSeries, radii: &[f64], opts: &ZeroCountOptions) -> Result<Self> {
        let mut used = Vec::with_capacity(radii.len());
        let mut counts = Vec::with_capacity(radii.len());
        for &r in radii {
            let (n, rr) = zero_count_perturbed(f, r, opts)?;
            used.push(rr);
            counts.push(n);
        }
        let origin = f.coeffs().iter().take_while(|a| a.is_zero()).count() as u64;
        Self::new(used, counts, origin)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count_at_zero(&self) -> u64 {
        self.count_at_zero
    }

    /// `N(r) = ∫₀^r (n(t) − n(0))/t dt + n(0) log r`, exact over the step data.
    pub fn integrated_count(&self, log_r: f64) -> Result<f64> {
        let last = *self.radii.last().unwrap();
        if log_r > last.ln() * (1.0 + 1e-15) + 1e-15 {
            return Err(Error::Argument(format!(
                "r = {} is beyond the counting data (last radius {last})",
                log_r.exp()
            )));
        }
        let n0 = self.count_at_zero as f64;
        let mut acc = n0 * log_r;
        for i in 0..self.radii.len() {
            let a = self.radii[i].ln();
            if log_r <= a {
                break;
            }
            let b = self.radii.get(i + 1).map_or(log_r, |r| r.ln().min(log_r));
            acc += (self.counts[i] as f64 - n0) * (b - a);
        }
        Ok(acc)
    }

    /// Rows `r, n(r), N(r)`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "r,n,N")?;
        for (r, n) in self.radii.iter().zip(&self.counts) {
            writeln!(w, "{r:.17e},{n},{:.17e}", self.integrated_count(r.ln())?)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Builtin;
    use num_complex::Complex64;

    fn poly(c: &[f64]) -> PowerSeries {
        let c: Vec<_> = c.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        PowerSeries::polynomial(&c).unwrap()
    }

    #[test]
    fn proximity_examples() {
        let e = PowerSeries::builtin(&Builtin::Exp, 60).unwrap();
        let p = proximity(&e, PI.ln(), 128).unwrap();
        assert!((p.value - 1.0).abs() < 1e-7, "{p:?}");
        let p = proximity(&e, 10f64.ln(), 128).unwrap();
        assert!((p.value - 10.0 / PI).abs() < 1e-6);
        assert_eq!(proximity(&poly(&[0.5]), 1.0, 128).unwrap().value, 0.0);
        let t = characteristic_entire(&poly(&[3.0]), 2.0).unwrap();
        assert!((t - 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn characteristic_of_a_polynomial_grows_like_degree_log_r() {
        let p = poly(&[1.0, 0.0, 2.0, 1.0]);
        let r = 1e3f64;
        let ratio = characteristic_entire(&p, r.ln()).unwrap() / (3.0 * r.ln());
        assert!((0.9..=1.1).contains(&ratio), "{ratio}");
    }

    #[test]
    fn zero_count_examples() {
        let o = ZeroCountOptions::default();
        let s = PowerSeries::builtin(&Builtin::Sin, 80).unwrap();
        assert_eq!(zero_count(&s, 10f64.ln(), &o).unwrap(), 7);
        let e = PowerSeries::builtin(&Builtin::Exp, 80).unwrap();
        for r in [0.5, 5.0, 40.0] {
            assert_eq!(zero_count(&e, f64::ln(r), &o).unwrap(), 0);
        }
        let p = poly(&[-1.0, 0.0, 0.0, 1.0]);
        assert_eq!(zero_count(&p, 2f64.ln(), &o).unwrap(), 3);
        assert_eq!(zero_count(&p, 0.5f64.ln(), &o).unwrap(), 0);
    }

    #[test]
    fn zero_on_the_contour_requests_a_retry() {
        let o = ZeroCountOptions::default();
        let s = PowerSeries::builtin(&Builtin::Sin, 80).unwrap();
        let err = zero_count(&s, PI.ln(), &o).unwrap_err();
        match err {
            Error::ZeroNearContour { suggested, .. } => {
                assert!((suggested[0] - PI * 0.999).abs() < 1e-12);
                assert!((suggested[1] - PI * 1.001).abs() < 1e-12);
            }
            e => panic!("unexpected {e:?}"),
        }
        let (n, r) = zero_count_perturbed(&s, PI, &o).unwrap();
        assert_eq!(n, 3);
        assert!(r > PI);
        // same behaviour on the coefficient-sum path
        let ss = s.without_closed_form();
        assert!(matches!(zero_count(&ss, PI.ln(), &o), Err(Error::ZeroNearContour { .. })));
        assert_eq!(zero_count(&ss, 10f64.ln(), &o).unwrap(), 7);
    }

    #[test]
    fn integrated_count_examples() {
        let d = CountingData::new(vec![1.0, 5.0], vec![0, 0], 0).unwrap();
        assert_eq!(d.integrated_count(5f64.ln()).unwrap(), 0.0);
        let d = CountingData::new(vec![0.5, 2.0, 10.0], vec![0, 1, 1], 0).unwrap();
        assert!((d.integrated_count(7f64.ln()).unwrap() - (7.0f64 / 2.0).ln()).abs() < 1e-15);
        assert!(d.integrated_count(11f64.ln()).is_err());
        let mut radii = vec![1.0];
        let mut counts = vec![1];
        for k in 1..=6 {
            radii.push(k as f64 * PI);
            counts.push(2 * k + 1);
        }
        radii.push(20.0);
        counts.push(13);
        let d = CountingData::new(radii, counts, 1).unwrap();
        let brute: f64 = 20f64.ln()
            + (1..=6).map(|k| 2.0 * (20.0 / (k as f64 * PI)).ln()).sum::<f64>();
        assert!((d.integrated_count(20f64.ln()).unwrap() - brute).abs() < 1e-9);
    }

    #[test]
    fn counting_data_validation() {
        assert!(CountingData::new(vec![1.0, 2.0], vec![2, 1], 0).is_err());
        assert!(CountingData::new(vec![2.0, 1.0], vec![1, 2], 0).is_err());
        assert!(CountingData::new(vec![1.0], vec![0], 1).is_err());
        let s = PowerSeries::builtin(&Builtin::Sin, 100).unwrap();
        let d = CountingData::from_series(&s, &[PI, 5.0, 10.0], &ZeroCountOptions::default())
            .unwrap();
        assert_eq!(d.counts(), &[3, 3, 7]);
        assert_eq!(d.count_at_zero(), 1);
        let mut out = Vec::new();
        d.write_csv(&mut out).unwrap();
        assert!(String::from_utf8(out).unwrap().starts_with("r,n,N\n"));
    }
}
