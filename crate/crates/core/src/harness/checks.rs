//! Finite-grid checks of the Wiman–Valiron, Gundersen and logarithmic-derivative lemmas.

use num_complex::Complex64;

use crate::error::Result;
use crate::nevanlinna;
use crate::scale::ScaleTriple;
use crate::series::PowerSeries;

use super::config::{Params, Tolerances};
use super::report::{CheckRecord, Expected};

/// Angles sampled per radius by the Gundersen check.
const GUNDERSEN_ANGLES: usize = 64;
/// Angles used for the proximity quadrature of `f^(k)/f`.
const LOG_DERIVATIVE_ANGLES: usize = 2048;
/// Added to ρ in the logarithmic-derivative bound.
const EPSILON: f64 = 0.25;
/// Relative rise between consecutive tail values that counts as an increase.
const RISE_RTOL: f64 = 0.01;

/// Identity `log μ(r) = log|a₀| + ∫ν(t)/t dt`, the bound
/// `M(r) < μ(r){ν(2r) + 2}`, and the ratio `f^(n)/f ≈ (ν/z)^n` at the
/// max-modulus angle. The identity and bound treat the stored coefficients
/// as an exact polynomial, so they hold at every radius.
pub fn check_wiman_valiron(
    f: &PowerSeries,
    radii: &[f64],
    params: &Params,
    tol: &Tolerances,
) -> Result<Vec<CheckRecord>> {
    let p = f.as_exact_polynomial()?;
    let jumps = p.central_index_jumps(p.n_terms() - 1)?;
    let mut worst_identity = 0.0f64;
    let mut violations = 0usize;
    let mut worst_margin = f64::NEG_INFINITY;
    for &r in radii {
        let lr = r.ln();
        let scan = p.max_term(lr)?;
        let integral = p.log_mu_from_jumps(&jumps, lr);
        worst_identity = worst_identity.max((scan.log_mu - integral).abs());

        let ln_m = p.log_max_modulus(lr)?;
        let nu_big = p.max_term((2.0 * r).ln())?.nu as f64;
        let ln_bound = scan.log_mu + (nu_big + 2.0).ln();
        let margin = ln_m - ln_bound;
        worst_margin = worst_margin.max(margin);
        if margin >= 0.0 {
            violations += 1;
        }
    }
    let mut out = vec![
        CheckRecord::new("wiman_valiron_identity", worst_identity, Expected::AtMost { value: 0.0 }, tol.identity),
        CheckRecord::new("wiman_valiron_bound_violations", violations as f64, Expected::AtMost { value: 0.0 }, 0.0),
        CheckRecord::new("wiman_valiron_bound_log_margin", worst_margin, Expected::Info, 0.0),
    ];

    let tail: Vec<f64> = radii.iter().copied().filter(|&r| r >= params.wv_ratio_r_min).collect();
    if tail.is_empty() {
        for &n in &params.wv_orders {
            out.push(CheckRecord::skipped(
                format!("wiman_valiron_ratio_n{n}"),
                "no grid radius in the ratio range",
            ));
        }
        return Ok(out);
    }
    for &n in &params.wv_orders {
        let mut deriv = f.clone();
        for _ in 0..n {
            deriv = deriv.derivative()?;
        }
        let mut worst = 0.0f64;
        for &r in &tail {
            let lr = r.ln();
            let (_, theta) = f.max_modulus(lr)?;
            let nu = f.max_term(lr)?.nu as f64;
            let (fv, dv) = (f.evaluate(lr, theta)?, deriv.evaluate(lr, theta)?);
            // f^(n)/f · (z/ν)^n − 1 in polar form.
            let ln_mod = dv.ln_abs() - fv.ln_abs() + n as f64 * (r / nu).ln();
            let arg = dv.arg() - fv.arg() + n as f64 * theta;
            let dev = (Complex64::from_polar(ln_mod.exp(), arg) - 1.0).norm();
            worst = worst.max(dev);
        }
        out.push(CheckRecord::new(
            format!("wiman_valiron_ratio_n{n}"),
            worst,
            Expected::AtMost { value: tol.wv_ratio },
            0.0,
        ));
    }
    Ok(out)
}

/// Counts consecutive rises above 1% in `xs`.
fn rises(xs: &[f64]) -> usize {
    xs.windows(2).filter(|w| w[1] > w[0] * (1.0 + RISE_RTOL)).count()
}

/// Smallest `B` per radius in `|f^(j)/f^(i)| <= B{T(χr)/r (log r)^χ log T(χr)}^{j−i}`.
pub fn check_gundersen(f: &PowerSeries, radii: &[f64], params: &Params, tol: &Tolerances) -> Result<Vec<CheckRecord>> {
    let (chi, i, j) = (params.chi, params.i, params.j);
    let mut fi = f.clone();
    for _ in 0..i {
        fi = fi.derivative()?;
    }
    let mut fj = fi.clone();
    for _ in i..j {
        fj = fj.derivative()?;
    }
    let mut required = Vec::new();
    let mut masked = 0usize;
    for &r in radii {
        let lr = r.ln();
        let t = nevanlinna::characteristic_entire(f, (chi * r).ln())?;
        let base = t / r * lr.powf(chi) * t.ln();
        if !(lr > 0.0 && t > 1.0 && base > 0.0 && base.is_finite()) {
            continue;
        }
        let ci = fi.circle(lr)?;
        let cj = fj.circle(lr)?;
        let floor = fi.max_term(lr)?.log_mu + tol.zero_margin.ln();
        let mut sup = f64::NEG_INFINITY;
        for (a, b) in ci
            .values_equispaced(GUNDERSEN_ANGLES)?
            .iter()
            .zip(cj.values_equispaced(GUNDERSEN_ANGLES)?)
        {
            let la = a.ln_abs();
            if la < floor {
                masked += 1;
                continue;
            }
            sup = sup.max(b.ln_abs() - la);
        }
        if sup == f64::NEG_INFINITY {
            continue;
        }
        required.push((sup - (j - i) as f64 * base.ln()).exp());
    }
    if required.is_empty() {
        return Ok(vec![CheckRecord::skipped("gundersen_required_b", "no admissible radius on the grid")]);
    }
    let k = ((required.len() as f64 * 0.25).ceil() as usize).max(1);
    let tail = &required[required.len() - k..];
    let tail_max = tail.iter().copied().fold(0.0, f64::max);
    let flagged = rises(tail) as f64 / required.len() as f64;
    Ok(vec![
        CheckRecord::new("gundersen_required_b", tail_max, Expected::AtMost { value: f64::MAX }, 0.0),
        CheckRecord::new(
            "gundersen_flagged_fraction",
            flagged,
            Expected::AtMost { value: tol.exceptional_fraction },
            0.0,
        ),
        CheckRecord::new("gundersen_masked_angles", masked as f64, Expected::Info, 0.0),
    ])
}

/// `m(r, f^(k)/f)` against `exp{α⁻¹((ρ+ε)β(log γ(r)))}` with `ε = 0.25`.
pub fn check_log_derivative(
    f: &PowerSeries,
    triple: &ScaleTriple,
    radii: &[f64],
    params: &Params,
    tol: &Tolerances,
) -> Result<Vec<CheckRecord>> {
    let rho = params.rho.unwrap_or(0.0);
    let mut fk = f.clone();
    for _ in 0..params.k {
        fk = fk.derivative()?;
    }
    let mut ratios = Vec::new();
    for &r in radii {
        let lr = r.ln();
        let den = triple.denominator(r);
        if !(den > 0.0 && den.is_finite()) {
            continue;
        }
        let ln_bound = triple.alpha.inverse((rho + EPSILON) * den)?;
        let cf = f.circle(lr)?;
        let ck = fk.circle(lr)?;
        let floor = f.max_term(lr)?.log_mu + tol.zero_margin.ln();
        let (mut sum, mut kept) = (0.0, 0usize);
        for (a, b) in cf
            .values_equispaced(LOG_DERIVATIVE_ANGLES)?
            .iter()
            .zip(ck.values_equispaced(LOG_DERIVATIVE_ANGLES)?)
        {
            let la = a.ln_abs();
            if la < floor {
                continue;
            }
            sum += (b.ln_abs() - la).max(0.0);
            kept += 1;
        }
        if kept == 0 {
            continue;
        }
        let m = sum / kept as f64;
        ratios.push(if m == 0.0 { 0.0 } else { (m.ln() - ln_bound).exp() });
    }
    if ratios.is_empty() {
        return Ok(vec![CheckRecord::skipped("log_derivative_ratio", "no admissible radius on the grid")]);
    }
    let k = ((ratios.len() as f64 * 0.25).ceil() as usize).max(1);
    let tail_max = ratios[ratios.len() - k..].iter().copied().fold(0.0, f64::max);
    let violating = ratios.iter().filter(|&&x| x > 1.0).count() as f64 / ratios.len() as f64;
    Ok(vec![
        CheckRecord::new("log_derivative_tail_ratio", tail_max, Expected::Info, 0.0),
        CheckRecord::new(
            "log_derivative_violation_fraction",
            violating,
            Expected::AtMost { value: tol.exceptional_fraction },
            0.0,
        ),
    ])
}
