//! Sum, product and scaling laws for growth orders, checked on closed-form profiles.

use std::f64::consts::{LN_2, PI};

use crate::error::Result;
use crate::growth::{self, Formula, Mode, Profile, Quantity, Source};
use crate::scale::ScaleTriple;

use super::config::Tolerances;
use super::report::{CheckRecord, Expected};

fn order(p: &Profile, q: Quantity, t: &ScaleTriple, radii: &[f64], mode: Mode) -> Result<f64> {
    let s = growth::sample(Source::Profile(p), q, radii)?;
    Ok(growth::estimate_order(&s, t, mode)?.value)
}

fn cos_profile() -> Profile {
    Profile {
        name: "cos z".into(),
        log_m: Formula::Sum { terms: vec![Formula::Power { c: 1.0, rho: 1.0 }, Formula::Const { c: -LN_2 }] },
        t: Some(Formula::Power { c: 2.0 / PI, rho: 1.0 }),
    }
}

/// Runs every profile check with the configured tolerances.
pub fn proposition_suite(tol: &Tolerances) -> Result<Vec<CheckRecord>> {
    let grid = growth::geometric_grid(10.0, 1e6, growth::DEFAULT_GRID_POINTS)?;
    // e^{e^r} overflows f64 past r ≈ 709.
    let short = growth::geometric_grid(10.0, 700.0, growth::DEFAULT_GRID_POINTS)?;
    let wide = growth::geometric_grid(10.0, 1e12, growth::DEFAULT_GRID_POINTS)?;
    let classical = ScaleTriple::classical();
    let hyper = ScaleTriple::hyper();
    let exp = Profile::exp_monomial(1.0, 1.0);
    let exp2 = Profile::exp_monomial(1.0, 2.0);
    let exp_exp = Profile::exp_exp();
    let poly = Profile::polynomial(3, 1.0);
    let mut out = Vec::new();

    // Order of a sum or product is at most the larger order.
    let pairs = [
        ("exp_exp2", &exp, &exp2, &classical),
        ("poly_exp", &poly, &exp, &classical),
        ("exp_expexp", &exp, &exp_exp, &hyper),
    ];
    for (label, f, g, t) in pairs {
        let grid = if label == "exp_expexp" { &short } else { &grid };
        for q in [Quantity::Log2M, Quantity::LogT] {
            let qn = if q == Quantity::Log2M { "m" } else { "t" };
            let bound = order(f, q, t, grid, Mode::Upper)?.max(order(g, q, t, grid, Mode::Upper)?);
            for (op, h) in [("sum", Profile::sum_upper(f, g)), ("product", Profile::product_upper(f, g))] {
                out.push(CheckRecord::new(
                    format!("order_of_{op}_{label}_{qn}"),
                    order(&h, q, t, grid, Mode::Upper)?,
                    Expected::AtMost { value: bound },
                    tol.profile,
                ));
            }
        }
    }

    // A dominant lower order survives the sum.
    for (label, f, g, t) in [("exp_exp2", &exp, &exp2, &classical), ("exp_expexp", &exp, &exp_exp, &hyper)] {
        let grid = if label == "exp_expexp" { &short } else { &grid };
        let mu_g = order(g, Quantity::Log2M, t, grid, Mode::Lower)?;
        let rho_f = order(f, Quantity::Log2M, t, grid, Mode::Upper)?;
        out.push(CheckRecord::new(
            format!("dominance_gap_{label}"),
            mu_g - rho_f,
            Expected::Exceeds { value: 0.0 },
            0.0,
        ));
        for (side, h) in [("lower", Profile::sum_lower(f, g)), ("upper", Profile::sum_upper(f, g))] {
            out.push(CheckRecord::new(
                format!("lower_order_of_sum_{label}_{side}"),
                order(&h, Quantity::Log2M, t, grid, Mode::Lower)?,
                Expected::Near { value: mu_g },
                tol.profile,
            ));
        }
    }

    // Nonzero constant factors leave the order unchanged.
    for (label, f) in [("exp", &exp), ("exp2", &exp2)] {
        for a in [7.0, 0.25] {
            for q in [Quantity::Log2M, Quantity::LogT] {
                let qn = if q == Quantity::Log2M { "m" } else { "t" };
                let base = order(f, q, &classical, &wide, Mode::Upper)?;
                out.push(CheckRecord::new(
                    format!("scaled_order_{label}_{a}_{qn}"),
                    order(&f.scaled(a), q, &classical, &wide, Mode::Upper)?,
                    Expected::Near { value: base },
                    1e-9,
                ));
            }
        }
    }

    // Characteristic domination and its equal-order control.
    let t_of = |p: &Profile| growth::sample(Source::Profile(p), Quantity::LogT, &grid);
    out.push(CheckRecord::new(
        "characteristic_ratio_poly_exp",
        growth::compare_characteristics(&t_of(&poly)?, &t_of(&exp)?)?,
        Expected::AtMost { value: 0.01 },
        0.0,
    ));
    out.push(CheckRecord::new(
        "characteristic_ratio_exp_exp2z",
        growth::compare_characteristics(&t_of(&exp)?, &t_of(&Profile::exp_monomial(2.0, 1.0))?)?,
        Expected::Band { lo: 0.45, hi: 0.55 },
        0.0,
    ));

    // T-form and M-form orders agree under the wrapped triple.
    let wrapped = classical.log_wrapped()?;
    for (label, f) in [("exp", exp.clone()), ("cos", cos_profile()), ("exp_exp", exp_exp.clone())] {
        let grid = if label == "exp_exp" { &short } else { &grid };
        let from_t = order(&f, Quantity::LogT, &wrapped, grid, Mode::Upper)?;
        out.push(CheckRecord::new(
            format!("t_m_agreement_{label}"),
            from_t,
            Expected::Near { value: order(&f, Quantity::Log2M, &wrapped, grid, Mode::Upper)? },
            0.1,
        ));
    }
    Ok(out)
}
