//! Declarative experiments, their reports and the shipped verification set.

pub mod checks;
pub mod config;
pub mod report;
pub mod suite;
pub mod theorem;

use std::time::Instant;

use crate::error::{Error, Result};
use crate::growth::{self, CountForm, GrowthSample, Mode, OrderEstimate, Quantity, Source};
use crate::nevanlinna::{CountingData, ZeroCountOptions};
use crate::ode::{self, InitialData};

pub use config::{ExperimentConfig, ExperimentKind, Subject};
pub use report::{Artifact, CheckRecord, Expected, Format, Report, Status, Verdict};

/// Configs run by `verify`, as `(file name, JSON)`.
pub const VERIFICATION_SET: &[(&str, &str)] = &[
    ("analyze_exp.json", include_str!("../../configs/analyze_exp.json")),
    ("analyze_poly.json", include_str!("../../configs/analyze_poly.json")),
    ("analyze_exp_exp_profile.json", include_str!("../../configs/analyze_exp_exp_profile.json")),
    ("analyze_sin_zeros.json", include_str!("../../configs/analyze_sin_zeros.json")),
    ("wiman_valiron_exp.json", include_str!("../../configs/wiman_valiron_exp.json")),
    ("wiman_valiron_cos.json", include_str!("../../configs/wiman_valiron_cos.json")),
    ("wiman_valiron_quadratic.json", include_str!("../../configs/wiman_valiron_quadratic.json")),
    ("wiman_valiron_exp_exp.json", include_str!("../../configs/wiman_valiron_exp_exp.json")),
    ("gundersen_exp.json", include_str!("../../configs/gundersen_exp.json")),
    ("gundersen_cubic.json", include_str!("../../configs/gundersen_cubic.json")),
    ("log_derivative_sin.json", include_str!("../../configs/log_derivative_sin.json")),
    ("solve_airy.json", include_str!("../../configs/solve_airy.json")),
    ("solve_oscillator.json", include_str!("../../configs/solve_oscillator.json")),
    ("theorem_dominant_exp.json", include_str!("../../configs/theorem_dominant_exp.json")),
    ("theorem_dominant_z_derivative.json", include_str!("../../configs/theorem_dominant_z_derivative.json")),
    ("theorem_dominant_control.json", include_str!("../../configs/theorem_dominant_control.json")),
    ("proposition_suite.json", include_str!("../../configs/proposition_suite.json")),
];

/// The shipped configs, parsed.
pub fn verification_set() -> Result<Vec<ExperimentConfig>> {
    VERIFICATION_SET
        .iter()
        .map(|(file, text)| {
            ExperimentConfig::from_json(text).map_err(|e| match e {
                Error::Config { path, message } => Error::Config { path: format!("{file}#{path}"), message },
                e => e,
            })
        })
        .collect()
}

/// Runs one experiment and stamps the environment block.
pub fn run_config(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = Report::new(cfg.clone());
    match cfg.kind {
        ExperimentKind::Analyze => analyze(cfg, &mut report)?,
        ExperimentKind::Solve => solve(cfg, &mut report)?,
        ExperimentKind::WimanValiron | ExperimentKind::Gundersen | ExperimentKind::LogDerivative => {
            let Some(Subject::Series(spec)) = &cfg.subject else { unreachable!("validated") };
            let f = spec.build(cfg.n_terms)?;
            let radii = cfg.radii()?;
            let (p, tol) = (&cfg.params, &cfg.tolerances);
            let checks = match cfg.kind {
                ExperimentKind::WimanValiron => checks::check_wiman_valiron(&f, &radii, p, tol)?,
                ExperimentKind::Gundersen => checks::check_gundersen(&f, &radii, p, tol)?,
                _ => checks::check_log_derivative(&f, &cfg.triple()?, &radii, p, tol)?,
            };
            report.checks.extend(checks);
        }
        ExperimentKind::TheoremDominant | ExperimentKind::TheoremType | ExperimentKind::TheoremProximity => {
            theorem::run_theorem_experiment(cfg, &mut report)?
        }
        ExperimentKind::PropositionSuite => report.checks.extend(suite::proposition_suite(&cfg.tolerances)?),
    }
    report.environment = report::Environment::stamp(start.elapsed().as_secs_f64());
    Ok(report)
}

fn band_check(name: &str, est: &OrderEstimate, band: Option<[f64; 2]>) -> CheckRecord {
    match band {
        Some([lo, hi]) => CheckRecord::new(name, est.value, Expected::Band { lo, hi }, 0.0),
        None => CheckRecord::new(name, est.value, Expected::Info, 0.0),
    }
}

fn sample_csv(s: &GrowthSample, est: &OrderEstimate) -> Result<String> {
    let mut buf = Vec::new();
    s.write_csv(Some(est), &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv is ascii"))
}

fn analyze(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let t = cfg.triple()?;
    let radii = cfg.radii()?;
    let expect = &cfg.params.expect;
    let series = match &cfg.subject {
        Some(Subject::Series(spec)) => Some(spec.build(cfg.n_terms)?),
        _ => None,
    };
    let source = || match (&series, &cfg.subject) {
        (Some(f), _) => Source::Series(f),
        (None, Some(Subject::Profile(p))) => Source::Profile(p),
        _ => unreachable!("validated"),
    };
    for (q, tag, order_band, type_band) in [
        (Quantity::Log2M, "m", expect.order_m, expect.type_m),
        (Quantity::LogT, "t", expect.order_t, expect.type_t),
    ] {
        let s = growth::sample(source(), q, &radii)?;
        let rho = growth::estimate_order(&s, &t, Mode::Upper)?;
        let mu = growth::estimate_order(&s, &t, Mode::Lower)?;
        report.push(band_check(&format!("order_{tag}"), &rho, order_band));
        report.push(band_check(&format!("lower_order_{tag}"), &mu, None));
        let rho_for_type = cfg.params.rho.unwrap_or(rho.value);
        if rho_for_type > 0.0 && rho_for_type.is_finite() {
            let tau = growth::estimate_type(&s, &t, rho_for_type, Mode::Upper)?;
            report.push(band_check(&format!("type_{tag}"), &tau, type_band));
            report.estimate(format!("type_{tag}"), tau);
        }
        report.artifacts.push(Artifact { file: format!("sample_{tag}.csv"), contents: sample_csv(&s, &rho)? });
        report.estimate(format!("order_{tag}"), rho);
        report.estimate(format!("lower_order_{tag}"), mu);
    }
    if cfg.params.count_zeros {
        let Some(f) = &series else {
            return Err(Error::Precondition("zero counting needs a series subject".into()));
        };
        let opts = ZeroCountOptions { zero_margin: cfg.tolerances.zero_margin, perturbation: cfg.tolerances.perturbation };
        let data = CountingData::from_series(f, &radii, &opts)?;
        for (mode, name, band) in [
            (Mode::Upper, "lambda_upper", expect.lambda_upper),
            (Mode::Lower, "lambda_lower", expect.lambda_lower),
        ] {
            let est = growth::estimate_lambda(&data, &t, CountForm::NBased, false, mode)?;
            report.push(band_check(name, &est, band));
            report.estimate(name, est);
        }
        let mut buf = Vec::new();
        data.write_csv(&mut buf)?;
        report.artifacts.push(Artifact { file: "counts.csv".into(), contents: String::from_utf8(buf).expect("ascii") });
    }
    Ok(())
}

fn solve(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let Some(Subject::Equation(eq)) = &cfg.subject else { unreachable!("validated") };
    let r_max = cfg.grid.r_max;
    let inits: Vec<InitialData> = (0..eq.k).map(|i| InitialData::basis(eq.k, i)).collect();
    let system = ode::solve_certified(eq, &inits, r_max, 64, cfg.max_terms)?;
    report.push(CheckRecord::new("n_terms", system.n_terms as f64, Expected::Info, 0.0));
    for (i, (f, res)) in system.solutions.iter().zip(&system.residuals).enumerate() {
        report.push(CheckRecord::new(
            format!("solution{i}_residual"),
            *res,
            Expected::AtMost { value: cfg.tolerances.residual },
            0.0,
        ));
        report.push(CheckRecord::new(
            format!("solution{i}_guaranteed_radius"),
            f.guaranteed_radius(),
            Expected::AtLeast { value: r_max },
            0.0,
        ));
        let mut buf = Vec::new();
        f.write_csv(&mut buf)?;
        report.artifacts.push(Artifact {
            file: format!("solution{i}_coefficients.csv"),
            contents: String::from_utf8(buf).expect("ascii"),
        });
    }
    Ok(())
}
