//! Experiment configuration files.

use serde::{Deserialize, Serialize};
use serde_path_to_error::Segment;

use crate::error::{Error, Result};
use crate::growth::{self, Profile};
use crate::ode::LinearODE;
use crate::scale::{ScaleSpec, ScaleTriple};
use crate::series::SeriesSpec;

/// Value required in the `schema` field.
pub const SCHEMA: &str = "growth-lab/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Analyze,
    Solve,
    WimanValiron,
    Gundersen,
    LogDerivative,
    TheoremDominant,
    TheoremType,
    TheoremProximity,
    PropositionSuite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Subject {
    Series(SeriesSpec),
    Profile(Profile),
    Equation(LinearODE),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripleSpec {
    pub alpha: ScaleSpec,
    pub beta: ScaleSpec,
    pub gamma: ScaleSpec,
}

impl TripleSpec {
    pub fn build(&self) -> Result<ScaleTriple> {
        ScaleTriple::new(self.alpha.build()?, self.beta.build()?, self.gamma.build()?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { r_min: 1.0, r_max: 50.0, points: growth::DEFAULT_GRID_POINTS }
    }
}

impl GridSpec {
    pub fn radii(&self) -> Result<Vec<f64>> {
        growth::geometric_grid(self.r_min, self.r_max, self.points)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Wiman–Valiron identity, absolute.
    pub identity: f64,
    /// Tail bound on the Wiman–Valiron ratio deviation.
    pub wv_ratio: f64,
    pub residual: f64,
    /// Fraction of grid radii allowed to violate a lemma inequality.
    pub exceptional_fraction: f64,
    /// Largest drop tolerated in a "non-decreasing" λ ratio series.
    pub trend: f64,
    /// Gap required between dominated and dominant orders.
    pub hypothesis_margin: f64,
    /// Slack for profile inequalities and equalities.
    pub profile: f64,
    pub zero_margin: f64,
    pub perturbation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity: 1e-9,
            wv_ratio: 0.1,
            residual: 1e-8,
            exceptional_fraction: 0.1,
            trend: 0.3,
            hypothesis_margin: 0.05,
            profile: 0.05,
            zero_margin: 1e-8,
            perturbation: 1e-3,
        }
    }
}

/// Expected bands for `analyze` runs; absent bands are reported without a verdict.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Expectations {
    pub order_t: Option<[f64; 2]>,
    pub order_m: Option<[f64; 2]>,
    pub type_t: Option<[f64; 2]>,
    pub type_m: Option<[f64; 2]>,
    pub lambda_upper: Option<[f64; 2]>,
    pub lambda_lower: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    /// Gundersen dilation χ > 1.
    pub chi: f64,
    /// Gundersen derivative orders `i < j`.
    pub i: usize,
    pub j: usize,
    /// Log-derivative order.
    pub k: usize,
    /// A priori order (type normalization or Lemma 3.6 bound).
    pub rho: Option<f64>,
    /// Subtracted function for the oscillation clause (default `g(z) = z`).
    pub g: Option<SeriesSpec>,
    pub oscillation_r_min: f64,
    /// Lower end of the radius range on which the Wiman–Valiron ratio is asserted.
    pub wv_ratio_r_min: f64,
    /// Derivative orders for the Wiman–Valiron ratio.
    pub wv_orders: Vec<u32>,
    pub n_random: usize,
    pub expect_hypotheses: bool,
    /// Band for the solutions' (α(log),β,γ)-order.
    pub solution_band: [f64; 2],
    /// Lower bound the classical-scale order of solutions must exceed.
    pub classical_exceeds: Option<f64>,
    /// Largest number of terms the automatic truncation may use for a pass.
    pub terms_budget: Option<usize>,
    pub count_zeros: bool,
    pub expect: Expectations,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            chi: 2.0,
            i: 0,
            j: 1,
            k: 1,
            rho: None,
            g: None,
            oscillation_r_min: 8.0,
            wv_ratio_r_min: 20.0,
            wv_orders: vec![1, 2],
            n_random: 3,
            expect_hypotheses: true,
            solution_band: [0.8, 1.1],
            classical_exceeds: None,
            terms_budget: None,
            count_zeros: false,
            expect: Expectations::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    pub name: String,
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<Subject>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triple: Option<TripleSpec>,
    #[serde(default)]
    pub grid: GridSpec,
    /// Series length for builtin subjects.
    #[serde(default = "default_terms")]
    pub n_terms: usize,
    /// Cap for automatic ODE truncation.
    #[serde(default = "default_max_terms")]
    pub max_terms: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub params: Params,
}

fn default_terms() -> usize {
    400
}

fn default_max_terms() -> usize {
    crate::ode::MAX_TERMS
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        "/".into()
    } else {
        out
    }
}

fn config_error(path: &str, message: impl Into<String>) -> Error {
    Error::Config { path: path.into(), message: message.into() }
}

impl ExperimentConfig {
    /// Parses and validates a JSON document; errors carry a JSON-pointer path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let p = pointer(e.path());
            config_error(&p, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error("/", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(config_error("/schema", format!("expected \"{SCHEMA}\", got \"{}\"", self.schema)));
        }
        let g = &self.grid;
        if !(g.r_min > 0.0 && g.r_max >= g.r_min && g.r_max.is_finite()) {
            return Err(config_error("/grid", "need 0 < r_min <= r_max < inf"));
        }
        if g.points < 2 {
            return Err(config_error("/grid/points", "need at least 2 points"));
        }
        if let Some(t) = &self.triple {
            for (name, s) in [("alpha", &t.alpha), ("beta", &t.beta), ("gamma", &t.gamma)] {
                s.build().map_err(|e| config_error(&format!("/triple/{name}"), e.to_string()))?;
            }
            t.build().map_err(|e| config_error("/triple", e.to_string()))?;
        }
        match &self.subject {
            Some(Subject::Series(s)) => {
                s.resolve().map_err(|e| config_error("/subject/series", e.to_string()))?;
            }
            Some(Subject::Equation(eq)) => {
                if eq.coeffs.len() != eq.k {
                    return Err(config_error("/subject/equation/A", format!("expected {} coefficients", eq.k)));
                }
                for (i, c) in eq.coeffs.iter().enumerate() {
                    c.resolve().map_err(|e| config_error(&format!("/subject/equation/A/{i}"), e.to_string()))?;
                }
                if let Some(f) = &eq.rhs {
                    f.resolve().map_err(|e| config_error("/subject/equation/F", e.to_string()))?;
                }
                eq.validate().map_err(|e| config_error("/subject/equation", e.to_string()))?;
            }
            Some(Subject::Profile(_)) | None => {}
        }
        if let Some(gs) = &self.params.g {
            gs.resolve().map_err(|e| config_error("/params/g", e.to_string()))?;
        }
        let needs = |what: &str| config_error("/subject", format!("{:?} needs a {what} subject", self.kind));
        match (self.kind, &self.subject) {
            (ExperimentKind::Analyze, Some(Subject::Series(_) | Subject::Profile(_))) => {}
            (ExperimentKind::Analyze, _) => return Err(needs("series or profile")),
            (
                ExperimentKind::WimanValiron | ExperimentKind::Gundersen | ExperimentKind::LogDerivative,
                Some(Subject::Series(_)),
            ) => {}
            (ExperimentKind::WimanValiron | ExperimentKind::Gundersen | ExperimentKind::LogDerivative, _) => {
                return Err(needs("series"))
            }
            (
                ExperimentKind::Solve
                | ExperimentKind::TheoremDominant
                | ExperimentKind::TheoremType
                | ExperimentKind::TheoremProximity,
                Some(Subject::Equation(_)),
            ) => {}
            (
                ExperimentKind::Solve
                | ExperimentKind::TheoremDominant
                | ExperimentKind::TheoremType
                | ExperimentKind::TheoremProximity,
                _,
            ) => return Err(needs("equation")),
            (ExperimentKind::PropositionSuite, _) => {}
        }
        if self.kind == ExperimentKind::Gundersen {
            let p = &self.params;
            if !(p.chi > 1.0) {
                return Err(config_error("/params/chi", "chi must exceed 1"));
            }
            if p.i >= p.j {
                return Err(config_error("/params/j", "need i < j"));
            }
        }
        if self.kind == ExperimentKind::LogDerivative && self.params.rho.is_none() {
            return Err(config_error("/params/rho", "log_derivative needs an a priori order rho"));
        }
        Ok(())
    }

    pub fn triple(&self) -> Result<ScaleTriple> {
        match &self.triple {
            Some(t) => t.build(),
            None => Ok(ScaleTriple::classical()),
        }
    }

    pub fn radii(&self) -> Result<Vec<f64>> {
        if self.grid.r_min == self.grid.r_max {
            return Ok(vec![self.grid.r_min]);
        }
        self.grid.radii()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_json(
            r#"{"schema":"growth-lab/1","name":"x","kind":"analyze","subject":{"series":{"builtin":"exp"}}}"#,
        )
        .unwrap();
        assert_eq!(cfg.grid, GridSpec::default());
        assert_eq!(cfg.n_terms, 400);
        assert_eq!(cfg.triple().unwrap(), ScaleTriple::classical());
    }

    #[test]
    fn errors_name_the_offending_field() {
        let bad_scale = r#"{"schema":"growth-lab/1","name":"x","kind":"analyze",
            "subject":{"series":{"builtin":"exp"}},
            "triple":{"alpha":{"kind":"logg_plus"},"beta":{"kind":"identity"},"gamma":{"kind":"identity"}}}"#;
        match ExperimentConfig::from_json(bad_scale).unwrap_err() {
            Error::Config { path, .. } => assert!(path.starts_with("/triple/alpha"), "{path}"),
            e => panic!("{e:?}"),
        }
        let bad_builtin = r#"{"schema":"growth-lab/1","name":"x","kind":"analyze","subject":{"series":{"builtin":"gamma"}}}"#;
        match ExperimentConfig::from_json(bad_builtin).unwrap_err() {
            Error::Config { path, message } => {
                assert_eq!(path, "/subject/series");
                assert!(message.contains("gamma"));
            }
            e => panic!("{e:?}"),
        }
        let bad_schema = r#"{"schema":"growth-lab/0","name":"x","kind":"proposition_suite"}"#;
        assert!(matches!(
            ExperimentConfig::from_json(bad_schema),
            Err(Error::Config { path, .. }) if path == "/schema"
        ));
        let unknown = r#"{"schema":"growth-lab/1","name":"x","kind":"proposition_suite","grid":{"r_min":1,"rmax":3}}"#;
        assert!(matches!(
            ExperimentConfig::from_json(unknown),
            Err(Error::Config { path, .. }) if path.starts_with("/grid")
        ));
        let wrong_subject = r#"{"schema":"growth-lab/1","name":"x","kind":"solve","subject":{"series":{"builtin":"exp"}}}"#;
        assert!(matches!(
            ExperimentConfig::from_json(wrong_subject),
            Err(Error::Config { path, .. }) if path == "/subject"
        ));
    }
}
