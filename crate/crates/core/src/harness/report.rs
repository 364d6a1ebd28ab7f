//! Check records, reports and their on-disk form.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::growth::OrderEstimate;

use super::config::ExperimentConfig;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expected {
    /// `|measured − value| <= tolerance`.
    Near { value: f64 },
    /// `measured <= value + tolerance`.
    AtMost { value: f64 },
    /// `measured >= value − tolerance`.
    AtLeast { value: f64 },
    /// Strict `measured > value`.
    Exceeds { value: f64 },
    /// `lo − tolerance <= measured <= hi + tolerance`.
    Band { lo: f64, hi: f64 },
    /// Recorded without a verdict.
    Info,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Not evaluated because a hypothesis gate failed.
    Skipped,
    /// A theorem hypothesis that does not hold for the subject; not a failure.
    NotMet,
    Info,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub measured: f64,
    pub expected: Expected,
    pub tolerance: f64,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, measured: f64, expected: Expected, tolerance: f64) -> Self {
        let ok = match expected {
            Expected::Near { value } => (measured - value).abs() <= tolerance,
            Expected::AtMost { value } => measured <= value + tolerance,
            Expected::AtLeast { value } => measured >= value - tolerance,
            Expected::Exceeds { value } => measured > value,
            Expected::Band { lo, hi } => measured >= lo - tolerance && measured <= hi + tolerance,
            Expected::Info => {
                return Self { name: name.into(), measured, expected, tolerance, verdict: Verdict::Info, note: None }
            }
        };
        let verdict = if ok { Verdict::Pass } else { Verdict::Fail };
        Self { name: name.into(), measured, expected, tolerance, verdict, note: None }
    }

    pub fn flag(name: impl Into<String>, ok: bool, note: impl Into<String>) -> Self {
        let mut c = Self::new(name, if ok { 1.0 } else { 0.0 }, Expected::Near { value: 1.0 }, 0.0);
        c.note = Some(note.into());
        c
    }

    pub fn skipped(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            measured: f64::NAN,
            expected: Expected::Info,
            tolerance: 0.0,
            verdict: Verdict::Skipped,
            note: Some(reason.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Turns a failed verdict into [`Verdict::NotMet`], for hypothesis records.
    pub fn as_hypothesis(mut self) -> Self {
        if self.verdict == Verdict::Fail {
            self.verdict = Verdict::NotMet;
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Completed,
    HypothesesNotMet,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NamedEstimate {
    pub name: String,
    pub estimate: OrderEstimate,
}

/// Non-deterministic part of a report, kept apart so the rest compares bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Environment {
    pub version: String,
    pub os: String,
    pub arch: String,
    pub elapsed_seconds: f64,
}

impl Environment {
    pub fn stamp(elapsed_seconds: f64) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            elapsed_seconds,
        }
    }
}

/// Extra CSV file written next to the report.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub file: String,
    pub contents: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub status: Status,
    pub checks: Vec<CheckRecord>,
    pub estimates: Vec<NamedEstimate>,
    pub environment: Environment,
    #[serde(skip)]
    pub artifacts: Vec<Artifact>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl Report {
    pub fn new(config: ExperimentConfig) -> Self {
        Self {
            config,
            status: Status::Completed,
            checks: Vec::new(),
            estimates: Vec::new(),
            environment: Environment::stamp(0.0),
            artifacts: Vec::new(),
        }
    }

    pub fn push(&mut self, c: CheckRecord) {
        self.checks.push(c);
    }

    pub fn estimate(&mut self, name: impl Into<String>, estimate: OrderEstimate) {
        self.estimates.push(NamedEstimate { name: name.into(), estimate });
    }

    /// True when no check failed. Skipped checks do not count as failures.
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.verdict != Verdict::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Rows `name,measured,expected,tolerance,verdict`.
    pub fn checks_csv(&self) -> String {
        let mut w = Vec::new();
        writeln!(w, "name,measured,expected,tolerance,verdict").unwrap();
        for c in &self.checks {
            let expected = match c.expected {
                Expected::Near { value } => format!("={value:e}"),
                Expected::AtMost { value } => format!("<={value:e}"),
                Expected::AtLeast { value } => format!(">={value:e}"),
                Expected::Exceeds { value } => format!(">{value:e}"),
                Expected::Band { lo, hi } => format!("[{lo:e};{hi:e}]"),
                Expected::Info => String::new(),
            };
            let verdict = serde_json::to_value(c.verdict).unwrap();
            writeln!(w, "{},{:.17e},{expected},{:e},{}", c.name, c.measured, c.tolerance, verdict.as_str().unwrap())
                .unwrap();
        }
        String::from_utf8(w).unwrap()
    }

    /// Writes the report and its artifacts into `dir`; returns the paths written.
    pub fn emit(&self, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let stem = file_stem(&self.config.name);
        let mut written = Vec::new();
        let main = match format {
            Format::Json => (dir.join(format!("{stem}.json")), self.to_json()),
            Format::Csv => (dir.join(format!("{stem}_checks.csv")), self.checks_csv()),
        };
        fs::write(&main.0, main.1)?;
        written.push(main.0);
        for a in &self.artifacts {
            let p = dir.join(format!("{stem}_{}", a.file));
            fs::write(&p, &a.contents)?;
            written.push(p);
        }
        Ok(written)
    }
}

fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts_follow_comparisons() {
        assert!(CheckRecord::new("a", 1.04, Expected::Near { value: 1.0 }, 0.05).passed());
        assert!(!CheckRecord::new("a", 1.06, Expected::Near { value: 1.0 }, 0.05).passed());
        assert!(CheckRecord::new("b", 0.5, Expected::Band { lo: 0.45, hi: 0.55 }, 0.0).passed());
        assert!(!CheckRecord::new("c", 3.0, Expected::Exceeds { value: 3.0 }, 0.0).passed());
        assert!(!CheckRecord::new("d", f64::NAN, Expected::AtMost { value: 1.0 }, 0.0).passed());
        assert_eq!(CheckRecord::new("e", 2.0, Expected::Info, 0.0).verdict, Verdict::Info);
    }
}
