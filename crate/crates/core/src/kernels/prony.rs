use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Kernel, PositiveTypeReport, SampleWindow};
use crate::error::{Error, Result};

/// One exponential term `weight * exp(-rate * t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PronyTerm {
    pub weight: f64,
    pub rate: f64,
}

/// Sum-of-exponentials kernel `k(t) = sum_i a_i exp(-b_i t)` with `a_i > 0`, `b_i >= 0`.
///
/// Terms are kept sorted by ascending rate so that two series built from the
/// same coefficients compare and serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PronySeries {
    terms: Vec<PronyTerm>,
}

impl PronySeries {
    pub fn new(terms: impl IntoIterator<Item = PronyTerm>) -> Result<Self> {
        let mut terms: Vec<PronyTerm> = terms.into_iter().collect();
        if terms.is_empty() {
            return Err(Error::Validation(
                "a Prony series needs at least one term".into(),
            ));
        }
        for (i, term) in terms.iter().enumerate() {
            validate_term(term).map_err(|msg| Error::Validation(format!("term {}: {msg}", i + 1)))?;
        }
        terms.sort_by(|a, b| a.rate.total_cmp(&b.rate));
        Ok(Self { terms })
    }

    /// Builds a series from `(a_i, b_i)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(weight, rate)| PronyTerm { weight, rate }))
    }

    pub fn single(weight: f64, rate: f64) -> Result<Self> {
        Self::from_pairs(&[(weight, rate)])
    }

    pub fn terms(&self) -> &[PronyTerm] {
        &self.terms
    }

    /// Number of exponential terms `m`.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `sum_i a_i`, which is also the value at `t = 0`.
    pub fn weight_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!(
                "kernel evaluated at t = {t}, need t >= 0"
            )));
        }
        Ok(self.eval_nonneg(t))
    }

    pub(crate) fn eval_nonneg(&self, t: f64) -> f64 {
        if t == 0.0 {
            return self.weight_sum();
        }
        self.terms
            .iter()
            .map(|term| term.weight * (-term.rate * t).exp())
            .sum()
    }

    /// Parses the two-column `a,b` coefficient format.
    ///
    /// Blank lines and lines starting with `#` are skipped; a single `a,b`
    /// header is accepted before the first data row.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut seen_data = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !seen_data && is_header(line) {
                seen_data = true;
                continue;
            }
            seen_data = true;
            let mut fields = line.split(',');
            let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(Error::Format {
                    line: line_no,
                    message: format!("expected two comma-separated values, got `{line}`"),
                });
            };
            let parse = |s: &str, name: &str| {
                s.trim().parse::<f64>().map_err(|e| Error::Format {
                    line: line_no,
                    message: format!("cannot parse {name} `{}`: {e}", s.trim()),
                })
            };
            let term = PronyTerm {
                weight: parse(a, "a")?,
                rate: parse(b, "b")?,
            };
            validate_term(&term)
                .map_err(|msg| Error::Validation(format!("row at line {line_no}: {msg}")))?;
            terms.push(term);
        }
        if terms.is_empty() {
            return Err(Error::Format {
                line: text.lines().count(),
                message: "no coefficient rows found".into(),
            });
        }
        Self::new(terms)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }

    /// Serializes with a header line; floats use the shortest round-trip representation.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("a,b\n");
        for term in &self.terms {
            let _ = writeln!(out, "{:?},{:?}", term.weight, term.rate);
        }
        out
    }
}

impl<'de> Deserialize<'de> for PronySeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            terms: Vec<PronyTerm>,
        }
        let raw = Raw::deserialize(d)?;
        PronySeries::new(raw.terms).map_err(serde::de::Error::custom)
    }
}

fn is_header(line: &str) -> bool {
    let cols: Vec<&str> = line.split(',').map(str::trim).collect();
    cols == ["a", "b"]
}

fn validate_term(term: &PronyTerm) -> std::result::Result<(), String> {
    if !term.weight.is_finite() || term.weight <= 0.0 {
        return Err(format!("weight a = {} must be finite and > 0", term.weight));
    }
    if !term.rate.is_finite() || term.rate < 0.0 {
        return Err(format!("rate b = {} must be finite and >= 0", term.rate));
    }
    Ok(())
}

impl Kernel for PronySeries {
    fn eval(&self, t: f64) -> Result<f64> {
        PronySeries::eval(self, t)
    }

    /// Every term with `a > 0`, `b >= 0` is nonnegative, nonincreasing and
    /// convex, so the sufficient condition holds for the sum without sampling.
    fn positive_type(&self, _window: &SampleWindow) -> PositiveTypeReport {
        let first_bad = self
            .terms
            .iter()
            .position(|t| validate_term(t).is_err());
        match first_bad {
            None => PositiveTypeReport::holds(),
            Some(i) => PositiveTypeReport::violated_by_term(i),
        }
    }

    fn describe(&self) -> String {
        format!("Prony series with {} terms", self.len())
    }
}
