//! Serializable check records shared by the verification suites.

use num_rational::BigRational;
use serde::{Serialize, Serializer};

pub(crate) fn ser_rational<S: Serializer>(x: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

/// One asserted comparison. `margin ≥ -tolerance` is a pass; for equalities the margin
/// is `-|lhs - rhs|` (scaled as documented by the producing check).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub indices: Vec<(String, i64)>,
    pub seed: Option<u64>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// `lhs ≤ rhs` up to `tolerance`.
    pub fn at_most(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let margin = rhs - lhs;
        Self::build(name.into(), lhs, rhs, margin, tolerance)
    }

    /// `|lhs - rhs| ≤ tolerance`.
    pub fn close(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let margin = -(lhs - rhs).abs();
        Self::build(name.into(), lhs, rhs, margin, tolerance)
    }

    /// `lhs` is an error measure against zero.
    pub fn residual(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self::build(name.into(), residual, 0.0, -residual.abs(), tolerance)
    }

    fn build(name: String, lhs: f64, rhs: f64, margin: f64, tolerance: f64) -> Self {
        Self {
            name,
            indices: Vec::new(),
            seed: None,
            lhs,
            rhs,
            margin,
            tolerance,
            pass: margin.is_finite() && margin >= -tolerance,
        }
    }

    pub fn with_index(mut self, name: &str, value: impl TryInto<i64>) -> Self {
        self.indices.push((name.to_owned(), value.try_into().unwrap_or(i64::MAX)));
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

/// A check that could not be evaluated inside the truncation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub name: String,
    pub indices: Vec<(String, i64)>,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub skipped: Vec<Skipped>,
}

impl VerificationReport {
    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn skip(&mut self, name: impl Into<String>, indices: &[(&str, i64)], reason: impl Into<String>) {
        self.skipped.push(Skipped {
            name: name.into(),
            indices: indices.iter().map(|(n, v)| ((*n).to_owned(), *v)).collect(),
            reason: reason.into(),
        });
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
        self.skipped.extend(other.skipped);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn len(&self) -> usize {
        self.checks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checks.is_empty()
    }

    /// The most negative margin relative to its tolerance, for summaries.
    pub fn worst(&self) -> Option<&Check> {
        self.checks.iter().min_by(|a, b| {
            let ra = a.margin + a.tolerance;
            let rb = b.margin + b.tolerance;
            ra.total_cmp(&rb)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_semantics() {
        assert!(Check::at_most("le", 1.0, 1.0, 0.0).pass);
        assert!(!Check::at_most("le", 1.0 + 1e-9, 1.0, 1e-10).pass);
        assert!(Check::close("eq", 1.0, 1.0 + 1e-12, 1e-10).pass);
        assert!(!Check::residual("nan", f64::NAN, 1.0).pass);
        let mut r = VerificationReport::default();
        r.push(Check::close("a", 0.0, 1.0, 0.5).with_index("d", 2).with_seed(7));
        r.push(Check::close("b", 0.0, 0.0, 0.5));
        assert!(!r.passed());
        assert_eq!(r.worst().unwrap().name, "a");
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["checks"][0]["indices"][0][0], "d");
        assert_eq!(json["checks"][0]["seed"], 7);
    }
}
