//! Identity-check bookkeeping shared by library verifiers and the CLI:
//! named residuals, pass/fail aggregation, serializable reports.

use serde::Serialize;
use std::fmt;

/// One verified identity: its name, the worst residual observed, and
/// whether it stayed within tolerance. Exact integer checks report
/// residual 0.0 or 1.0.
#[derive(Clone, Debug, Serialize)]
pub struct CheckItem {
    pub identity: String,
    pub max_residual: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub items: Vec<CheckItem>,
    pub pass: bool,
}

impl CheckReport {
    pub fn new(name: impl Into<String>) -> Self {
        CheckReport { name: name.into(), items: vec![], pass: true }
    }

    /// Records a numeric identity with tolerance `tol`.
    pub fn push_residual(&mut self, identity: impl Into<String>, residual: f64, tol: f64) {
        let pass = residual.is_finite() && residual < tol;
        self.items.push(CheckItem {
            identity: identity.into(),
            max_residual: residual,
            pass,
        });
        self.pass &= pass;
    }

    /// Records an exact (integer/structural) identity.
    pub fn push_exact(&mut self, identity: impl Into<String>, ok: bool) {
        self.items.push(CheckItem {
            identity: identity.into(),
            max_residual: if ok { 0.0 } else { 1.0 },
            pass: ok,
        });
        self.pass &= ok;
    }

    pub fn merge(&mut self, other: CheckReport) {
        self.pass &= other.pass;
        self.items.extend(other.items);
    }

    /// Name of the first failing identity, if any.
    pub fn first_failure(&self) -> Option<&str> {
        self.items
            .iter()
            .find(|i| !i.pass)
            .map(|i| i.identity.as_str())
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}] {}", if self.pass { "PASS" } else { "FAIL" }, self.name)?;
        for item in &self.items {
            writeln!(
                f,
                "  [{}] {} (max residual {:.3e})",
                if item.pass { "pass" } else { "FAIL" },
                item.identity,
                item.max_residual
            )?;
        }
        Ok(())
    }
}

/// Accumulates the global-scale residual max |a-b| / max(1, |values|)
/// used for matrix and element comparisons.
#[derive(Clone, Copy, Debug, Default)]
pub struct ResidualAccumulator {
    max_delta: f64,
    max_value: f64,
}

impl ResidualAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, a: num_complex::Complex64, b: num_complex::Complex64) {
        self.max_delta = self.max_delta.max((a - b).norm());
        self.max_value = self.max_value.max(a.norm()).max(b.norm());
    }

    pub fn observe_delta(&mut self, delta: f64) {
        self.max_delta = self.max_delta.max(delta);
    }

    pub fn observe_value(&mut self, v: num_complex::Complex64) {
        self.max_value = self.max_value.max(v.norm());
    }

    pub fn residual(&self) -> f64 {
        self.max_delta / self.max_value.max(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn report_aggregation() {
        let mut r = CheckReport::new("demo");
        r.push_residual("close", 1e-12, 1e-8);
        assert!(r.pass);
        r.push_exact("exact", true);
        r.push_residual("far", 1e-3, 1e-8);
        assert!(!r.pass);
        assert_eq!(r.first_failure(), Some("far"));
        let text = r.to_string();
        assert!(text.contains("FAIL"));
        assert!(text.contains("demo"));
    }

    #[test]
    fn residual_scaling() {
        let mut acc = ResidualAccumulator::new();
        acc.observe(Complex64::new(100.0, 0.0), Complex64::new(100.0, 1e-6));
        assert!(acc.residual() < 2e-8);
        let mut small = ResidualAccumulator::new();
        small.observe(Complex64::new(1e-9, 0.0), Complex64::new(0.0, 0.0));
        // Tiny values compare against the absolute floor 1.
        assert!(small.residual() < 2e-9);
        assert!(!CheckReport::new("nan residual is a failure").pass == false);
        let mut r = CheckReport::new("nan");
        r.push_residual("nan", f64::NAN, 1e-8);
        assert!(!r.pass);
    }
}
