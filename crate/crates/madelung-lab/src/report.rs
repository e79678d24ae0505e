//! Assertion records shared by the acceptance suite and the CLI reports.
//! Every numeric check names its tolerance and provenance.

use serde::Serialize;

/// Where an expected value comes from: a value stated by the underlying
/// theory, a trivial identity, or an independently derived oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Provenance {
    #[serde(rename = "PAPER")]
    Paper,
    #[serde(rename = "TRIVIAL")]
    Trivial,
    #[serde(rename = "DERIVED")]
    Derived,
}

/// One named numeric assertion.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    /// "<" requires measured < bound; ">" requires measured > bound;
    /// "==" requires exact equality
    pub sense: &'static str,
    pub provenance: Provenance,
    pub pass: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, measured: f64, bound: f64, provenance: Provenance) -> Self {
        Self { name: name.into(), measured, bound, sense: "<", provenance, pass: measured < bound }
    }

    pub fn above(name: impl Into<String>, measured: f64, bound: f64, provenance: Provenance) -> Self {
        Self { name: name.into(), measured, bound, sense: ">", provenance, pass: measured > bound }
    }

    pub fn exactly(name: impl Into<String>, measured: f64, bound: f64, provenance: Provenance) -> Self {
        Self { name: name.into(), measured, bound, sense: "==", provenance, pass: measured == bound }
    }
}

/// Result of one acceptance criterion.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: String,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub wall_ms: u128,
}

impl CriterionOutcome {
    pub fn new(id: u32, name: impl Into<String>, checks: Vec<Check>, wall_ms: u128) -> Self {
        let passed = checks.iter().all(|c| c.pass);
        Self { id, name: name.into(), checks, passed, wall_ms }
    }

    pub fn summary_line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        format!("criterion {:>2} [{}] {} ({} ms)", self.id, status, self.name, self.wall_ms)
    }

    pub fn detail_lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "  [{}] {}: measured {:.6e} {} {:.6e} ({:?})",
                    if c.pass { "ok" } else { "FAIL" },
                    c.name,
                    c.measured,
                    c.sense,
                    c.bound,
                    c.provenance
                )
            })
            .collect()
    }
}

/// Aggregated acceptance run.
#[derive(Debug, Clone, Serialize)]
pub struct AcceptanceReport {
    pub quick: bool,
    pub criteria: Vec<CriterionOutcome>,
    pub all_passed: bool,
    pub total_wall_ms: u128,
}
