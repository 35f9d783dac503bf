//! Pass/fail records and the provenance block embedded in every artifact.

use std::collections::BTreeMap;

use serde::Serialize;
use teichlab_core::curvature::HERMITIAN_NORM_CONVENTION;
use teichlab_core::quad_diff::BeltramiBasis;

use crate::config::{ResolvedConfig, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    /// Fail dominates inconclusive, which dominates pass.
    pub fn combine(self, other: Status) -> Status {
        match (self, other) {
            (Status::Fail, _) | (_, Status::Fail) => Status::Fail,
            (Status::Inconclusive, _) | (_, Status::Inconclusive) => Status::Inconclusive,
            _ => Status::Pass,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// One measured quantity against one bound.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    /// Relation that must hold: `measured <relation> tolerance`.
    pub relation: &'static str,
    pub status: Status,
}

impl Check {
    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Check {
        Check::new(name, measured, tolerance, "<=", measured <= tolerance)
    }

    pub fn below(name: impl Into<String>, measured: f64, tolerance: f64) -> Check {
        Check::new(name, measured, tolerance, "<", measured < tolerance)
    }

    pub fn at_least(name: impl Into<String>, measured: f64, tolerance: f64) -> Check {
        Check::new(name, measured, tolerance, ">=", measured >= tolerance)
    }

    fn new(name: impl Into<String>, measured: f64, tolerance: f64, relation: &'static str, ok: bool) -> Check {
        Check {
            name: name.into(),
            measured,
            tolerance,
            relation,
            status: if ok { Status::Pass } else { Status::Fail },
        }
    }

    /// A sign test `measured ≥ −ε` that is inconclusive when `ε` is not small
    /// against `scale`.
    pub fn sign_at_least(name: impl Into<String>, measured: f64, eps: f64, scale: f64) -> Check {
        let mut c = Check::new(name, measured, -eps, ">=", measured >= -eps);
        if c.status == Status::Pass && !(eps < scale.abs()) {
            c.status = Status::Inconclusive;
        }
        c
    }

    /// A sign test `measured ≤ ε`, inconclusive when `ε` is not small against `scale`.
    pub fn sign_at_most(name: impl Into<String>, measured: f64, eps: f64, scale: f64) -> Check {
        let mut c = Check::new(name, measured, eps, "<=", measured <= eps);
        if c.status == Status::Pass && !(eps < scale.abs()) {
            c.status = Status::Inconclusive;
        }
        c
    }

    /// Strict positivity `measured > ε`; inconclusive when `|measured| ≤ ε`.
    pub fn strictly_positive(name: impl Into<String>, measured: f64, eps: f64) -> Check {
        let status = if measured > eps {
            Status::Pass
        } else if measured < -eps || measured.is_nan() {
            Status::Fail
        } else {
            Status::Inconclusive
        };
        Check {
            name: name.into(),
            measured,
            tolerance: eps,
            relation: ">",
            status,
        }
    }

    /// Record without a bound.
    pub fn info(name: impl Into<String>, measured: f64) -> Check {
        Check {
            name: name.into(),
            measured,
            tolerance: f64::NAN,
            relation: "info",
            status: Status::Pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionRecord {
    pub id: u32,
    pub name: String,
    /// Short name of the identity or estimate being checked.
    pub anchor: String,
    /// Headline value: the first bounded check.
    pub measured: f64,
    pub tolerance: f64,
    pub status: Status,
    pub error_bar: Option<f64>,
    pub checks: Vec<Check>,
}

impl CriterionRecord {
    pub fn new(id: u32, name: &str, anchor: &str, checks: Vec<Check>, error_bar: Option<f64>) -> CriterionRecord {
        let status = checks
            .iter()
            .filter(|c| c.relation != "info")
            .fold(Status::Pass, |s, c| s.combine(c.status));
        let headline = checks.iter().find(|c| c.relation != "info");
        CriterionRecord {
            id,
            name: name.to_string(),
            anchor: anchor.to_string(),
            measured: headline.map_or(f64::NAN, |c| c.measured),
            tolerance: headline.map_or(f64::NAN, |c| c.tolerance),
            status,
            error_bar,
            checks,
        }
    }

    /// Record for a computation that raised an error.
    pub fn errored(id: u32, name: &str, anchor: &str, message: String) -> CriterionRecord {
        let mut r = CriterionRecord::new(id, name, anchor, vec![Check::at_most(message, f64::NAN, 0.0)], None);
        r.status = Status::Fail;
        r
    }

    /// `NN PASS name: measured ... tol ...`.
    pub fn line(&self) -> String {
        let bar = self.error_bar.map_or(String::new(), |b| format!(" err={b:.3e}"));
        format!(
            "criterion {:>2} {:<12} {}: measured={:.6e} tol={:.3e}{bar}",
            self.id,
            self.status.label(),
            self.name,
            self.measured,
            self.tolerance
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BasisProvenance {
    /// Exponents `k` of the selected seeds `v^k`.
    pub seeds: Vec<usize>,
    pub series_radius: f64,
    pub series_terms: usize,
    pub mesh_level: u32,
    pub scale: f64,
    pub sup_mu: [f64; 3],
    /// Chart radius derived from the basis (before any override).
    pub basis_chart_radius: f64,
    pub normalization: &'static str,
}

impl BasisProvenance {
    pub fn of(basis: &BeltramiBasis, series_terms: usize, basis_chart_radius: f64) -> Self {
        BasisProvenance {
            seeds: basis.seeds.clone(),
            series_radius: basis.series_radius,
            series_terms,
            mesh_level: basis.level,
            scale: basis.scale,
            sup_mu: basis.sup_mu,
            basis_chart_radius,
            normalization: "Weil-Petersson orthonormal via Cholesky of the seed Gram",
        }
    }
}

/// Provenance block carried by every output.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: ResolvedConfig,
    pub config_digest: String,
    /// Chart radius in effect (`r_max`).
    pub chart_radius: f64,
    pub basis: BasisProvenance,
    pub hermitian_norm_convention: &'static str,
}

impl Provenance {
    pub fn new(config: &RunConfig, chart_radius: f64, basis: BasisProvenance) -> Self {
        Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config: config.resolved(),
            config_digest: config.digest(),
            chart_radius,
            basis,
            hermitian_norm_convention: HERMITIAN_NORM_CONVENTION,
        }
    }

    /// `# key: value` lines for CSV output.
    pub fn comment_lines(&self) -> String {
        let json = serde_json::to_value(self).expect("provenance serializes");
        let mut out = String::new();
        if let serde_json::Value::Object(map) = json {
            for (k, v) in map {
                out.push_str(&format!("# {k}: {v}\n"));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub provenance: Provenance,
    pub overall: Status,
    pub counts: BTreeMap<&'static str, usize>,
    pub criteria: Vec<CriterionRecord>,
}

impl VerificationReport {
    pub fn new(provenance: Provenance, criteria: Vec<CriterionRecord>) -> Self {
        let mut counts = BTreeMap::from([("pass", 0), ("fail", 0), ("inconclusive", 0)]);
        for c in &criteria {
            let k = match c.status {
                Status::Pass => "pass",
                Status::Fail => "fail",
                Status::Inconclusive => "inconclusive",
            };
            *counts.get_mut(k).expect("known key") += 1;
        }
        let overall = criteria.iter().fold(Status::Pass, |s, c| s.combine(c.status));
        VerificationReport {
            provenance,
            overall,
            counts,
            criteria,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_combination() {
        assert_eq!(Status::Pass.combine(Status::Inconclusive), Status::Inconclusive);
        assert_eq!(Status::Inconclusive.combine(Status::Fail), Status::Fail);
        assert_eq!(Status::Pass.combine(Status::Pass), Status::Pass);
    }

    #[test]
    fn nan_measurement_fails() {
        assert_eq!(Check::at_most("x", f64::NAN, 1.0).status, Status::Fail);
        assert_eq!(Check::strictly_positive("x", f64::NAN, 1.0).status, Status::Fail);
    }

    #[test]
    fn sign_check_with_noisy_bar_is_inconclusive() {
        assert_eq!(Check::sign_at_least("x", 0.1, 5.0, 1.0).status, Status::Inconclusive);
        assert_eq!(Check::sign_at_least("x", 0.1, 1e-6, 1.0).status, Status::Pass);
        assert_eq!(Check::sign_at_least("x", -0.1, 1e-6, 1.0).status, Status::Fail);
    }

    #[test]
    fn info_checks_do_not_decide() {
        let r = CriterionRecord::new(1, "n", "a", vec![Check::info("d", 5.0), Check::below("m", 1.0, 2.0)], None);
        assert_eq!(r.status, Status::Pass);
        assert_eq!(r.measured, 1.0);
    }
}
