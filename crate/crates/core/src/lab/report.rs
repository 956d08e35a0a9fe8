//! Structured verdicts for verified inequalities.

use serde::{Deserialize, Serialize};

/// Tolerance policy for exact-mode comparisons: an inequality holds when
/// lhs <= rhs * (1 + rel) + abs + error_bound, where `error_bound` carries
/// quadrature or sampling error on top of the fixed slack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rel: 1e-8, abs: 1e-12 }
    }
}

/// Everything needed to reproduce a report, recorded alongside the verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ReportParams {
    pub n: usize,
    pub d: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gauge: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quad_nodes: Option<usize>,
    /// "exact" or "mc".
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tol_rel: f64,
    pub tol_abs: f64,
    /// Parameters of the random-function generator that produced the input.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub type_bound: Option<f64>,
}

impl ReportParams {
    pub fn new(n: usize, d: usize, tol: Tolerances) -> Self {
        ReportParams {
            n,
            d,
            method: "exact".to_string(),
            tol_rel: tol.rel,
            tol_abs: tol.abs,
            ..Default::default()
        }
    }
}

/// Verdict record for one checked inequality or identity.
///
/// `ratio` is lhs/rhs, reported as 0 with `ratio_infinite = false` when both
/// sides vanish; a vanishing rhs against a nonzero lhs sets the
/// `ratio_infinite` flag instead of serializing a floating infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub ratio_infinite: bool,
    pub satisfied: bool,
    /// ratio^{1/p} where the sides are p-th moments; the empirical constant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    pub error_bound: f64,
    pub params: ReportParams,
}

impl InequalityReport {
    /// Builds the report, deriving `ratio` and `satisfied` from the sides,
    /// the recorded tolerances, and `error_bound`.
    pub fn from_sides(
        name: impl Into<String>,
        lhs: f64,
        rhs: f64,
        error_bound: f64,
        params: ReportParams,
    ) -> Self {
        let satisfied =
            lhs <= rhs * (1.0 + params.tol_rel) + params.tol_abs + error_bound;
        let (ratio, ratio_infinite) = if rhs == 0.0 {
            if lhs == 0.0 {
                (0.0, false)
            } else {
                (0.0, true)
            }
        } else {
            (lhs / rhs, false)
        };
        InequalityReport {
            name: name.into(),
            lhs,
            rhs,
            ratio,
            ratio_infinite,
            satisfied,
            constant: None,
            error_bound,
            params,
        }
    }

    /// Attaches the empirical constant ratio^{1/p}.
    pub fn with_constant(mut self, p: f64) -> Self {
        self.constant = if self.ratio_infinite {
            None
        } else if self.ratio <= 0.0 {
            Some(0.0)
        } else {
            Some(self.ratio.powf(1.0 / p))
        };
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sides_are_satisfied_with_zero_ratio() {
        let r = InequalityReport::from_sides(
            "z",
            0.0,
            0.0,
            0.0,
            ReportParams::new(2, 1, Tolerances::default()),
        );
        assert!(r.satisfied);
        assert_eq!(r.ratio, 0.0);
        assert!(!r.ratio_infinite);
    }

    #[test]
    fn vanishing_rhs_flags_infinite_ratio() {
        let r = InequalityReport::from_sides(
            "z",
            1.0,
            0.0,
            0.0,
            ReportParams::new(2, 1, Tolerances::default()),
        );
        assert!(!r.satisfied);
        assert!(r.ratio_infinite);
        assert_eq!(r.ratio, 0.0);
    }

    #[test]
    fn satisfied_respects_tolerances_and_error_bound() {
        let tol = Tolerances { rel: 1e-8, abs: 1e-12 };
        let ok = InequalityReport::from_sides("a", 1.0 + 5e-9, 1.0, 0.0, ReportParams::new(1, 1, tol));
        assert!(ok.satisfied);
        let bad =
            InequalityReport::from_sides("b", 1.0 + 5e-8, 1.0, 0.0, ReportParams::new(1, 1, tol));
        assert!(!bad.satisfied);
        let rescued =
            InequalityReport::from_sides("c", 1.0 + 5e-8, 1.0, 1e-7, ReportParams::new(1, 1, tol));
        assert!(rescued.satisfied);
    }
}
