use serde::Serialize;
use serde_json::{Map, Value};

/// One named PASS/FAIL check, `lhs <= rhs + tol` or `|lhs - rhs| <= tol`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
}

impl Verdict {
    pub fn at_most(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            pass: lhs <= rhs + tol,
            lhs,
            rhs,
            tol,
        }
    }

    pub fn at_least(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            pass: lhs >= rhs - tol,
            lhs,
            rhs,
            tol,
        }
    }

    pub fn close(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            pass: (lhs - rhs).abs() <= tol,
            lhs,
            rhs,
            tol,
        }
    }

    /// A boolean outcome recorded as `lhs = 1` or `0` against `rhs = 1`.
    pub fn holds(name: impl Into<String>, pass: bool) -> Self {
        Self {
            name: name.into(),
            pass,
            lhs: if pass { 1.0 } else { 0.0 },
            rhs: 1.0,
            tol: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config_digest: String,
    pub results: Map<String, Value>,
    pub verdicts: Vec<Verdict>,
    pub seed: u64,
    pub version: String,
    pub wall_time: f64,
}

impl RunReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}
