//! Machine-readable certificates.  Every verification emits a list of named
//! checks; a failing check carries a witness for the violation.

use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub check: String,
    pub pass: bool,
    pub bound: Option<u32>,
    pub witness: Option<Value>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Certificate {
    pub checks: Vec<Check>,
}

impl Certificate {
    pub fn new() -> Certificate {
        Certificate { checks: Vec::new() }
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn push(&mut self, check: impl Into<String>, pass: bool, bound: Option<u32>, witness: Option<Value>) {
        self.checks.push(Check { check: check.into(), pass, bound, witness });
    }

    pub fn ok(&mut self, check: impl Into<String>, bound: Option<u32>) {
        self.push(check, true, bound, None);
    }

    pub fn fail(&mut self, check: impl Into<String>, bound: Option<u32>, witness: Value) {
        self.push(check, false, bound, Some(witness));
    }

    /// Record a boolean outcome, attaching the witness only on failure.
    pub fn record(
        &mut self,
        check: impl Into<String>,
        pass: bool,
        bound: Option<u32>,
        witness: impl FnOnce() -> Value,
    ) {
        if pass {
            self.push(check, true, bound, None);
        } else {
            self.push(check, false, bound, Some(witness()));
        }
    }

    pub fn merge(&mut self, other: Certificate) {
        self.checks.extend(other.checks);
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.check == name)
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "pass": self.pass(),
            "checks": self.checks,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_shape() {
        let mut c = Certificate::new();
        c.ok("alpha", Some(6));
        c.fail("beta", None, serde_json::json!({"point": "x"}));
        let v = c.to_json();
        assert_eq!(v["pass"], serde_json::json!(false));
        let checks = v["checks"].as_array().unwrap();
        assert_eq!(checks.len(), 2);
        for entry in checks {
            assert!(entry.get("check").is_some());
            assert!(entry.get("pass").is_some());
            assert!(entry.get("bound").is_some());
            assert!(entry.get("witness").is_some());
        }
        assert_eq!(checks[0]["witness"], Value::Null);
    }
}
