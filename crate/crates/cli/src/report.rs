//! Verification report: per-check records with a machine-readable verdict.

use serde::Serialize;

/// One executed check. The JSON verdict schema is exactly
/// `{check, tag, residual, tol, pass}` per record.
#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub check: String,
    /// What the check asserts, as a formula.
    pub tag: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
    #[serde(skip)]
    pub samples: usize,
}

/// A check whose precondition failed; carried separately so the verdict
/// schema stays fixed.
#[derive(Clone, Debug, Serialize)]
pub struct SkippedCheck {
    pub check: String,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize, Default)]
pub struct VerificationReport {
    pub overall_pass: bool,
    pub checks: Vec<CheckRecord>,
    pub skipped: Vec<SkippedCheck>,
}

impl VerificationReport {
    pub fn record(
        &mut self,
        check: &str,
        tag: &str,
        residual: f64,
        tol: f64,
        samples: usize,
    ) -> bool {
        let pass = residual <= tol;
        self.checks.push(CheckRecord {
            check: check.into(),
            tag: tag.into(),
            residual,
            tol,
            pass,
            samples,
        });
        pass
    }

    pub fn skip(&mut self, check: &str, reason: String) {
        self.skipped.push(SkippedCheck {
            check: check.into(),
            reason,
        });
    }

    /// Overall pass iff every non-skipped check passes.
    pub fn finalize(&mut self) {
        self.overall_pass = self.checks.iter().all(|c| c.pass);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// CSV rows `check,tag,residual,tol,pass`; skipped checks follow with
    /// empty residual/tol and `skipped:<reason>` in the pass column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,tag,residual,tol,pass\n");
        for c in &self.checks {
            out.push_str(&format!(
                "{},\"{}\",{},{},{}\n",
                c.check, c.tag, c.residual, c.tol, c.pass
            ));
        }
        for s in &self.skipped {
            out.push_str(&format!("{},\"{}\",,,skipped\n", s.check, s.reason));
        }
        out
    }

    /// Human-readable one-line-per-check table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{:>4}  {:<28} residual {:>12.3e}  tol {:>9.1e}  ({} samples)\n",
                if c.pass { "ok" } else { "FAIL" },
                c.check,
                c.residual,
                c.tol,
                c.samples
            ));
        }
        for s in &self.skipped {
            out.push_str(&format!("skip  {:<28} {}\n", s.check, s.reason));
        }
        out.push_str(&format!(
            "overall: {}\n",
            if self.overall_pass { "PASS" } else { "FAIL" }
        ));
        out
    }
}
