//! Verdict plumbing for the acceptance target: every criterion prints one
//! `PASS` / `FAIL` line and the process exit code reflects all of them.

use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub id: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} ({:.2} s) {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

/// A check returns whether it held plus a one-line summary of what it measured.
pub type Check = fn() -> (bool, String);

pub fn run_check(id: &'static str, check: Check) -> Verdict {
    let t = Instant::now();
    let (pass, detail) = match catch_unwind(AssertUnwindSafe(check)) {
        Ok(r) => r,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            (false, format!("panicked: {msg}"))
        }
    };
    Verdict {
        id,
        pass,
        detail,
        elapsed: t.elapsed(),
    }
}

/// Runs every check whose id contains `filter` (all when `None`), printing
/// each verdict as it lands. Returns the verdicts in order.
pub fn run_all(checks: &[(&'static str, Check)], filter: Option<&str>) -> Vec<Verdict> {
    checks
        .iter()
        .filter(|(id, _)| filter.is_none_or(|f| id.contains(f)))
        .map(|&(id, check)| {
            let v = run_check(id, check);
            println!("{v}");
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_failures() {
        let v = run_check("X", || panic!("boom"));
        assert!(!v.pass);
        assert!(v.to_string().starts_with("X FAIL"));
        assert!(v.detail.contains("boom"));
    }

    #[test]
    fn filter_selects_by_id() {
        let checks: [(&str, Check); 2] = [("A1", || (true, "ok".into())), ("A2", || (false, "no".into()))];
        let v = run_all(&checks, Some("A2"));
        assert_eq!(v.len(), 1);
        assert!(!v[0].pass);
    }
}
