//! Minimal runner for acceptance checks: each check prints exactly one
//! `PASS`/`FAIL` line, and the process exit status reflects all of them.

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

/// What a check measured, and whether that meets its threshold.
pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Default)]
pub struct Runner {
    failed: Vec<String>,
    total: usize,
}

impl Runner {
    pub fn new() -> Self {
        Self::default()
    }

    /// Runs `check`; it fails if it panics, reports failure, or exceeds `limit`.
    pub fn check(&mut self, id: &str, name: &str, limit: Duration, check: impl FnOnce() -> Verdict) {
        self.total += 1;
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check));
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(v) if elapsed > limit => (false, format!("{}; took {:.1?}, limit {:.0?}", v.detail, elapsed, limit)),
            Ok(v) => (v.pass, v.detail),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                (false, format!("panicked: {msg}"))
            }
        };
        println!(
            "{} [{id}] {name}: {detail} ({:.1?})",
            if pass { "PASS" } else { "FAIL" },
            elapsed
        );
        if !pass {
            self.failed.push(id.to_string());
        }
    }

    /// Prints the tally and exits non-zero if anything failed.
    pub fn finish(self) -> ! {
        println!(
            "\nacceptance: {} passed, {} failed{}",
            self.total - self.failed.len(),
            self.failed.len(),
            if self.failed.is_empty() {
                String::new()
            } else {
                format!(" ({})", self.failed.join(", "))
            }
        );
        std::process::exit(if self.failed.is_empty() { 0 } else { 1 })
    }
}
