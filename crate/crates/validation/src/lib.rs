//! Reporting harness for the acceptance suite: every criterion produces one
//! `PASS`/`FAIL` line with the measured values and the tolerance it was held
//! to.

use std::time::{Duration, Instant};

/// Outcome of a single criterion.
#[derive(Debug, Clone)]
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

    /// Combines parts that must all pass.
    pub fn all(parts: Vec<Verdict>) -> Self {
        let pass = parts.iter().all(|p| p.pass);
        let detail = parts
            .iter()
            .map(|p| format!("[{}] {}", if p.pass { "ok" } else { "FAIL" }, p.detail))
            .collect::<Vec<_>>()
            .join("; ");
        Self { pass, detail }
    }
}

/// `|measured - target| <= tol`, described as `label = measured (target +- tol)`.
pub fn within(label: &str, measured: f64, target: f64, tol: f64) -> Verdict {
    Verdict::new(
        (measured - target).abs() <= tol,
        format!("{label} = {measured:.6} (want {target} ± {tol})"),
    )
}

/// `measured < limit`.
pub fn below(label: &str, measured: f64, limit: f64) -> Verdict {
    Verdict::new(measured < limit, format!("{label} = {measured:.3e} (want < {limit:e})"))
}

/// `lo <= measured <= hi`.
pub fn in_range(label: &str, measured: f64, lo: f64, hi: f64) -> Verdict {
    Verdict::new(
        (lo..=hi).contains(&measured),
        format!("{label} = {measured:.6} (want in [{lo}, {hi}])"),
    )
}

/// Runs criteria in order, printing one line per criterion as it finishes.
#[derive(Debug, Default)]
pub struct Suite {
    results: Vec<(u32, bool)>,
}

impl Suite {
    pub fn new() -> Self {
        Self::default()
    }

    /// Runs `check`, failing the criterion if it panics or exceeds `budget`.
    pub fn run(&mut self, id: u32, title: &str, budget: Duration, check: impl FnOnce() -> Verdict) {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check));
        let elapsed = start.elapsed();
        let verdict = match outcome {
            Ok(v) => v,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panicked".into());
                Verdict::new(false, format!("error: {msg}"))
            }
        };
        let in_time = elapsed <= budget;
        let pass = verdict.pass && in_time;
        let timing = if in_time {
            format!("{:.1}s", elapsed.as_secs_f64())
        } else {
            format!("{:.1}s, over the {:.0}s budget", elapsed.as_secs_f64(), budget.as_secs_f64())
        };
        println!(
            "criterion {id:>2} {} {title} ({timing}): {}",
            if pass { "PASS" } else { "FAIL" },
            verdict.detail
        );
        self.results.push((id, pass));
    }

    /// Prints the tally and returns whether every criterion passed.
    pub fn finish(&self) -> bool {
        let failed: Vec<u32> = self.results.iter().filter(|r| !r.1).map(|r| r.0).collect();
        println!(
            "acceptance: {} of {} criteria passed{}",
            self.results.len() - failed.len(),
            self.results.len(),
            if failed.is_empty() {
                String::new()
            } else {
                format!("; failed: {failed:?}")
            }
        );
        failed.is_empty()
    }
}
