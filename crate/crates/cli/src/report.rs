use std::time::Instant;

use serde::Serialize;

/// How a measured value is compared against its bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Check {
    /// `measured ≤ bound + tol`.
    AtMost { tol: f64 },
    /// `measured ≥ bound − tol`.
    AtLeast { tol: f64 },
    /// `measured < bound`.
    Below,
    /// `|measured − bound| ≤ tol`.
    Near { tol: f64 },
    /// The bound lies inside the interval reported with the measurement.
    IntervalContains { lo: f64, hi: f64 },
}

impl Check {
    pub fn passes(&self, measured: f64, bound: f64) -> bool {
        if !measured.is_finite() {
            return false;
        }
        match *self {
            Check::AtMost { tol } => measured <= bound + tol,
            Check::AtLeast { tol } => measured >= bound - tol,
            Check::Below => measured < bound,
            Check::Near { tol } => (measured - bound).abs() <= tol,
            Check::IntervalContains { lo, hi } => lo <= bound && bound <= hi,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub experiment: String,
    pub claim: String,
    pub measured: f64,
    pub bound: f64,
    pub check: Check,
    pub pass: bool,
}

impl ReportRow {
    pub fn new(experiment: &str, claim: impl Into<String>, measured: f64, bound: f64, check: Check) -> Self {
        ReportRow {
            experiment: experiment.to_string(),
            claim: claim.into(),
            measured,
            bound,
            check,
            pass: check.passes(measured, bound),
        }
    }
}

/// Deterministic part of a report: identical for identical config and seed.
#[derive(Clone, Debug, Serialize)]
pub struct ReportBody {
    pub experiment: String,
    pub seed: u64,
    pub params: serde_json::Value,
    pub rows: Vec<ReportRow>,
    /// Per-experiment structured results (verdicts, certificates).
    pub details: serde_json::Map<String, serde_json::Value>,
}

impl ReportBody {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    /// CSV with columns experiment,claim,measured,bound,pass,ms.
    pub fn to_csv(&self, timings: &Timings) -> String {
        let mut s = String::from("experiment,claim,measured,bound,pass,ms\n");
        for (i, r) in self.rows.iter().enumerate() {
            let ms = timings.row_ms.get(i).copied().unwrap_or(0);
            s.push_str(&format!(
                "{},{},{:e},{:e},{},{}\n",
                r.experiment, r.claim, r.measured, r.bound, r.pass, ms
            ));
        }
        s
    }
}

/// Wall-clock data, kept out of the report body.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Timings {
    pub row_ms: Vec<u128>,
    pub total_ms: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub unix_time: u64,
    pub timings: Timings,
}

impl Metadata {
    pub fn new(timings: Timings) -> Self {
        Metadata {
            tool: "qct".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            unix_time: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            timings,
        }
    }
}

/// Collects rows and times each group of rows.
pub struct RowSink {
    pub rows: Vec<ReportRow>,
    pub row_ms: Vec<u128>,
    pub details: serde_json::Map<String, serde_json::Value>,
    started: Instant,
}

impl Default for RowSink {
    fn default() -> Self {
        RowSink {
            rows: Vec::new(),
            row_ms: Vec::new(),
            details: serde_json::Map::new(),
            started: Instant::now(),
        }
    }
}

impl RowSink {
    /// Appends rows and charges them the time since the previous call.
    pub fn extend(&mut self, rows: impl IntoIterator<Item = ReportRow>) {
        let ms = self.started.elapsed().as_millis();
        for row in rows {
            self.rows.push(row);
            self.row_ms.push(ms);
        }
        self.started = Instant::now();
    }

    pub fn push(&mut self, row: ReportRow) {
        self.extend([row]);
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        self.details.insert(
            key.to_string(),
            serde_json::to_value(value).expect("details serialize"),
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks() {
        assert!(Check::AtMost { tol: 1e-9 }.passes(0.6 + 5e-10, 0.6));
        assert!(!Check::AtMost { tol: 0.0 }.passes(0.61, 0.6));
        assert!(Check::AtLeast { tol: 1e-6 }.passes(1.4999995, 1.5));
        assert!(!Check::Below.passes(1.0, 1.0));
        assert!(Check::Near { tol: 1e-9 }.passes(0.75, 0.75));
        assert!(Check::IntervalContains { lo: 0.74, hi: 0.76 }.passes(0.7501, 0.75));
        assert!(!Check::Near { tol: 1.0 }.passes(f64::NAN, 0.0));
    }

    #[test]
    fn csv_columns() {
        let body = ReportBody {
            experiment: "norms".into(),
            seed: 1,
            params: serde_json::Value::Null,
            rows: vec![ReportRow::new("norms", "otp-key-average", 0.0, 1e-12, Check::AtMost { tol: 0.0 })],
            details: Default::default(),
        };
        let csv = body.to_csv(&Timings {
            row_ms: vec![3],
            total_ms: 3,
        });
        assert_eq!(csv, "experiment,claim,measured,bound,pass,ms\nnorms,otp-key-average,0e0,1e-12,true,3\n");
    }
}
