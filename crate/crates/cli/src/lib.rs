//! Deterministic experiment runner over `qct-core`.

pub mod config;
pub mod experiments;
pub mod fixtures;
pub mod report;

use std::time::Instant;

use config::ExperimentConfig;
use report::{ReportBody, RowSink, Timings};

/// Runs the configured experiment. The body depends only on the config.
pub fn run(cfg: &ExperimentConfig) -> qct_core::Result<(ReportBody, Timings)> {
    let start = Instant::now();
    let mut sink = RowSink::default();
    experiments::run_experiment(cfg, &mut sink)?;
    let params = serde_json::json!({
        "eps": cfg.params.eps,
        "delta": cfg.params.delta,
        "n": cfg.params.n,
        "shots": cfg.params.shots,
        "restarts": cfg.params.restarts,
        "samples": cfg.params.samples,
        "iters": cfg.params.iters,
    });
    let body = ReportBody {
        experiment: cfg.experiment.name().to_string(),
        seed: cfg.seed,
        params,
        rows: sink.rows,
        details: sink.details,
    };
    let timings = Timings {
        row_ms: sink.row_ms,
        total_ms: start.elapsed().as_millis(),
    };
    Ok((body, timings))
}
