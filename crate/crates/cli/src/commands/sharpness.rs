//! `sharpness-search`: exploratory search for near-extremal functions.

use lkcharge::report::{fmt_num, to_json, write_table};
use lkcharge::sharpness::sharpness_search;

use super::{Failure, Sink};
use crate::config::SharpnessConfig;

/// Ratios above `1 + RATIO_TOL` would contradict the inequality.
const RATIO_TOL: f64 = 1e-6;
/// The `m = 1` inequality is sharp, so the search must get this close.
const CONTROL_TARGET: f64 = 0.999;

pub fn run(cfg: &SharpnessConfig) -> anyhow::Result<Vec<Failure>> {
    let r = sharpness_search(cfg.d, cfg.m, cfg.budget, cfg.seed)?;
    let mut failures = Vec::new();
    if let Some(t) = r.trajectory.iter().find(|t| t.ratio > 1.0 + RATIO_TOL) {
        failures.push(Failure::new(
            format!("evaluation/{}", t.evaluation),
            format!("ratio {} exceeds 1", t.ratio),
        ));
    }
    if cfg.m == 1 && r.best_ratio < CONTROL_TARGET {
        failures.push(Failure::new(
            "m1-control",
            format!("best ratio {} below {CONTROL_TARGET}", r.best_ratio),
        ));
    }

    let mut sink = Sink::create(&cfg.out)?;
    let rows: Vec<Vec<String>> = r
        .trajectory
        .iter()
        .map(|t| {
            vec![
                t.evaluation.to_string(),
                t.family.clone(),
                t.phase.clone(),
                fmt_num(t.ratio),
                fmt_num(t.best_ratio),
            ]
        })
        .collect();
    sink.write_with("sharpness_trajectory.csv", |b| {
        write_table(&["evaluation", "family", "phase", "ratio", "best_ratio"], &rows, b)
    })?;
    sink.write("sharpness.json", to_json(&r)?.as_bytes())?;
    println!(
        "exploratory: d={} m={} best ratio {:.9} ({}) after {} evaluations",
        r.d, r.m, r.best_ratio, r.best_family, r.evaluations
    );
    Ok(failures)
}
