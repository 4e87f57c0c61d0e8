//! `stechkin-curve`: the error curve `E_N`, the modulus `Ω(δ)` and points
//! attained by the optimal operator on extremal inputs.

use lkcharge::report::{fmt_num, to_json, write_numeric_csv, write_table};
use lkcharge::stechkin::{
    attained_point, log_space, sandwich_check, stechkin_curve, AttainedPoint, SandwichReport, StechkinCurvePoint,
};
use lkcharge::{LabError, ProblemSetting};
use serde::Serialize;

use super::{Failure, Sink};
use crate::config::{invalid, SettingKind, StechkinConfig};
use crate::svg::{LogLogPlot, Series, Style};

#[derive(Serialize)]
struct Summary<'a> {
    command: &'static str,
    config: &'a StechkinConfig,
    setting: String,
    /// Log-log slope between the first and last curve points.
    slope: f64,
    expected_slope: f64,
    curve: &'a [StechkinCurvePoint],
    sandwich: &'a SandwichReport,
    attained: &'a [AttainedPoint],
    passed: bool,
}

pub fn setting(kind: SettingKind, d: usize, m: usize, cfg_body: &lkcharge::config::BodySpec, cfg_cone: &lkcharge::config::ConeSpec) -> anyhow::Result<ProblemSetting> {
    let as_config = |e: LabError| invalid(e.to_string());
    match kind {
        SettingKind::Charge => {
            let body = cfg_body.build(d).map_err(as_config)?;
            let cone = cfg_cone.build(d).map_err(as_config)?;
            ProblemSetting::charge(body, cone).map_err(as_config)
        }
        SettingKind::Mixed => ProblemSetting::mixed(d, m).map_err(as_config),
    }
}

pub fn run(cfg: &StechkinConfig) -> anyhow::Result<Vec<Failure>> {
    let s = setting(cfg.setting, cfg.d, cfg.m, &cfg.body, &cfg.cone)?;
    let ns = log_space(cfg.n_min, cfg.n_max, cfg.n_points);
    let curve = stechkin_curve(&s, &ns)?;
    let deltas = log_space(cfg.delta_min, cfg.delta_max, cfg.delta_points);
    let sandwich = sandwich_check(&s, &deltas, cfg.sandwich_tol)?;
    let attained = cfg
        .attained_h
        .iter()
        .map(|&h| attained_point(&s, h, cfg.grid))
        .collect::<lkcharge::Result<Vec<_>>>()?;

    let (first, last) = (&curve[0], &curve[curve.len() - 1]);
    let slope = (last.e_n / first.e_n).ln() / (last.n / first.n).ln();
    let expected_slope = -1.0 / cfg.d as f64;

    let mut failures = Vec::new();
    if (slope - expected_slope).abs() > 1e-6 {
        failures.push(Failure::new("curve", format!("log-log slope {slope} differs from {expected_slope}")));
    }
    for r in sandwich.rows.iter().filter(|r| !r.ok) {
        failures.push(Failure::new(
            format!("sandwich/delta={}", r.delta),
            format!("relative gap {:e} above {:e}", r.rel_error, cfg.sandwich_tol),
        ));
    }
    for a in &attained {
        let rel = (a.measured - a.e_n).abs() / a.e_n;
        if rel > cfg.attained_tol {
            failures.push(Failure::new(
                format!("attained/h={}", a.h),
                format!("measured {} vs E_N {} (relative {rel:e})", a.measured, a.e_n),
            ));
        }
    }

    let mut sink = Sink::create(&cfg.out)?;
    let rows: Vec<Vec<f64>> = curve.iter().map(|p| vec![p.n, p.e_n, p.h]).collect();
    sink.write_with("stechkin_curve.csv", |b| write_numeric_csv(&["n", "e_n", "h"], &rows, b))?;
    let rows: Vec<Vec<String>> = sandwich
        .rows
        .iter()
        .map(|r| {
            vec![
                fmt_num(r.delta),
                fmt_num(r.omega),
                fmt_num(r.infimum),
                fmt_num(r.n_star),
                fmt_num(r.rel_error),
                r.at_boundary.to_string(),
                r.ok.to_string(),
            ]
        })
        .collect();
    sink.write_with("omega.csv", |b| {
        write_table(&["delta", "omega", "infimum", "n_star", "rel_error", "at_boundary", "ok"], &rows, b)
    })?;
    let rows: Vec<Vec<f64>> = attained.iter().map(|a| vec![a.h, a.n, a.e_n, a.measured]).collect();
    sink.write_with("attained.csv", |b| write_numeric_csv(&["h", "n", "e_n", "measured"], &rows, b))?;
    let summary = Summary {
        command: "stechkin-curve",
        config: cfg,
        setting: s.label(),
        slope,
        expected_slope,
        curve: &curve,
        sandwich: &sandwich,
        attained: &attained,
        passed: failures.is_empty(),
    };
    sink.write("stechkin.json", to_json(&summary)?.as_bytes())?;

    let plot = LogLogPlot {
        title: format!("Best approximation error, {}", s.label()),
        x_label: "operator norm bound N".into(),
        y_label: "E_N".into(),
        series: vec![
            Series::new("closed form", "#2c3e50", Style::Line, curve.iter().map(|p| (p.n, p.e_n)).collect()),
            Series::new("extremal input", "#c0392b", Style::Markers, attained.iter().map(|a| (a.n, a.measured)).collect()),
        ],
    };
    sink.write("stechkin_curve.svg", plot.render().as_bytes())?;
    let plot = LogLogPlot {
        title: format!("Modulus of continuity, {}", s.label()),
        x_label: "delta".into(),
        y_label: "Omega(delta)".into(),
        series: vec![
            Series::new("closed form", "#2c3e50", Style::Line, sandwich.rows.iter().map(|r| (r.delta, r.omega)).collect()),
            Series::new("inf over N of E_N + N delta", "#27ae60", Style::Markers, sandwich.rows.iter().map(|r| (r.delta, r.infimum)).collect()),
        ],
    };
    sink.write("omega.svg", plot.render().as_bytes())?;

    println!("setting {}: slope {slope:.9} (expected {expected_slope:.9})", s.label());
    for a in &attained {
        println!("h={:<8} N={:.6e} E_N={:.6e} measured={:.6e}", a.h, a.n, a.e_n, a.measured);
    }
    Ok(failures)
}
