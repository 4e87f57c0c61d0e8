//! `recover`: worst-case, typical and exact-data recovery across a δ grid.

use lkcharge::report::{fmt_num, to_json, write_table};
use lkcharge::stechkin::{exact_input_demo, omega, typical_demo, worst_case_demo, DemoOutput, RecoveryDemo};
use serde::Serialize;

use super::stechkin::setting;
use super::{Failure, Sink};
use crate::config::{RecoverConfig, SettingKind};
use crate::svg::{LogLogPlot, Series, Style};

#[derive(Serialize)]
struct Summary<'a> {
    command: &'static str,
    config: &'a RecoverConfig,
    setting: String,
    runs: &'a [RecoveryDemo],
    passed: bool,
}

fn dump(out: &DemoOutput) -> Vec<Vec<String>> {
    let f = &out.estimate;
    let grid = f.grid();
    let mut rows = Vec::with_capacity(grid.len());
    grid.for_each_center(|lin, _, x| {
        let mut row = vec![lin.to_string()];
        row.extend(x.iter().map(|v| fmt_num(*v)));
        row.push(fmt_num(f.values()[lin]));
        rows.push(row);
    });
    rows
}

pub fn run(cfg: &RecoverConfig) -> anyhow::Result<Vec<Failure>> {
    let s = setting(SettingKind::Charge, cfg.d, cfg.m, &cfg.body, &cfg.cone)?;
    let mut sink = Sink::create(&cfg.out)?;
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    let df = cfg.d as f64;

    for (k, &delta) in cfg.deltas.iter().enumerate() {
        let worst = worst_case_demo(&s, delta, cfg.grid)?;
        let typical = typical_demo(&s, delta, cfg.grid, cfg.seed.wrapping_add(k as u64))?;
        let exact = exact_input_demo(&s, delta, cfg.grid)?;

        let w = &worst.summary;
        if ((w.measured_error / w.omega) - 1.0).abs() > cfg.hug_tol {
            failures.push(Failure::new(
                format!("worst/delta={delta}"),
                format!("error {} is not within {:e} of Omega {}", w.measured_error, cfg.hug_tol, w.omega),
            ));
        }
        let t = &typical.summary;
        if t.measured_error >= t.omega {
            failures.push(Failure::new(
                format!("typical/delta={delta}"),
                format!("error {} not below Omega {}", t.measured_error, t.omega),
            ));
        }
        let e = &exact.summary;
        let deviation = df * e.h / (df + 1.0);
        if e.measured_error > deviation * (1.0 + cfg.hug_tol) {
            failures.push(Failure::new(
                format!("exact/delta={delta}"),
                format!("error {} above the deviation term {deviation}", e.measured_error),
            ));
        }
        if cfg.dump_fields {
            let mut header = vec!["cell".to_string()];
            header.extend((0..cfg.d).map(|i| format!("x{i}")));
            header.push("estimate".into());
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let rows = dump(&typical);
            sink.write_with(&format!("recover_field_{k}.csv"), |b| write_table(&header, &rows, b))?;
        }
        println!(
            "delta={delta:<8} Omega={:.7e} worst={:.7e} typical={:.7e} exact={:.7e}",
            w.omega, w.measured_error, t.measured_error, e.measured_error
        );
        runs.extend([worst.summary, typical.summary, exact.summary]);
    }

    let rows: Vec<Vec<String>> = runs
        .iter()
        .map(|r| {
            vec![
                r.kind.clone(),
                fmt_num(r.delta),
                fmt_num(r.h),
                fmt_num(r.omega),
                fmt_num(r.measured_error),
                fmt_num(r.measured_error / r.omega),
                fmt_num(r.perturbation_norm),
                fmt_num(r.truth_gradient),
                r.grid.clone(),
            ]
        })
        .collect();
    sink.write_with("recover.csv", |b| {
        write_table(
            &["kind", "delta", "h", "omega", "error", "error_over_omega", "perturbation_norm", "truth_gradient", "grid"],
            &rows,
            b,
        )
    })?;
    let summary = Summary {
        command: "recover",
        config: cfg,
        setting: s.label(),
        runs: &runs,
        passed: failures.is_empty(),
    };
    sink.write("recover.json", to_json(&summary)?.as_bytes())?;

    // Ω on a dense grid spanning the requested deltas
    let lo = cfg.deltas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = cfg.deltas.iter().copied().fold(0.0, f64::max);
    let line: Vec<(f64, f64)> = lkcharge::stechkin::log_space(lo, hi.max(lo * 10.0), 50)
        .into_iter()
        .map(|d| Ok((d, omega(&s, d)?)))
        .collect::<lkcharge::Result<_>>()?;
    let pts = |kind: &str| -> Vec<(f64, f64)> {
        runs.iter().filter(|r| r.kind == kind).map(|r| (r.delta, r.measured_error)).collect()
    };
    let plot = LogLogPlot {
        title: format!("Recovery error against delta, {}", s.label()),
        x_label: "delta".into(),
        y_label: "sup error".into(),
        series: vec![
            Series::new("Omega(delta)", "#2c3e50", Style::Line, line),
            Series::new("worst case", "#c0392b", Style::Markers, pts("worst-case")),
            Series::new("gaussian truth", "#27ae60", Style::Markers, pts("typical")),
            Series::new("exact data", "#8e44ad", Style::Markers, pts("exact")),
        ],
    };
    sink.write("recover.svg", plot.render().as_bytes())?;
    Ok(failures)
}
