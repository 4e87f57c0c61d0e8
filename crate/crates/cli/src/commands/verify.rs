//! `verify`: evaluates the inequalities on one family of inputs.

use std::sync::Arc;

use lkcharge::families::Density;
use lkcharge::inequality::{
    lk_additive_charge, lk_additive_mixed, lk_multiplicative_charge, lk_multiplicative_mixed, nagy_inequality,
};
use lkcharge::mixed::{extremal_mixed_m0, extremal_mixed_m1, mixed_grid};
use lkcharge::report::{to_json, write_inequality_csv};
use lkcharge::{
    covering_grid, extremal_charge, Charge, CheckOptions, Cone, ConvexBody, GridField, GridSpec, InequalityReport,
    LabError, MixedFunction, MixedParams,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Failure, Sink};
use crate::config::{invalid, VerifyCase, VerifyConfig};
use crate::svg::{LogLogPlot, Series, Style};

#[derive(Serialize)]
struct Summary<'a> {
    command: &'static str,
    config: &'a VerifyConfig,
    passed: bool,
    reports: &'a [InequalityReport],
}

fn label(case: VerifyCase, h: Option<f64>, kind: &str) -> String {
    match h {
        Some(h) => format!("{}/h={h}/{kind}", case.name()),
        None => format!("{}/{kind}", case.name()),
    }
}

fn as_config(e: LabError) -> anyhow::Error {
    invalid(e.to_string())
}

fn geometry(cfg: &VerifyConfig) -> anyhow::Result<(ConvexBody, Cone)> {
    let body = cfg.body.build(cfg.d).map_err(as_config)?;
    let cone = cfg.cone.build(cfg.d).map_err(as_config)?;
    Ok((body, cone))
}

/// The extremal density with its gradient callback halved, so the reported
/// gradient bound is too small by a factor of two.
fn corrupted(nu: &Charge) -> anyhow::Result<Charge> {
    let f = nu.density().clone();
    let g = f
        .gradient_fn()
        .cloned()
        .ok_or_else(|| anyhow::anyhow!("extremal density lacks a gradient callback"))?;
    let bad: GridField = f.with_gradient(Arc::new(move |x: &[f64], out: &mut [f64]| {
        g(x, out);
        out.iter_mut().for_each(|o| *o *= 0.5);
    }));
    Ok(Charge::new(bad, nu.cone().clone())?)
}

fn density_charge(cfg: &VerifyConfig, cone: &Cone) -> anyhow::Result<Charge> {
    if let Some(terms) = &cfg.density {
        let den = Density::new(terms.clone()).map_err(as_config)?;
        if den.dim() != cfg.d {
            return Err(invalid(format!("density has dimension {}, expected d = {}", den.dim(), cfg.d)));
        }
        let from_zero = cone.orthant_m().unwrap_or(0);
        let grid = den.covering_grid(from_zero, cfg.grid).map_err(as_config)?;
        return Charge::new(den.field(grid)?, cone.clone()).map_err(as_config);
    }
    let src = cfg.density_csv.as_ref().ok_or_else(|| invalid("no density given"))?;
    let grid = GridSpec::new(src.lo.clone(), src.hi.clone(), src.n.clone()).map_err(as_config)?;
    if grid.dim() != cfg.d {
        return Err(invalid(format!("density grid has dimension {}, expected d = {}", grid.dim(), cfg.d)));
    }
    let file = std::fs::File::open(&src.path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", src.path.display())))?;
    Charge::from_csv(file, grid, cone.clone()).map_err(as_config)
}

fn charge_reports(
    cfg: &VerifyConfig,
    body: &ConvexBody,
    nu: &Charge,
    h: Option<f64>,
    hs: &[f64],
    equality: bool,
    out: &mut Vec<InequalityReport>,
) -> anyhow::Result<()> {
    let opts = |kind: &str, at: Option<f64>| {
        let mut o = CheckOptions::new(label(cfg.case, at, kind));
        o.slack_tol = cfg.slack_tol;
        if equality {
            o = o.expecting_equality(cfg.equality_tol);
        }
        o
    };
    for &t in hs {
        out.push(lk_additive_charge(nu, body, t, &opts("additive", Some(t)))?);
    }
    if cfg.case != VerifyCase::CorruptedExtremal {
        out.push(lk_multiplicative_charge(nu, body, &opts("multiplicative", h))?);
    }
    if cfg.case != VerifyCase::ZeroCharge {
        for &t in hs {
            out.push(nagy_inequality(nu.density(), body, nu.cone(), t, &opts("nagy", Some(t)))?);
        }
    }
    Ok(())
}

fn mixed_reports(
    cfg: &VerifyConfig,
    f: &MixedFunction,
    p: &MixedParams,
    tag: &str,
    with_mult: bool,
    equality: bool,
    out: &mut Vec<InequalityReport>,
) -> anyhow::Result<()> {
    let opts = |kind: &str| {
        let mut o = CheckOptions::new(format!("{}/{tag}/{kind}", cfg.case.name()));
        o.slack_tol = cfg.slack_tol;
        if equality {
            o = o.expecting_equality(cfg.equality_tol);
        }
        o
    };
    out.push(lk_additive_mixed(f, p, &opts("additive"))?);
    if with_mult {
        out.push(lk_multiplicative_mixed(f, p, &opts("multiplicative"))?);
    }
    Ok(())
}

fn run_cases(cfg: &VerifyConfig) -> anyhow::Result<Vec<InequalityReport>> {
    let mut reports = Vec::new();
    match cfg.case {
        VerifyCase::ExtremalCharge | VerifyCase::CorruptedExtremal => {
            let (body, cone) = geometry(cfg)?;
            for &h in &cfg.h {
                let nu = extremal_charge(&body, &cone, h, cfg.grid)?;
                if cfg.case == VerifyCase::ExtremalCharge {
                    charge_reports(cfg, &body, &nu, Some(h), &[h], true, &mut reports)?;
                } else {
                    charge_reports(cfg, &body, &corrupted(&nu)?, Some(h), &[h], false, &mut reports)?;
                }
            }
        }
        VerifyCase::ZeroCharge => {
            let (body, cone) = geometry(cfg)?;
            let radius = cfg.h.iter().copied().fold(0.0, f64::max);
            let grid = covering_grid(&body, &cone, radius, cfg.grid)?;
            let nu = Charge::zero(grid, cone)?;
            charge_reports(cfg, &body, &nu, None, &cfg.h, false, &mut reports)?;
        }
        VerifyCase::Density => {
            let (body, cone) = geometry(cfg)?;
            let nu = density_charge(cfg, &cone)?;
            charge_reports(cfg, &body, &nu, None, &cfg.h, false, &mut reports)?;
        }
        VerifyCase::ExtremalMixed => {
            for &h in &cfg.h {
                let p = MixedParams::new(cfg.d, cfg.m, h)?;
                let grid = mixed_grid(&p, cfg.grid)?;
                let f = if cfg.m == 0 {
                    extremal_mixed_m0(h, grid)?
                } else {
                    extremal_mixed_m1(h, grid)?
                };
                mixed_reports(cfg, &f, &p, &format!("h={h}"), true, true, &mut reports)?;
            }
        }
        VerifyCase::TrigMixed => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            for k in 0..cfg.count {
                for (j, &h) in cfg.h.iter().enumerate() {
                    let p = MixedParams::new(cfg.d, cfg.m, h)?;
                    let grid = mixed_grid(&p, cfg.grid)?;
                    // one random function per index, redrawn identically for every h
                    let mut local = rng.clone();
                    let f = MixedFunction::random_trig(&mut local, cfg.terms, grid)?;
                    if j + 1 == cfg.h.len() {
                        rng = local;
                    }
                    mixed_reports(cfg, &f, &p, &format!("f{k}/h={h}"), j == 0, false, &mut reports)?;
                }
            }
        }
    }
    Ok(reports)
}

fn plot(reports: &[InequalityReport]) -> LogLogPlot {
    let pts: Vec<(f64, f64)> = reports.iter().map(|r| (r.rhs, r.lhs)).collect();
    let usable: Vec<f64> = pts.iter().flat_map(|p| [p.0, p.1]).filter(|v| *v > 0.0).collect();
    let lo = usable.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = usable.iter().copied().fold(0.0, f64::max);
    let mut series = Vec::new();
    if lo.is_finite() && hi > 0.0 {
        series.push(Series::new("lhs = rhs", "black", Style::Line, vec![(lo, lo), (hi, hi)]));
    }
    series.push(Series::new("cases", "#c0392b", Style::Markers, pts));
    LogLogPlot {
        title: "Left side against right side (points above the line violate)".into(),
        x_label: "right-hand side".into(),
        y_label: "left-hand side".into(),
        series,
    }
}

pub fn run(cfg: &VerifyConfig) -> anyhow::Result<Vec<Failure>> {
    let reports = run_cases(cfg)?;
    let failures: Vec<Failure> = reports
        .iter()
        .flat_map(|r| r.failures().into_iter().map(move |why| Failure::new(r.case.clone(), why)))
        .collect();

    let mut sink = Sink::create(&cfg.out)?;
    sink.write_with("verify.csv", |buf| write_inequality_csv(&reports, buf))?;
    let summary = Summary {
        command: "verify",
        config: cfg,
        passed: failures.is_empty(),
        reports: &reports,
    };
    sink.write("verify.json", to_json(&summary)?.as_bytes())?;
    sink.write("verify.svg", plot(&reports).render().as_bytes())?;

    for r in &reports {
        println!(
            "{:<48} lhs={:.6e} rhs={:.6e} slack={:+.3e}{}",
            r.case,
            r.lhs,
            r.rhs,
            r.slack,
            if r.passed() { "" } else { "  FAILED" }
        );
    }
    Ok(failures)
}
