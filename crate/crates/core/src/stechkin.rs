//! Modulus of continuity, best approximation by bounded operators and
//! optimal recovery, for charges and for mixed derivatives.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::charge::{extremal_charge, for_each_window_sum, seminorm_k, Charge, SupTracker};
use crate::error::{check_dim, LabError, Result};
use crate::families::Density;
use crate::field::{grad_sup_polar, GridField};
use crate::geometry::{Cone, ConvexBody};
use crate::inequality::{default_h_max, SEMINORM_REFINE_ITERS};
use crate::mixed::{mixed_operator_field, MixedParams};
use crate::optimize::log_grid_then_golden;
use crate::steklov::{deviation_sup, steklov_field, PointSup, SteklovParams};

/// Which derivative is being recovered.
#[derive(Clone, Debug)]
pub enum ProblemSetting {
    /// `D_μ` on charges over `C` with gauge `K`; `volume` is `μ(K ∩ C)`.
    Charge {
        body: ConvexBody,
        cone: Cone,
        volume: f64,
    },
    /// `∂_I` with `K = (-1,1)^d` and `C = R^m_+ × R^{d-m}`.
    Mixed { d: usize, m: usize },
}

impl ProblemSetting {
    pub fn charge(body: ConvexBody, cone: Cone) -> Result<Self> {
        let p = SteklovParams::new(body.clone(), cone.clone(), 1.0)?;
        Ok(Self::Charge {
            body,
            cone,
            volume: p.volume(),
        })
    }

    pub fn mixed(d: usize, m: usize) -> Result<Self> {
        MixedParams::new(d, m, 1.0)?;
        Ok(Self::Mixed { d, m })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Charge { body, .. } => body.dim(),
            Self::Mixed { d, .. } => *d,
        }
    }

    /// `μ(K ∩ C)`; `2^{d-m}` in the mixed setting.
    pub fn volume(&self) -> f64 {
        match self {
            Self::Charge { volume, .. } => *volume,
            Self::Mixed { d, m } => 2f64.powi((d - m) as i32),
        }
    }

    /// Norm of the optimal operator at scale `h`.
    pub fn operator_norm(&self, h: f64) -> f64 {
        let d = self.dim() as i32;
        match self {
            Self::Charge { volume, .. } => 1.0 / (h.powi(d) * volume),
            Self::Mixed { m, .. } => 2f64.powi(*m as i32) / h.powi(d),
        }
    }

    /// Error bound `dh/(d+1) + ‖S_h‖ δ` of the operator at scale `h`.
    pub fn recovery_bound(&self, h: f64, delta: f64) -> f64 {
        let df = self.dim() as f64;
        df * h / (df + 1.0) + self.operator_norm(h) * delta
    }

    pub fn label(&self) -> String {
        match self {
            Self::Charge { cone, .. } => match cone.orthant_m() {
                Some(m) => format!("charge d={} m={m}", self.dim()),
                None => format!("charge d={}", self.dim()),
            },
            Self::Mixed { d, m } => format!("mixed d={d} m={m}"),
        }
    }
}

fn positive(x: f64, what: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(LabError::Domain(format!("{what} must be positive, got {x}")))
    }
}

/// `Ω(δ)`: `((d+1)δ/μ)^{1/(d+1)}`, or `(2^m (d+1) δ)^{1/(d+1)}` for mixed derivatives.
pub fn omega(s: &ProblemSetting, delta: f64) -> Result<f64> {
    positive(delta, "delta")?;
    let df = s.dim() as f64;
    let base = match s {
        ProblemSetting::Charge { volume, .. } => (df + 1.0) * delta / volume,
        ProblemSetting::Mixed { m, .. } => 2f64.powi(*m as i32) * (df + 1.0) * delta,
    };
    Ok(base.powf(1.0 / (df + 1.0)))
}

/// `E_N`: `(d/(d+1)) (1/(Nμ))^{1/d}`, or `(d/(d+1)) (2^m/N)^{1/d}` for mixed derivatives.
pub fn stechkin_error(s: &ProblemSetting, n: f64) -> Result<f64> {
    let df = s.dim() as f64;
    Ok(df / (df + 1.0) * optimal_h_for_n(s, n)?)
}

/// Scale at which the error bound for data accuracy `δ` is smallest; equals `Ω(δ)`.
pub fn optimal_h_for_delta(s: &ProblemSetting, delta: f64) -> Result<f64> {
    omega(s, delta)
}

/// Scale at which the optimal operator has norm `N`.
pub fn optimal_h_for_n(s: &ProblemSetting, n: f64) -> Result<f64> {
    positive(n, "N")?;
    let d = s.dim() as f64;
    let base = match s {
        ProblemSetting::Charge { volume, .. } => 1.0 / (n * volume),
        ProblemSetting::Mixed { m, .. } => 2f64.powi(*m as i32) / n,
    };
    Ok(base.powf(1.0 / d))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StechkinCurvePoint {
    pub n: f64,
    pub e_n: f64,
    pub h: f64,
}

pub fn stechkin_curve(s: &ProblemSetting, ns: &[f64]) -> Result<Vec<StechkinCurvePoint>> {
    ns.iter()
        .map(|&n| {
            Ok(StechkinCurvePoint {
                n,
                e_n: stechkin_error(s, n)?,
                h: optimal_h_for_n(s, n)?,
            })
        })
        .collect()
}

/// `count` log-spaced points on `[lo, hi]`, endpoints exact.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|k| match k {
            0 => lo,
            k if k + 1 == count => hi,
            k => 10f64.powf(a + (b - a) * k as f64 / (count - 1) as f64),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichRow {
    pub delta: f64,
    pub omega: f64,
    /// `inf_N {E_N + Nδ}` found numerically.
    pub infimum: f64,
    pub n_star: f64,
    pub rel_error: f64,
    pub at_boundary: bool,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichReport {
    pub setting: String,
    pub tolerance: f64,
    pub rows: Vec<SandwichRow>,
    pub all_ok: bool,
}

/// Number of log-spaced `N` values scanned before refinement.
pub const SANDWICH_GRID: usize = 64;

/// Checks `Ω(δ) = inf_N {E_N + Nδ}` for each `δ`.
///
/// The infimum is searched on 64 log-spaced `N` in `[1e-3, 1e3]/μ`, then
/// refined by golden-section search.
pub fn sandwich_check(s: &ProblemSetting, deltas: &[f64], tol: f64) -> Result<SandwichReport> {
    let mu = s.volume();
    let (lo, hi) = (1e-3 / mu, 1e3 / mu);
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let om = omega(s, delta)?;
        let best = log_grid_then_golden(
            |n| stechkin_error(s, n).unwrap_or(f64::INFINITY) + n * delta,
            lo,
            hi,
            SANDWICH_GRID,
            1e-12,
        )?;
        let rel = (best.value - om).abs() / om;
        let at_boundary = best.x <= lo * (1.0 + 1e-9) || best.x >= hi * (1.0 - 1e-9);
        rows.push(SandwichRow {
            delta,
            omega: om,
            infimum: best.value,
            n_star: best.x,
            rel_error: rel,
            at_boundary,
            ok: rel <= tol && !at_boundary,
        });
    }
    Ok(SandwichReport {
        setting: s.label(),
        tolerance: tol,
        all_ok: rows.iter().all(|r| r.ok),
        rows,
    })
}

/// Output of a recovery run.
#[derive(Clone, Debug)]
pub struct Recovery {
    pub estimate: GridField,
    /// Scale actually used.
    pub h: f64,
    /// `Ω(δ)`.
    pub omega: f64,
    /// Guaranteed error at the scale used (equals `Ω(δ)` unless snapped).
    pub bound: f64,
    pub warnings: Vec<String>,
}

/// Estimates `D_μν` from data `ν_noisy` known to be within `δ` of the class by
/// applying `S_h` at `h = h*(δ)`.
pub fn recover_derivative(noisy: &Charge, delta: f64, s: &ProblemSetting) -> Result<Recovery> {
    let ProblemSetting::Charge { body, cone, volume } = s else {
        return Err(LabError::Unsupported(
            "use recover_mixed_derivative in the mixed setting".into(),
        ));
    };
    check_dim(body.dim(), noisy.dim())?;
    let om = omega(s, delta)?;
    let p = SteklovParams::new(body.clone(), cone.clone(), om)?;
    if (p.volume() - volume).abs() > 1e-9 * volume {
        return Err(LabError::Domain("setting volume does not match the body and cone".into()));
    }
    let estimate = steklov_field(noisy, &p)?;
    Ok(Recovery {
        estimate,
        h: om,
        omega: om,
        bound: om,
        warnings: noisy
            .truncation_warning()
            .then(|| "density reaches the grid boundary".to_string())
            .into_iter()
            .collect(),
    })
}

/// Estimates `∂_I f` from samples of `f` known to within `δ` in sup-norm by
/// applying `S̄_h` at `h = h*(δ)`, snapped to a whole number of cells.
pub fn recover_mixed_derivative(noisy: &GridField, delta: f64, s: &ProblemSetting) -> Result<Recovery> {
    let ProblemSetting::Mixed { d, m } = *s else {
        return Err(LabError::Unsupported("use recover_derivative for charges".into()));
    };
    check_dim(d, noisy.dim())?;
    let om = omega(s, delta)?;
    let dx = noisy.grid().spacing()[0];
    let k = (om / dx).round().max(1.0);
    let h = k * dx;
    let mut warnings = Vec::new();
    if (h - om).abs() > 1e-9 * om {
        warnings.push(format!("h* = {om} snapped to {h} ({k} cells)"));
    }
    let p = MixedParams::new(d, m, h)?;
    let estimate = mixed_operator_field(noisy, &p)?;
    Ok(Recovery {
        estimate,
        h,
        omega: om,
        bound: s.recovery_bound(h, delta),
        warnings,
    })
}

/// `sup |D_μν_true - S_hν_noisy|` over θ and the cell centers of `C`.
pub fn recovery_error(noisy: &Charge, truth: &GridField, p: &SteklovParams) -> Result<PointSup> {
    if noisy.grid() != truth.grid() {
        return Err(LabError::InvalidGrid("truth and data live on different grids".into()));
    }
    let grid = noisy.grid();
    let vals = truth.values();
    let wv = p.window_volume();
    let mut t = SupTracker::new(noisy.dim());
    for_each_window_sum(noisy, p.body(), p.h(), |idx, y, v| {
        let f = match idx {
            Some(idx) => vals[grid.linear(idx)],
            None => match truth.eval(y) {
                Some(f) => f,
                None => return,
            },
        };
        t.offer((f - v / wv).abs(), y, true);
    })?;
    Ok(PointSup {
        value: t.best.max(0.0),
        argmax: t.argmax.clone(),
        candidates: t.count,
        coverage: 1.0,
    })
}

/// One recovery demonstration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryDemo {
    pub kind: String,
    pub delta: f64,
    pub h: f64,
    pub omega: f64,
    pub measured_error: f64,
    pub argmax: Vec<f64>,
    /// Numerical `‖perturbation‖_K`.
    pub perturbation_norm: f64,
    /// Numerical `sup |∇D_μν_true|_{K°}` (at most 1 for members of the class).
    pub truth_gradient: f64,
    pub grid: String,
}

/// A demo summary with the estimated derivative.
#[derive(Clone, Debug)]
pub struct DemoOutput {
    pub summary: RecoveryDemo,
    pub estimate: GridField,
}

fn run_demo(
    kind: &str,
    truth: &Charge,
    perturbation: &Charge,
    perturbation_norm: f64,
    delta: f64,
    s: &ProblemSetting,
) -> Result<DemoOutput> {
    let ProblemSetting::Charge { body, cone, .. } = s else {
        return Err(LabError::Unsupported("recovery demos use the charge setting".into()));
    };
    let noisy = truth.linear_combination(1.0, perturbation, 1.0)?;
    let rec = recover_derivative(&noisy, delta, s)?;
    let p = SteklovParams::new(body.clone(), cone.clone(), rec.h)?;
    let err = recovery_error(&noisy, truth.density(), &p)?;
    let g = grad_sup_polar(truth.density(), body, cone)?;
    Ok(DemoOutput {
        summary: RecoveryDemo {
            kind: kind.to_string(),
            delta,
            h: rec.h,
            omega: rec.omega,
            measured_error: err.value,
            argmax: err.argmax,
            perturbation_norm,
            truth_gradient: g.value,
            grid: truth.grid().label(),
        },
        estimate: rec.estimate,
    })
}

/// `‖ν‖_K` with the given scales added to the search.
fn norm_k(nu: &Charge, body: &ConvexBody, probes: &[f64]) -> Result<f64> {
    Ok(seminorm_k(nu, body, default_h_max(nu.grid(), body), SEMINORM_REFINE_ITERS, probes)?.value)
}

/// Worst case: truth `ν_{e,h*}` and perturbation `-δ ν_{e,h*}/‖ν_{e,h*}‖_K`,
/// which cancels the data almost entirely; the error approaches `Ω(δ)`.
pub fn worst_case_demo(s: &ProblemSetting, delta: f64, n: usize) -> Result<DemoOutput> {
    let ProblemSetting::Charge { body, cone, .. } = s else {
        return Err(LabError::Unsupported("recovery demos use the charge setting".into()));
    };
    let h = optimal_h_for_delta(s, delta)?;
    let truth = extremal_charge(body, cone, h, n)?;
    let norm = norm_k(&truth, body, &[h])?;
    let pert = truth.scaled(-delta / norm);
    run_demo("worst-case", &truth, &pert, delta, delta, s)
}

/// Exact data: truth `ν_{e,h*}` with no perturbation, processed as if it were
/// `δ`-accurate. Only the deviation term `dh*/(d+1)` remains.
pub fn exact_input_demo(s: &ProblemSetting, delta: f64, n: usize) -> Result<DemoOutput> {
    let ProblemSetting::Charge { body, cone, .. } = s else {
        return Err(LabError::Unsupported("recovery demos use the charge setting".into()));
    };
    let h = optimal_h_for_delta(s, delta)?;
    let truth = extremal_charge(body, cone, h, n)?;
    let zero = truth.scaled(0.0);
    run_demo("exact", &truth, &zero, 0.0, delta, s)
}

/// Typical case: a gaussian truth rescaled to gradient bound 1 on `C`, plus
/// seeded white noise tapered to compact support and scaled to `‖·‖_K = δ`.
pub fn typical_demo(s: &ProblemSetting, delta: f64, n: usize, seed: u64) -> Result<DemoOutput> {
    let ProblemSetting::Charge { body, cone, .. } = s else {
        return Err(LabError::Unsupported("recovery demos use the charge setting".into()));
    };
    let d = body.dim();
    let m = cone.orthant_m().ok_or_else(|| {
        LabError::Unsupported("typical demo needs an orthant cone".into())
    })?;
    let sigma = 0.5;
    let den = Density::gaussian(vec![0.0; d], sigma, 1.0)?;
    let grid = den.covering_grid(m, n)?;
    let raw = Charge::new(den.field(grid.clone())?, cone.clone())?;
    let g = grad_sup_polar(raw.density(), body, cone)?.value;
    let truth = raw.scaled(1.0 / g);

    // tapered noise: iid uniform values times a bump vanishing near the edges
    let (lo, hi) = (grid.lo().to_vec(), grid.hi().to_vec());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![0.0; grid.len()];
    grid.for_each_center(|lin, _, x| {
        let mut w = 1.0;
        for i in 0..d {
            let (a, b) = if i < m { (0.0, hi[i]) } else { (lo[i], hi[i]) };
            let t = (x[i] - a) / (b - a);
            let t = if i < m { 0.5 + 0.5 * t } else { t };
            w *= (4.0 * t * (1.0 - t) - 0.1).max(0.0);
        }
        values[lin] = w * rng.gen_range(-1.0..1.0);
    });
    let noise = Charge::new(GridField::from_values(grid, values)?, cone.clone())?;
    let h = optimal_h_for_delta(s, delta)?;
    let norm = norm_k(&noise, body, &[h])?;
    if norm == 0.0 {
        return Err(LabError::Degenerate("noise vanished".into()));
    }
    let pert = noise.scaled(delta / norm);
    run_demo("typical", &truth, &pert, delta, delta, s)
}

/// `E_N` at `N = ‖S_h‖` against the measured deviation of the optimal operator
/// on the extremal input at scale `h`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttainedPoint {
    pub h: f64,
    pub n: f64,
    pub e_n: f64,
    pub measured: f64,
}

pub fn attained_point(s: &ProblemSetting, h: f64, grid_n: usize) -> Result<AttainedPoint> {
    positive(h, "h")?;
    let n = s.operator_norm(h);
    let e_n = stechkin_error(s, n)?;
    let measured = match s {
        ProblemSetting::Charge { body, cone, .. } => {
            let nu = extremal_charge(body, cone, h, grid_n)?;
            let p = SteklovParams::new(body.clone(), cone.clone(), h)?;
            deviation_sup(&nu, &p)?.value
        }
        ProblemSetting::Mixed { d, m } => {
            let p = MixedParams::new(*d, *m, h)?;
            let grid = crate::mixed::mixed_grid(&p, grid_n)?;
            let f = match m {
                0 => crate::mixed::extremal_mixed_m0(h, grid)?,
                1 => crate::mixed::extremal_mixed_m1(h, grid)?,
                _ => {
                    return Err(LabError::Unsupported(
                        "no extremal function is known for m ≥ 2".into(),
                    ))
                }
            };
            crate::mixed::mixed_deviation_sup(&f, &p)?.value
        }
    };
    Ok(AttainedPoint { h, n, e_n, measured })
}
