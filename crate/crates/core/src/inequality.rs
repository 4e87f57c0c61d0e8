//! Landau–Kolmogorov type inequalities evaluated on grid data.

use serde::Serialize;

use crate::charge::{seminorm_k, seminorm_kh, Charge};
use crate::error::{check_dim, LabError, Result};
use crate::field::{grad_sup_polar, GridField};
use crate::geometry::{Cone, ConvexBody};
use crate::grid::GridSpec;
use crate::mixed::{mixed_covered_sup, mixed_deviation_sup, mixed_operator_norm, mixed_sups, MixedFunction, MixedParams};
use crate::steklov::{deviation_sup, steklov_norm, SteklovParams};

/// Default bound on how negative a slack may be before a case counts as violated.
pub const SLACK_TOL: f64 = 1e-6;

/// One named right-hand-side contribution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Term {
    pub name: String,
    pub value: f64,
}

fn term(name: &str, value: f64) -> Term {
    Term {
        name: name.to_string(),
        value,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityReport {
    pub case: String,
    pub kind: String,
    pub d: usize,
    pub m: Option<usize>,
    pub h: Option<f64>,
    pub grid: String,
    pub lhs: f64,
    pub lhs_argmax: Vec<f64>,
    pub terms: Vec<Term>,
    /// The norm of the input that enters the right side.
    pub norm: f64,
    pub rhs: f64,
    pub slack: f64,
    /// Intermediate link `deviation + ‖S‖·norm`, when the inequality has one.
    pub chain: Option<f64>,
    pub chain_ordered: bool,
    pub expect_equality: bool,
    /// `|slack| ≤ equality_tol`.
    pub equality: bool,
    pub equality_tol: f64,
    pub slack_tol: f64,
    pub coverage: f64,
    pub finite_difference: bool,
    pub warnings: Vec<String>,
}

impl InequalityReport {
    /// The inequality holds within `slack_tol`, and equality holds when expected.
    pub fn passed(&self) -> bool {
        self.slack >= -self.slack_tol && self.chain_ordered && (!self.expect_equality || self.equality)
    }

    /// Short reasons for a failed case.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.slack < -self.slack_tol {
            out.push(format!("slack {:e} below -{:e}", self.slack, self.slack_tol));
        }
        if !self.chain_ordered {
            out.push("chain links out of order".into());
        }
        if self.expect_equality && !self.equality {
            out.push(format!("equality missed: |slack| = {:e} > {:e}", self.slack.abs(), self.equality_tol));
        }
        out
    }

    fn all_finite(&self) -> bool {
        self.lhs.is_finite()
            && self.rhs.is_finite()
            && self.slack.is_finite()
            && self.norm.is_finite()
            && self.terms.iter().all(|t| t.value.is_finite())
            && self.chain.is_none_or(|c| c.is_finite())
    }
}

/// Tolerances and labels shared by all report builders.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOptions {
    pub case: String,
    pub expect_equality: bool,
    pub equality_tol: f64,
    pub slack_tol: f64,
    /// Allowed violation of each chain link (quadrature error).
    pub chain_tol: f64,
}

impl CheckOptions {
    pub fn new(case: impl Into<String>) -> Self {
        Self {
            case: case.into(),
            expect_equality: false,
            equality_tol: 1e-3,
            slack_tol: SLACK_TOL,
            chain_tol: 1e-3,
        }
    }

    pub fn expecting_equality(mut self, tol: f64) -> Self {
        self.expect_equality = true;
        self.equality_tol = tol;
        self
    }
}

/// Intermediate link of an additive inequality, with the left side taken
/// over the same points the link was evaluated on.
#[derive(Clone, Copy, Debug)]
struct Chain {
    lower: f64,
    value: f64,
}

#[allow(clippy::too_many_arguments)]
fn finish(
    opts: &CheckOptions,
    kind: &str,
    d: usize,
    m: Option<usize>,
    h: Option<f64>,
    grid: &GridSpec,
    lhs: f64,
    lhs_argmax: Vec<f64>,
    terms: Vec<Term>,
    norm: f64,
    chain: Option<Chain>,
    coverage: f64,
    finite_difference: bool,
    mut warnings: Vec<String>,
) -> Result<InequalityReport> {
    let rhs: f64 = terms.iter().map(|t| t.value).sum();
    let slack = rhs - lhs;
    let chain_ordered =
        chain.is_none_or(|c| c.lower <= c.value + opts.chain_tol && c.value <= rhs + opts.chain_tol);
    let chain = chain.map(|c| c.value);
    if finite_difference {
        warnings.push("gradient from finite differences".into());
    }
    if coverage < 1.0 {
        warnings.push(format!("window coverage {coverage:.4}"));
    }
    let r = InequalityReport {
        case: opts.case.clone(),
        kind: kind.to_string(),
        d,
        m,
        h,
        grid: grid.label(),
        lhs,
        lhs_argmax,
        terms,
        norm,
        rhs,
        slack,
        chain,
        chain_ordered,
        expect_equality: opts.expect_equality,
        equality: slack.abs() <= opts.equality_tol,
        equality_tol: opts.equality_tol,
        slack_tol: opts.slack_tol,
        coverage,
        finite_difference,
        warnings,
    };
    if !r.all_finite() {
        return Err(LabError::NonFinite("inequality report"));
    }
    Ok(r)
}

fn truncation_warnings(nu: &Charge) -> Vec<String> {
    if nu.truncation_warning() {
        vec!["density reaches the grid boundary; window sums may be truncated".into()]
    } else {
        Vec::new()
    }
}

/// `(dh/(d+1))·G + norm / (h^d μ)`.
pub fn additive_bound(d: usize, volume: f64, grad: f64, norm: f64, h: f64) -> f64 {
    let df = d as f64;
    df * h / (df + 1.0) * grad + norm / (h.powi(d as i32) * volume)
}

/// `((d+1)/μ)^{1/(d+1)} G^{d/(d+1)} norm^{1/(d+1)}`.
pub fn multiplicative_bound(d: usize, volume: f64, grad: f64, norm: f64) -> f64 {
    let df = d as f64;
    ((df + 1.0) / volume).powf(1.0 / (df + 1.0)) * grad.powf(df / (df + 1.0)) * norm.powf(1.0 / (df + 1.0))
}

/// Minimizer `(norm·(d+1) / (μ G))^{1/(d+1)}` of [`additive_bound`].
pub fn optimal_h(d: usize, volume: f64, grad: f64, norm: f64) -> Result<f64> {
    if !(grad > 0.0 && norm > 0.0 && volume > 0.0) {
        return Err(LabError::Degenerate("optimal h needs positive G, norm and volume".into()));
    }
    let df = d as f64;
    Ok((norm * (df + 1.0) / (volume * grad)).powf(1.0 / (df + 1.0)))
}

/// `sup|D_μν| ≤ (dh/(d+1))‖|∇D_μν|_{K°}‖ + ‖ν‖_{K,h}/(h^d μ(K∩C))`.
pub fn lk_additive_charge(nu: &Charge, body: &ConvexBody, h: f64, opts: &CheckOptions) -> Result<InequalityReport> {
    check_dim(nu.dim(), body.dim())?;
    let p = SteklovParams::new(body.clone(), nu.cone().clone(), h)?;
    lk_additive_charge_with(nu, &p, opts)
}

/// As [`lk_additive_charge`] with a prepared operator.
pub fn lk_additive_charge_with(nu: &Charge, p: &SteklovParams, opts: &CheckOptions) -> Result<InequalityReport> {
    let d = nu.dim();
    let h = p.h();
    let lhs = nu.sup_density();
    let g = grad_sup_polar(nu.density(), p.body(), nu.cone())?;
    let semi = seminorm_kh(nu, p.body(), h)?;
    let dev = deviation_sup(nu, p)?;
    let norm = steklov_norm(p);
    let df = d as f64;
    let terms = vec![
        term("deviation", df * h / (df + 1.0) * g.value),
        term("norm", semi.value * norm),
    ];
    finish(
        opts,
        "lk-additive-charge",
        d,
        nu.cone().orthant_m(),
        Some(h),
        nu.grid(),
        lhs.value,
        lhs.argmax,
        terms,
        semi.value,
        Some(Chain {
            lower: lhs.value,
            value: dev.value + norm * semi.value,
        }),
        semi.coverage.min(dev.coverage),
        g.finite_difference,
        truncation_warnings(nu),
    )
}

/// Largest gauge of a vector joining two points of the grid box, a safe
/// `h_max` for [`seminorm_k`].
pub fn default_h_max(grid: &GridSpec, body: &ConvexBody) -> f64 {
    let span: Vec<f64> = (0..grid.dim()).map(|i| grid.hi()[i] - grid.lo()[i]).collect();
    (0..1usize << grid.dim())
        .map(|mask| {
            let v: Vec<f64> = span
                .iter()
                .enumerate()
                .map(|(i, s)| if mask >> i & 1 == 1 { -s } else { *s })
                .collect();
            body.gauge(&v).unwrap_or(f64::INFINITY)
        })
        .fold(0.0, f64::max)
}

/// Number of golden-section steps used for `‖ν‖_K`.
pub const SEMINORM_REFINE_ITERS: usize = 30;

/// `sup|D_μν| ≤ ((d+1)/μ)^{1/(d+1)} G^{d/(d+1)} ‖ν‖_K^{1/(d+1)}`.
pub fn lk_multiplicative_charge(
    nu: &Charge,
    body: &ConvexBody,
    opts: &CheckOptions,
) -> Result<InequalityReport> {
    check_dim(nu.dim(), body.dim())?;
    let p = SteklovParams::new(body.clone(), nu.cone().clone(), 1.0)?;
    lk_multiplicative_charge_with(nu, &p, &[], opts)
}

/// As [`lk_multiplicative_charge`] with a prepared volume and extra `h` probes for `‖ν‖_K`.
pub fn lk_multiplicative_charge_with(
    nu: &Charge,
    p: &SteklovParams,
    probes: &[f64],
    opts: &CheckOptions,
) -> Result<InequalityReport> {
    let d = nu.dim();
    let body = p.body();
    let lhs = nu.sup_density();
    let g = grad_sup_polar(nu.density(), body, nu.cone())?;
    let semi = seminorm_k(nu, body, default_h_max(nu.grid(), body), SEMINORM_REFINE_ITERS, probes)?;
    let rhs = multiplicative_bound(d, p.volume(), g.value, semi.value);
    let mut warnings = truncation_warnings(nu);
    if semi.zero {
        warnings.push("zero charge".into());
    }
    finish(
        opts,
        "lk-multiplicative-charge",
        d,
        nu.cone().orthant_m(),
        Some(semi.h),
        nu.grid(),
        lhs.value,
        lhs.argmax,
        vec![term("bound", rhs)],
        semi.value,
        None,
        1.0,
        g.finite_difference,
        warnings,
    )
}

/// `sup|f| ≤ (dh/(d+1))‖|∇f|_{K°}‖ + ‖f‖_{L1(C)}/(h^d μ(K∩C))`.
pub fn nagy_inequality(
    f: &GridField,
    body: &ConvexBody,
    cone: &Cone,
    h: f64,
    opts: &CheckOptions,
) -> Result<InequalityReport> {
    check_dim(f.dim(), body.dim())?;
    let p = SteklovParams::new(body.clone(), cone.clone(), h)?;
    let d = f.dim();
    let lhs = f.sup_abs_closure(cone);
    let g = grad_sup_polar(f, body, cone)?;
    let l1 = f.l1_norm(cone);
    let df = d as f64;
    finish(
        opts,
        "nagy",
        d,
        cone.orthant_m(),
        Some(h),
        f.grid(),
        lhs.value,
        lhs.argmax,
        vec![
            term("deviation", df * h / (df + 1.0) * g.value),
            term("l1", l1 / p.window_volume()),
        ],
        l1,
        None,
        1.0,
        g.finite_difference,
        Vec::new(),
    )
}

/// `sup|∂_I f| ≤ (hd/(d+1)) sup|∇∂_I f|_{K°} + (2^m/h^d) sup|f|`.
pub fn lk_additive_mixed(f: &MixedFunction, p: &MixedParams, opts: &CheckOptions) -> Result<InequalityReport> {
    let s = mixed_sups(f, p)?;
    let dev = mixed_deviation_sup(f, p)?;
    let covered = mixed_covered_sup(f, p)?;
    let norm = mixed_operator_norm(p);
    let df = p.d as f64;
    finish(
        opts,
        "lk-additive-mixed",
        p.d,
        Some(p.m),
        Some(p.h),
        f.grid(),
        s.mixed,
        s.mixed_argmax,
        vec![
            term("deviation", p.h * df / (df + 1.0) * s.grad),
            term("norm", norm * s.f),
        ],
        s.f,
        Some(Chain {
            lower: covered.value,
            value: dev.value + norm * s.f,
        }),
        dev.coverage,
        false,
        Vec::new(),
    )
}

/// `sup|∂_I f| ≤ (2^m (d+1) sup|f|)^{1/(d+1)} (sup|∇∂_I f|_{K°})^{d/(d+1)}`.
pub fn lk_multiplicative_mixed(f: &MixedFunction, p: &MixedParams, opts: &CheckOptions) -> Result<InequalityReport> {
    let s = mixed_sups(f, p)?;
    let df = p.d as f64;
    let rhs = (2f64.powi(p.m as i32) * (df + 1.0) * s.f).powf(1.0 / (df + 1.0)) * s.grad.powf(df / (df + 1.0));
    finish(
        opts,
        "lk-multiplicative-mixed",
        p.d,
        Some(p.m),
        None,
        f.grid(),
        s.mixed,
        s.mixed_argmax,
        vec![term("bound", rhs)],
        s.f,
        None,
        1.0,
        false,
        Vec::new(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charge::extremal_charge;
    use crate::optimize::golden_section_min;

    #[test]
    fn additive_minimum_is_multiplicative_bound() {
        for (d, vol, g, n) in [(1, 2.0, 1.0, 1.0), (2, 4.0, 0.7, 0.3), (3, 2.0, 2.5, 0.01)] {
            let h = optimal_h(d, vol, g, n).unwrap();
            let m = golden_section_min(|t| additive_bound(d, vol, g, n, t), 1e-6, 100.0, 1e-13, 400);
            let mult = multiplicative_bound(d, vol, g, n);
            assert!((m.value / mult - 1.0).abs() < 1e-9);
            assert!((m.x / h - 1.0).abs() < 1e-6);
            assert!((additive_bound(d, vol, g, n, h) / mult - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn extremal_charge_gives_equality() {
        let k = ConvexBody::cube(2).unwrap();
        let c = Cone::orthant(2, 1).unwrap();
        let nu = extremal_charge(&k, &c, 1.0, 96).unwrap();
        let opts = CheckOptions::new("ext").expecting_equality(1e-3);
        let a = lk_additive_charge(&nu, &k, 1.0, &opts).unwrap();
        assert!(a.passed(), "{a:?}");
        let m = lk_multiplicative_charge(&nu, &k, &opts).unwrap();
        assert!(m.passed(), "{m:?}");
    }

    #[test]
    fn zero_charge_is_zero_everywhere() {
        let k = ConvexBody::cube(1).unwrap();
        let c = Cone::full(1).unwrap();
        let nu = Charge::zero(GridSpec::cube(1, -1.0, 1.0, 32).unwrap(), c).unwrap();
        let r = lk_additive_charge(&nu, &k, 0.5, &CheckOptions::new("zero")).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        let r = lk_multiplicative_charge(&nu, &k, &CheckOptions::new("zero")).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        assert!(r.passed());
    }
}
