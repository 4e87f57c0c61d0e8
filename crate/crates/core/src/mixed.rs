//! Difference operators, the averaged mixed difference `S̄_h` and test
//! functions with an analytic mixed derivative `∂_I f = ∂^d f / ∂x_1…∂x_d`.
//!
//! Throughout, `K = (-1, 1)^d` and `C = R^m_+ × R^{d-m}`.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::charge::{for_each_candidate, SupTracker};
use crate::error::{check_dim, check_finite, LabError, Result};
use crate::field::{for_each_product_point, GradientFn, GridField, ScalarFn};
use crate::geometry::{Cone, ConvexBody};
use crate::grid::GridSpec;
use crate::optimize::bisect;
use crate::steklov::PointSup;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MixedParams {
    pub d: usize,
    pub m: usize,
    pub h: f64,
}

impl MixedParams {
    pub fn new(d: usize, m: usize, h: f64) -> Result<Self> {
        if d == 0 || d > crate::grid::MAX_DIM {
            return Err(LabError::Domain(format!("dimension {d} out of range")));
        }
        if m > d {
            return Err(LabError::Domain(format!("m = {m} exceeds d = {d}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(LabError::Domain(format!("h must be positive, got {h}")));
        }
        Ok(Self { d, m, h })
    }

    pub fn body(&self) -> ConvexBody {
        ConvexBody::cube(self.d).expect("valid dimension")
    }

    pub fn cone(&self) -> Cone {
        Cone::orthant(self.d, self.m).expect("valid m")
    }

    /// `μ(K ∩ C) = 2^{d-m}`.
    pub fn volume(&self) -> f64 {
        2f64.powi((self.d - self.m) as i32)
    }
}

/// `‖S̄_h‖ = 2^m / h^d`.
pub fn mixed_operator_norm(p: &MixedParams) -> f64 {
    2f64.powi(p.m as i32) / p.h.powi(p.d as i32)
}

/// Number of cells spanned by `h` on `axis`, if `h` is a whole multiple of the spacing.
fn steps(grid: &GridSpec, axis: usize, h: f64, max_k: usize) -> Result<usize> {
    let dx = grid.spacing()[axis];
    let r = h / dx;
    let k = r.round();
    if k >= 1.0 && (r - k).abs() <= 1e-9 * k && (k as usize) <= max_k {
        Ok(k as usize)
    } else {
        Err(LabError::NonCommensurate {
            axis,
            step: h,
            spacing: dx,
            max_k,
        })
    }
}

/// Shifts `x` along `axis` by `t` and evaluates.
fn shifted(f: &ScalarFn, axis: usize, t: f64) -> impl Fn(&[f64]) -> f64 + Send + Sync + 'static {
    let f = f.clone();
    move |x: &[f64]| {
        let mut y = x.to_vec();
        y[axis] += t;
        f(&y)
    }
}

fn difference(f: &GridField, axis: usize, h: f64, central: bool) -> Result<GridField> {
    let grid = f.grid();
    if axis >= grid.dim() {
        return Err(LabError::Domain(format!("axis {axis} out of range")));
    }
    let n = grid.resolution()[axis];
    let max_k = if central { (n - 1) / 2 } else { n - 1 };
    let k = steps(grid, axis, h, max_k.max(1))?;
    let shrink = if central { 2 * k } else { k };
    if n < shrink + 2 {
        return Err(LabError::InvalidGrid(format!(
            "axis {axis}: {n} cells leave fewer than 2 after a {shrink}-cell stencil"
        )));
    }
    let dx = grid.spacing()[axis];
    let mut lo = grid.lo().to_vec();
    let mut hi = grid.hi().to_vec();
    let mut res = grid.resolution().to_vec();
    if central {
        lo[axis] += k as f64 * dx;
        hi[axis] -= k as f64 * dx;
    } else {
        hi[axis] -= k as f64 * dx;
    }
    res[axis] = n - shrink;
    let out = GridSpec::new(lo, hi, res)?;
    let stride = grid.strides()[axis];
    let vals = f.values();
    let mut values = vec![0.0; out.len()];
    let mut src = vec![0usize; grid.dim()];
    out.for_each_center(|lin, idx, _| {
        src.copy_from_slice(idx);
        let base = grid.linear(&src);
        values[lin] = if central {
            vals[base + 2 * k * stride] - vals[base]
        } else {
            vals[base + k * stride] - vals[base]
        };
    });
    let mut g = GridField::from_values(out, values)?;
    if let Some(fv) = f.value_fn() {
        let plus = shifted(fv, axis, h);
        let minus = shifted(fv, axis, if central { -h } else { 0.0 });
        let cb: ScalarFn = Arc::new(move |x: &[f64]| plus(x) - minus(x));
        g = g.with_value_fn(cb);
    }
    Ok(g)
}

/// `Δ⁺_{i,h} f(x) = f(x + h e_i) - f(x)` on the sub-grid where the stencil fits.
pub fn diff_forward(f: &GridField, axis: usize, h: f64) -> Result<GridField> {
    difference(f, axis, h, false)
}

/// `Δ_{i,h} f(x) = f(x + h e_i) - f(x - h e_i)` on the sub-grid where the stencil fits.
pub fn diff_central(f: &GridField, axis: usize, h: f64) -> Result<GridField> {
    difference(f, axis, h, true)
}

/// `(Δ⁺_1 ∘ … ∘ Δ⁺_m ∘ Δ_{m+1} ∘ … ∘ Δ_d) f` as a field.
pub fn composed_difference_field(f: &GridField, p: &MixedParams) -> Result<GridField> {
    check_dim(p.d, f.dim())?;
    let mut g = f.clone();
    for axis in (0..p.d).rev() {
        g = if axis < p.m {
            diff_forward(&g, axis, p.h)?
        } else {
            diff_central(&g, axis, p.h)?
        };
    }
    Ok(g)
}

/// `S̄_h f` on the sub-grid where the full stencil fits.
pub fn mixed_operator_field(f: &GridField, p: &MixedParams) -> Result<GridField> {
    let g = composed_difference_field(f, p)?;
    Ok(g.scaled(1.0 / (p.volume() * p.h.powi(p.d as i32))))
}

/// Stencil nodes `x + Σ ε_i h e_i` with their signs.
fn stencil(p: &MixedParams, x: &[f64]) -> Vec<(Vec<f64>, f64)> {
    let d = p.d;
    let mut out = Vec::with_capacity(1 << d);
    for mask in 0..(1usize << d) {
        let mut y = x.to_vec();
        let mut sign = 1.0;
        for i in 0..d {
            let up = mask >> i & 1 == 1;
            if i < p.m {
                if up {
                    y[i] += p.h;
                } else {
                    sign = -sign;
                }
            } else if up {
                y[i] += p.h;
            } else {
                y[i] -= p.h;
                sign = -sign;
            }
        }
        out.push((y, sign));
    }
    out
}

fn stencil_inside(grid: &GridSpec, p: &MixedParams, x: &[f64]) -> bool {
    (0..p.d).all(|i| {
        let lo = if i < p.m { x[i] } else { x[i] - p.h };
        lo >= grid.lo()[i] && x[i] + p.h <= grid.hi()[i]
    })
}

/// Unscaled composed difference at `x`.
///
/// Uses the value callback when present; otherwise `x` must be a cell center
/// and `h` commensurate with the grid.
pub fn composed_difference(f: &GridField, p: &MixedParams, x: &[f64]) -> Result<f64> {
    check_dim(p.d, f.dim())?;
    check_dim(p.d, x.len())?;
    check_finite(x, "evaluation point")?;
    let grid = f.grid();
    if !stencil_inside(grid, p, x) {
        return Err(LabError::StencilOutsideGrid(x.to_vec()));
    }
    if let Some(fv) = f.value_fn() {
        return Ok(stencil(p, x).iter().map(|(y, s)| s * fv(y)).sum());
    }
    let mut idx = vec![0usize; p.d];
    let mut ks = vec![0usize; p.d];
    for i in 0..p.d {
        let dx = grid.spacing()[i];
        let j = ((x[i] - grid.lo()[i]) / dx - 0.5).round();
        if j < 0.0 || (grid.centers(i)[j as usize] - x[i]).abs() > 1e-9 * dx {
            return Err(LabError::Unsupported(
                "sampled fields are evaluated at cell centers only".into(),
            ));
        }
        idx[i] = j as usize;
        ks[i] = steps(grid, i, p.h, grid.resolution()[i])?;
    }
    Ok(sampled_stencil(f.values(), grid.strides(), &idx, &ks, p.m))
}

fn sampled_stencil(vals: &[f64], strides: &[usize], idx: &[usize], ks: &[usize], m: usize) -> f64 {
    let d = idx.len();
    let mut sum = 0.0;
    for mask in 0..(1usize << d) {
        let mut lin = 0isize;
        let mut sign = 1.0;
        for i in 0..d {
            let up = mask >> i & 1 == 1;
            let j = idx[i] as isize
                + match (i < m, up) {
                    (_, true) => ks[i] as isize,
                    (true, false) => 0,
                    (false, false) => -(ks[i] as isize),
                };
            if !up {
                sign = -sign;
            }
            lin += j * strides[i] as isize;
        }
        sum += sign * vals[lin as usize];
    }
    sum
}

/// `S̄_h f(x) = composed difference / (2^{d-m} h^d)`.
pub fn mixed_operator_apply(f: &GridField, p: &MixedParams, x: &[f64]) -> Result<f64> {
    if !p.cone().contains_closure(x) {
        return Err(LabError::Domain(format!("{x:?} is not in the cone")));
    }
    Ok(composed_difference(f, p, x)? / (p.volume() * p.h.powi(p.d as i32)))
}

/// A function with analytic `f`, `∂_I f` and `∇∂_I f`.
#[derive(Clone)]
pub struct MixedFunction {
    pub name: String,
    pub field: GridField,
    pub mixed: ScalarFn,
    pub mixed_gradient: GradientFn,
}

impl std::fmt::Debug for MixedFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MixedFunction")
            .field("name", &self.name)
            .field("grid", &self.field.grid().label())
            .finish()
    }
}

impl MixedFunction {
    pub fn from_callbacks(
        name: impl Into<String>,
        grid: GridSpec,
        value: ScalarFn,
        mixed: ScalarFn,
        mixed_gradient: GradientFn,
    ) -> Self {
        Self {
            name: name.into(),
            field: GridField::from_fn(grid, value),
            mixed,
            mixed_gradient,
        }
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn grid(&self) -> &GridSpec {
        self.field.grid()
    }

    /// `f(x) = Π x_i`, with `∂_I f = 1`.
    pub fn monomial(grid: GridSpec) -> Self {
        let d = grid.dim();
        Self::from_callbacks(
            "monomial",
            grid,
            Arc::new(|x: &[f64]| x.iter().product()),
            Arc::new(|_| 1.0),
            Arc::new(move |_, g: &mut [f64]| g[..d].iter_mut().for_each(|v| *v = 0.0)),
        )
    }

    /// `f(x) = a Π exp(-(x_i - c_i)²/σ²)`.
    pub fn gaussian_product(center: Vec<f64>, sigma: f64, amplitude: f64, grid: GridSpec) -> Result<Self> {
        check_dim(grid.dim(), center.len())?;
        if !(sigma > 0.0) {
            return Err(LabError::Domain("sigma must be positive".into()));
        }
        let s2 = sigma * sigma;
        let g0 = move |t: f64| (-t * t / s2).exp();
        let g1 = move |t: f64| -2.0 * t / s2 * g0(t);
        let g2 = move |t: f64| (4.0 * t * t / (s2 * s2) - 2.0 / s2) * g0(t);
        let (c0, c1, c2) = (center.clone(), center.clone(), center);
        Ok(Self::from_callbacks(
            "gaussian-product",
            grid,
            Arc::new(move |x: &[f64]| amplitude * x.iter().zip(&c0).map(|(a, c)| g0(a - c)).product::<f64>()),
            Arc::new(move |x: &[f64]| amplitude * x.iter().zip(&c1).map(|(a, c)| g1(a - c)).product::<f64>()),
            Arc::new(move |x: &[f64], out: &mut [f64]| {
                for j in 0..x.len() {
                    let mut p = amplitude;
                    for i in 0..x.len() {
                        let t = x[i] - c2[i];
                        p *= if i == j { g2(t) } else { g1(t) };
                    }
                    out[j] = p;
                }
            }),
        ))
    }

    /// `f(x) = Σ_k a_k Π_i sin(ω_{k,i} x_i + φ_{k,i})`.
    pub fn trig_polynomial(terms: Vec<TrigTerm>, grid: GridSpec) -> Result<Self> {
        let d = grid.dim();
        if terms.is_empty() {
            return Err(LabError::Domain("empty trigonometric polynomial".into()));
        }
        for t in &terms {
            check_dim(d, t.omega.len())?;
            check_dim(d, t.phase.len())?;
        }
        let t0 = Arc::new(terms);
        let (t1, t2) = (t0.clone(), t0.clone());
        Ok(Self::from_callbacks(
            "trig-polynomial",
            grid,
            Arc::new(move |x: &[f64]| t0.iter().map(|t| t.eval(x, 0.0)).sum()),
            Arc::new(move |x: &[f64]| {
                t1.iter()
                    .map(|t| t.omega.iter().product::<f64>() * t.eval(x, FRAC_PI_2))
                    .sum()
            }),
            Arc::new(move |x: &[f64], out: &mut [f64]| {
                out.iter_mut().for_each(|v| *v = 0.0);
                for t in t2.iter() {
                    let w: f64 = t.omega.iter().product();
                    for j in 0..x.len() {
                        let mut p = t.amplitude * w;
                        for i in 0..x.len() {
                            let arg = t.omega[i] * x[i] + t.phase[i];
                            p *= if i == j { -t.omega[i] * arg.sin() } else { arg.cos() };
                        }
                        out[j] += p;
                    }
                }
            }),
        ))
    }

    /// A random trigonometric polynomial with `terms` terms.
    pub fn random_trig<R: Rng>(rng: &mut R, terms: usize, grid: GridSpec) -> Result<Self> {
        let d = grid.dim();
        let terms = (0..terms.max(1))
            .map(|_| TrigTerm {
                amplitude: rng.gen_range(-1.0..1.0),
                omega: (0..d).map(|_| rng.gen_range(0.5..3.0)).collect(),
                phase: (0..d).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect(),
            })
            .collect();
        Self::trig_polynomial(terms, grid)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrigTerm {
    pub amplitude: f64,
    pub omega: Vec<f64>,
    pub phase: Vec<f64>,
}

impl TrigTerm {
    /// `a Π sin(ω_i x_i + φ_i + shift)`.
    fn eval(&self, x: &[f64], shift: f64) -> f64 {
        let mut p = self.amplitude;
        for i in 0..x.len() {
            p *= (self.omega[i] * x[i] + self.phase[i] + shift).sin();
        }
        p
    }
}

/// `∫_{Π[0,a_i]} (h - |u|_∞)_+ du` for `a_i ≥ 0`.
///
/// Writes the integrand as `∫_0^h Π_i min(a_i, s) ds` and integrates the
/// piecewise monomial exactly.
pub fn tent_antiderivative(a: &[f64], h: f64) -> f64 {
    let d = a.len();
    let mut b: Vec<f64> = a.iter().map(|v| v.abs().min(h)).collect();
    b.sort_by(f64::total_cmp);
    let mut sum = 0.0;
    let mut coef = 1.0;
    let mut prev = 0.0f64;
    for (k, &bk) in b.iter().enumerate() {
        let e = (d - k + 1) as i32;
        sum += coef * (bk.powi(e) - prev.powi(e)) / e as f64;
        coef *= bk;
        prev = bk;
    }
    sum + coef * (h - prev)
}

/// `f(x) = ∫_0^{x_1}…∫_0^{x_d} (h - |u|_∞)_+ du`, valid in every orthant.
pub fn tent_mixed_primitive(x: &[f64], h: f64) -> f64 {
    let sign: f64 = x.iter().map(|v| v.signum()).product();
    if x.contains(&0.0) {
        return 0.0;
    }
    sign * tent_antiderivative(x, h)
}

fn tent_callbacks(h: f64) -> (ScalarFn, GradientFn) {
    let mixed: ScalarFn = Arc::new(move |x: &[f64]| {
        (h - x.iter().fold(0.0f64, |m, v| m.max(v.abs()))).max(0.0)
    });
    let grad: GradientFn = Arc::new(move |x: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|v| *v = 0.0);
        let (j, r) = x
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(j, r), (i, v)| if v.abs() > r { (i, v.abs()) } else { (j, r) });
        if r > 0.0 && r < h {
            out[j] = -x[j].signum();
        }
    });
    (mixed, grad)
}

/// Grid on which `h` spans a whole number of cells, θ is a node, and the
/// stencil of every point of `[-h, h]^d ∩ C` fits.
pub fn mixed_grid(p: &MixedParams, n: usize) -> Result<GridSpec> {
    let g = (n / 32).max(2);
    let d = p.d;
    let mut lo = vec![0.0; d];
    let mut hi = vec![0.0; d];
    for i in 0..d {
        if i < p.m {
            let k = n.saturating_sub(g) / 2;
            if k == 0 {
                return Err(LabError::InvalidGrid(format!("resolution {n} too small")));
            }
            hi[i] = n as f64 * p.h / k as f64;
        } else {
            let left = n / 2;
            let k = left.saturating_sub(g) / 2;
            if k == 0 {
                return Err(LabError::InvalidGrid(format!("resolution {n} too small")));
            }
            let dx = p.h / k as f64;
            lo[i] = -(left as f64) * dx;
            hi[i] = (n - left) as f64 * dx;
        }
    }
    GridSpec::new(lo, hi, vec![n; d])
}

/// The `m = 0` extremal function, whose mixed derivative is `(h - |x|_∞)_+`.
pub fn extremal_mixed_m0(h: f64, grid: GridSpec) -> Result<MixedFunction> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(LabError::Domain(format!("h must be positive, got {h}")));
    }
    let (mixed, grad) = tent_callbacks(h);
    Ok(MixedFunction::from_callbacks(
        "extremal-m0",
        grid,
        Arc::new(move |x: &[f64]| tent_mixed_primitive(x, h)),
        mixed,
        grad,
    ))
}

/// `0 < a < h` with `∫_{Π[0,a]×[0,h]^{d-1}} (h - |u|_∞) du = h^{d+1} / (2(d+1))`.
pub fn split_point(h: f64, d: usize) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) || d == 0 {
        return Err(LabError::Domain(format!("need h > 0 and d ≥ 1, got h = {h}, d = {d}")));
    }
    let target = h.powi(d as i32 + 1) / (2.0 * (d as f64 + 1.0));
    let mut a = vec![h; d];
    bisect(
        |t| {
            a[0] = t;
            tent_antiderivative(&a, h) - target
        },
        0.0,
        h,
        1e-15 * h,
        200,
    )
}

/// The `m = 1` extremal `g(x) = ∫_a^{x_1} ∫_0^{x_2}…∫_0^{x_d} (h - |u|_∞)_+ du`.
pub fn extremal_mixed_m1(h: f64, grid: GridSpec) -> Result<MixedFunction> {
    let a = split_point(h, grid.dim())?;
    let (mixed, grad) = tent_callbacks(h);
    Ok(MixedFunction::from_callbacks(
        "extremal-m1",
        grid,
        Arc::new(move |x: &[f64]| {
            let mut y = x.to_vec();
            y[0] = a;
            tent_mixed_primitive(x, h) - tent_mixed_primitive(&y, h)
        }),
        mixed,
        grad,
    ))
}

/// Both sides of `∫_{x + hK ∩ C} ∂_I f dμ = (composed differences)(x)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FubiniCheck {
    pub integral: f64,
    pub difference: f64,
    pub residual: f64,
}

/// Midpoint quadrature of `∂_I f` over the window with `n` points per axis,
/// against the composed differences of `f`.
pub fn fubini_identity_check(f: &MixedFunction, p: &MixedParams, x: &[f64], n: usize) -> Result<FubiniCheck> {
    check_dim(p.d, f.dim())?;
    check_dim(p.d, x.len())?;
    if n == 0 {
        return Err(LabError::Domain("quadrature needs at least one point".into()));
    }
    let axes: Vec<Vec<f64>> = (0..p.d)
        .map(|i| {
            let (a, w) = if i < p.m { (x[i], p.h) } else { (x[i] - p.h, 2.0 * p.h) };
            (0..n).map(|j| a + (j as f64 + 0.5) * w / n as f64).collect()
        })
        .collect();
    let cell: f64 = (0..p.d)
        .map(|i| if i < p.m { p.h } else { 2.0 * p.h } / n as f64)
        .product();
    let mut sum = 0.0;
    for_each_product_point(&axes, |u| sum += (f.mixed)(u));
    let integral = sum * cell;
    let difference = composed_difference(&f.field, p, x)?;
    Ok(FubiniCheck {
        integral,
        difference,
        residual: (integral - difference).abs(),
    })
}

/// Suprema over the closure of `C` of `|f|`, `|∂_I f|` and `|∇∂_I f|_{K°}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixedSups {
    pub f: f64,
    pub f_argmax: Vec<f64>,
    pub mixed: f64,
    pub mixed_argmax: Vec<f64>,
    pub grad: f64,
    pub grad_argmax: Vec<f64>,
}

/// Per-axis evaluation points: cell centers plus `0` and `±h` where they lie
/// in the grid and in the closure of `C`.
pub fn mixed_lattice(grid: &GridSpec, p: &MixedParams) -> Vec<Vec<f64>> {
    (0..p.d)
        .map(|i| {
            let mut pts = grid.centers(i).to_vec();
            pts.extend([0.0, p.h, -p.h]);
            pts.retain(|&t| t >= grid.lo()[i] && t <= grid.hi()[i] && (i >= p.m || t >= 0.0));
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            pts
        })
        .collect()
}

pub fn mixed_sups(f: &MixedFunction, p: &MixedParams) -> Result<MixedSups> {
    check_dim(p.d, f.dim())?;
    let fv = f
        .field
        .value_fn()
        .ok_or_else(|| LabError::Unsupported("mixed functions need a value callback".into()))?;
    let axes = mixed_lattice(f.grid(), p);
    let d = p.d;
    let mut s = MixedSups {
        f: 0.0,
        f_argmax: vec![0.0; d],
        mixed: 0.0,
        mixed_argmax: vec![0.0; d],
        grad: 0.0,
        grad_argmax: vec![0.0; d],
    };
    let mut g = vec![0.0; d];
    for_each_product_point(&axes, |x| {
        let a = fv(x).abs();
        if a > s.f {
            s.f = a;
            s.f_argmax.copy_from_slice(x);
        }
        let b = (f.mixed)(x).abs();
        if b > s.mixed {
            s.mixed = b;
            s.mixed_argmax.copy_from_slice(x);
        }
        (f.mixed_gradient)(x, &mut g);
        // |·|_{K°} for the cube is the ℓ1 norm
        let c: f64 = g.iter().map(|v| v.abs()).sum();
        if c > s.grad {
            s.grad = c;
            s.grad_argmax.copy_from_slice(x);
        }
    });
    Ok(s)
}

/// `sup |∂_I f - S̄_h f|` over θ and the cell centers of `C` whose stencil fits
/// in the grid; `coverage` is the fraction of candidates retained.
pub fn mixed_deviation_sup(f: &MixedFunction, p: &MixedParams) -> Result<PointSup> {
    operator_sup(f, p, Probe::Deviation)
}

/// `sup |S̄_h f|` over the same candidates as [`mixed_deviation_sup`].
pub fn mixed_operator_sup(f: &MixedFunction, p: &MixedParams) -> Result<PointSup> {
    operator_sup(f, p, Probe::Operator)
}

/// `sup |∂_I f|` over the same candidates as [`mixed_deviation_sup`].
pub fn mixed_covered_sup(f: &MixedFunction, p: &MixedParams) -> Result<PointSup> {
    operator_sup(f, p, Probe::Mixed)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Probe {
    Deviation,
    Operator,
    Mixed,
}

fn operator_sup(f: &MixedFunction, p: &MixedParams, probe: Probe) -> Result<PointSup> {
    check_dim(p.d, f.dim())?;
    let grid = f.grid();
    let cone = p.cone();
    let scale = 1.0 / (p.volume() * p.h.powi(p.d as i32));
    let ks: Option<Vec<usize>> = (0..p.d)
        .map(|i| steps(grid, i, p.h, grid.resolution()[i]).ok())
        .collect();
    let mut t = SupTracker::new(p.d);
    let mut total = 0usize;
    let mut err = None;
    for_each_candidate(grid, &cone, |idx, x| {
        total += 1;
        if !stencil_inside(grid, p, x) {
            return;
        }
        if probe == Probe::Mixed {
            t.offer((f.mixed)(x).abs(), x, true);
            return;
        }
        let diff = match (idx, &ks) {
            (Some(idx), Some(ks)) => sampled_stencil(f.field.values(), grid.strides(), idx, ks, p.m),
            _ => match composed_difference(&f.field, p, x) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    return;
                }
            },
        };
        let s = diff * scale;
        let v = if probe == Probe::Deviation { ((f.mixed)(x) - s).abs() } else { s.abs() };
        t.offer(v, x, true);
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(PointSup {
        value: t.best.max(0.0),
        argmax: t.argmax.clone(),
        candidates: total,
        coverage: if total == 0 { 0.0 } else { t.count as f64 / total as f64 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, lo: f64, hi: f64) -> GridSpec {
        GridSpec::cube(1, lo, hi, n).unwrap()
    }

    #[test]
    fn central_difference_of_square() {
        let grid = line(40, -1.0, 1.0);
        let f = GridField::from_fn(grid, Arc::new(|x: &[f64]| x[0] * x[0]));
        let h = 0.25;
        let g = diff_central(&f, 0, h).unwrap();
        g.grid().clone().for_each_center(|lin, _, x| {
            assert!((g.values()[lin] - 4.0 * x[0] * h).abs() < 1e-12);
        });
        assert!(matches!(diff_central(&f, 0, 0.26), Err(LabError::NonCommensurate { .. })));
    }

    #[test]
    fn forward_differences_of_bilinear() {
        let grid = GridSpec::cube(2, 0.0, 1.0, 20).unwrap();
        let f = GridField::from_fn(grid, Arc::new(|x: &[f64]| x[0] * x[1]));
        let h = 0.2;
        let a = diff_forward(&diff_forward(&f, 1, h).unwrap(), 0, h).unwrap();
        let b = diff_forward(&diff_forward(&f, 0, h).unwrap(), 1, h).unwrap();
        assert_eq!(a.grid().resolution(), b.grid().resolution());
        for (u, v) in a.values().iter().zip(b.values()) {
            assert!((u - h * h).abs() < 1e-12 && (u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn one_dimensional_operators() {
        let grid = line(64, -2.0, 2.0);
        let f = GridField::from_fn(grid.clone(), Arc::new(|x: &[f64]| x[0]));
        let p = MixedParams::new(1, 0, 0.5).unwrap();
        assert!((mixed_operator_apply(&f, &p, &[0.3]).unwrap() - 1.0).abs() < 1e-12);
        let g = GridField::from_fn(GridSpec::cube(1, 0.0, 2.0, 16).unwrap(), Arc::new(|x: &[f64]| x[0] * x[0]));
        let q = MixedParams::new(1, 1, 0.5).unwrap();
        assert!((mixed_operator_apply(&g, &q, &[0.0]).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bilinear_operator_is_one() {
        let grid = GridSpec::new(vec![0.0, -2.0], vec![2.0, 2.0], vec![16, 32]).unwrap();
        let mf = MixedFunction::monomial(grid);
        let p = MixedParams::new(2, 1, 0.375).unwrap();
        for x in [[0.1, 0.2], [1.0, -1.3], [0.0, 0.0]] {
            assert!((mixed_operator_apply(&mf.field, &p, &x).unwrap() - 1.0).abs() < 1e-12);
        }
        let field = mixed_operator_field(&mf.field, &p).unwrap();
        assert!(field.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn sampled_and_callback_paths_agree() {
        let p = MixedParams::new(2, 1, 0.5).unwrap();
        let grid = mixed_grid(&p, 32).unwrap();
        let f = extremal_mixed_m1(0.5, grid.clone()).unwrap();
        let sampled = f.field.sampled_only();
        let mut checked = 0;
        grid.clone().for_each_center(|_, _, x| {
            if stencil_inside(&grid, &p, x) {
                let a = composed_difference(&f.field, &p, x).unwrap();
                let b = composed_difference(&sampled, &p, x).unwrap();
                assert!((a - b).abs() < 1e-12);
                checked += 1;
            }
        });
        assert!(checked > 0);
    }

    #[test]
    fn stencil_outside_is_an_error() {
        let grid = line(16, -1.0, 1.0);
        let f = GridField::from_fn(grid, Arc::new(|x: &[f64]| x[0]));
        let p = MixedParams::new(1, 0, 0.5).unwrap();
        assert!(matches!(
            mixed_operator_apply(&f, &p, &[0.9]),
            Err(LabError::StencilOutsideGrid(_))
        ));
    }

    #[test]
    fn tent_antiderivative_against_cumulative_quadrature() {
        // nested midpoint quadrature of (h - |u|_∞)_+ on [0, a1] × [0, a2]
        let h = 1.0;
        for a in [[0.3, 0.7], [1.5, 0.2], [2.0, 2.0], [0.5, 0.5]] {
            let n = 800;
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let u = (i as f64 + 0.5) * a[0] / n as f64;
                    let v = (j as f64 + 0.5) * a[1] / n as f64;
                    s += (h - u.max(v)).max(0.0);
                }
            }
            s *= a[0] * a[1] / (n * n) as f64;
            let exact = tent_antiderivative(&a, h);
            assert!((s - exact).abs() < 1e-5, "{a:?}: {s} vs {exact}");
        }
        assert!((tent_antiderivative(&[5.0, 5.0, 5.0], 2.0) - 2f64.powi(4) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn split_point_one_dimension() {
        let a = split_point(1.0, 1).unwrap();
        // root of 2a - a² = 1/2 in (0, 1)
        assert!((a - (1.0 - 0.5f64.sqrt())).abs() < 1e-12);
        let b = split_point(3.0, 2).unwrap();
        assert!((b - 3.0 * split_point(1.0, 2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn operator_norm_formula() {
        assert_eq!(mixed_operator_norm(&MixedParams::new(1, 0, 1.0).unwrap()), 1.0);
        assert_eq!(mixed_operator_norm(&MixedParams::new(1, 1, 1.0).unwrap()), 2.0);
        assert_eq!(mixed_operator_norm(&MixedParams::new(2, 1, 0.5).unwrap()), 8.0);
    }
}
