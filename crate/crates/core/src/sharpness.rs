//! Exploratory search for near-extremal functions in the mixed multiplicative
//! inequality when `m ≥ 2`, where sharpness is an open question.
//!
//! Nothing here proves or disproves sharpness; results are evidence only.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::mixed::tent_mixed_primitive;
use crate::optimize::golden_section_max;

/// Parametric families searched.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchFamily {
    /// `f(x) = ∫_l^x (1 - |u - c|_∞)_+ du`: lower limits `l`, and a tent
    /// center `c` shifted along the orthant axes.
    Tent,
    /// `f(x) = Π_i ∫_{l_i}^{x_i} (w_i - |u - c_i|)_+ du`.
    ProductTent,
}

impl SearchFamily {
    pub fn name(self) -> &'static str {
        match self {
            SearchFamily::Tent => "tent",
            SearchFamily::ProductTent => "product-tent",
        }
    }

    fn bounds(self, d: usize, m: usize) -> Vec<(f64, f64)> {
        let mut b = Vec::new();
        match self {
            SearchFamily::Tent => {
                b.extend((0..m).map(|_| (0.0, 1.5)));
                b.extend((0..d).map(|_| (-1.5, 1.5)));
            }
            SearchFamily::ProductTent => {
                b.extend((0..m).map(|_| (0.0, 1.5)));
                b.extend((0..d).map(|_| (-2.0, 2.0)));
                b.extend((0..d).map(|_| (0.2, 2.0)));
            }
        }
        b
    }
}

/// `(2^m (d+1) S)^{1/(d+1)} G^{d/(d+1)}` against `L = sup|∂_I f|`, returned as `L / bound`.
fn ratio(d: usize, m: usize, lhs: f64, sup_f: f64, grad: f64) -> f64 {
    let df = d as f64;
    let rhs = (2f64.powi(m as i32) * (df + 1.0) * sup_f).powf(1.0 / (df + 1.0)) * grad.powf(df / (df + 1.0));
    if rhs > 0.0 {
        lhs / rhs
    } else {
        0.0
    }
}

/// Ratio for the tent family. The tent peaks at `c ∈ closure(C)`, so
/// `sup|∂_I f| = 1` and `sup|∇∂_I f|_{K°} = 1`; `f` is monotone in each
/// coordinate and constant outside `[c-1, c+1]`, so `sup_C |f|` is attained at
/// a corner of `Π [lo_i, c_i + 1]` with `lo_i = 0` on orthant axes.
fn tent_ratio(d: usize, m: usize, params: &[f64]) -> f64 {
    let mut c = vec![0.0; d];
    c[..m].copy_from_slice(&params[..m]);
    let l = &params[m..m + d];
    let f = |x: &[f64]| -> f64 {
        // inclusion–exclusion over the lower limits
        let mut z = vec![0.0; d];
        let mut s = 0.0;
        for mask in 0..(1usize << d) {
            let mut sign = 1.0;
            for i in 0..d {
                if mask >> i & 1 == 1 {
                    z[i] = l[i] - c[i];
                    sign = -sign;
                } else {
                    z[i] = x[i] - c[i];
                }
            }
            s += sign * tent_mixed_primitive(&z, 1.0);
        }
        s
    };
    let mut x = vec![0.0; d];
    let mut sup = 0.0f64;
    for mask in 0..(1usize << d) {
        for i in 0..d {
            let hi = c[i] + 1.0;
            let lo = if i < m { 0.0 } else { c[i] - 1.0 };
            x[i] = if mask >> i & 1 == 1 { hi } else { lo };
        }
        sup = sup.max(f(&x).abs());
    }
    ratio(d, m, 1.0, sup, 1.0)
}

/// `∫_{-∞}^{s} (w - |u|)_+ du`.
fn tent_cdf(s: f64, w: f64) -> f64 {
    if s <= -w {
        0.0
    } else if s <= 0.0 {
        0.5 * (w + s) * (w + s)
    } else if s < w {
        w * w - 0.5 * (w - s) * (w - s)
    } else {
        w * w
    }
}

/// Ratio for the product family; every supremum is separable.
fn product_ratio(d: usize, m: usize, params: &[f64]) -> f64 {
    let mut c = vec![0.0; d];
    c[..m].copy_from_slice(&params[..m]);
    let l = &params[m..m + d];
    let w = &params[m + d..m + 2 * d];
    let mut sup_f = 1.0;
    for i in 0..d {
        let base = tent_cdf(l[i] - c[i], w[i]);
        let lo = if i < m { tent_cdf(-c[i], w[i]) } else { 0.0 };
        let hi = w[i] * w[i];
        sup_f *= (lo - base).abs().max((hi - base).abs());
    }
    let lhs: f64 = w.iter().product();
    let grad: f64 = (0..d)
        .map(|j| (0..d).filter(|&i| i != j).map(|i| w[i]).product::<f64>())
        .sum();
    ratio(d, m, lhs, sup_f, grad)
}

fn evaluate(family: SearchFamily, d: usize, m: usize, params: &[f64]) -> f64 {
    match family {
        SearchFamily::Tent => tent_ratio(d, m, params),
        SearchFamily::ProductTent => product_ratio(d, m, params),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub evaluation: usize,
    pub family: String,
    pub phase: String,
    pub ratio: f64,
    pub best_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SharpnessResult {
    pub d: usize,
    pub m: usize,
    pub seed: u64,
    pub budget: usize,
    pub evaluations: usize,
    pub best_ratio: f64,
    pub best_family: String,
    pub best_params: Vec<f64>,
    /// Always true: the search is evidence, not a proof.
    pub exploratory: bool,
    pub trajectory: Vec<TrajectoryRow>,
}

/// Random starts followed by coordinate-wise golden-section ascent, split
/// evenly between the families. `budget` caps the number of ratio evaluations.
pub fn sharpness_search(d: usize, m: usize, budget: usize, seed: u64) -> Result<SharpnessResult> {
    if d == 0 || d > crate::grid::MAX_DIM || m > d {
        return Err(LabError::Domain(format!("need 1 ≤ d ≤ 6 and m ≤ d, got d={d}, m={m}")));
    }
    if budget < 20 {
        return Err(LabError::Domain("budget must allow at least 20 evaluations".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trajectory = Vec::new();
    let mut best = (f64::NEG_INFINITY, SearchFamily::Tent, Vec::new());
    let mut count = 0usize;
    let families = [SearchFamily::Tent, SearchFamily::ProductTent];
    let share = budget / families.len();

    for family in families {
        let bounds = family.bounds(d, m);
        let mut used = 0usize;
        let mut record = |ratio: f64, phase: &str, p: &[f64], best: &mut (f64, SearchFamily, Vec<f64>)| {
            count += 1;
            if ratio > best.0 {
                *best = (ratio, family, p.to_vec());
            }
            trajectory.push(TrajectoryRow {
                evaluation: count,
                family: family.name().into(),
                phase: phase.into(),
                ratio,
                best_ratio: best.0,
            });
        };

        // random starts
        let starts = (share / 4).max(1);
        let mut local = (f64::NEG_INFINITY, Vec::new());
        for _ in 0..starts {
            let p: Vec<f64> = bounds.iter().map(|&(a, b)| rng.gen_range(a..b)).collect();
            let r = evaluate(family, d, m, &p);
            record(r, "random", &p, &mut best);
            used += 1;
            if r > local.0 {
                local = (r, p);
            }
        }

        // coordinate ascent from the best start, shrinking each line search
        let mut p = local.1;
        let per_line = 12usize;
        let mut radius = 1.0;
        'outer: while radius > 1e-9 {
            for k in 0..p.len() {
                if used + per_line > share {
                    break 'outer;
                }
                let (a, b) = bounds[k];
                let r = radius * (b - a);
                let (lo, hi) = ((p[k] - r).max(a), (p[k] + r).min(b));
                let mut q = p.clone();
                let mut evals = Vec::new();
                golden_section_max(
                    |t| {
                        q[k] = t;
                        let v = evaluate(family, d, m, &q);
                        evals.push((t, v));
                        v
                    },
                    lo,
                    hi,
                    0.0,
                    per_line - 2,
                );
                used += evals.len();
                for &(t, v) in &evals {
                    let mut trial = p.clone();
                    trial[k] = t;
                    record(v, "descent", &trial, &mut best);
                }
                if let Some(&(t, v)) = evals.iter().max_by(|x, y| x.1.total_cmp(&y.1)) {
                    if v > evaluate(family, d, m, &p) {
                        p[k] = t;
                    }
                }
            }
            radius *= 0.5;
        }
    }

    Ok(SharpnessResult {
        d,
        m,
        seed,
        budget,
        evaluations: count,
        best_ratio: best.0,
        best_family: best.1.name().into(),
        best_params: best.2,
        exploratory: true,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixed::split_point;

    #[test]
    fn known_extremals_reach_one() {
        // m = 0: tent at θ with lower limits 0
        assert!((tent_ratio(2, 0, &[0.0, 0.0]) - 1.0).abs() < 1e-12);
        // m = 1: lower limit on the orthant axis at the split point
        let a = split_point(1.0, 2).unwrap();
        assert!((tent_ratio(2, 1, &[0.0, a, 0.0]) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tent_cdf_total_mass() {
        assert!((tent_cdf(10.0, 0.7) - 0.49).abs() < 1e-15);
        assert!((tent_cdf(0.0, 0.7) - 0.245).abs() < 1e-15);
    }

    #[test]
    fn search_never_exceeds_one() {
        let r = sharpness_search(2, 2, 400, 3).unwrap();
        assert!(r.exploratory);
        assert!(r.best_ratio <= 1.0 + 1e-6 && r.best_ratio > 0.0);
        assert!(r.trajectory.iter().all(|t| t.ratio <= 1.0 + 1e-6));
        let again = sharpness_search(2, 2, 400, 3).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn m1_control_reaches_equality() {
        let r = sharpness_search(2, 1, 600, 11).unwrap();
        assert!(r.best_ratio >= 0.999, "{} {} {:?} {}", r.best_ratio, r.best_family, r.best_params, r.evaluations);
    }
}
