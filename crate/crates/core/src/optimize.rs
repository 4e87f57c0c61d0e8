//! One-dimensional search utilities: golden-section minimization and
//! bisection for monotone roots.

use crate::error::{LabError, Result};

/// `(3 - sqrt 5) / 2`, the golden-section interior fraction.
const GOLDEN: f64 = 0.381_966_011_250_105_1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Golden-section search for a minimum of a unimodal `f` on `[a, b]`.
///
/// Stops after `max_iter` shrink steps or once the bracket is narrower than
/// `xtol`. The returned point is the best one evaluated, so the value never
/// exceeds `min(f(a), f(b))` for a unimodal function.
pub fn golden_section_min<F>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Minimum
where
    F: FnMut(f64) -> f64,
{
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut x1 = lo + GOLDEN * (hi - lo);
    let mut x2 = hi - GOLDEN * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut evaluations = 2;
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };

    for _ in 0..max_iter {
        if hi - lo <= xtol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = lo + GOLDEN * (hi - lo);
            f1 = f(x1);
            evaluations += 1;
            if f1 < best.1 {
                best = (x1, f1);
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = hi - GOLDEN * (hi - lo);
            f2 = f(x2);
            evaluations += 1;
            if f2 < best.1 {
                best = (x2, f2);
            }
        }
    }
    Minimum {
        x: best.0,
        value: best.1,
        evaluations,
    }
}

/// Golden-section search for a maximum; thin wrapper over [`golden_section_min`].
pub fn golden_section_max<F>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Minimum
where
    F: FnMut(f64) -> f64,
{
    let m = golden_section_min(|x| -f(x), a, b, xtol, max_iter);
    Minimum {
        value: -m.value,
        ..m
    }
}

/// Minimizes `f` over a log-spaced grid of `count` points on `[lo, hi]`
/// (both positive), then refines by golden-section search in log space
/// around the best grid point.
pub fn log_grid_then_golden<F>(mut f: F, lo: f64, hi: f64, count: usize, xtol: f64) -> Result<Minimum>
where
    F: FnMut(f64) -> f64,
{
    if !(lo > 0.0 && hi > lo && count >= 3) {
        return Err(LabError::Domain(format!(
            "log grid needs 0 < lo < hi and at least 3 points (lo={lo}, hi={hi}, count={count})"
        )));
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let step = (lhi - llo) / (count - 1) as f64;
    let mut best_k = 0;
    let mut best_v = f64::INFINITY;
    for k in 0..count {
        let v = f((llo + step * k as f64).exp());
        if v < best_v {
            best_v = v;
            best_k = k;
        }
    }
    let a = llo + step * best_k.saturating_sub(1) as f64;
    let b = llo + step * (best_k + 1).min(count - 1) as f64;
    let refined = golden_section_min(|t| f(t.exp()), a, b, xtol, 200);
    let (x, value) = if refined.value <= best_v {
        (refined.x.exp(), refined.value)
    } else {
        ((llo + step * best_k as f64).exp(), best_v)
    };
    Ok(Minimum {
        x,
        value,
        evaluations: count + refined.evaluations,
    })
}

/// Bisection for a root of a continuous `f` with `f(a)` and `f(b)` of
/// opposite signs. Runs until the bracket is narrower than `xtol`.
pub fn bisect<F>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut lo, mut hi) = (a, b);
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return Err(LabError::Bracket(format!(
            "f({a}) = {flo} and f({b}) = {fhi} do not bracket a root"
        )));
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= xtol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
