//! Built-in test densities with analytic gradients.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::{GradientFn, GridField, ScalarFn};
use crate::grid::GridSpec;

/// One term of a [`Density`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Term {
    /// `a·exp(-|x-c|²/σ²)`, treated as supported in the ball of radius `6σ`.
    Gaussian {
        center: Vec<f64>,
        sigma: f64,
        amplitude: f64,
    },
    /// `a·(1 - |x-c|²/r²)_+^p` with `p ≥ 2`.
    Poly {
        center: Vec<f64>,
        radius: f64,
        power: u32,
        amplitude: f64,
    },
    /// `a·Π sin(kπ(x_i - o_i)/L)` on the cube `o + [0, L]^d`, zero outside.
    Sin {
        origin: Vec<f64>,
        length: f64,
        k: u32,
        amplitude: f64,
    },
}

/// Effective support radius of a gaussian term, in units of `σ`.
pub const GAUSSIAN_CUTOFF: f64 = 6.0;

impl Term {
    fn dim(&self) -> usize {
        match self {
            Term::Gaussian { center, .. } | Term::Poly { center, .. } => center.len(),
            Term::Sin { origin, .. } => origin.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Term::Gaussian { sigma, amplitude, center } => {
                *sigma > 0.0 && amplitude.is_finite() && center.iter().all(|c| c.is_finite())
            }
            Term::Poly { radius, power, amplitude, center } => {
                *radius > 0.0 && *power >= 2 && amplitude.is_finite() && center.iter().all(|c| c.is_finite())
            }
            Term::Sin { length, k, amplitude, origin } => {
                *length > 0.0 && *k >= 1 && amplitude.is_finite() && origin.iter().all(|c| c.is_finite())
            }
        };
        if ok && self.dim() >= 1 {
            Ok(())
        } else {
            Err(LabError::Domain(format!("invalid density term {self:?}")))
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self {
            Term::Gaussian { center, sigma, amplitude } => {
                amplitude * (-dist2(x, center) / (sigma * sigma)).exp()
            }
            Term::Poly { center, radius, power, amplitude } => {
                let s = 1.0 - dist2(x, center) / (radius * radius);
                if s > 0.0 {
                    amplitude * s.powi(*power as i32)
                } else {
                    0.0
                }
            }
            Term::Sin { origin, length, k, amplitude } => {
                let w = *k as f64 * std::f64::consts::PI / length;
                let mut p = *amplitude;
                for (xi, oi) in x.iter().zip(origin) {
                    let t = xi - oi;
                    if !(0.0..=*length).contains(&t) {
                        return 0.0;
                    }
                    p *= (w * t).sin();
                }
                p
            }
        }
    }

    fn add_gradient(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Term::Gaussian { center, sigma, amplitude } => {
                let s2 = sigma * sigma;
                let e = amplitude * (-dist2(x, center) / s2).exp();
                for i in 0..x.len() {
                    out[i] += -2.0 * (x[i] - center[i]) / s2 * e;
                }
            }
            Term::Poly { center, radius, power, amplitude } => {
                let r2 = radius * radius;
                let s = 1.0 - dist2(x, center) / r2;
                if s > 0.0 {
                    let p = *power as i32;
                    let c = amplitude * p as f64 * s.powi(p - 1) * (-2.0 / r2);
                    for i in 0..x.len() {
                        out[i] += c * (x[i] - center[i]);
                    }
                }
            }
            Term::Sin { origin, length, k, amplitude } => {
                let w = *k as f64 * std::f64::consts::PI / length;
                let d = x.len();
                let mut s = vec![0.0; d];
                let mut c = vec![0.0; d];
                for i in 0..d {
                    let t = x[i] - origin[i];
                    if !(0.0..=*length).contains(&t) {
                        return;
                    }
                    s[i] = (w * t).sin();
                    c[i] = w * (w * t).cos();
                }
                for i in 0..d {
                    let mut p = *amplitude * c[i];
                    for j in (0..d).filter(|&j| j != i) {
                        p *= s[j];
                    }
                    out[i] += p;
                }
            }
        }
    }

    /// Axis-aligned box containing the support.
    fn support(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Term::Gaussian { center, sigma, .. } => {
                let r = GAUSSIAN_CUTOFF * sigma;
                (center.iter().map(|c| c - r).collect(), center.iter().map(|c| c + r).collect())
            }
            Term::Poly { center, radius, .. } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            Term::Sin { origin, length, .. } => {
                (origin.clone(), origin.iter().map(|o| o + length).collect())
            }
        }
    }
}

fn dist2(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// A finite sum of [`Term`]s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Density {
    pub terms: Vec<Term>,
}

impl Density {
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        if terms.is_empty() {
            return Err(LabError::Domain("a density needs at least one term".into()));
        }
        let d = terms[0].dim();
        for t in &terms {
            t.validate()?;
            if t.dim() != d {
                return Err(LabError::DimensionMismatch { expected: d, got: t.dim() });
            }
        }
        Ok(Self { terms })
    }

    pub fn gaussian(center: Vec<f64>, sigma: f64, amplitude: f64) -> Result<Self> {
        Self::new(vec![Term::Gaussian { center, sigma, amplitude }])
    }

    pub fn poly(center: Vec<f64>, radius: f64, power: u32, amplitude: f64) -> Result<Self> {
        Self::new(vec![Term::Poly { center, radius, power, amplitude }])
    }

    pub fn sin(origin: Vec<f64>, length: f64, k: u32, amplitude: f64) -> Result<Self> {
        Self::new(vec![Term::Sin { origin, length, k, amplitude }])
    }

    pub fn dim(&self) -> usize {
        self.terms[0].dim()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.value(x)).sum()
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for t in &self.terms {
            t.add_gradient(x, out);
        }
    }

    /// Smallest axis box containing every term's support.
    pub fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for t in &self.terms {
            let (a, b) = t.support();
            for i in 0..d {
                lo[i] = lo[i].min(a[i]);
                hi[i] = hi[i].max(b[i]);
            }
        }
        (lo, hi)
    }

    /// Samples onto `grid`, keeping analytic value and gradient callbacks.
    pub fn field(&self, grid: GridSpec) -> Result<GridField> {
        if grid.dim() != self.dim() {
            return Err(LabError::DimensionMismatch { expected: self.dim(), got: grid.dim() });
        }
        let a = Arc::new(self.clone());
        let b = a.clone();
        let value: ScalarFn = Arc::new(move |x: &[f64]| a.value(x));
        let gradient: GradientFn = Arc::new(move |x: &[f64], g: &mut [f64]| b.gradient(x, g));
        Ok(GridField::from_fn(grid, value).with_gradient(gradient))
    }

    /// Grid of resolution `n` per axis covering the support with two empty
    /// cells of margin. Axes listed in `from_zero` start at 0 and the density
    /// is taken to be restricted to `x_i > 0` there.
    pub fn covering_grid(&self, from_zero: usize, n: usize) -> Result<GridSpec> {
        let (lo, hi) = self.support_box();
        let d = self.dim();
        let mut glo = vec![0.0; d];
        let mut ghi = vec![0.0; d];
        for i in 0..d {
            let a = if i < from_zero { 0.0 } else { lo[i] };
            let b = hi[i];
            if b <= a {
                return Err(LabError::InvalidGrid(format!("empty support on axis {i}")));
            }
            let lo_margin = if i < from_zero { 0 } else { 2 };
            let inner = n.checked_sub(lo_margin + 2).filter(|k| *k >= 2).ok_or_else(|| {
                LabError::InvalidGrid(format!("resolution {n} too small"))
            })?;
            let dx = (b - a) / inner as f64;
            glo[i] = a - lo_margin as f64 * dx;
            ghi[i] = glo[i] + n as f64 * dx;
        }
        GridSpec::new(glo, ghi, vec![n; d])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(den: &Density, x: &[f64]) {
        let d = x.len();
        let mut g = vec![0.0; d];
        den.gradient(x, &mut g);
        for i in 0..d {
            let eps = 1e-6;
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += eps;
            xm[i] -= eps;
            let fd = (den.value(&xp) - den.value(&xm)) / (2.0 * eps);
            assert!((fd - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()), "{den:?} axis {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let g = Density::gaussian(vec![0.2, -0.1], 0.7, 1.3).unwrap();
        let p = Density::poly(vec![0.0, 0.5], 1.1, 3, -0.4).unwrap();
        let s = Density::sin(vec![0.0, 0.0], 2.0, 1, 1.0).unwrap();
        for x in [[0.3, 0.4], [-0.5, 0.9], [1.2, 0.7]] {
            fd_check(&g, &x);
            fd_check(&p, &x);
            fd_check(&s, &x);
        }
    }

    #[test]
    fn sin_vanishes_outside_its_cube() {
        // sin(πx) on [0, 2]
        let s = Density::sin(vec![0.0], 2.0, 2, 1.0).unwrap();
        assert_eq!(s.value(&[-0.1]), 0.0);
        assert_eq!(s.value(&[2.1]), 0.0);
        assert!((s.value(&[0.5]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_terms() {
        assert!(Density::poly(vec![0.0], 1.0, 1, 1.0).is_err());
        assert!(Density::gaussian(vec![0.0], 0.0, 1.0).is_err());
        assert!(Density::new(vec![]).is_err());
    }

    #[test]
    fn covering_grid_leaves_empty_margin() {
        let den = Density::poly(vec![0.0, 0.0], 1.0, 2, 1.0).unwrap();
        let grid = den.covering_grid(0, 32).unwrap();
        let f = den.field(grid).unwrap();
        let c = crate::geometry::Cone::full(2).unwrap();
        assert!(crate::charge::Charge::new(f, c).is_ok());
    }
}
