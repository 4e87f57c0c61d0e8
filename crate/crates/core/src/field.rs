//! Grid-sampled scalar fields with optional analytic value and gradient callbacks.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, LabError, Result};
use crate::geometry::{Cone, ConvexBody};
use crate::grid::GridSpec;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// Writes the gradient at the first argument into the second.
pub type GradientFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub struct GridField {
    grid: GridSpec,
    values: Vec<f64>,
    value_fn: Option<ScalarFn>,
    gradient_fn: Option<GradientFn>,
}

impl fmt::Debug for GridField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridField")
            .field("grid", &self.grid.label())
            .field("analytic_value", &self.value_fn.is_some())
            .field("analytic_gradient", &self.gradient_fn.is_some())
            .finish()
    }
}

/// Location and size of a supremum.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SupNorm {
    pub value: f64,
    pub argmax: Vec<f64>,
}

impl GridField {
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::NonFinite("field values"));
        }
        Ok(Self {
            grid,
            values,
            value_fn: None,
            gradient_fn: None,
        })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.len();
        let zero: ScalarFn = Arc::new(|_| 0.0);
        let dzero: GradientFn = Arc::new(|_, g: &mut [f64]| g.iter_mut().for_each(|v| *v = 0.0));
        Self {
            grid,
            values: vec![0.0; n],
            value_fn: Some(zero),
            gradient_fn: Some(dzero),
        }
    }

    /// Samples `f` at every cell center and keeps it as the analytic value callback.
    pub fn from_fn(grid: GridSpec, f: ScalarFn) -> Self {
        let mut values = vec![0.0; grid.len()];
        grid.for_each_center(|lin, _, x| values[lin] = f(x));
        Self {
            grid,
            values,
            value_fn: Some(f),
            gradient_fn: None,
        }
    }

    /// Attaches a value callback; the caller guarantees it matches the samples.
    pub fn with_value_fn(mut self, f: ScalarFn) -> Self {
        self.value_fn = Some(f);
        self
    }

    pub fn with_gradient(mut self, g: GradientFn) -> Self {
        self.gradient_fn = Some(g);
        self
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_fn(&self) -> Option<&ScalarFn> {
        self.value_fn.as_ref()
    }

    pub fn gradient_fn(&self) -> Option<&GradientFn> {
        self.gradient_fn.as_ref()
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient_fn.is_some()
    }

    /// Analytic value at an arbitrary point, if a callback is present.
    pub fn eval(&self, x: &[f64]) -> Option<f64> {
        self.value_fn.as_ref().map(|f| f(x))
    }

    /// `a·self + b·other`; callbacks survive only when both sides carry them.
    pub fn linear_combination(&self, a: f64, other: &GridField, b: f64) -> Result<GridField> {
        if self.grid != other.grid {
            return Err(LabError::InvalidGrid("fields live on different grids".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        let value_fn = match (&self.value_fn, &other.value_fn) {
            (Some(f), Some(g)) => {
                let (f, g) = (f.clone(), g.clone());
                Some(Arc::new(move |x: &[f64]| a * f(x) + b * g(x)) as ScalarFn)
            }
            _ => None,
        };
        let gradient_fn = match (&self.gradient_fn, &other.gradient_fn) {
            (Some(f), Some(g)) => {
                let (f, g) = (f.clone(), g.clone());
                Some(Arc::new(move |x: &[f64], out: &mut [f64]| {
                    let mut tmp = vec![0.0; out.len()];
                    f(x, out);
                    g(x, &mut tmp);
                    for (o, t) in out.iter_mut().zip(&tmp) {
                        *o = a * *o + b * t;
                    }
                }) as GradientFn)
            }
            _ => None,
        };
        Ok(GridField {
            grid: self.grid.clone(),
            values,
            value_fn,
            gradient_fn,
        })
    }

    pub fn scaled(&self, a: f64) -> GridField {
        let values = self.values.iter().map(|v| a * v).collect();
        let value_fn = self.value_fn.clone().map(|f| {
            Arc::new(move |x: &[f64]| a * f(x)) as ScalarFn
        });
        let gradient_fn = self.gradient_fn.clone().map(|g| {
            Arc::new(move |x: &[f64], out: &mut [f64]| {
                g(x, out);
                out.iter_mut().for_each(|o| *o *= a);
            }) as GradientFn
        });
        GridField {
            grid: self.grid.clone(),
            values,
            value_fn,
            gradient_fn,
        }
    }

    /// Drops the analytic callbacks, leaving only samples.
    pub fn sampled_only(&self) -> GridField {
        GridField {
            grid: self.grid.clone(),
            values: self.values.clone(),
            value_fn: None,
            gradient_fn: None,
        }
    }

    /// `sup |f|` over cell centers in `C`.
    pub fn sup_abs_centers(&self, cone: &Cone) -> SupNorm {
        let mut best = SupNorm {
            value: 0.0,
            argmax: vec![0.0; self.dim()],
        };
        self.grid.for_each_center(|lin, _, x| {
            let v = self.values[lin].abs();
            if v > best.value && cone.contains(x) {
                best.value = v;
                best.argmax.copy_from_slice(x);
            }
        });
        best
    }

    /// `sup |f|` over the closure of `C`, as far as the grid resolves it.
    ///
    /// Without a value callback this is [`Self::sup_abs_centers`]. With one,
    /// each axis is sampled at the cell centers plus the coordinate `0` when
    /// it lies inside the grid, so the origin and the faces of an orthant
    /// cone are included.
    pub fn sup_abs_closure(&self, cone: &Cone) -> SupNorm {
        let Some(f) = &self.value_fn else {
            return self.sup_abs_centers(cone);
        };
        let d = self.dim();
        let axes: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                let mut pts = self.grid.centers(i).to_vec();
                if self.grid.lo()[i] <= 0.0 && self.grid.hi()[i] >= 0.0 {
                    pts.push(0.0);
                }
                pts
            })
            .collect();
        let mut best = SupNorm {
            value: 0.0,
            argmax: vec![0.0; d],
        };
        for_each_product_point(&axes, |x| {
            if cone.contains_closure(x) {
                let v = f(x).abs();
                if v > best.value {
                    best.value = v;
                    best.argmax.copy_from_slice(x);
                }
            }
        });
        best
    }

    /// `∫_C |f| dμ` by the midpoint rule.
    pub fn l1_norm(&self, cone: &Cone) -> f64 {
        let mut s = 0.0;
        self.grid.for_each_center(|lin, _, x| {
            if cone.contains(x) {
                s += self.values[lin].abs();
            }
        });
        s * self.grid.cell_volume()
    }

    /// Central-difference gradient at cell `idx` (one-sided at the grid
    /// boundary and next to the boundary of `C`).
    pub fn sampled_gradient(&self, cone: &Cone, idx: &[usize], out: &mut [f64]) {
        let d = self.dim();
        let lin = self.grid.linear(idx);
        let mut nb = idx.to_vec();
        let mut xn = vec![0.0; d];
        for axis in 0..d {
            let n = self.grid.resolution()[axis];
            let stride = self.grid.strides()[axis];
            let h = self.grid.spacing()[axis];
            let usable = |j: isize, nb: &mut Vec<usize>, xn: &mut Vec<f64>| -> bool {
                if j < 0 || j as usize >= n {
                    return false;
                }
                nb[axis] = j as usize;
                self.grid.center_of(nb, xn);
                cone.contains(xn)
            };
            let j = idx[axis] as isize;
            let fwd = usable(j + 1, &mut nb, &mut xn);
            let bwd = usable(j - 1, &mut nb, &mut xn);
            nb[axis] = idx[axis];
            out[axis] = match (fwd, bwd) {
                (true, true) => (self.values[lin + stride] - self.values[lin - stride]) / (2.0 * h),
                (true, false) => (self.values[lin + stride] - self.values[lin]) / h,
                (false, true) => (self.values[lin] - self.values[lin - stride]) / h,
                (false, false) => 0.0,
            };
        }
    }
}

/// Visits the tensor product of per-axis point lists, last axis fastest.
pub fn for_each_product_point<F: FnMut(&[f64])>(axes: &[Vec<f64>], mut f: F) {
    let d = axes.len();
    if d == 0 || axes.iter().any(|a| a.is_empty()) {
        return;
    }
    let mut idx = vec![0usize; d];
    let mut x: Vec<f64> = axes.iter().map(|a| a[0]).collect();
    loop {
        f(&x);
        let mut axis = d;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < axes[axis].len() {
                x[axis] = axes[axis][idx[axis]];
                break;
            }
            idx[axis] = 0;
            x[axis] = axes[axis][0];
        }
    }
}

/// Result of [`grad_sup_polar`].
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct GradSup {
    pub value: f64,
    pub argmax: Vec<f64>,
    /// True when the gradient came from finite differences of the samples.
    pub finite_difference: bool,
}

/// `sup_{x ∈ C} |∇f(x)|_{K°}` over cell centers in `C`.
///
/// Uses the analytic gradient callback when present, otherwise central
/// differences of the samples.
pub fn grad_sup_polar(f: &GridField, body: &ConvexBody, cone: &Cone) -> Result<GradSup> {
    check_dim(body.dim(), f.dim())?;
    check_dim(cone.dim(), f.dim())?;
    let d = f.dim();
    let mut g = vec![0.0; d];
    let mut best = GradSup {
        value: 0.0,
        argmax: vec![0.0; d],
        finite_difference: f.gradient_fn.is_none(),
    };
    f.grid.for_each_center(|_, idx, x| {
        if !cone.contains(x) {
            return;
        }
        match &f.gradient_fn {
            Some(grad) => grad(x, &mut g),
            None => f.sampled_gradient(cone, idx, &mut g),
        }
        let v = body.polar_norm_unchecked(&g);
        if v > best.value {
            best.value = v;
            best.argmax.copy_from_slice(x);
        }
    });
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn callbacks_match_samples() {
        let grid = GridSpec::cube(2, -1.0, 1.0, 16).unwrap();
        let f = GridField::from_fn(grid.clone(), Arc::new(|x: &[f64]| x[0] * x[1] + x[0].sin()));
        grid.for_each_center(|lin, _, x| {
            assert!((f.values()[lin] - f.eval(x).unwrap()).abs() < 1e-12);
        });
    }

    #[test]
    fn from_values_checks_length() {
        let grid = GridSpec::cube(1, 0.0, 1.0, 4).unwrap();
        assert!(GridField::from_values(grid.clone(), vec![0.0; 3]).is_err());
        assert!(GridField::from_values(grid, vec![0.0; 4]).is_ok());
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let grid = GridSpec::cube(2, -1.0, 1.0, 8).unwrap();
        let f = GridField::from_values(grid, vec![3.0; 64]).unwrap();
        let g = grad_sup_polar(&f, &ConvexBody::cube(2).unwrap(), &Cone::full(2).unwrap()).unwrap();
        assert_eq!(g.value, 0.0);
        assert!(g.finite_difference);
    }

    #[test]
    fn bilinear_gradient_sup() {
        // |∇(x1 x2)|_1 = |x2| + |x1|, sup over [0,1]^2 approached at the far corner
        let grid = GridSpec::cube(2, 0.0, 1.0, 64).unwrap();
        let f = GridField::from_fn(grid, Arc::new(|x: &[f64]| x[0] * x[1])).with_gradient(Arc::new(
            |x: &[f64], g: &mut [f64]| {
                g[0] = x[1];
                g[1] = x[0];
            },
        ));
        let k = ConvexBody::cube(2).unwrap();
        let c = Cone::orthant(2, 2).unwrap();
        let a = grad_sup_polar(&f, &k, &c).unwrap();
        // lattice oracle: largest center is 1 - 1/128
        assert!((a.value - 2.0 * (1.0 - 1.0 / 128.0)).abs() < 1e-12);
        let fd = grad_sup_polar(&f.sampled_only(), &k, &c).unwrap();
        assert!((fd.value - a.value).abs() < 1e-9);
        assert!(fd.finite_difference && !a.finite_difference);
    }

    #[test]
    fn sup_closure_reaches_origin() {
        let grid = GridSpec::cube(1, -1.0, 1.0, 8).unwrap();
        let f = GridField::from_fn(grid, Arc::new(|x: &[f64]| (1.0 - x[0].abs()).max(0.0)));
        let c = Cone::full(1).unwrap();
        assert_eq!(f.sup_abs_closure(&c).value, 1.0);
        assert!(f.sup_abs_centers(&c).value < 1.0);
    }
}
