//! Uniform rectangular grids. Values live at cell centers; cells are stored
//! row-major with the last axis fastest.

use serde::Serialize;

use crate::error::{check_finite, LabError, Result};

/// Highest dimension the lab accepts.
pub const MAX_DIM: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    lo: Vec<f64>,
    hi: Vec<f64>,
    n: Vec<usize>,
    #[serde(skip)]
    spacing: Vec<f64>,
    #[serde(skip)]
    centers: Vec<Vec<f64>>,
    #[serde(skip)]
    strides: Vec<usize>,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, n: Vec<usize>) -> Result<Self> {
        let d = lo.len();
        if d == 0 || d > MAX_DIM {
            return Err(LabError::InvalidGrid(format!(
                "dimension {d} outside 1..={MAX_DIM}"
            )));
        }
        if hi.len() != d || n.len() != d {
            return Err(LabError::InvalidGrid(
                "bounds and resolutions must have the same length".into(),
            ));
        }
        check_finite(&lo, "grid bounds")?;
        check_finite(&hi, "grid bounds")?;
        for i in 0..d {
            if hi[i] <= lo[i] {
                return Err(LabError::InvalidGrid(format!(
                    "axis {i}: upper bound {} not above lower bound {}",
                    hi[i], lo[i]
                )));
            }
            if n[i] < 2 {
                return Err(LabError::InvalidGrid(format!(
                    "axis {i}: resolution {} below 2",
                    n[i]
                )));
            }
        }
        let spacing: Vec<f64> = (0..d).map(|i| (hi[i] - lo[i]) / n[i] as f64).collect();
        let centers = (0..d)
            .map(|i| {
                (0..n[i])
                    .map(|j| lo[i] + (j as f64 + 0.5) * spacing[i])
                    .collect()
            })
            .collect();
        let mut strides = vec![1usize; d];
        for i in (0..d.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * n[i + 1];
        }
        Ok(Self {
            lo,
            hi,
            n,
            spacing,
            centers,
            strides,
        })
    }

    /// Same resolution `n` and bounds `[lo, hi]` on every axis.
    pub fn cube(d: usize, lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(vec![lo; d], vec![hi; d], vec![n; d])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn resolution(&self) -> &[usize] {
        &self.n
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Cell-center coordinates along `axis`.
    pub fn centers(&self, axis: usize) -> &[f64] {
        &self.centers[axis]
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn linear(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn unravel(&self, mut lin: usize, idx: &mut [usize]) {
        for (slot, s) in idx.iter_mut().zip(&self.strides) {
            *slot = lin / s;
            lin %= s;
        }
    }

    pub fn center_of(&self, idx: &[usize], out: &mut [f64]) {
        for (i, (&j, slot)) in idx.iter().zip(out.iter_mut()).enumerate() {
            *slot = self.centers[i][j];
        }
    }

    /// Short label such as `256x256`.
    pub fn label(&self) -> String {
        self.n
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join("x")
    }

    /// Whether `x` lies in the closed bounding box of the grid.
    pub fn contains_point(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    /// Calls `f(linear index, multi-index, center)` for every cell in storage order.
    pub fn for_each_center<F>(&self, mut f: F)
    where
        F: FnMut(usize, &[usize], &[f64]),
    {
        let d = self.dim();
        let mut idx = vec![0usize; d];
        let mut x: Vec<f64> = (0..d).map(|i| self.centers[i][0]).collect();
        let total = self.len();
        for lin in 0..total {
            f(lin, &idx, &x);
            // odometer increment, last axis fastest
            let mut axis = d;
            while axis > 0 {
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < self.n[axis] {
                    x[axis] = self.centers[axis][idx[axis]];
                    break;
                }
                idx[axis] = 0;
                x[axis] = self.centers[axis][0];
            }
        }
    }

    /// First cell index on `axis` whose center is strictly greater than `a`.
    pub fn first_center_above(&self, axis: usize, a: f64) -> usize {
        let c = &self.centers[axis];
        let n = c.len();
        let guess = ((a - self.lo[axis]) / self.spacing[axis] - 0.5).floor() + 1.0;
        let mut j = if guess.is_nan() || guess <= 0.0 {
            0
        } else if guess >= n as f64 {
            n
        } else {
            guess as usize
        };
        while j > 0 && c[j - 1] > a {
            j -= 1;
        }
        while j < n && c[j] <= a {
            j += 1;
        }
        j
    }

    /// First cell index on `axis` whose center is greater than or equal to `b`.
    pub fn first_center_at_or_above(&self, axis: usize, b: f64) -> usize {
        let c = &self.centers[axis];
        let n = c.len();
        let guess = ((b - self.lo[axis]) / self.spacing[axis] - 0.5).ceil();
        let mut j = if guess.is_nan() || guess <= 0.0 {
            0
        } else if guess >= n as f64 {
            n
        } else {
            guess as usize
        };
        while j > 0 && c[j - 1] >= b {
            j -= 1;
        }
        while j < n && c[j] < b {
            j += 1;
        }
        j
    }

    /// Index range `[start, end)` of cells whose centers lie in the open interval `(a, b)`.
    pub fn open_interval_cells(&self, axis: usize, a: f64, b: f64) -> (usize, usize) {
        let s = self.first_center_above(axis, a);
        let e = self.first_center_at_or_above(axis, b).max(s);
        (s, e)
    }

    /// Whether cell index `j` on `axis` touches the grid boundary.
    pub fn is_boundary_index(&self, axis: usize, j: usize) -> bool {
        j == 0 || j + 1 == self.n[axis]
    }
}
