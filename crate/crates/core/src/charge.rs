//! Charges `dν = f dμ` given by grid densities, window sums and the seminorms
//! `‖ν‖_{K,h}` and `‖ν‖_K`.

use std::io::Read;
use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::error::{check_dim, check_finite, LabError, Result};
use crate::field::{GradientFn, GridField, ScalarFn, SupNorm};
use crate::geometry::{Cone, ConvexBody};
use crate::grid::GridSpec;
use crate::optimize::golden_section_max;
use crate::prefix::PrefixSums;

/// Relative width of the band in which a cell center counts as lying on the
/// window boundary.
///
/// A cell whose center `u` satisfies `|u - y|_K < h(1 - WEPS)` and every cone
/// inequality with slack above `WEPS·h` has weight 1. A center on the
/// boundary, within the band, gets a factor `1/2` for each face it lies on,
/// which is the share of a centrally symmetric cell cut by a hyperplane
/// through its center. Centers beyond the band have weight 0.
pub const WEPS: f64 = 1e-10;

/// Quadrature weight of the cell centered at `y + u` in the window `y + (hK ∩ C)`.
fn window_weight(body: &ConvexBody, cone: &Cone, u: &[f64], h: f64) -> f64 {
    let c = cone.boundary_weight(u, WEPS * h);
    if c == 0.0 {
        0.0
    } else {
        c * body.boundary_weight(u, h, WEPS)
    }
}

/// Relative size of the boundary layer that must vanish for a compactly supported density.
pub const SUPPORT_TOL: f64 = 1e-12;

#[derive(Debug)]
pub struct Charge {
    density: GridField,
    cone: Cone,
    prefix: OnceLock<PrefixSums>,
    truncated: bool,
}

impl Clone for Charge {
    fn clone(&self) -> Self {
        Self {
            density: self.density.clone(),
            cone: self.cone.clone(),
            prefix: OnceLock::new(),
            truncated: self.truncated,
        }
    }
}

impl Charge {
    /// Wraps a density, asserting that it vanishes on the grid's boundary layer.
    ///
    /// Faces of an orthant cone (`x_i = 0`, `i < m`) are part of the support
    /// and exempt from the check.
    pub fn new(density: GridField, cone: Cone) -> Result<Self> {
        let c = Self::unchecked(density, cone)?;
        c.check_support()?;
        Ok(c)
    }

    /// Like [`Charge::new`], but a density reaching the grid boundary only sets
    /// [`Charge::truncation_warning`].
    pub fn new_truncated(density: GridField, cone: Cone) -> Result<Self> {
        let mut c = Self::unchecked(density, cone)?;
        c.truncated = c.check_support().is_err();
        Ok(c)
    }

    pub fn zero(grid: GridSpec, cone: Cone) -> Result<Self> {
        Self::new(GridField::zeros(grid), cone)
    }

    /// Reads `cell_index,value` rows (an optional header is skipped); missing cells are zero.
    pub fn from_csv<R: Read>(reader: R, grid: GridSpec, cone: Cone) -> Result<Self> {
        let mut values = vec![0.0; grid.len()];
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| LabError::Parse(e.to_string()))?;
            if rec.len() != 2 {
                return Err(LabError::Parse(format!("row {}: expected 2 fields", row + 1)));
            }
            let idx = match rec[0].parse::<usize>() {
                Ok(i) => i,
                Err(_) if row == 0 => continue,
                Err(e) => return Err(LabError::Parse(format!("row {}: {e}", row + 1))),
            };
            let v: f64 = rec[1]
                .parse()
                .map_err(|e| LabError::Parse(format!("row {}: {e}", row + 1)))?;
            if idx >= values.len() {
                return Err(LabError::Parse(format!(
                    "row {}: cell index {idx} out of range",
                    row + 1
                )));
            }
            values[idx] = v;
        }
        Self::new(GridField::from_values(grid, values)?, cone)
    }

    fn unchecked(density: GridField, cone: Cone) -> Result<Self> {
        check_dim(cone.dim(), density.dim())?;
        if let Some(m) = cone.orthant_m() {
            for i in 0..m {
                if density.grid().lo()[i] != 0.0 {
                    return Err(LabError::InvalidGrid(format!(
                        "axis {i} is an orthant axis and must start at 0"
                    )));
                }
            }
        }
        Ok(Self {
            density,
            cone,
            prefix: OnceLock::new(),
            truncated: false,
        })
    }

    fn check_support(&self) -> Result<()> {
        let grid = self.density.grid();
        let vals = self.density.values();
        let vmax = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let limit = SUPPORT_TOL * vmax;
        let mut bad: Option<Vec<f64>> = None;
        grid.for_each_center(|lin, idx, x| {
            if bad.is_some() || vals[lin].abs() <= limit {
                return;
            }
            let on_layer = (0..grid.dim()).any(|i| {
                let n = grid.resolution()[i];
                let face = self.cone.is_orthant_axis(i);
                (idx[i] == 0 && !face) || idx[i] + 1 == n
            });
            if on_layer {
                bad = Some(x.to_vec());
            }
        });
        match bad {
            Some(x) => Err(LabError::Support(format!("nonzero density at boundary cell {x:?}"))),
            None => Ok(()),
        }
    }

    pub fn density(&self) -> &GridField {
        &self.density
    }

    pub fn cone(&self) -> &Cone {
        &self.cone
    }

    pub fn grid(&self) -> &GridSpec {
        self.density.grid()
    }

    pub fn dim(&self) -> usize {
        self.density.dim()
    }

    /// True when the density was allowed to touch the grid boundary.
    pub fn truncation_warning(&self) -> bool {
        self.truncated
    }

    /// `αν + βη`.
    pub fn linear_combination(&self, a: f64, other: &Charge, b: f64) -> Result<Charge> {
        if self.cone != other.cone {
            return Err(LabError::InvalidCone("charges live on different cones".into()));
        }
        Ok(Charge {
            density: self.density.linear_combination(a, &other.density, b)?,
            cone: self.cone.clone(),
            prefix: OnceLock::new(),
            truncated: self.truncated || other.truncated,
        })
    }

    pub fn scaled(&self, a: f64) -> Charge {
        Charge {
            density: self.density.scaled(a),
            cone: self.cone.clone(),
            prefix: OnceLock::new(),
            truncated: self.truncated,
        }
    }

    /// `ν(C)`.
    pub fn total(&self) -> f64 {
        let grid = self.grid();
        let vals = self.density.values();
        let mut s = 0.0;
        grid.for_each_center(|lin, _, x| {
            if self.cone.contains(x) {
                s += vals[lin];
            }
        });
        s * grid.cell_volume()
    }

    /// `sup_C |D_μν|`, including the closure points the grid can see.
    pub fn sup_density(&self) -> SupNorm {
        self.density.sup_abs_closure(&self.cone)
    }

    fn prefix(&self) -> &PrefixSums {
        self.prefix
            .get_or_init(|| PrefixSums::build(self.density.values(), self.grid().resolution()))
    }

    /// Whether window sums can use the summed-area table.
    pub fn supports_prefix(&self, body: &ConvexBody) -> bool {
        body.as_axis_box().is_some() && self.cone.orthant_m().is_some()
    }
}

fn check_window_args(nu: &Charge, y: &[f64], body: &ConvexBody, h: f64) -> Result<()> {
    check_dim(nu.dim(), y.len())?;
    check_dim(nu.dim(), body.dim())?;
    check_finite(y, "window translate")?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(LabError::Domain(format!("window scale h must be positive, got {h}")));
    }
    Ok(())
}

/// `ν(y + (hK ∩ C))` by the midpoint rule, with boundary cells weighted as
/// described under [`WEPS`].
///
/// Uses the summed-area table when `K` is an axis box and `C` an orthant
/// product, and direct summation otherwise.
pub fn charge_of_window(nu: &Charge, y: &[f64], body: &ConvexBody, h: f64) -> Result<f64> {
    if nu.supports_prefix(body) {
        charge_of_window_prefix(nu, y, body, h)
    } else {
        charge_of_window_direct(nu, y, body, h)
    }
}

/// Cells `s..e` covered by the window along one axis of the axis-box /
/// orthant case. An end cell whose center lies on the window face has weight
/// `1/2`.
#[derive(Clone, Copy, Debug)]
struct Span {
    s: usize,
    e: usize,
    lo_half: bool,
    hi_half: bool,
}

impl Span {
    fn new(grid: &GridSpec, half: &[f64], m: usize, axis: usize, yi: f64, h: f64) -> Self {
        let r = h * half[axis];
        let (a, band_lo) = if axis < m { (yi, WEPS * h) } else { (yi - r, WEPS * r) };
        let (b, band_hi) = (yi + r, WEPS * r);
        let (s, e) = grid.open_interval_cells(axis, a - band_lo, b + band_hi);
        let c = grid.centers(axis);
        Self {
            s,
            e,
            lo_half: s < e && c[s] <= a + band_lo,
            hi_half: s < e && c[e - 1] >= b - band_hi,
        }
    }

    /// The weighted range as at most two plain ranges with coefficients.
    fn parts(&self) -> Vec<(usize, usize, f64)> {
        if self.s >= self.e {
            return Vec::new();
        }
        if !self.lo_half && !self.hi_half {
            return vec![(self.s, self.e, 1.0)];
        }
        let (s2, e2) = (self.s + self.lo_half as usize, self.e - self.hi_half as usize);
        let mut v = vec![(self.s, self.e, 0.5)];
        if s2 < e2 {
            v.push((s2, e2, 0.5));
        }
        v
    }

    /// The weighted range as prefix-table reads `(index, coefficient)`, with
    /// repeated indices merged.
    fn ends(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(4);
        let mut add = |k: usize, c: f64| match out.iter_mut().find(|(j, _)| *j == k) {
            Some(slot) => slot.1 += c,
            None => out.push((k, c)),
        };
        for (s, e, c) in self.parts() {
            add(e, c);
            add(s, -c);
        }
        out.retain(|&(_, c)| c != 0.0);
        out
    }
}

/// Summed-area-table window sum; needs an axis box and an orthant cone.
pub fn charge_of_window_prefix(nu: &Charge, y: &[f64], body: &ConvexBody, h: f64) -> Result<f64> {
    check_window_args(nu, y, body, h)?;
    let (Some(half), Some(m)) = (body.as_axis_box(), nu.cone.orthant_m()) else {
        return Err(LabError::Unsupported(
            "prefix-sum windows need an axis box and an orthant cone".into(),
        ));
    };
    let grid = nu.grid();
    let d = grid.dim();
    let parts: Vec<Vec<(usize, usize, f64)>> = (0..d).map(|i| Span::new(grid, half, m, i, y[i], h).parts()).collect();
    if parts.iter().any(Vec::is_empty) {
        return Ok(0.0);
    }
    let prefix = nu.prefix();
    let mut pick = vec![0; d];
    let (mut start, mut end) = (vec![0; d], vec![0; d]);
    let mut sum = 0.0;
    loop {
        let mut coef = 1.0;
        for i in 0..d {
            let (s, e, c) = parts[i][pick[i]];
            start[i] = s;
            end[i] = e;
            coef *= c;
        }
        sum += coef * prefix.box_sum(&start, &end);
        let mut axis = d;
        loop {
            if axis == 0 {
                return Ok(sum * grid.cell_volume());
            }
            axis -= 1;
            pick[axis] += 1;
            if pick[axis] < parts[axis].len() {
                break;
            }
            pick[axis] = 0;
        }
    }
}

/// Window sum by visiting every cell of the window's bounding box.
pub fn charge_of_window_direct(nu: &Charge, y: &[f64], body: &ConvexBody, h: f64) -> Result<f64> {
    check_window_args(nu, y, body, h)?;
    let grid = nu.grid();
    let d = grid.dim();
    let bbox = body.bbox_half_widths();
    let mut ranges = Vec::with_capacity(d);
    for i in 0..d {
        let r = h * bbox[i] * (1.0 + WEPS);
        let (s, e) = grid.open_interval_cells(i, y[i] - r, y[i] + r);
        if s >= e {
            return Ok(0.0);
        }
        ranges.push((s, e));
    }
    let vals = nu.density.values();
    let strides = grid.strides();
    let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    let mut u = vec![0.0; d];
    let mut sum = 0.0;
    loop {
        for i in 0..d {
            u[i] = grid.centers(i)[idx[i]] - y[i];
        }
        let w = window_weight(body, &nu.cone, &u, h);
        if w > 0.0 {
            let lin: usize = idx.iter().zip(strides).map(|(j, s)| j * s).sum();
            sum += w * vals[lin];
        }
        let mut axis = d;
        loop {
            if axis == 0 {
                return Ok(sum * grid.cell_volume());
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < ranges[axis].1 {
                break;
            }
            idx[axis] = ranges[axis].0;
        }
    }
}

/// Supremum of `|ν(y + hK ∩ C)|` over candidate translates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowSup {
    pub value: f64,
    pub argmax: Vec<f64>,
    /// Number of candidate translates (cell centers in `C`, plus θ).
    pub candidates: usize,
    /// Fraction of candidates whose whole window lies inside the grid.
    pub coverage: f64,
}

/// Tracks the largest `|value|` in candidate order; the first maximizer wins ties.
pub(crate) struct SupTracker {
    pub best: f64,
    pub argmax: Vec<f64>,
    pub count: usize,
    pub covered: usize,
}

impl SupTracker {
    pub fn new(d: usize) -> Self {
        Self {
            best: f64::NEG_INFINITY,
            argmax: vec![0.0; d],
            count: 0,
            covered: 0,
        }
    }

    pub fn offer(&mut self, v: f64, x: &[f64], covered: bool) {
        self.count += 1;
        if covered {
            self.covered += 1;
        }
        if v > self.best {
            self.best = v;
            self.argmax.copy_from_slice(x);
        }
    }

    pub fn coverage(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.covered as f64 / self.count as f64
        }
    }
}

/// Whether the bounding box of `y + hK` lies inside the grid.
pub(crate) fn window_inside_grid(grid: &GridSpec, y: &[f64], reach: &[f64]) -> bool {
    (0..grid.dim()).all(|i| y[i] - reach[i] >= grid.lo()[i] && y[i] + reach[i] <= grid.hi()[i])
}

/// Candidate translates: θ first, then every cell center in `C`, in grid order.
pub(crate) fn for_each_candidate<F: FnMut(Option<&[usize]>, &[f64])>(grid: &GridSpec, cone: &Cone, mut f: F) {
    let theta = vec![0.0; grid.dim()];
    f(None, &theta);
    grid.for_each_center(|_, idx, x| {
        if cone.contains(x) {
            f(Some(idx), x);
        }
    });
}

/// One axis-box window on an orthant cone, by contracting the density with
/// the per-axis cell weights, last axis first. Needs no prefix table.
fn box_window_at(nu: &Charge, half: &[f64], m: usize, y: &[f64], h: f64) -> f64 {
    let grid = nu.grid();
    let n = grid.resolution();
    let weights = |axis: usize| {
        let mut w = vec![0.0; n[axis]];
        for (s, e, c) in Span::new(grid, half, m, axis, y[axis], h).parts() {
            w[s..e].iter_mut().for_each(|v| *v += c);
        }
        w
    };
    let dot = |line: &[f64], w: &[f64]| line.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
    let last = grid.dim() - 1;
    let w = weights(last);
    let mut cur: Vec<f64> = nu.density.values().chunks_exact(n[last]).map(|l| dot(l, &w)).collect();
    for axis in (0..last).rev() {
        let w = weights(axis);
        cur = cur.chunks_exact(n[axis]).map(|l| dot(l, &w)).collect();
    }
    cur[0] * grid.cell_volume()
}

/// Window sums, without the cell volume, at every cell center for an axis
/// box on an orthant cone.
///
/// The weighted window is a product of intervals, so the sums come from one
/// weighted interval sum per axis, applied axis by axis with line prefix sums.
fn box_window_sums(nu: &Charge, half: &[f64], m: usize, h: f64) -> Vec<f64> {
    let grid = nu.grid();
    let n = grid.resolution();
    let strides = grid.strides();
    let mut buf = nu.density.values().to_vec();
    let mut prefix = Vec::new();
    for axis in 0..grid.dim() {
        let ends: Vec<Vec<(usize, f64)>> = grid
            .centers(axis)
            .iter()
            .map(|&c| Span::new(grid, half, m, axis, c, h).ends())
            .collect();
        let (len, stride) = (n[axis], strides[axis]);
        if stride == 1 {
            prefix.clear();
            prefix.resize(len + 1, 0.0);
            for line in buf.chunks_exact_mut(len) {
                let mut acc = 0.0;
                for (p, &v) in prefix[1..].iter_mut().zip(line.iter()) {
                    acc += v;
                    *p = acc;
                }
                for (o, e) in line.iter_mut().zip(&ends) {
                    *o = e.iter().map(|&(k, c)| c * prefix[k]).sum();
                }
            }
            continue;
        }
        // lines along `axis` are processed `width` at a time so reads stay contiguous
        let width = stride.min(64);
        prefix.clear();
        prefix.resize((len + 1) * width, 0.0);
        for outer in 0..buf.len() / (len * stride) {
            for first in (0..stride).step_by(width) {
                let w = width.min(stride - first);
                let base = outer * len * stride + first;
                for j in 0..len {
                    let src = &buf[base + j * stride..base + j * stride + w];
                    let (done, next) = prefix.split_at_mut((j + 1) * width);
                    for ((p, &q), &v) in next[..w].iter_mut().zip(&done[j * width..j * width + w]).zip(src) {
                        *p = q + v;
                    }
                }
                for (j, e) in ends.iter().enumerate() {
                    let dst = &mut buf[base + j * stride..base + j * stride + w];
                    dst.fill(0.0);
                    for &(k, c) in e {
                        for (o, &p) in dst.iter_mut().zip(&prefix[k * width..k * width + w]) {
                            *o += c * p;
                        }
                    }
                }
            }
        }
    }
    buf
}

/// Running sums along the last axis, one row per index of the other axes.
struct RowSums {
    len: usize,
    sums: Vec<f64>,
}

impl RowSums {
    fn build(nu: &Charge) -> Self {
        let n = *nu.grid().resolution().last().unwrap();
        let vals = nu.density.values();
        let rows = vals.len() / n;
        let mut sums = Vec::with_capacity(rows * (n + 1));
        for r in 0..rows {
            let mut acc = 0.0;
            sums.push(0.0);
            for v in &vals[r * n..(r + 1) * n] {
                acc += v;
                sums.push(acc);
            }
        }
        Self { len: n + 1, sums }
    }

    /// Sum of cells `start..end` in row `row`.
    fn run(&self, row: usize, start: usize, end: usize) -> f64 {
        let base = row * self.len;
        self.sums[base + end] - self.sums[base + start]
    }
}

/// Offsets along the first `d-1` axes and the weighted last-axis runs `(start, end, weight)`.
type StencilRow = (Vec<isize>, Vec<(isize, isize, f64)>);

/// Weighted cell offsets of the window `hK ∩ C` seen from a cell center, with
/// the same weights as [`charge_of_window_direct`]. Grouped by the offsets
/// along the first `d-1` axes, each with its runs of last-axis offsets that
/// share one weight.
fn window_stencil(nu: &Charge, body: &ConvexBody, h: f64) -> Vec<StencilRow> {
    let grid = nu.grid();
    let d = grid.dim();
    let dx = grid.spacing();
    let reach: Vec<isize> = (0..d)
        .map(|i| (h * body.bbox_half_widths()[i] / dx[i]).floor() as isize + 1)
        .collect();
    let weight = |k: &[isize]| {
        let u: Vec<f64> = (0..d).map(|i| k[i] as f64 * dx[i]).collect();
        window_weight(body, &nu.cone, &u, h)
    };
    let mut out = Vec::new();
    let mut k: Vec<isize> = reach.iter().map(|r| -r).collect();
    loop {
        let mut runs: Vec<(isize, isize, f64)> = Vec::new();
        for t in -reach[d - 1]..=reach[d - 1] {
            k[d - 1] = t;
            let w = weight(&k);
            if w > 0.0 {
                match runs.last_mut() {
                    Some(run) if run.1 + 1 == t && run.2 == w => run.1 = t,
                    _ => runs.push((t, t, w)),
                }
            }
        }
        if !runs.is_empty() {
            out.push((k[..d - 1].to_vec(), runs));
        }
        let mut axis = d - 1;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            k[axis] += 1;
            if k[axis] <= reach[axis] {
                break;
            }
            k[axis] = -reach[axis];
        }
    }
}

/// Calls `f(y, ν(y + hK ∩ C))` for θ and then every cell center in `C`.
///
/// With an axis box and an orthant cone the sums at all cell centers come
/// from one separable pass per axis. Otherwise translates at cell centers
/// share one lattice stencil, summed run by run from row sums. θ is always
/// summed as a single window.
pub fn for_each_window_sum<F>(nu: &Charge, body: &ConvexBody, h: f64, mut f: F) -> Result<()>
where
    F: FnMut(Option<&[usize]>, &[f64], f64),
{
    let d = nu.dim();
    check_window_args(nu, &vec![0.0; d], body, h)?;
    let grid = nu.grid();
    if nu.supports_prefix(body) {
        let half = body.as_axis_box().unwrap();
        let m = nu.cone.orthant_m().unwrap();
        let theta = vec![0.0; d];
        f(None, &theta, box_window_at(nu, half, m, &theta, h));
        let sums = box_window_sums(nu, half, m, h);
        let cv = grid.cell_volume();
        grid.for_each_center(|lin, idx, x| {
            if nu.cone.contains(x) {
                f(Some(idx), x, sums[lin] * cv);
            }
        });
    } else {
        let stencil = window_stencil(nu, body, h);
        let rows = RowSums::build(nu);
        let n_last = grid.resolution()[d - 1] as isize;
        let cv = grid.cell_volume();
        let mut err = None;
        for_each_candidate(grid, &nu.cone, |idx, y| {
            let Some(idx) = idx else {
                match charge_of_window_direct(nu, y, body, h) {
                    Ok(v) => f(None, y, v),
                    Err(e) => {
                        err.get_or_insert(e);
                    }
                }
                return;
            };
            let j = idx[d - 1] as isize;
            let mut sum = 0.0;
            'rows: for (ks, runs) in &stencil {
                let mut row = 0usize;
                for i in 0..d - 1 {
                    let t = idx[i] as isize + ks[i];
                    if t < 0 || t >= grid.resolution()[i] as isize {
                        continue 'rows;
                    }
                    row = row * grid.resolution()[i] + t as usize;
                }
                for &(a, b, w) in runs {
                    let lo = (j + a).max(0);
                    let hi = (j + b).min(n_last - 1);
                    if lo <= hi {
                        sum += w * rows.run(row, lo as usize, hi as usize + 1);
                    }
                }
            }
            f(Some(idx), y, sum * cv);
        });
        if let Some(e) = err {
            return Err(e);
        }
    }
    Ok(())
}

/// `‖ν‖_{K,h} = sup_{y ∈ C} |ν(y + hK ∩ C)|` over θ and the cell centers in `C`.
pub fn seminorm_kh(nu: &Charge, body: &ConvexBody, h: f64) -> Result<WindowSup> {
    let d = nu.dim();
    let grid = nu.grid();
    let reach: Vec<f64> = body.bbox_half_widths().iter().map(|s| s * h).collect();
    let mut t = SupTracker::new(d);
    for_each_window_sum(nu, body, h, |_, y, v| {
        t.offer(v.abs(), y, window_inside_grid(grid, y, &reach));
    })?;
    if t.count == 0 {
        return Err(LabError::Degenerate("no candidate translates".into()));
    }
    Ok(WindowSup {
        value: t.best,
        argmax: t.argmax.clone(),
        candidates: t.count,
        coverage: t.coverage(),
    })
}

/// Result of [`seminorm_k`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeminormK {
    pub value: f64,
    /// Smallest probed `h` whose value is within `1e-9` of the maximum.
    pub h: f64,
    pub argmax: Vec<f64>,
    /// Set when the charge vanishes on every probed window.
    pub zero: bool,
    pub evaluations: usize,
}

pub const SEMINORM_SCAN_POINTS: usize = 32;

/// `‖ν‖_K = sup_{h>0} ‖ν‖_{K,h}`.
///
/// Scans 32 log-spaced `h` in `(0, h_max]`, then refines by golden-section
/// search around the best scan point for at most `refine_iters` steps, stopping
/// once the bracket is below half a cell. Any `probes` are evaluated as well.
pub fn seminorm_k(
    nu: &Charge,
    body: &ConvexBody,
    h_max: f64,
    refine_iters: usize,
    probes: &[f64],
) -> Result<SeminormK> {
    if !(h_max > 0.0 && h_max.is_finite()) {
        return Err(LabError::Domain(format!("h_max must be positive, got {h_max}")));
    }
    check_dim(nu.dim(), body.dim())?;
    let grid = nu.grid();
    let bbox = body.bbox_half_widths();
    let mut h_lo = (0..grid.dim())
        .map(|i| 2.0 * grid.spacing()[i] / bbox[i])
        .fold(f64::INFINITY, f64::min);
    if h_lo >= h_max {
        h_lo = h_max / SEMINORM_SCAN_POINTS as f64;
    }
    let ratio = (h_max / h_lo).ln() / (SEMINORM_SCAN_POINTS - 1) as f64;
    let scan: Vec<f64> = (0..SEMINORM_SCAN_POINTS)
        .map(|k| {
            if k + 1 == SEMINORM_SCAN_POINTS {
                h_max
            } else {
                h_lo * (ratio * k as f64).exp()
            }
        })
        .collect();

    let mut evals: Vec<(f64, WindowSup)> = Vec::new();
    let mut err = None;
    let mut eval = |h: f64, evals: &mut Vec<(f64, WindowSup)>| -> f64 {
        match seminorm_kh(nu, body, h) {
            Ok(w) => {
                let v = w.value;
                evals.push((h, w));
                v
            }
            Err(e) => {
                err.get_or_insert(e);
                f64::NEG_INFINITY
            }
        }
    };

    let mut best_k = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (k, &h) in scan.iter().enumerate() {
        let v = eval(h, &mut evals);
        if v > best_v {
            best_v = v;
            best_k = k;
        }
    }
    for &h in probes {
        if h > 0.0 && h.is_finite() {
            eval(h, &mut evals);
        }
    }
    if refine_iters > 0 {
        let a = scan[best_k.saturating_sub(1)];
        let b = scan[(best_k + 1).min(scan.len() - 1)];
        if b > a {
            // window sums only change when h crosses a cell, so finer steps are wasted
            let xtol = 0.5 * h_lo / 2.0;
            golden_section_max(|h| eval(h, &mut evals), a, b, xtol, refine_iters);
        }
    }
    if let Some(e) = err {
        return Err(e);
    }

    let max = evals.iter().fold(0.0f64, |m, (_, w)| m.max(w.value));
    let tie = 1e-9 * max.max(1e-300);
    let (h, w) = evals
        .iter()
        .filter(|(_, w)| w.value >= max - tie)
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one evaluation");
    Ok(SeminormK {
        value: max,
        h: *h,
        argmax: w.argmax.clone(),
        zero: max == 0.0,
        evaluations: evals.len(),
    })
}

/// A grid on which `θ` is a node and the support `radius·K ∩ C` spans an
/// integer number of cells on each axis, with an empty margin of
/// `max(2, n/32)` cells.
///
/// Free axes are split evenly around θ; orthant axes start at 0.
pub fn covering_grid(body: &ConvexBody, cone: &Cone, radius: f64, n: usize) -> Result<GridSpec> {
    check_dim(body.dim(), cone.dim())?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(LabError::Domain(format!("radius must be positive, got {radius}")));
    }
    let g = (n / 32).max(2);
    if n < 2 * g + 2 {
        return Err(LabError::InvalidGrid(format!("resolution {n} too small for a covering grid")));
    }
    let d = body.dim();
    let mut lo = vec![0.0; d];
    let mut hi = vec![0.0; d];
    for i in 0..d {
        let e = radius * body.bbox_half_widths()[i];
        if cone.is_orthant_axis(i) {
            let dx = e / (n - g) as f64;
            hi[i] = n as f64 * dx;
        } else {
            let left = n / 2;
            let dx = e / (left - g) as f64;
            lo[i] = -(left as f64) * dx;
            hi[i] = (n - left) as f64 * dx;
        }
    }
    GridSpec::new(lo, hi, vec![n; d])
}

/// `f_{e,h}(x) = (h - |x|_K)_+` on the closure of `C`, with its gradient `-∇|x|_K`.
pub fn extremal_density(body: &ConvexBody, cone: &Cone, h: f64, grid: GridSpec) -> Result<GridField> {
    check_dim(body.dim(), cone.dim())?;
    check_dim(body.dim(), grid.dim())?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(LabError::Domain(format!("h must be positive, got {h}")));
    }
    let (kb, cb) = (body.clone(), cone.clone());
    let value: ScalarFn = Arc::new(move |x: &[f64]| {
        if !cb.contains_closure(x) {
            return 0.0;
        }
        (h - kb.gauge_unchecked(x)).max(0.0)
    });
    let (kb, cb) = (body.clone(), cone.clone());
    let gradient: GradientFn = Arc::new(move |x: &[f64], out: &mut [f64]| {
        let r = kb.gauge_unchecked(x);
        if r > 0.0 && r < h && cb.contains_closure(x) {
            kb.gauge_gradient(x, out);
            out.iter_mut().for_each(|v| *v = -*v);
        } else {
            out.iter_mut().for_each(|v| *v = 0.0);
        }
    });
    Ok(GridField::from_fn(grid, value).with_gradient(gradient))
}

/// `ν_{e,h}` on a [`covering_grid`] of resolution `n`.
pub fn extremal_charge(body: &ConvexBody, cone: &Cone, h: f64, n: usize) -> Result<Charge> {
    let grid = covering_grid(body, cone, h, n)?;
    Charge::new(extremal_density(body, cone, h, grid)?, cone.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencil_sums_match_direct_sums() {
        let grid = GridSpec::new(vec![-1.0, -0.8], vec![1.2, 1.0], vec![23, 19]).unwrap();
        let cone = Cone::halfspaces(2, vec![vec![1.0, 0.3]]).unwrap();
        let vals: Vec<f64> = (0..grid.len()).map(|k| ((k * 7919) % 13) as f64 - 6.0).collect();
        let nu = Charge::new_truncated(GridField::from_values(grid, vals).unwrap(), cone).unwrap();
        for body in [ConvexBody::regular_polygon(6).unwrap(), ConvexBody::p_ball(2, 3.0).unwrap()] {
            for h in [0.13, 0.4, 0.77] {
                let mut seen = 0;
                for_each_window_sum(&nu, &body, h, |_, y, v| {
                    let direct = charge_of_window_direct(&nu, y, &body, h).unwrap();
                    assert!((v - direct).abs() < 1e-12, "h={h} y={y:?}: {v} vs {direct}");
                    seen += 1;
                })
                .unwrap();
                assert!(seen > 1);
            }
        }
    }
    #[test]
    fn boundary_centers_get_half_weight() {
        // constant density, window [y, y + h] with both ends on centers
        let grid = GridSpec::new(vec![0.0], vec![2.0], vec![20]).unwrap();
        let nu = Charge::new_truncated(GridField::from_values(grid.clone(), vec![1.0; 20]).unwrap(), Cone::orthant(1, 1).unwrap()).unwrap();
        let k = ConvexBody::cube(1).unwrap();
        let y = [grid.centers(0)[3]];
        for v in [charge_of_window_prefix(&nu, &y, &k, 0.5).unwrap(), charge_of_window_direct(&nu, &y, &k, 0.5).unwrap()] {
            assert!((v - 0.5).abs() < 1e-12, "{v}");
        }
        // every path agrees when faces pass through centers
        let grid = GridSpec::new(vec![0.0, -1.0], vec![1.2, 1.0], vec![12, 20]).unwrap();
        let vals: Vec<f64> = (0..grid.len()).map(|k| ((k * 31) % 7) as f64 - 3.0).collect();
        let nu = Charge::new_truncated(GridField::from_values(grid, vals).unwrap(), Cone::orthant(2, 1).unwrap()).unwrap();
        let half = Cone::halfspaces(2, vec![vec![1.0, 0.0]]).unwrap();
        let twin = Charge::new_truncated(nu.density().clone(), half).unwrap();
        let body = ConvexBody::axis_box(vec![1.0, 2.0]).unwrap();
        let mut a = Vec::new();
        for_each_window_sum(&nu, &body, 0.3, |_, y, v| {
            let direct = charge_of_window_direct(&nu, y, &body, 0.3).unwrap();
            assert!((v - direct).abs() < 1e-12, "{y:?}: {v} vs {direct}");
            a.push(v);
        })
        .unwrap();
        let mut b = Vec::new();
        for_each_window_sum(&twin, &body, 0.3, |_, _, v| b.push(v)).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    use crate::field::grad_sup_polar;

    fn ext(d: usize, m: usize, h: f64, n: usize) -> (ConvexBody, Cone, Charge) {
        let k = ConvexBody::cube(d).unwrap();
        let c = Cone::orthant(d, m).unwrap();
        let nu = extremal_charge(&k, &c, h, n).unwrap();
        (k, c, nu)
    }

    #[test]
    fn one_dimensional_extremal_window() {
        let (k, _, nu) = ext(1, 0, 1.0, 64);
        let v = charge_of_window(&nu, &[0.0], &k, 1.0).unwrap();
        // midpoint rule is exact for a piecewise linear tent with nodes on the grid
        assert!((v - 1.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn zero_charge_has_zero_windows() {
        let grid = GridSpec::cube(2, -1.0, 1.0, 16).unwrap();
        let c = Cone::full(2).unwrap();
        let nu = Charge::zero(grid, c).unwrap();
        let k = ConvexBody::cube(2).unwrap();
        assert_eq!(charge_of_window(&nu, &[0.1, 0.2], &k, 0.5).unwrap(), 0.0);
        let s = seminorm_k(&nu, &k, 1.0, 5, &[]).unwrap();
        assert!(s.zero && s.value == 0.0);
    }

    #[test]
    fn support_assertion() {
        let grid = GridSpec::cube(1, -1.0, 1.0, 16).unwrap();
        let c = Cone::full(1).unwrap();
        let f = GridField::from_fn(grid, Arc::new(|_: &[f64]| 1.0));
        assert!(matches!(Charge::new(f.clone(), c.clone()), Err(LabError::Support(_))));
        assert!(Charge::new_truncated(f, c).unwrap().truncation_warning());
    }

    #[test]
    fn orthant_face_is_not_boundary() {
        let (_, _, nu) = ext(2, 2, 1.0, 32);
        assert!(!nu.truncation_warning());
    }

    #[test]
    fn orthant_axes_must_start_at_zero() {
        let grid = GridSpec::cube(1, -1.0, 1.0, 8).unwrap();
        assert!(Charge::zero(grid, Cone::orthant(1, 1).unwrap()).is_err());
    }

    #[test]
    fn prefix_and_direct_agree() {
        for (d, m) in [(1, 0), (1, 1), (2, 0), (2, 1), (3, 2)] {
            let (k, _, nu) = ext(d, m, 1.0, 20);
            let mut s = 7u64;
            for _ in 0..50 {
                let mut y = vec![0.0; d];
                for (i, yi) in y.iter_mut().enumerate() {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                    let r = (s >> 11) as f64 / (1u64 << 53) as f64;
                    *yi = if i < m { r * 1.2 } else { r * 2.4 - 1.2 };
                }
                let h = 0.1 + ((s >> 20) % 100) as f64 / 60.0;
                let a = charge_of_window_prefix(&nu, &y, &k, h).unwrap();
                let b = charge_of_window_direct(&nu, &y, &k, h).unwrap();
                assert!((a - b).abs() < 1e-10, "{d} {m} {y:?} {h}: {a} {b}");
            }
        }
    }

    #[test]
    fn extremal_triple_small_grid() {
        let (k, c, nu) = ext(2, 1, 0.5, 64);
        assert_eq!(nu.sup_density().value, 0.5);
        let g = grad_sup_polar(nu.density(), &k, &c).unwrap();
        assert!((g.value - 1.0).abs() < 1e-12);
        let w = seminorm_kh(&nu, &k, 0.5).unwrap();
        let exact = 0.5f64.powi(3) / 3.0 * 2.0;
        assert!((w.value / exact - 1.0).abs() < 2e-3, "{}", w.value);
        assert_eq!(w.argmax, vec![0.0, 0.0]);
    }

    #[test]
    fn seminorm_k_plateau_and_tie_break() {
        let (k, _, nu) = ext(1, 0, 1.0, 64);
        let s = seminorm_k(&nu, &k, 3.0, 20, &[]).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        // the discrete plateau starts half a cell inside the support
        assert!(s.h <= 1.0 + 1e-9 && s.h > 0.9, "{}", s.h);
        let t = seminorm_kh(&nu, &k, 0.5).unwrap().value;
        assert!(s.value >= t);
        assert!(seminorm_k(&nu, &k, 0.0, 1, &[]).is_err());
    }

    #[test]
    fn halfspace_cone_uses_direct_path() {
        let k = ConvexBody::cube(2).unwrap();
        let c = Cone::halfspaces(2, vec![vec![1.0, 0.0]]).unwrap();
        let grid = covering_grid(&k, &Cone::full(2).unwrap(), 1.0, 32).unwrap();
        let nu = Charge::new(extremal_density(&k, &c, 1.0, grid).unwrap(), c.clone()).unwrap();
        assert!(!nu.supports_prefix(&k));
        let v = charge_of_window(&nu, &[0.0, 0.0], &k, 1.0).unwrap();
        // half of the full pyramid volume 4/3
        assert!((v - 2.0 / 3.0).abs() < 5e-3, "{v}");
    }

    #[test]
    fn csv_ingest() {
        let grid = GridSpec::cube(1, -1.0, 1.0, 8).unwrap();
        let c = Cone::full(1).unwrap();
        let text = "cell,value\n3,1.5\n4,2.5\n";
        let nu = Charge::from_csv(text.as_bytes(), grid.clone(), c.clone()).unwrap();
        assert!((nu.total() - 4.0 * 0.25).abs() < 1e-15);
        assert!(Charge::from_csv("9,1\n".as_bytes(), grid.clone(), c.clone()).is_err());
        assert!(Charge::from_csv("0,1\n".as_bytes(), grid, c).is_err());
    }
}
