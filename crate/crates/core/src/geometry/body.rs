use serde::Serialize;

use super::dot;
use super::hull;
use crate::error::{check_dim, check_finite, LabError, Result};
use crate::grid::MAX_DIM;

const SYMMETRY_TOL: f64 = 1e-12;
const INCIDENCE_TOL: f64 = 1e-9;

/// Supporting half-space `(normal, x) <= offset` with a unit outward normal.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Facet {
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum BodyShape {
    Polytope {
        vertices: Vec<Vec<f64>>,
        facets: Vec<Facet>,
    },
    /// Unit ball of the p-norm; `p = f64::INFINITY` is the cube.
    PBall { p: f64 },
}

/// Open bounded convex body, symmetric about the origin, with the origin interior.
#[derive(Clone, Debug, Serialize)]
pub struct ConvexBody {
    dim: usize,
    shape: BodyShape,
    #[serde(skip)]
    scaled_normals: Vec<Vec<f64>>,
    #[serde(skip)]
    bbox_half: Vec<f64>,
    #[serde(skip)]
    axis_box: Option<Vec<f64>>,
}

impl PartialEq for ConvexBody {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.shape == other.shape
    }
}

fn check_body_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        Err(LabError::InvalidBody(format!("dimension {d} outside 1..={MAX_DIM}")))
    } else {
        Ok(())
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sign_vectors(d: usize) -> impl Iterator<Item = Vec<f64>> {
    (0..1usize << d).map(move |mask| {
        (0..d)
            .map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 })
            .collect()
    })
}

impl ConvexBody {
    /// The cube `(-1, 1)^d`.
    pub fn cube(d: usize) -> Result<Self> {
        Self::axis_box(vec![1.0; d])
    }

    /// The box `prod (-s_i, s_i)`.
    pub fn axis_box(half_widths: Vec<f64>) -> Result<Self> {
        let d = half_widths.len();
        check_body_dim(d)?;
        check_finite(&half_widths, "box half-widths")?;
        if half_widths.iter().any(|s| *s <= 0.0) {
            return Err(LabError::InvalidBody("box half-widths must be positive".into()));
        }
        let vertices = sign_vectors(d)
            .map(|s| s.iter().zip(&half_widths).map(|(a, b)| a * b).collect())
            .collect();
        let mut facets = Vec::with_capacity(2 * d);
        for (i, &s) in half_widths.iter().enumerate() {
            for sign in [1.0, -1.0] {
                let mut normal = vec![0.0; d];
                normal[i] = sign;
                facets.push(Facet { normal, offset: s });
            }
        }
        Self::from_parts(vertices, facets)
    }

    /// The cross-polytope `conv{±e_i}` (unit ball of the l1 norm).
    pub fn cross_polytope(d: usize) -> Result<Self> {
        check_body_dim(d)?;
        let mut vertices = Vec::with_capacity(2 * d);
        for i in 0..d {
            for sign in [1.0, -1.0] {
                let mut v = vec![0.0; d];
                v[i] = sign;
                vertices.push(v);
            }
        }
        let r = (d as f64).sqrt();
        let facets = sign_vectors(d)
            .map(|s| Facet {
                normal: s.iter().map(|x| x / r).collect(),
                offset: 1.0 / r,
            })
            .collect();
        Self::from_parts(vertices, facets)
    }

    /// Regular polygon with an even number of vertices on the unit circle,
    /// the first one at `(1, 0)`.
    pub fn regular_polygon(k: usize) -> Result<Self> {
        if k < 4 || k % 2 == 1 {
            return Err(LabError::InvalidBody(format!(
                "a centrally symmetric polygon needs an even vertex count >= 4, got {k}"
            )));
        }
        let step = std::f64::consts::TAU / k as f64;
        let vertices = (0..k)
            .map(|j| {
                let t = step * j as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let offset = (step / 2.0).cos();
        let facets = (0..k)
            .map(|j| {
                let t = step * (j as f64 + 0.5);
                Facet {
                    normal: vec![t.cos(), t.sin()],
                    offset,
                }
            })
            .collect();
        Self::from_parts(vertices, facets)
    }

    pub fn p_ball(d: usize, p: f64) -> Result<Self> {
        check_body_dim(d)?;
        if !(p >= 1.0) {
            return Err(LabError::InvalidBody(format!("p must lie in [1, inf], got {p}")));
        }
        Ok(Self {
            dim: d,
            shape: BodyShape::PBall { p },
            scaled_normals: Vec::new(),
            bbox_half: vec![1.0; d],
            axis_box: if p.is_infinite() { Some(vec![1.0; d]) } else { None },
        })
    }

    /// Convex hull of `points` (extra interior points are dropped). `d <= 4`.
    pub fn from_vertices(points: Vec<Vec<f64>>) -> Result<Self> {
        let d = points.first().map(|p| p.len()).unwrap_or(0);
        check_body_dim(d)?;
        for p in &points {
            check_dim(d, p.len())?;
            check_finite(p, "vertex")?;
        }
        let (vertices, ws) = hull::hull_from_points(&points, d)?;
        let facets = ws
            .into_iter()
            .map(|w| {
                let r = norm2(&w);
                Facet {
                    normal: w.iter().map(|x| x / r).collect(),
                    offset: 1.0 / r,
                }
            })
            .collect();
        Self::from_parts(vertices, facets)
    }

    /// Polytope `{x : (n_j, x) < δ_j}`; normals are normalized. `d <= 4`.
    pub fn from_facets(facets: Vec<Facet>) -> Result<Self> {
        let d = facets.first().map(|f| f.normal.len()).unwrap_or(0);
        check_body_dim(d)?;
        let mut unit = Vec::with_capacity(facets.len());
        for f in facets {
            check_dim(d, f.normal.len())?;
            check_finite(&f.normal, "facet normal")?;
            let r = norm2(&f.normal);
            if r == 0.0 || !(f.offset > 0.0) || !f.offset.is_finite() {
                return Err(LabError::InvalidBody(
                    "facets need a nonzero normal and a positive offset".into(),
                ));
            }
            unit.push(Facet {
                normal: f.normal.iter().map(|x| x / r).collect(),
                offset: f.offset / r,
            });
        }
        let ws: Vec<Vec<f64>> = unit
            .iter()
            .map(|f| f.normal.iter().map(|x| x / f.offset).collect())
            .collect();
        let vertices = hull::vertices_from_facets(&ws, d)?;
        Self::from_parts(vertices, unit)
    }

    /// Polytope from both representations; checks symmetry and incidence.
    pub fn from_parts(vertices: Vec<Vec<f64>>, facets: Vec<Facet>) -> Result<Self> {
        let d = vertices.first().map(|v| v.len()).unwrap_or(0);
        check_body_dim(d)?;
        if facets.is_empty() {
            return Err(LabError::InvalidBody("polytope without facets".into()));
        }
        for v in &vertices {
            check_dim(d, v.len())?;
            check_finite(v, "vertex")?;
        }
        for f in &facets {
            check_dim(d, f.normal.len())?;
            check_finite(&f.normal, "facet normal")?;
            if !(f.offset > 0.0) {
                return Err(LabError::InvalidBody(
                    "every facet offset must be positive (origin interior)".into(),
                ));
            }
            if (norm2(&f.normal) - 1.0).abs() > 1e-12 {
                return Err(LabError::InvalidBody("facet normals must be unit vectors".into()));
            }
        }
        let scale = vertices
            .iter()
            .flatten()
            .fold(1.0f64, |m, x| m.max(x.abs()));
        for v in &vertices {
            let found = vertices
                .iter()
                .any(|u| u.iter().zip(v).all(|(a, b)| (a + b).abs() <= SYMMETRY_TOL * scale));
            if !found {
                return Err(LabError::InvalidBody(format!("vertex {v:?} has no mirror image")));
            }
        }
        for f in &facets {
            let found = facets.iter().any(|g| {
                (g.offset - f.offset).abs() <= SYMMETRY_TOL * scale
                    && g.normal.iter().zip(&f.normal).all(|(a, b)| (a + b).abs() <= SYMMETRY_TOL)
            });
            if !found {
                return Err(LabError::InvalidBody(format!(
                    "facet {:?} has no mirror image",
                    f.normal
                )));
            }
        }
        for v in &vertices {
            let mut tight = 0;
            for f in &facets {
                let s = dot(&f.normal, v);
                if s > f.offset + INCIDENCE_TOL * scale {
                    return Err(LabError::InvalidBody(format!(
                        "vertex {v:?} violates facet {:?}",
                        f.normal
                    )));
                }
                if (s - f.offset).abs() <= INCIDENCE_TOL * scale {
                    tight += 1;
                }
            }
            if tight < d {
                return Err(LabError::InvalidBody(format!(
                    "vertex {v:?} lies on only {tight} facets"
                )));
            }
        }
        let scaled_normals = facets
            .iter()
            .map(|f| f.normal.iter().map(|x| x / f.offset).collect())
            .collect();
        let bbox_half = (0..d)
            .map(|i| vertices.iter().fold(0.0f64, |m, v| m.max(v[i].abs())))
            .collect();
        let axis_box = detect_axis_box(d, &facets);
        Ok(Self {
            dim: d,
            shape: BodyShape::Polytope { vertices, facets },
            scaled_normals,
            bbox_half,
            axis_box,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &BodyShape {
        &self.shape
    }

    /// Half-widths of the axis-aligned bounding box.
    pub fn bbox_half_widths(&self) -> &[f64] {
        &self.bbox_half
    }

    /// Half-widths if the body is an axis-aligned box.
    pub fn as_axis_box(&self) -> Option<&[f64]> {
        self.axis_box.as_deref()
    }

    pub fn vertices(&self) -> Option<&[Vec<f64>]> {
        match &self.shape {
            BodyShape::Polytope { vertices, .. } => Some(vertices),
            BodyShape::PBall { .. } => None,
        }
    }

    pub fn facets(&self) -> Option<&[Facet]> {
        match &self.shape {
            BodyShape::Polytope { facets, .. } => Some(facets),
            BodyShape::PBall { .. } => None,
        }
    }

    /// `|x|_K = inf{λ > 0 : x ∈ λK}`.
    pub fn gauge(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        check_finite(x, "gauge argument")?;
        Ok(self.gauge_unchecked(x))
    }

    /// `|x|_{K°} = sup_{y ∈ K} (x, y)`.
    pub fn polar_norm(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        check_finite(x, "polar norm argument")?;
        Ok(self.polar_norm_unchecked(x))
    }

    pub(crate) fn gauge_unchecked(&self, x: &[f64]) -> f64 {
        if let Some(s) = &self.axis_box {
            return x.iter().zip(s).fold(0.0, |m, (v, w)| m.max(v.abs() / w));
        }
        match &self.shape {
            BodyShape::Polytope { .. } => self
                .scaled_normals
                .iter()
                .map(|w| dot(w, x))
                .fold(0.0, f64::max),
            BodyShape::PBall { p } => p_norm(x, *p),
        }
    }

    /// Quadrature weight of `x` relative to `hK`: `1` when `|x|_K < h(1 - eps)`,
    /// `0` when `|x|_K > h(1 + eps)`, and otherwise `1/2` for every facet
    /// (every box axis) that `x` lies on.
    pub(crate) fn boundary_weight(&self, x: &[f64], h: f64, eps: f64) -> f64 {
        let g = self.gauge_unchecked(x);
        if g < h * (1.0 - eps) {
            return 1.0;
        }
        if g > h * (1.0 + eps) {
            return 0.0;
        }
        let on = h * (1.0 - eps);
        let faces = if let Some(s) = &self.axis_box {
            x.iter().zip(s).filter(|(v, w)| v.abs() / *w >= on).count()
        } else {
            match &self.shape {
                BodyShape::Polytope { .. } => self.scaled_normals.iter().filter(|w| dot(w, x) >= on).count(),
                BodyShape::PBall { .. } => 1,
            }
        };
        0.5f64.powi(faces as i32)
    }

    pub(crate) fn polar_norm_unchecked(&self, x: &[f64]) -> f64 {
        if let Some(s) = &self.axis_box {
            return x.iter().zip(s).map(|(v, w)| v.abs() * w).sum();
        }
        match &self.shape {
            BodyShape::Polytope { vertices, .. } => vertices
                .iter()
                .map(|v| dot(v, x).abs())
                .fold(0.0, f64::max),
            BodyShape::PBall { p } => p_norm(x, conjugate_exponent(*p)),
        }
    }

    /// A gradient (a subgradient on the measure-zero kink set) of the gauge at `x`.
    ///
    /// On a polytope the gauge is linear on each cone over a facet, where the
    /// gradient is `n / δ`; its polar norm is 1.
    pub fn gauge_gradient(&self, x: &[f64], out: &mut [f64]) {
        if let Some(s) = &self.axis_box {
            let mut best = 0;
            let mut best_v = f64::NEG_INFINITY;
            for (i, (v, w)) in x.iter().zip(s).enumerate() {
                if v.abs() / w > best_v {
                    best_v = v.abs() / w;
                    best = i;
                }
            }
            out.iter_mut().for_each(|o| *o = 0.0);
            out[best] = x[best].signum() / s[best];
            return;
        }
        match &self.shape {
            BodyShape::Polytope { .. } => {
                let mut best = 0;
                let mut best_v = f64::NEG_INFINITY;
                for (j, w) in self.scaled_normals.iter().enumerate() {
                    let v = dot(w, x);
                    if v > best_v {
                        best_v = v;
                        best = j;
                    }
                }
                out.copy_from_slice(&self.scaled_normals[best]);
            }
            BodyShape::PBall { p } => p_norm_gradient(x, *p, out),
        }
    }
}

fn detect_axis_box(d: usize, facets: &[Facet]) -> Option<Vec<f64>> {
    if facets.len() != 2 * d {
        return None;
    }
    let mut half = vec![f64::NAN; d];
    for f in facets {
        let nz: Vec<usize> = (0..d).filter(|&i| f.normal[i] != 0.0).collect();
        if nz.len() != 1 || f.normal[nz[0]].abs() != 1.0 {
            return None;
        }
        let i = nz[0];
        if half[i].is_nan() {
            half[i] = f.offset;
        } else if half[i] != f.offset {
            return None;
        }
    }
    if half.iter().any(|h| h.is_nan()) {
        None
    } else {
        Some(half)
    }
}

fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn p_norm(x: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        x.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else if p == 1.0 {
        x.iter().map(|v| v.abs()).sum()
    } else if p == 2.0 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    } else {
        let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if m == 0.0 {
            return 0.0;
        }
        m * x.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn p_norm_gradient(x: &[f64], p: f64, out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    let n = p_norm(x, p);
    if n == 0.0 {
        out[0] = 1.0;
        return;
    }
    if p.is_infinite() {
        let (k, _) = x
            .iter()
            .enumerate()
            .fold((0, -1.0), |b, (i, v)| if v.abs() > b.1 { (i, v.abs()) } else { b });
        out[k] = x[k].signum();
    } else if p == 1.0 {
        for (o, v) in out.iter_mut().zip(x) {
            *o = if *v == 0.0 { 0.0 } else { v.signum() };
        }
    } else {
        for (o, v) in out.iter_mut().zip(x) {
            *o = v.signum() * (v.abs() / n).powf(p - 1.0);
        }
    }
}
