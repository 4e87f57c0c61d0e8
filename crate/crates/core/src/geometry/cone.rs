use serde::Serialize;

use super::dot;
use crate::error::{check_dim, check_finite, LabError, Result};
use crate::grid::MAX_DIM;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ConeKind {
    /// `R^m_+ × R^{d-m}`: the first `m` coordinates are positive.
    Orthant { m: usize },
    /// `∩ {x : (x, a_i) > 0}` for unit normals `a_i`.
    Halfspace { normals: Vec<Vec<f64>> },
}

/// Open convex cone in `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cone {
    dim: usize,
    kind: ConeKind,
}

impl Cone {
    pub fn orthant(d: usize, m: usize) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return Err(LabError::InvalidCone(format!("dimension {d} outside 1..={MAX_DIM}")));
        }
        if m > d {
            return Err(LabError::InvalidCone(format!("m = {m} exceeds d = {d}")));
        }
        Ok(Self {
            dim: d,
            kind: ConeKind::Orthant { m },
        })
    }

    /// The whole space `R^d`.
    pub fn full(d: usize) -> Result<Self> {
        Self::orthant(d, 0)
    }

    pub fn halfspaces(d: usize, normals: Vec<Vec<f64>>) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return Err(LabError::InvalidCone(format!("dimension {d} outside 1..={MAX_DIM}")));
        }
        let mut unit = Vec::with_capacity(normals.len());
        for a in normals {
            check_dim(d, a.len())?;
            check_finite(&a, "cone normal")?;
            let r = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            if r == 0.0 {
                return Err(LabError::InvalidCone("zero normal".into()));
            }
            unit.push(a.iter().map(|x| x / r).collect());
        }
        Ok(Self {
            dim: d,
            kind: ConeKind::Halfspace { normals: unit },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &ConeKind {
        &self.kind
    }

    /// `Some(m)` for `R^m_+ × R^{d-m}`.
    pub fn orthant_m(&self) -> Option<usize> {
        match self.kind {
            ConeKind::Orthant { m } => Some(m),
            ConeKind::Halfspace { .. } => None,
        }
    }

    /// Strict membership in the open cone.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_margin(x, 0.0)
    }

    /// Membership in the closure.
    pub fn contains_closure(&self, x: &[f64]) -> bool {
        match &self.kind {
            ConeKind::Orthant { m } => x[..*m].iter().all(|v| *v >= 0.0),
            ConeKind::Halfspace { normals } => normals.iter().all(|a| dot(a, x) >= 0.0),
        }
    }

    /// Membership with every defining inequality tightened by `tau`.
    pub(crate) fn contains_margin(&self, x: &[f64], tau: f64) -> bool {
        match &self.kind {
            ConeKind::Orthant { m } => x[..*m].iter().all(|v| *v > tau),
            ConeKind::Halfspace { normals } => normals.iter().all(|a| dot(a, x) > tau),
        }
    }

    /// Quadrature weight of a point relative to the cone: `1` strictly inside,
    /// a factor `1/2` for every inequality it meets within `tau`, `0` outside.
    pub(crate) fn boundary_weight(&self, x: &[f64], tau: f64) -> f64 {
        let mut w = 1.0;
        let mut face = |v: f64| {
            if v <= tau {
                w *= if v >= -tau { 0.5 } else { 0.0 };
            }
        };
        match &self.kind {
            ConeKind::Orthant { m } => x[..*m].iter().for_each(|&v| face(v)),
            ConeKind::Halfspace { normals } => normals.iter().for_each(|a| face(dot(a, x))),
        }
        w
    }

    /// Whether axis `i` is constrained to be positive.
    pub(crate) fn is_orthant_axis(&self, i: usize) -> bool {
        matches!(self.kind, ConeKind::Orthant { m } if i < m)
    }
}
