//! Serializable descriptions of bodies and cones.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::{Cone, ConvexBody};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BodySpec {
    /// `(-1,1)^d`, or an axis box with the given half widths.
    Box {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        half_widths: Option<Vec<f64>>,
    },
    CrossPolytope,
    /// Regular polygon with unit circumradius (`d = 2`, even number of sides).
    Polygon { sides: usize },
    /// Unit `p`-ball; `p = inf` gives the cube.
    Pball { p: f64 },
    /// Convex hull of the listed points (`d ≤ 4`), which must be centrally symmetric.
    Polytope { vertices: Vec<Vec<f64>> },
}

impl Default for BodySpec {
    fn default() -> Self {
        BodySpec::Box { half_widths: None }
    }
}

impl BodySpec {
    pub fn build(&self, d: usize) -> Result<ConvexBody> {
        let body = match self {
            BodySpec::Box { half_widths: None } => ConvexBody::cube(d)?,
            BodySpec::Box { half_widths: Some(w) } => ConvexBody::axis_box(w.clone())?,
            BodySpec::CrossPolytope => ConvexBody::cross_polytope(d)?,
            BodySpec::Polygon { sides } => ConvexBody::regular_polygon(*sides)?,
            BodySpec::Pball { p } => ConvexBody::p_ball(d, *p)?,
            BodySpec::Polytope { vertices } => ConvexBody::from_vertices(vertices.clone())?,
        };
        if body.dim() != d {
            return Err(LabError::DimensionMismatch { expected: d, got: body.dim() });
        }
        Ok(body)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConeSpec {
    /// `R^m_+ × R^{d-m}`.
    Orthant { m: usize },
    /// `∩ {x : (x, a_i) > 0}`.
    Halfspace { normals: Vec<Vec<f64>> },
}

impl Default for ConeSpec {
    fn default() -> Self {
        ConeSpec::Orthant { m: 0 }
    }
}

impl ConeSpec {
    pub fn build(&self, d: usize) -> Result<Cone> {
        match self {
            ConeSpec::Orthant { m } => Cone::orthant(d, *m),
            ConeSpec::Halfspace { normals } => Cone::halfspaces(d, normals.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Deserialize)]
    struct Wrap {
        body: BodySpec,
        cone: ConeSpec,
    }

    #[test]
    fn parses_and_builds() {
        let w: Wrap = serde_json::from_str(
            r#"{"body": {"kind": "polytope", "vertices": [[1,0],[-1,0],[0,1],[0,-1]]},
                "cone": {"kind": "orthant", "m": 1}}"#,
        )
        .unwrap();
        let k = w.body.build(2).unwrap();
        assert!((k.gauge(&[1.0, 1.0]).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(w.cone.build(2).unwrap().orthant_m(), Some(1));
        assert!(w.body.build(3).is_err());
    }

    #[test]
    fn rejects_unknown_fields() {
        assert!(serde_json::from_str::<BodySpec>(r#"{"kind": "pball", "p": 2, "q": 1}"#).is_err());
    }
}
