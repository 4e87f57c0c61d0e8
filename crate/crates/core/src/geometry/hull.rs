//! Brute-force facet and vertex enumeration for small symmetric polytopes.
//!
//! Facet hyperplanes are written as `(w, x) = 1` with `w = n / δ`; this is
//! always possible because the origin is interior.

use nalgebra::{DMatrix, DVector};

use super::dot;
use crate::error::{LabError, Result};

pub(crate) const MAX_ENUM_DIM: usize = 4;
const TOL: f64 = 1e-9;

fn combinations(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn solve(rows: &[&[f64]], rhs: &[f64]) -> Option<Vec<f64>> {
    let d = rows.len();
    let data: Vec<f64> = rows.iter().flat_map(|r| r.iter().cloned()).collect();
    let a = DMatrix::from_row_slice(d, d, &data);
    let scale = data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let lu = a.clone().lu();
    if lu.determinant().abs() <= 1e-12 * scale.powi(d as i32) {
        return None;
    }
    let x = lu.solve(&DVector::from_column_slice(rhs))?;
    let residual = (&a * &x - DVector::from_column_slice(rhs)).amax();
    if !x.iter().all(|v| v.is_finite()) || residual > 1e-9 {
        return None;
    }
    Some(x.iter().cloned().collect())
}

fn push_unique(list: &mut Vec<Vec<f64>>, v: Vec<f64>) {
    let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let dup = list.iter().any(|u| {
        u.iter()
            .zip(&v)
            .all(|(a, b)| (a - b).abs() <= TOL * scale)
    });
    if !dup {
        list.push(v);
    }
}

/// Returns `(vertices, scaled facet normals w)` of the convex hull of `points`.
pub(crate) fn hull_from_points(points: &[Vec<f64>], d: usize) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    if d > MAX_ENUM_DIM {
        return Err(LabError::Unsupported(format!(
            "convex hull completion only for d <= {MAX_ENUM_DIM}"
        )));
    }
    let mut pts: Vec<Vec<f64>> = Vec::new();
    for p in points {
        push_unique(&mut pts, p.clone());
    }
    let mut facets: Vec<Vec<f64>> = Vec::new();
    let ones = vec![1.0; d];
    combinations(pts.len(), d, |c| {
        let rows: Vec<&[f64]> = c.iter().map(|&i| pts[i].as_slice()).collect();
        if let Some(w) = solve(&rows, &ones) {
            if pts.iter().all(|p| dot(&w, p) <= 1.0 + TOL) {
                push_unique(&mut facets, w);
            }
        }
    });
    if facets.len() < d + 1 {
        return Err(LabError::InvalidBody(
            "points do not span a full-dimensional body around the origin".into(),
        ));
    }
    let vertices: Vec<Vec<f64>> = pts
        .into_iter()
        .filter(|p| {
            facets
                .iter()
                .filter(|w| (dot(w, p) - 1.0).abs() <= TOL)
                .count()
                >= d
        })
        .collect();
    Ok((vertices, facets))
}

/// Returns the vertices of `{x : (w_j, x) <= 1 for all j}`.
pub(crate) fn vertices_from_facets(ws: &[Vec<f64>], d: usize) -> Result<Vec<Vec<f64>>> {
    if d > MAX_ENUM_DIM {
        return Err(LabError::Unsupported(format!(
            "vertex enumeration only for d <= {MAX_ENUM_DIM}"
        )));
    }
    let mut vertices = Vec::new();
    let ones = vec![1.0; d];
    combinations(ws.len(), d, |c| {
        let rows: Vec<&[f64]> = c.iter().map(|&i| ws[i].as_slice()).collect();
        if let Some(x) = solve(&rows, &ones) {
            if ws.iter().all(|w| dot(w, &x) <= 1.0 + TOL) {
                push_unique(&mut vertices, x);
            }
        }
    });
    if vertices.len() < d + 1 {
        return Err(LabError::InvalidBody(
            "facets do not bound a full-dimensional polytope".into(),
        ));
    }
    Ok(vertices)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_count() {
        let mut n = 0;
        combinations(6, 3, |_| n += 1);
        assert_eq!(n, 20);
    }

    #[test]
    fn square_hull_drops_interior_and_edge_points() {
        let pts = vec![
            vec![1.0, 1.0],
            vec![-1.0, 1.0],
            vec![1.0, -1.0],
            vec![-1.0, -1.0],
            vec![0.0, 1.0],
            vec![0.2, 0.1],
        ];
        let (v, f) = hull_from_points(&pts, 2).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(f.len(), 4);
    }

    #[test]
    fn cube_vertices_from_facets() {
        let mut ws = Vec::new();
        for i in 0..3 {
            for s in [1.0, -1.0] {
                let mut w = vec![0.0; 3];
                w[i] = s;
                ws.push(w);
            }
        }
        assert_eq!(vertices_from_facets(&ws, 3).unwrap().len(), 8);
    }
}
