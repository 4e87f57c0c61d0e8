use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Cone, ConvexBody};
use crate::error::{check_dim, LabError, Result};
use crate::grid::GridSpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum VolumeMethod {
    /// Closed form; only for an axis-aligned box against an orthant-product cone.
    Exact,
    /// Cell-center inclusion on an `n^d` grid over the body's bounding box.
    Grid(usize),
    /// Uniform sampling in the bounding box.
    MonteCarlo { samples: usize, seed: u64 },
}

/// A numerical value with its standard error (zero for deterministic methods).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
        }
    }
}

fn check_pair(body: &ConvexBody, cone: &Cone) -> Result<()> {
    check_dim(body.dim(), cone.dim())
}

fn exact_box_orthant(body: &ConvexBody, cone: &Cone) -> Result<f64> {
    match (body.as_axis_box(), cone.orthant_m()) {
        (Some(half), Some(m)) => {
            let full: f64 = half.iter().map(|s| 2.0 * s).product();
            Ok(full / 2f64.powi(m as i32))
        }
        _ => Err(LabError::Unsupported(
            "exact volume is only available for an axis-aligned box and an orthant-product cone"
                .into(),
        )),
    }
}

/// Sums `weight(u)` over grid cells whose centers lie in `hK ∩ C`, times the cell volume.
fn grid_integral<F>(body: &ConvexBody, cone: &Cone, h: f64, n: usize, weight: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let half: Vec<f64> = body.bbox_half_widths().iter().map(|s| s * h).collect();
    let lo: Vec<f64> = half.iter().map(|s| -s).collect();
    let grid = GridSpec::new(lo, half, vec![n; body.dim()])?;
    let d = body.dim();
    let last = grid.resolution()[d - 1];
    let mut total = 0.0;
    let mut row = 0.0;
    grid.for_each_center(|_, idx, x| {
        let g = body.gauge_unchecked(x);
        if g < h && cone.contains(x) {
            row += weight(g);
        }
        if idx[d - 1] + 1 == last {
            total += row;
            row = 0.0;
        }
    });
    Ok(total * grid.cell_volume())
}

/// Uniform sampling of `weight(u)·1[u ∈ hK ∩ C]` over the bounding box of `hK`.
fn monte_carlo_integral<F>(
    body: &ConvexBody,
    cone: &Cone,
    h: f64,
    samples: usize,
    seed: u64,
    weight: F,
) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    if samples < 2 {
        return Err(LabError::Domain("Monte Carlo needs at least 2 samples".into()));
    }
    let d = body.dim();
    let half: Vec<f64> = body.bbox_half_widths().iter().map(|s| s * h).collect();
    let box_volume: f64 = half.iter().map(|s| 2.0 * s).product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; d];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        for (xi, s) in x.iter_mut().zip(&half) {
            *xi = rng.gen_range(-*s..*s);
        }
        let g = body.gauge_unchecked(&x);
        if g < h && cone.contains(&x) {
            let w = weight(g);
            sum += w;
            sum_sq += w * w;
        }
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(Estimate {
        value: box_volume * mean,
        std_error: box_volume * (var / n).sqrt(),
    })
}

/// `μ(K ∩ C)`.
pub fn volume_body_cone(body: &ConvexBody, cone: &Cone, method: VolumeMethod) -> Result<Estimate> {
    check_pair(body, cone)?;
    let est = match method {
        VolumeMethod::Exact => Estimate::exact(exact_box_orthant(body, cone)?),
        VolumeMethod::Grid(n) => Estimate::exact(grid_integral(body, cone, 1.0, n, |_| 1.0)?),
        VolumeMethod::MonteCarlo { samples, seed } => {
            monte_carlo_integral(body, cone, 1.0, samples, seed, |_| 1.0)?
        }
    };
    if est.value <= 0.0 {
        return Err(LabError::Degenerate(
            "K ∩ C has zero volume (degenerate cone?)".into(),
        ));
    }
    Ok(est)
}

/// `μ(hK ∩ C) = h^d μ(K ∩ C)`; the scaling is applied, not re-integrated.
pub fn scaled_volume(body: &ConvexBody, cone: &Cone, h: f64, method: VolumeMethod) -> Result<Estimate> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(LabError::Domain(format!("scale h must be positive, got {h}")));
    }
    let base = volume_body_cone(body, cone, method)?;
    let s = h.powi(body.dim() as i32);
    Ok(Estimate {
        value: base.value * s,
        std_error: base.std_error * s,
    })
}

/// Numerical value of `∫_{hK ∩ C} |u|_K dμ(u)`.
pub fn layer_cake_integral(
    body: &ConvexBody,
    cone: &Cone,
    h: f64,
    method: VolumeMethod,
) -> Result<Estimate> {
    check_pair(body, cone)?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(LabError::Domain(format!("scale h must be positive, got {h}")));
    }
    let est = match method {
        VolumeMethod::Exact => {
            let vol = exact_box_orthant(body, cone)?;
            Estimate::exact(layer_cake_closed_form(body.dim(), h, vol))
        }
        VolumeMethod::Grid(n) => Estimate::exact(grid_integral(body, cone, h, n, |g| g)?),
        VolumeMethod::MonteCarlo { samples, seed } => {
            monte_carlo_integral(body, cone, h, samples, seed, |g| g)?
        }
    };
    if est.value <= 0.0 {
        return Err(LabError::Degenerate(
            "K ∩ C has zero volume (degenerate cone?)".into(),
        ));
    }
    Ok(est)
}

/// `d h^{d+1} / (d+1) · μ(K ∩ C)`.
pub fn layer_cake_closed_form(d: usize, h: f64, volume: f64) -> f64 {
    let d = d as f64;
    d * h.powf(d + 1.0) / (d + 1.0) * volume
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_box_volumes() {
        let v = volume_body_cone(&ConvexBody::cube(2).unwrap(), &Cone::full(2).unwrap(), VolumeMethod::Exact)
            .unwrap();
        assert_eq!(v.value, 4.0);
        let v = volume_body_cone(
            &ConvexBody::cube(3).unwrap(),
            &Cone::orthant(3, 1).unwrap(),
            VolumeMethod::Exact,
        )
        .unwrap();
        assert_eq!(v.value, 4.0);
    }

    #[test]
    fn exact_rejects_unsupported_pairs() {
        let r = volume_body_cone(
            &ConvexBody::cross_polytope(2).unwrap(),
            &Cone::full(2).unwrap(),
            VolumeMethod::Exact,
        );
        assert!(matches!(r, Err(LabError::Unsupported(_))));
    }

    #[test]
    fn degenerate_cone_is_an_error() {
        let c = Cone::halfspaces(2, vec![vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        let r = volume_body_cone(&ConvexBody::cube(2).unwrap(), &c, VolumeMethod::Grid(64));
        assert!(matches!(r, Err(LabError::Degenerate(_))));
    }

    #[test]
    fn cross_polytope_quadrant_grid() {
        let v = volume_body_cone(
            &ConvexBody::cross_polytope(2).unwrap(),
            &Cone::orthant(2, 2).unwrap(),
            VolumeMethod::Grid(512),
        )
        .unwrap();
        assert!((v.value - 0.5).abs() < 5e-3, "{}", v.value);
    }

    #[test]
    fn monte_carlo_is_seeded_and_within_error() {
        let k = ConvexBody::p_ball(2, 2.0).unwrap();
        let c = Cone::full(2).unwrap();
        let m = VolumeMethod::MonteCarlo {
            samples: 200_000,
            seed: 9,
        };
        let a = volume_body_cone(&k, &c, m).unwrap();
        let b = volume_body_cone(&k, &c, m).unwrap();
        assert_eq!(a, b);
        assert!((a.value - std::f64::consts::PI).abs() < 5.0 * a.std_error);
    }

    #[test]
    fn layer_cake_one_dimensional() {
        let k = ConvexBody::cube(1).unwrap();
        let c = Cone::full(1).unwrap();
        let g = layer_cake_integral(&k, &c, 1.0, VolumeMethod::Grid(256)).unwrap();
        assert!((g.value - 1.0).abs() < 1e-12);
        assert!((layer_cake_closed_form(1, 1.0, 2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_scale_rejected() {
        let k = ConvexBody::cube(1).unwrap();
        let c = Cone::full(1).unwrap();
        assert!(layer_cake_integral(&k, &c, 0.0, VolumeMethod::Exact).is_err());
    }
}
