//! The averaging operator `S_hν(x) = ν(x + hK ∩ C) / (h^d μ(K ∩ C))`.

use serde::Serialize;

use crate::charge::{charge_of_window, for_each_window_sum, window_inside_grid, Charge, SupTracker};
use crate::error::{check_dim, LabError, Result};
use crate::field::GridField;
use crate::geometry::{volume_body_cone, Cone, ConvexBody, VolumeMethod};

#[derive(Clone, Debug)]
pub struct SteklovParams {
    body: ConvexBody,
    cone: Cone,
    h: f64,
    volume: f64,
    method: VolumeMethod,
}

/// Exact for an axis box with an orthant cone, otherwise a midpoint grid
/// sized to the dimension.
pub fn default_volume_method(body: &ConvexBody, cone: &Cone) -> VolumeMethod {
    if body.as_axis_box().is_some() && cone.orthant_m().is_some() {
        return VolumeMethod::Exact;
    }
    match body.dim() {
        1 | 2 => VolumeMethod::Grid(1024),
        3 => VolumeMethod::Grid(160),
        _ => VolumeMethod::Grid(24),
    }
}

impl SteklovParams {
    pub fn new(body: ConvexBody, cone: Cone, h: f64) -> Result<Self> {
        let method = default_volume_method(&body, &cone);
        Self::with_method(body, cone, h, method)
    }

    pub fn with_method(body: ConvexBody, cone: Cone, h: f64, method: VolumeMethod) -> Result<Self> {
        check_dim(body.dim(), cone.dim())?;
        if !(h > 0.0 && h.is_finite()) {
            return Err(LabError::Domain(format!("h must be positive, got {h}")));
        }
        let volume = volume_body_cone(&body, &cone, method)?.value;
        Ok(Self { body, cone, h, volume, method })
    }

    /// Same body and cone at a different scale; the cached volume is reused.
    pub fn at_scale(&self, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(LabError::Domain(format!("h must be positive, got {h}")));
        }
        Ok(Self { h, ..self.clone() })
    }

    pub fn body(&self) -> &ConvexBody {
        &self.body
    }

    pub fn cone(&self) -> &Cone {
        &self.cone
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.body.dim()
    }

    /// Cached `μ(K ∩ C)`.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn volume_method(&self) -> VolumeMethod {
        self.method
    }

    /// `h^d μ(K ∩ C)`.
    pub fn window_volume(&self) -> f64 {
        self.h.powi(self.dim() as i32) * self.volume
    }
}

fn check_pair(nu: &Charge, p: &SteklovParams) -> Result<()> {
    check_dim(p.dim(), nu.dim())?;
    if nu.cone() != p.cone() {
        return Err(LabError::InvalidCone("charge and operator use different cones".into()));
    }
    Ok(())
}

/// `S_hν(x)`.
pub fn steklov_apply(nu: &Charge, p: &SteklovParams, x: &[f64]) -> Result<f64> {
    check_pair(nu, p)?;
    Ok(charge_of_window(nu, x, &p.body, p.h)? / p.window_volume())
}

/// `S_hν` at every cell center in `C`; centers outside `C` hold 0.
pub fn steklov_field(nu: &Charge, p: &SteklovParams) -> Result<GridField> {
    check_pair(nu, p)?;
    let grid = nu.grid().clone();
    let mut values = vec![0.0; grid.len()];
    let wv = p.window_volume();
    for_each_window_sum(nu, &p.body, p.h, |idx, _, v| {
        if let Some(idx) = idx {
            values[grid.linear(idx)] = v / wv;
        }
    })?;
    GridField::from_values(grid, values)
}

/// `‖S_h‖ = 1 / (h^d μ(K ∩ C))`.
pub fn steklov_norm(p: &SteklovParams) -> f64 {
    1.0 / p.window_volume()
}

/// A supremum over translates together with its coverage record.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointSup {
    pub value: f64,
    pub argmax: Vec<f64>,
    pub candidates: usize,
    /// Fraction of candidates whose window lies inside the grid.
    pub coverage: f64,
}

impl PointSup {
    fn from_tracker(t: &SupTracker) -> Self {
        Self {
            value: t.best.max(0.0),
            argmax: t.argmax.clone(),
            candidates: t.count,
            coverage: t.coverage(),
        }
    }
}

/// `sup_C |S_hν|` over θ and the cell centers in `C`.
pub fn steklov_sup(nu: &Charge, p: &SteklovParams) -> Result<PointSup> {
    check_pair(nu, p)?;
    let grid = nu.grid();
    let reach: Vec<f64> = p.body.bbox_half_widths().iter().map(|s| s * p.h).collect();
    let wv = p.window_volume();
    let mut t = SupTracker::new(nu.dim());
    for_each_window_sum(nu, &p.body, p.h, |_, y, v| {
        t.offer((v / wv).abs(), y, window_inside_grid(grid, y, &reach));
    })?;
    Ok(PointSup::from_tracker(&t))
}

/// `sup_C |D_μν - S_hν|` over θ and the cell centers in `C`.
///
/// The density at θ comes from the analytic callback; without one θ is skipped.
pub fn deviation_sup(nu: &Charge, p: &SteklovParams) -> Result<PointSup> {
    check_pair(nu, p)?;
    let grid = nu.grid();
    let vals = nu.density().values();
    let reach: Vec<f64> = p.body.bbox_half_widths().iter().map(|s| s * p.h).collect();
    let wv = p.window_volume();
    let mut t = SupTracker::new(nu.dim());
    for_each_window_sum(nu, &p.body, p.h, |idx, y, v| {
        let f = match idx {
            Some(idx) => vals[grid.linear(idx)],
            None => match nu.density().eval(y) {
                Some(f) => f,
                None => return,
            },
        };
        t.offer((f - v / wv).abs(), y, window_inside_grid(grid, y, &reach));
    })?;
    Ok(PointSup::from_tracker(&t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charge::extremal_charge;

    #[test]
    fn norm_formula() {
        let p = SteklovParams::new(ConvexBody::cube(1).unwrap(), Cone::full(1).unwrap(), 1.0).unwrap();
        assert_eq!(steklov_norm(&p), 0.5);
        let q = p.at_scale(2.0).unwrap();
        assert_eq!(steklov_norm(&q), 0.25);
    }

    #[test]
    fn extremal_average_and_deviation_at_origin() {
        for (d, m) in [(1, 0), (2, 0), (2, 1)] {
            let k = ConvexBody::cube(d).unwrap();
            let c = Cone::orthant(d, m).unwrap();
            let h = 0.5;
            let nu = extremal_charge(&k, &c, h, 128).unwrap();
            let p = SteklovParams::new(k, c, h).unwrap();
            let s = steklov_apply(&nu, &p, &vec![0.0; d]).unwrap();
            let df = d as f64;
            assert!((s - h / (df + 1.0)).abs() < 1e-3, "{d} {m}: {s}");
            let dev = deviation_sup(&nu, &p).unwrap();
            assert!((dev.value - df * h / (df + 1.0)).abs() < 1e-3);
            assert_eq!(dev.argmax, vec![0.0; d]);
        }
    }

    #[test]
    fn constant_density_averages_to_itself() {
        use crate::grid::GridSpec;
        let grid = GridSpec::cube(2, -1.0, 1.0, 40).unwrap();
        let mut vals = vec![0.0; grid.len()];
        grid.for_each_center(|lin, idx, _| {
            if idx.iter().all(|&j| (2..38).contains(&j)) {
                vals[lin] = 2.5;
            }
        });
        let c = Cone::full(2).unwrap();
        let nu = Charge::new(GridField::from_values(grid, vals).unwrap(), c.clone()).unwrap();
        let p = SteklovParams::new(ConvexBody::cube(2).unwrap(), c, 0.25).unwrap();
        // the window at θ covers exactly 10×10 cells
        let s = steklov_apply(&nu, &p, &[0.0, 0.0]).unwrap();
        assert!((s - 2.5).abs() < 1e-12, "{s}");
    }

    #[test]
    fn field_matches_pointwise() {
        let k = ConvexBody::cube(2).unwrap();
        let c = Cone::orthant(2, 1).unwrap();
        let nu = extremal_charge(&k, &c, 1.0, 32).unwrap();
        let p = SteklovParams::new(k, c, 0.7).unwrap();
        let f = steklov_field(&nu, &p).unwrap();
        let grid = nu.grid().clone();
        grid.for_each_center(|lin, _, x| {
            let s = steklov_apply(&nu, &p, x).unwrap();
            assert!((s - f.values()[lin]).abs() < 1e-12);
        });
    }
}
