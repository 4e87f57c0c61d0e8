use std::sync::Arc;

use lkcharge::mixed::{
    diff_central, diff_forward, mixed_grid, mixed_operator_apply, mixed_operator_norm, MixedFunction, TrigTerm,
};
use lkcharge::steklov::{deviation_sup, steklov_apply, steklov_field, steklov_norm};
use lkcharge::{extremal_charge, Charge, Cone, ConvexBody, GridField, GridSpec, MixedParams, SteklovParams};
use proptest::prelude::*;

#[test]
fn norm_formula_and_homogeneity() {
    let p = SteklovParams::new(ConvexBody::cube(1).unwrap(), Cone::full(1).unwrap(), 1.0).unwrap();
    assert_eq!(steklov_norm(&p), 0.5);
    for d in 1..=3 {
        let q = SteklovParams::new(ConvexBody::cube(d).unwrap(), Cone::orthant(d, 1).unwrap(), 0.7).unwrap();
        let ratio = steklov_norm(&q) / steklov_norm(&q.at_scale(1.4).unwrap());
        assert!((ratio - 2f64.powi(d as i32)).abs() < 1e-12);
    }
}

#[test]
fn extremal_average_at_origin() {
    for (d, m, h) in [(1, 0, 1.0), (2, 1, 0.5), (3, 3, 2.0)] {
        let (k, c) = (ConvexBody::cube(d).unwrap(), Cone::orthant(d, m).unwrap());
        let nu = extremal_charge(&k, &c, h, if d == 3 { 64 } else { 256 }).unwrap();
        let p = SteklovParams::new(k, c, h).unwrap();
        let v = steklov_apply(&nu, &p, &vec![0.0; d]).unwrap();
        assert!((v - h / (d as f64 + 1.0)).abs() < 1e-3, "{d} {m}: {v}");
        let dev = deviation_sup(&nu, &p).unwrap();
        assert!((dev.value - d as f64 * h / (d as f64 + 1.0)).abs() < 1e-3);
        assert_eq!(dev.argmax, vec![0.0; d]);
    }
}

#[test]
fn constant_density_averages_to_itself_inside_support() {
    let grid = GridSpec::cube(2, -2.0, 2.0, 80).unwrap();
    let f = GridField::from_fn(grid, Arc::new(|x: &[f64]| if x[0].abs() < 1.5 && x[1].abs() < 1.5 { 3.0 } else { 0.0 }));
    let nu = Charge::new(f, Cone::full(2).unwrap()).unwrap();
    let p = SteklovParams::new(ConvexBody::regular_polygon(6).unwrap(), Cone::full(2).unwrap(), 0.5).unwrap();
    // hexagon windows carry lattice quadrature error, so compare loosely
    let v = steklov_apply(&nu, &p, &[0.025, 0.025]).unwrap();
    assert!((v - 3.0).abs() < 0.05, "{v}");
    let q = SteklovParams::new(ConvexBody::cube(2).unwrap(), Cone::full(2).unwrap(), 0.5).unwrap();
    assert!((steklov_apply(&nu, &q, &[0.025, 0.025]).unwrap() - 3.0).abs() < 1e-12);
}

#[test]
fn linear_density_has_zero_deviation_at_centered_points() {
    let grid = GridSpec::cube(2, -1.0, 1.0, 80).unwrap();
    let f = GridField::from_fn(grid, Arc::new(|x: &[f64]| x[0]));
    let nu = Charge::new_truncated(f, Cone::full(2).unwrap()).unwrap();
    let p = SteklovParams::new(ConvexBody::cube(2).unwrap(), Cone::full(2).unwrap(), 0.25).unwrap();
    let field = steklov_field(&nu, &p).unwrap();
    let grid = nu.grid();
    grid.for_each_center(|lin, _, x| {
        if x.iter().all(|v| v.abs() < 0.7) {
            assert!((field.values()[lin] - x[0]).abs() < 1e-12);
        }
    });
}

#[test]
fn difference_operators_on_a_lattice() {
    let grid = GridSpec::new(vec![0.0], vec![4.0], vec![16]).unwrap();
    let f = GridField::from_values(grid.clone(), (0..16).map(|k| (k * k) as f64).collect()).unwrap();
    let fwd = diff_forward(&f, 0, 0.5).unwrap();
    let cen = diff_central(&f, 0, 0.5).unwrap();
    // (k+2)^2 - k^2 = 4k + 4 and (k+2)^2 - (k-2)^2 = 8k
    assert_eq!(fwd.values()[0], 4.0);
    assert_eq!(cen.values()[0], 16.0);
    assert!(diff_forward(&f, 0, 0.3).is_err());
}

#[test]
fn mixed_norm_formula_attained_on_alternating_signs() {
    for (d, m) in [(1, 0), (1, 1), (2, 1), (2, 2)] {
        let p = MixedParams::new(d, m, 1.0).unwrap();
        let grid = GridSpec::new(vec![-2.0; d], vec![2.0; d], vec![8; d]).unwrap();
        let x = vec![0.25; d];
        let stencil_sign = move |y: &[f64]| -> f64 {
            // +1 on the "up" nodes of the stencil an even number of times
            (0..y.len()).fold(1.0, |s, i| if y[i] > 0.25 + 0.5 { s } else { -s })
        };
        let f = GridField::from_fn(grid, Arc::new(stencil_sign));
        let v = mixed_operator_apply(&f, &p, &x).unwrap();
        assert!((v.abs() - mixed_operator_norm(&p)).abs() < 1e-12, "{d} {m}: {v}");
    }
}

fn trig(d: usize, omega: f64) -> Vec<TrigTerm> {
    vec![TrigTerm { amplitude: 1.0, omega: vec![omega; d], phase: (0..d).map(|i| 0.3 * i as f64).collect() }]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn steklov_is_linear(a in -3.0..3.0f64, b in -3.0..3.0f64, x in prop::collection::vec(0.0..0.8f64, 2)) {
        let grid = GridSpec::new(vec![0.0, -2.0], vec![2.0, 2.0], vec![40, 80]).unwrap();
        let cone = Cone::orthant(2, 1).unwrap();
        let f = GridField::from_fn(grid.clone(), Arc::new(|x: &[f64]| (x[0] * x[1]).sin()));
        let g = GridField::from_fn(grid, Arc::new(|x: &[f64]| x[0] - x[1] * x[1]));
        let (nf, ng) = (Charge::new_truncated(f, cone.clone()).unwrap(), Charge::new_truncated(g, cone.clone()).unwrap());
        let p = SteklovParams::new(ConvexBody::p_ball(2, 3.0).unwrap(), cone, 0.6).unwrap();
        let lhs = steklov_apply(&nf.linear_combination(a, &ng, b).unwrap(), &p, &x).unwrap();
        let rhs = a * steklov_apply(&nf, &p, &x).unwrap() + b * steklov_apply(&ng, &p, &x).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn mixed_operator_is_linear(a in -3.0..3.0f64, b in -3.0..3.0f64, w in 0.5..3.0f64) {
        let p = MixedParams::new(2, 1, 0.5).unwrap();
        let grid = mixed_grid(&p, 64).unwrap();
        let f = MixedFunction::trig_polynomial(trig(2, w), grid.clone()).unwrap();
        let g = MixedFunction::trig_polynomial(trig(2, 1.7), grid).unwrap();
        let sum = f.field.linear_combination(a, &g.field, b).unwrap();
        let x = [0.1, 0.0];
        let lhs = mixed_operator_apply(&sum, &p, &x).unwrap();
        let rhs = a * mixed_operator_apply(&f.field, &p, &x).unwrap() + b * mixed_operator_apply(&g.field, &p, &x).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }
}
