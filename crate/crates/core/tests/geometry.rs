use lkcharge::{layer_cake_integral, volume_body_cone, Cone, ConvexBody, VolumeMethod};
use proptest::prelude::*;

/// Point-in-convex-polygon test on the ordered vertex loop.
fn inside_polygon(verts: &[[f64; 2]], p: [f64; 2]) -> bool {
    (0..verts.len()).all(|i| {
        let a = verts[i];
        let b = verts[(i + 1) % verts.len()];
        (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) > 0.0
    })
}

/// `inf {λ : x ∈ λK}` by bisection on membership.
fn gauge_by_bisection(verts: &[[f64; 2]], x: [f64; 2]) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while !inside_polygon(verts, [x[0] / hi, x[1] / hi]) {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if inside_polygon(verts, [x[0] / mid, x[1] / mid]) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn hexagon_loop() -> Vec<[f64; 2]> {
    (0..6)
        .map(|j| {
            let t = std::f64::consts::PI / 3.0 * j as f64;
            [t.cos(), t.sin()]
        })
        .collect()
}

#[test]
fn hexagon_gauge_matches_bisection() {
    let k = ConvexBody::regular_polygon(6).unwrap();
    let loop_ = hexagon_loop();
    let oracle = gauge_by_bisection(&loop_, [0.9, 0.2]);
    assert!((k.gauge(&[0.9, 0.2]).unwrap() - oracle).abs() < 1e-10);
    for x in [[0.3, -0.7], [-1.2, 0.05], [0.0, 2.0], [1e-3, 4e-3]] {
        let o = gauge_by_bisection(&loop_, x);
        assert!((k.gauge(&x).unwrap() - o).abs() < 1e-10 * o.max(1.0), "{x:?}");
    }
}

#[test]
fn hexagon_polar_norm_is_vertex_max() {
    let k = ConvexBody::regular_polygon(6).unwrap();
    let best = hexagon_loop()
        .iter()
        .map(|v| (0.9 * v[0] + 0.2 * v[1]).abs())
        .fold(0.0, f64::max);
    assert!((k.polar_norm(&[0.9, 0.2]).unwrap() - best).abs() < 1e-15);
}

#[test]
fn box_and_cross_polytope_values() {
    let b = ConvexBody::cube(2).unwrap();
    assert_eq!(b.gauge(&[3.0, -1.0]).unwrap(), 3.0);
    assert_eq!(b.polar_norm(&[3.0, -1.0]).unwrap(), 4.0);
    let c = ConvexBody::cross_polytope(2).unwrap();
    assert!((c.gauge(&[1.0, 1.0]).unwrap() - 2.0).abs() < 1e-14);
    assert_eq!(c.polar_norm(&[0.0, 0.0]).unwrap(), 0.0);
}

#[test]
fn facet_normals_have_polar_norm_equal_to_offset() {
    let bodies = [
        ConvexBody::regular_polygon(6).unwrap(),
        ConvexBody::regular_polygon(8).unwrap(),
        ConvexBody::cross_polytope(3).unwrap(),
        ConvexBody::axis_box(vec![0.5, 2.0, 1.0]).unwrap(),
    ];
    for k in &bodies {
        for f in k.facets().unwrap() {
            assert!((k.polar_norm(&f.normal).unwrap() - f.offset).abs() < 1e-10);
        }
    }
}

#[test]
fn bad_inputs_are_rejected() {
    let k = ConvexBody::cube(2).unwrap();
    assert!(k.gauge(&[f64::NAN, 0.0]).is_err());
    assert!(k.gauge(&[1.0]).is_err());
    assert!(ConvexBody::p_ball(2, 0.5).is_err());
    assert!(ConvexBody::regular_polygon(5).is_err());
    assert!(Cone::orthant(2, 3).is_err());
}

#[test]
fn volumes() {
    let exact = |d, m| volume_body_cone(&ConvexBody::cube(d).unwrap(), &Cone::orthant(d, m).unwrap(), VolumeMethod::Exact);
    assert_eq!(exact(2, 0).unwrap().value, 4.0);
    assert_eq!(exact(3, 1).unwrap().value, 4.0);
    let cross = ConvexBody::cross_polytope(2).unwrap();
    assert!(volume_body_cone(&cross, &Cone::orthant(2, 2).unwrap(), VolumeMethod::Exact).is_err());
    let v = volume_body_cone(&cross, &Cone::orthant(2, 2).unwrap(), VolumeMethod::Grid(512)).unwrap();
    assert!((v.value - 0.5).abs() < 5e-3, "{}", v.value);
    let mc = volume_body_cone(&cross, &Cone::orthant(2, 2).unwrap(), VolumeMethod::MonteCarlo { samples: 200_000, seed: 5 }).unwrap();
    assert!((mc.value - 0.5).abs() < 5.0 * mc.std_error, "{mc:?}");
}

#[test]
fn layer_cake_examples() {
    let v = |d, m, h, n| {
        layer_cake_integral(&ConvexBody::cube(d).unwrap(), &Cone::orthant(d, m).unwrap(), h, VolumeMethod::Grid(n))
            .unwrap()
            .value
    };
    assert!((v(1, 0, 1.0, 256) - 1.0).abs() < 1e-12);
    assert!((v(2, 0, 1.0, 256) / (8.0 / 3.0) - 1.0).abs() < 5e-3);
    assert!((v(2, 1, 2.0, 512) / (32.0 / 3.0) - 1.0).abs() < 5e-3);
}

fn vec_in(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, d)
}

fn body_of(kind: usize) -> ConvexBody {
    match kind {
        0 => ConvexBody::cube(3).unwrap(),
        1 => ConvexBody::cross_polytope(3).unwrap(),
        2 => ConvexBody::p_ball(3, 3.0).unwrap(),
        _ => ConvexBody::axis_box(vec![0.5, 1.5, 1.0]).unwrap(),
    }
}

proptest! {
    #[test]
    fn gauge_and_polar_are_homogeneous(kind in 0usize..4, x in vec_in(3), t in -4.0..4.0f64) {
        let k = body_of(kind);
        let tx: Vec<f64> = x.iter().map(|v| t * v).collect();
        let g = k.gauge(&x).unwrap();
        prop_assert!((k.gauge(&tx).unwrap() - t.abs() * g).abs() <= 1e-12 * (1.0 + t.abs() * g));
        let p = k.polar_norm(&x).unwrap();
        prop_assert!((k.polar_norm(&tx).unwrap() - t.abs() * p).abs() <= 1e-12 * (1.0 + t.abs() * p));
    }

    #[test]
    fn gauge_is_subadditive_and_symmetric(kind in 0usize..4, x in vec_in(3), y in vec_in(3)) {
        let k = body_of(kind);
        let s: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        prop_assert!(k.gauge(&s).unwrap() <= k.gauge(&x).unwrap() + k.gauge(&y).unwrap() + 1e-12);
        prop_assert!((k.gauge(&neg).unwrap() - k.gauge(&x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn duality_bound(kind in 0usize..4, x in vec_in(3), y in vec_in(3)) {
        let k = body_of(kind);
        let dot: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let g = k.gauge(&y).unwrap();
        prop_assert!(dot <= g * k.polar_norm(&x).unwrap() + 1e-12 * (1.0 + g));
    }

    #[test]
    fn cone_is_closed_under_scaling(x in vec_in(3), l in 0.01..100.0f64, m in 0usize..4) {
        let c = Cone::orthant(3, m).unwrap();
        let lx: Vec<f64> = x.iter().map(|v| l * v).collect();
        prop_assert_eq!(c.contains(&x), c.contains(&lx));
    }
}
