//! Fixtures shared by the integration tests.

#![allow(dead_code)]

use lkcharge::families::{Density, Term};
use lkcharge::{Charge, Cone, ConvexBody};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `μ((-1,1)^d ∩ (R^m_+ × R^{d-m}))` counted cell by cell: `2^d` unit
/// cubes, of which a fraction `2^-m` lie in the orthant.
pub fn cube_orthant_volume(d: usize, m: usize) -> f64 {
    let cubes = (0..d).fold(1.0, |acc, _| acc * 2.0);
    let kept = (0..m).fold(1.0, |acc, _| acc * 0.5);
    cubes * kept
}

/// One randomly drawn charge of the suite.
#[derive(Clone, Debug)]
pub struct SuiteCase {
    pub label: String,
    pub d: usize,
    pub m: usize,
    pub body: ConvexBody,
    pub cone: Cone,
    pub density: Density,
    pub h: f64,
    pub n: usize,
}

impl SuiteCase {
    pub fn charge(&self) -> Charge {
        let grid = self.density.covering_grid(self.m, self.n).expect("covering grid");
        Charge::new(self.density.field(grid).expect("field"), self.cone.clone()).expect("charge")
    }
}

fn random_term<R: Rng>(rng: &mut R, d: usize, m: usize) -> Term {
    let mut center: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect();
    for c in center.iter_mut().take(m) {
        *c = c.abs();
    }
    let amplitude = rng.gen_range(0.2..1.5) * if rng.gen_bool(0.3) { -1.0 } else { 1.0 };
    match rng.gen_range(0..3) {
        0 => Term::Gaussian {
            center,
            sigma: rng.gen_range(0.08..0.2),
            amplitude,
        },
        1 => Term::Poly {
            center,
            radius: rng.gen_range(0.3..0.9),
            power: rng.gen_range(2..5),
            amplitude,
        },
        _ => Term::Sin {
            origin: center.iter().map(|c| c - 0.4).collect(),
            length: 0.8,
            k: rng.gen_range(1..4),
            amplitude,
        },
    }
}

/// 100 charges: mostly `d ≤ 2`, a tail in `d = 3`, over boxes, the
/// cross-polytope, a hexagon and a 3-ball, with orthant cones.
pub fn suite_cases() -> Vec<SuiteCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    (0..100)
        .map(|k| {
            let d = if k >= 90 { 3 } else { 1 + k % 2 };
            let m = rng.gen_range(0..=d);
            let (body, kind) = match (d, k % 5) {
                (2, 1) => (ConvexBody::regular_polygon(6).unwrap(), "hexagon"),
                (2, 3) => (ConvexBody::cross_polytope(2).unwrap(), "cross"),
                (2, 4) => (ConvexBody::p_ball(2, 3.0).unwrap(), "pball3"),
                _ => {
                    let half: Vec<f64> = (0..d).map(|_| rng.gen_range(0.5..1.5)).collect();
                    (ConvexBody::axis_box(half).unwrap(), "box")
                }
            };
            let terms = (0..rng.gen_range(1..=3)).map(|_| random_term(&mut rng, d, m)).collect();
            let density = Density::new(terms).unwrap();
            let n = match (d, kind) {
                (1, _) => 256,
                (2, "box") => 96,
                (2, _) => 64,
                _ => 24,
            };
            SuiteCase {
                label: format!("suite-{k:03}-d{d}-m{m}-{kind}"),
                d,
                m,
                cone: Cone::orthant(d, m).unwrap(),
                body,
                density,
                h: rng.gen_range(0.15..0.8),
                n,
            }
        })
        .collect()
}
