#![allow(dead_code)]

use fairpia_core::{BSplineCurve, BSplineSurface, ControlPoints, Geometry, KnotVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Clamped knots on `[0, 1]` with random interior knots, occasionally
/// repeated up to multiplicity `degree - 1`.
pub fn random_knots(rng: &mut impl Rng, n: usize, degree: usize) -> KnotVector {
    let count = n - degree - 1;
    let mut interior: Vec<f64> = Vec::with_capacity(count);
    while interior.len() < count {
        let t = rng.random_range(0.02..0.98);
        interior.push(t);
        if degree > 1 && interior.len() < count && rng.random_bool(0.1) {
            interior.push(t);
        }
    }
    interior.sort_by(f64::total_cmp);
    KnotVector::with_interior(0.0, 1.0, &interior, degree).expect("valid random knots")
}

pub fn random_points(rng: &mut impl Rng, n: usize, dim: usize, spread: f64) -> ControlPoints {
    let data = (0..n * dim).map(|_| rng.random_range(-spread..spread)).collect();
    ControlPoints::new(dim, data).unwrap()
}

/// A curve that wanders along the x axis with random offsets.
pub fn random_curve(rng: &mut impl Rng, n: usize, degree: usize, dim: usize) -> Geometry {
    let kv = random_knots(rng, n, degree);
    let mut pts = random_points(rng, n, dim, 0.5);
    for i in 0..n {
        pts.point_mut(i)[0] += i as f64;
    }
    BSplineCurve::new(kv, pts).unwrap().into()
}

/// A height field over a grid with random heights.
pub fn random_surface(rng: &mut impl Rng, n1: usize, n2: usize, p: usize, q: usize) -> Geometry {
    let ku = random_knots(rng, n1, p);
    let kv = random_knots(rng, n2, q);
    let mut data = Vec::with_capacity(n1 * n2 * 3);
    for i in 0..n1 {
        for j in 0..n2 {
            data.extend_from_slice(&[i as f64, j as f64, rng.random_range(-0.5..0.5)]);
        }
    }
    BSplineSurface::new(ku, kv, ControlPoints::new(3, data).unwrap())
        .unwrap()
        .into()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
