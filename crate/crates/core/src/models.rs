//! Test models and seeded noise.
//!
//! Noise comes from a counter-based SplitMix64 stream so that any
//! implementation can reproduce it exactly: the `n`-th 64-bit word for seed
//! `s` is `mix(s + (n + 1) * 0x9E3779B97F4A7C15)`, turned into a uniform
//! `((x >> 11) + 0.5) * 2^-53` in `(0, 1)`. Coordinate `c` (flat index
//! `point * dim + axis`) uses Box–Muller on uniforms `2c` and `2c + 1`:
//! `z = sqrt(-2 ln u1) cos(2π u2)`.

use serde::{Deserialize, Serialize};

use crate::banded::SpdFactor;
use crate::basis::basis_derivatives;
use crate::gram::Stencil;
use crate::{BSplineCurve, BSplineSurface, ControlPoints, Error, Geometry, GramMatrix, KnotVector, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The `counter`-th word of the stream for `seed`.
pub fn splitmix_word(seed: u64, counter: u64) -> u64 {
    mix(seed.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Uniform in the open interval `(0, 1)`.
pub fn uniform(seed: u64, counter: u64) -> f64 {
    ((splitmix_word(seed, counter) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal sample number `index` of the stream.
pub fn standard_normal(seed: u64, index: u64) -> f64 {
    let u1 = uniform(seed, 2 * index);
    let u2 = uniform(seed, 2 * index + 1);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseTarget {
    #[default]
    ControlPoints,
    /// Perturb the sampled data before fitting (spiral model only).
    Samples,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub variance: f64,
    pub seed: u64,
    #[serde(default)]
    pub target: NoiseTarget,
}

impl NoiseSpec {
    pub fn new(variance: f64, seed: u64) -> Self {
        Self {
            variance,
            seed,
            target: NoiseTarget::ControlPoints,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.variance >= 0.0 && self.variance.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be finite and non-negative, got {}",
                self.variance
            )));
        }
        Ok(())
    }
}

/// Perturbs every coordinate by an independent Gaussian sample.
pub fn perturb_points(points: &ControlPoints, spec: &NoiseSpec) -> Result<ControlPoints> {
    spec.check()?;
    if spec.variance == 0.0 {
        return Ok(points.clone());
    }
    let sigma = spec.variance.sqrt();
    let data = points
        .as_slice()
        .iter()
        .enumerate()
        .map(|(c, v)| v + sigma * standard_normal(spec.seed, c as u64))
        .collect();
    ControlPoints::new(points.dim(), data)
}

/// Adds seeded Gaussian noise to the control points of `geometry`.
pub fn add_noise(geometry: &Geometry, spec: &NoiseSpec) -> Result<Geometry> {
    geometry.with_points(perturb_points(geometry.points(), spec)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiralSpec {
    pub theta_max: f64,
    pub a: f64,
    pub b: f64,
    pub n_control: usize,
    pub degree: usize,
    pub samples: usize,
    /// Only honoured for [`NoiseTarget::Samples`]; control point noise is
    /// applied separately with [`add_noise`].
    pub sample_noise: Option<NoiseSpec>,
}

impl Default for SpiralSpec {
    fn default() -> Self {
        Self {
            theta_max: 5.0,
            a: 2.0,
            b: 1.5,
            n_control: 30,
            degree: 3,
            samples: 500,
            sample_noise: None,
        }
    }
}

/// Least-squares B-spline fit of the spiral `r = a + b θ`, `θ ∈ [0, θmax]`,
/// with chord-length parameters on `[0, 1]`.
pub fn make_spiral_model(spec: &SpiralSpec) -> Result<SpiralFit> {
    let rows: Vec<[f64; 2]> = (0..spec.samples)
        .map(|k| {
            let theta = spec.theta_max * k as f64 / (spec.samples - 1).max(1) as f64;
            let r = spec.a + spec.b * theta;
            [r * theta.cos(), r * theta.sin()]
        })
        .collect();
    let mut samples = ControlPoints::from_rows(&rows)?;
    if let Some(noise) = spec.sample_noise.filter(|n| n.target == NoiseTarget::Samples) {
        samples = perturb_points(&samples, &noise)?;
    }
    let params = chord_length_parameters(&samples);
    let curve = fit_curve(&samples, &params, spec.n_control, spec.degree)?;
    Ok(SpiralFit {
        curve,
        samples,
        params,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpiralFit {
    pub curve: BSplineCurve,
    pub samples: ControlPoints,
    /// Fit parameter of each sample.
    pub params: Vec<f64>,
}

impl SpiralFit {
    /// Largest distance between a sample and the curve at its parameter.
    pub fn max_error(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for (q, &t) in self.samples.iter().zip(&self.params) {
            let c = self.curve.evaluate(t, 0)?;
            worst = worst.max(crate::points::distance(q, &c));
        }
        Ok(worst)
    }
}

/// Cumulative chord length normalised to `[0, 1]`.
pub fn chord_length_parameters(samples: &ControlPoints) -> Vec<f64> {
    let mut acc = vec![0.0];
    for k in 1..samples.len() {
        let prev = acc[k - 1];
        acc.push(prev + crate::points::distance(samples.point(k), samples.point(k - 1)));
    }
    let total = *acc.last().unwrap_or(&0.0);
    if total > 0.0 {
        acc.iter_mut().for_each(|t| *t /= total);
    }
    acc
}

/// Clamped knots on `[0, 1]` that place roughly the same number of
/// parameters in every span.
pub fn averaged_knots(params: &[f64], n_control: usize, degree: usize) -> Result<KnotVector> {
    let m = params.len();
    if n_control <= degree || m < n_control {
        return Err(Error::InvalidArgument(format!(
            "cannot place knots for {n_control} control points from {m} parameters"
        )));
    }
    let interior_count = n_control - degree - 1;
    let d = m as f64 / (n_control - degree) as f64;
    let interior: Vec<f64> = (1..=interior_count)
        .map(|j| {
            let jd = j as f64 * d;
            let i = jd.floor() as usize;
            let alpha = jd - i as f64;
            (1.0 - alpha) * params[i - 1] + alpha * params[i.min(m - 1)]
        })
        .collect();
    KnotVector::with_interior(0.0, 1.0, &interior, degree)
}

/// Least-squares fit of `n_control` points to samples at given parameters.
pub fn fit_curve(samples: &ControlPoints, params: &[f64], n_control: usize, degree: usize) -> Result<BSplineCurve> {
    if n_control <= degree + 1 {
        return Err(Error::InvalidArgument(format!(
            "a degree {degree} fit needs more than {} control points, got {n_control}",
            degree + 1
        )));
    }
    if samples.len() != params.len() {
        return Err(Error::DimensionMismatch {
            what: "fit parameters",
            expected: samples.len(),
            actual: params.len(),
        });
    }
    if samples.len() < n_control {
        return Err(Error::InvalidArgument(format!(
            "underdetermined fit: {} samples for {n_control} control points",
            samples.len()
        )));
    }
    let kv = averaged_knots(params, n_control, degree)?;
    let dim = samples.dim();
    let mut normal = vec![0.0; n_control * n_control];
    let mut rhs = ControlPoints::zeros(dim, n_control);
    for (q, &t) in samples.iter().zip(params) {
        let active = basis_derivatives(&kv, t, 0)?;
        for (a, na) in active.indices().zip(&active.values) {
            for (b, nb) in active.indices().zip(&active.values) {
                normal[a * n_control + b] += na * nb;
            }
            for (r, v) in rhs.point_mut(a).iter_mut().zip(q) {
                *r += na * v;
            }
        }
    }
    let gram = GramMatrix::from_fn(n_control, Stencil::Curve { degree }, |i, j| normal[i * n_control + j]);
    let factor = SpdFactor::new(&gram)?;
    BSplineCurve::new(kv, factor.solve_points(&rhs))
}

/// A bicubic-style height field `z = h sin(πx) sin(πy)` on a uniform grid
/// over `[0, 1]²`, optionally with seeded noise on the heights.
pub fn bump_surface(n1: usize, n2: usize, degree: usize, height: f64, noise: Option<NoiseSpec>) -> Result<BSplineSurface> {
    let ku = KnotVector::uniform(n1, degree)?;
    let kv = KnotVector::uniform(n2, degree)?;
    let (gu, gv) = (ku.greville(), kv.greville());
    let mut data = Vec::with_capacity(n1 * n2 * 3);
    for &x in &gu {
        for &y in &gv {
            let z = height * (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin();
            data.extend_from_slice(&[x, y, z]);
        }
    }
    let mut points = ControlPoints::new(3, data)?;
    if let Some(spec) = noise {
        spec.check()?;
        let sigma = spec.variance.sqrt();
        for i in 0..points.len() {
            points.point_mut(i)[2] += sigma * standard_normal(spec.seed, i as u64);
        }
    }
    BSplineSurface::new(ku, kv, points)
}

/// A straight segment from `a` to `b` with linear precision (control points
/// at the Greville abscissae), which has zero energy for derivative orders
/// two and above.
pub fn straight_line(n: usize, degree: usize, a: &[f64], b: &[f64]) -> Result<BSplineCurve> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            what: "segment end point",
            expected: a.len(),
            actual: b.len(),
        });
    }
    let kv = KnotVector::uniform(n, degree)?;
    let data = kv
        .greville()
        .iter()
        .flat_map(|&t| a.iter().zip(b).map(move |(x, y)| x + t * (y - x)))
        .collect();
    BSplineCurve::new(kv, ControlPoints::new(a.len(), data)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_words() {
        assert_eq!(splitmix_word(1234567, 0), 6457827717110365317);
        assert_eq!(splitmix_word(1234567, 1), 3203168211198807973);
        assert_eq!(splitmix_word(1234567, 2), 9817491932198370423);
    }

    #[test]
    fn uniforms_are_open_interval() {
        for n in 0..1000 {
            let u = uniform(7, n);
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn zero_variance_is_identity() {
        let g: Geometry = straight_line(6, 3, &[0.0, 0.0], &[1.0, 2.0]).unwrap().into();
        assert_eq!(add_noise(&g, &NoiseSpec::new(0.0, 9)).unwrap(), g);
        assert!(add_noise(&g, &NoiseSpec::new(-1.0, 9)).is_err());
    }

    #[test]
    fn straight_line_has_zero_energy() {
        let g: Geometry = straight_line(9, 3, &[0.0, 1.0, 2.0], &[3.0, -1.0, 0.5]).unwrap().into();
        for r in 2..=3 {
            assert_eq!(g.energy(crate::FunctionalKind::CurveOrder(r)).unwrap(), 0.0);
        }
    }

    #[test]
    fn fit_rejects_too_few_control_points() {
        let spec = SpiralSpec {
            n_control: 4,
            ..SpiralSpec::default()
        };
        assert!(make_spiral_model(&spec).is_err());
    }
}
