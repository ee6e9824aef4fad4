//! Clamped B-spline curves in 2D or 3D and their curvature combs.

use serde::Serialize;

use crate::basis::basis_derivatives_upto;
use crate::points::norm_sq;
use crate::{ControlPoints, Error, KnotVector, Result};

/// Default number of comb samples.
pub const DEFAULT_COMB_SAMPLES: usize = 256;
/// Longest comb tooth as a fraction of the control polygon's bounding-box
/// diagonal when no explicit scale is given.
pub const DEFAULT_COMB_FRACTION: f64 = 0.1;
/// Relative speed below which a sample is treated as a cusp.
pub const CUSP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BSplineCurve {
    knots: KnotVector,
    points: ControlPoints,
}

impl BSplineCurve {
    pub fn new(knots: KnotVector, points: ControlPoints) -> Result<Self> {
        if points.len() != knots.basis_count() {
            return Err(Error::DimensionMismatch {
                what: "curve control points",
                expected: knots.basis_count(),
                actual: points.len(),
            });
        }
        Ok(Self { knots, points })
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn degree(&self) -> usize {
        self.knots.degree()
    }

    pub fn points(&self) -> &ControlPoints {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn domain(&self) -> (f64, f64) {
        self.knots.domain()
    }

    /// Same knots, new control points.
    pub fn with_points(&self, points: ControlPoints) -> Result<Self> {
        Self::new(self.knots.clone(), points)
    }

    /// Point (`order == 0`) or `order`-th derivative at `t`.
    pub fn evaluate(&self, t: f64, order: usize) -> Result<Vec<f64>> {
        Ok(self.derivatives(t, order)?.pop().expect("non-empty"))
    }

    /// Point and derivatives up to `max_order` at `t`.
    pub fn derivatives(&self, t: f64, max_order: usize) -> Result<Vec<Vec<f64>>> {
        let ders = basis_derivatives_upto(&self.knots, t, max_order)?;
        let first = self.knots.find_span(t)? - self.degree();
        Ok(self.combine(first, &ders))
    }

    fn combine(&self, first: usize, ders: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let dim = self.dim();
        ders.iter()
            .map(|row| {
                let mut out = vec![0.0; dim];
                for (k, w) in row.iter().enumerate() {
                    for (o, x) in out.iter_mut().zip(self.points.point(first + k)) {
                        *o += w * x;
                    }
                }
                out
            })
            .collect()
    }

    /// Curvature at `t`: signed for planar curves (positive when turning
    /// left), unsigned in 3D. `None` at a cusp.
    pub fn curvature(&self, t: f64) -> Result<Option<f64>> {
        if self.degree() < 2 {
            return Err(Error::UnsupportedOrder {
                order: 2,
                degree: self.degree(),
            });
        }
        let d = self.derivatives(t, 2)?;
        let tol = CUSP_TOLERANCE * self.points.bounding_diagonal();
        Ok(frame(&d[1], &d[2], tol).map(|f| f.curvature))
    }

    /// Samples `samples` uniformly spaced parameters (both domain ends
    /// included) and attaches a comb tooth `point + scale * kappa * normal`
    /// to each. With `scale == None` the longest tooth is fitted to a tenth
    /// of the control polygon's bounding-box diagonal.
    pub fn curvature_comb(&self, samples: usize, scale: Option<f64>) -> Result<CurvatureComb> {
        if samples < 2 {
            return Err(Error::InvalidArgument(format!(
                "a curvature comb needs at least 2 samples, got {samples}"
            )));
        }
        if let Some(s) = scale {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidArgument(format!("comb scale must be positive, got {s}")));
            }
        }
        if self.degree() < 2 {
            return Err(Error::UnsupportedOrder {
                order: 2,
                degree: self.degree(),
            });
        }
        let (a, b) = self.domain();
        let diag = self.points.bounding_diagonal();
        let tol = CUSP_TOLERANCE * diag;
        let mut raw = Vec::with_capacity(samples);
        for k in 0..samples {
            let t = if k == samples - 1 {
                b
            } else {
                a + (b - a) * k as f64 / (samples - 1) as f64
            };
            let d = self.derivatives(t, 2)?;
            raw.push((t, d[0].clone(), frame(&d[1], &d[2], tol)));
        }
        let max_kappa = raw
            .iter()
            .filter_map(|(_, _, f)| f.as_ref().map(|f| f.curvature.abs()))
            .fold(0.0, f64::max);
        let scale = scale.unwrap_or(if max_kappa > 0.0 {
            DEFAULT_COMB_FRACTION * diag / max_kappa
        } else {
            1.0
        });
        let teeth = raw
            .into_iter()
            .map(|(t, point, f)| match f {
                Some(f) => {
                    let tip = point
                        .iter()
                        .zip(&f.normal)
                        .map(|(x, n)| x + scale * f.curvature * n)
                        .collect();
                    CombTooth {
                        t,
                        point,
                        tip,
                        curvature: f.curvature,
                        cusp: false,
                    }
                }
                None => CombTooth {
                    t,
                    tip: point.clone(),
                    point,
                    curvature: 0.0,
                    cusp: true,
                },
            })
            .collect();
        Ok(CurvatureComb { scale, teeth })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombTooth {
    pub t: f64,
    pub point: Vec<f64>,
    pub tip: Vec<f64>,
    pub curvature: f64,
    /// The first derivative vanished here; the tooth has zero length.
    pub cusp: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureComb {
    pub scale: f64,
    pub teeth: Vec<CombTooth>,
}

struct Frame {
    curvature: f64,
    normal: Vec<f64>,
}

fn frame(d1: &[f64], d2: &[f64], cusp_tol: f64) -> Option<Frame> {
    let speed = norm_sq(d1).sqrt();
    if speed < cusp_tol || speed == 0.0 {
        return None;
    }
    if d1.len() == 2 {
        let cross = d1[0] * d2[1] - d1[1] * d2[0];
        return Some(Frame {
            curvature: cross / speed.powi(3),
            normal: vec![-d1[1] / speed, d1[0] / speed],
        });
    }
    let cross = [
        d1[1] * d2[2] - d1[2] * d2[1],
        d1[2] * d2[0] - d1[0] * d2[2],
        d1[0] * d2[1] - d1[1] * d2[0],
    ];
    let kappa = norm_sq(&cross).sqrt() / speed.powi(3);
    // principal normal: component of d2 orthogonal to the tangent
    let along = d1.iter().zip(d2).map(|(a, b)| a * b).sum::<f64>() / (speed * speed);
    let perp: Vec<f64> = d2.iter().zip(d1).map(|(b, a)| b - along * a).collect();
    let len = norm_sq(&perp).sqrt();
    let normal = if len > 0.0 && kappa > 0.0 {
        perp.iter().map(|x| x / len).collect()
    } else {
        vec![0.0; 3]
    };
    Some(Frame {
        curvature: kappa,
        normal,
    })
}
