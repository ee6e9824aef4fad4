//! Tensor-product clamped B-spline surfaces.
//!
//! Control points are stored in lexicographic order: point `(i, j)` with
//! `0 <= i < n1` along `u` and `0 <= j < n2` along `v` lives at flat index
//! `i * n2 + j`.

use serde::Serialize;

use crate::basis::basis_derivatives_upto;
use crate::curve::CUSP_TOLERANCE;
use crate::points::norm_sq;
use crate::{ControlPoints, Error, KnotVector, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BSplineSurface {
    knots_u: KnotVector,
    knots_v: KnotVector,
    points: ControlPoints,
}

/// Position and partial derivatives up to second order at one parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePartials {
    pub point: [f64; 3],
    pub su: [f64; 3],
    pub sv: [f64; 3],
    pub suu: [f64; 3],
    pub suv: [f64; 3],
    pub svv: [f64; 3],
}

impl BSplineSurface {
    pub fn new(knots_u: KnotVector, knots_v: KnotVector, points: ControlPoints) -> Result<Self> {
        if points.dim() != 3 {
            return Err(Error::InvalidGeometry(format!(
                "surface control points must be 3D, got {}D",
                points.dim()
            )));
        }
        let expected = knots_u.basis_count() * knots_v.basis_count();
        if points.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "surface control net",
                expected,
                actual: points.len(),
            });
        }
        Ok(Self {
            knots_u,
            knots_v,
            points,
        })
    }

    pub fn knots_u(&self) -> &KnotVector {
        &self.knots_u
    }

    pub fn knots_v(&self) -> &KnotVector {
        &self.knots_v
    }

    pub fn points(&self) -> &ControlPoints {
        &self.points
    }

    /// `(n1, n2)`: control points along `u` and `v`.
    pub fn shape(&self) -> (usize, usize) {
        (self.knots_u.basis_count(), self.knots_v.basis_count())
    }

    pub fn degrees(&self) -> (usize, usize) {
        (self.knots_u.degree(), self.knots_v.degree())
    }

    pub fn flat_index(&self, i: usize, j: usize) -> usize {
        i * self.shape().1 + j
    }

    pub fn with_points(&self, points: ControlPoints) -> Result<Self> {
        Self::new(self.knots_u.clone(), self.knots_v.clone(), points)
    }

    /// Mixed partial `d^(du+dv) S / du^du dv^dv` at `(u, v)`.
    pub fn evaluate(&self, u: f64, v: f64, du: usize, dv: usize) -> Result<[f64; 3]> {
        let bu = basis_derivatives_upto(&self.knots_u, u, du)?;
        let bv = basis_derivatives_upto(&self.knots_v, v, dv)?;
        let fu = self.knots_u.find_span(u)? - self.knots_u.degree();
        let fv = self.knots_v.find_span(v)? - self.knots_v.degree();
        Ok(self.combine(fu, &bu[du], fv, &bv[dv]))
    }

    fn combine(&self, fu: usize, wu: &[f64], fv: usize, wv: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (a, cu) in wu.iter().enumerate() {
            for (b, cv) in wv.iter().enumerate() {
                let w = cu * cv;
                let p = self.points.point(self.flat_index(fu + a, fv + b));
                for c in 0..3 {
                    out[c] += w * p[c];
                }
            }
        }
        out
    }

    /// Position and all partials up to second order.
    pub fn partials(&self, u: f64, v: f64) -> Result<SurfacePartials> {
        let (p, q) = self.degrees();
        let bu = basis_derivatives_upto(&self.knots_u, u, p.min(2))?;
        let bv = basis_derivatives_upto(&self.knots_v, v, q.min(2))?;
        let fu = self.knots_u.find_span(u)? - p;
        let fv = self.knots_v.find_span(v)? - q;
        let zero = vec![0.0; q + 1];
        let zero_u = vec![0.0; p + 1];
        let row_u = |k: usize| bu.get(k).unwrap_or(&zero_u);
        let row_v = |k: usize| bv.get(k).unwrap_or(&zero);
        Ok(SurfacePartials {
            point: self.combine(fu, row_u(0), fv, row_v(0)),
            su: self.combine(fu, row_u(1), fv, row_v(0)),
            sv: self.combine(fu, row_u(0), fv, row_v(1)),
            suu: self.combine(fu, row_u(2), fv, row_v(0)),
            suv: self.combine(fu, row_u(1), fv, row_v(1)),
            svv: self.combine(fu, row_u(0), fv, row_v(2)),
        })
    }

    /// Mean curvature `H` at `(u, v)`, `None` where the normal degenerates.
    pub fn mean_curvature(&self, u: f64, v: f64) -> Result<Option<f64>> {
        self.require_second_order()?;
        let tol = CUSP_TOLERANCE * self.points.bounding_diagonal().powi(2);
        Ok(mean_curvature_from(&self.partials(u, v)?, tol))
    }

    /// Absolute mean curvature on an `nu x nv` lattice spanning the domain,
    /// both ends included. `values[a][b]` belongs to `(u_a, v_b)`.
    pub fn curvature_grid(&self, nu: usize, nv: usize) -> Result<CurvatureGrid> {
        if nu < 2 || nv < 2 {
            return Err(Error::InvalidArgument(format!(
                "curvature grid needs at least 2x2 samples, got {nu}x{nv}"
            )));
        }
        self.require_second_order()?;
        let us = lattice(self.knots_u.domain(), nu);
        let vs = lattice(self.knots_v.domain(), nv);
        let tol = CUSP_TOLERANCE * self.points.bounding_diagonal().powi(2);
        let mut values = Vec::with_capacity(nu);
        for &u in &us {
            let mut row = Vec::with_capacity(nv);
            for &v in &vs {
                row.push(mean_curvature_from(&self.partials(u, v)?, tol).map(f64::abs));
            }
            values.push(row);
        }
        Ok(CurvatureGrid { u: us, v: vs, values })
    }

    fn require_second_order(&self) -> Result<()> {
        let (p, q) = self.degrees();
        if p < 2 || q < 2 {
            return Err(Error::UnsupportedOrder {
                order: 2,
                degree: p.min(q),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureGrid {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// `None` marks samples with a degenerate normal.
    pub values: Vec<Vec<Option<f64>>>,
}

impl CurvatureGrid {
    /// Lattice position `(a, b)` and value of the largest defined sample.
    pub fn argmax(&self) -> Option<((usize, usize), f64)> {
        let mut best: Option<((usize, usize), f64)> = None;
        for (a, row) in self.values.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                if let Some(v) = *v {
                    if best.is_none_or(|(_, m)| v > m) {
                        best = Some(((a, b), v));
                    }
                }
            }
        }
        best
    }
}

fn lattice((a, b): (f64, f64), count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| {
            if k == count - 1 {
                b
            } else {
                a + (b - a) * k as f64 / (count - 1) as f64
            }
        })
        .collect()
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn mean_curvature_from(d: &SurfacePartials, tol: f64) -> Option<f64> {
    let n = cross(&d.su, &d.sv);
    let len = norm_sq(&n).sqrt();
    if len < tol || len == 0.0 {
        return None;
    }
    let n = [n[0] / len, n[1] / len, n[2] / len];
    let (e, f, g) = (dot(&d.su, &d.su), dot(&d.su, &d.sv), dot(&d.sv, &d.sv));
    let (l, m, nn) = (dot(&d.suu, &n), dot(&d.suv, &n), dot(&d.svv, &n));
    Some((e * nn - 2.0 * f * m + g * l) / (2.0 * (e * g - f * f)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_surface(n1: usize, n2: usize, height: impl Fn(usize, usize) -> f64) -> BSplineSurface {
        let mut rows = Vec::new();
        for i in 0..n1 {
            for j in 0..n2 {
                rows.push([i as f64, j as f64, height(i, j)]);
            }
        }
        BSplineSurface::new(
            KnotVector::uniform(n1, 3).unwrap(),
            KnotVector::uniform(n2, 3).unwrap(),
            ControlPoints::from_rows(&rows).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn plane_has_zero_mean_curvature() {
        let s = grid_surface(5, 6, |i, j| 0.5 * i as f64 - 0.25 * j as f64);
        let g = s.curvature_grid(9, 7).unwrap();
        for row in &g.values {
            for v in row {
                assert!(v.unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn bilinear_request_is_rejected() {
        let s = BSplineSurface::new(
            KnotVector::uniform(3, 1).unwrap(),
            KnotVector::uniform(3, 2).unwrap(),
            ControlPoints::from_rows(&[[0.0, 0.0, 0.0]; 9]).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            s.curvature_grid(4, 4),
            Err(Error::UnsupportedOrder { .. })
        ));
    }

    #[test]
    fn rejects_planar_points() {
        let r = BSplineSurface::new(
            KnotVector::uniform(4, 3).unwrap(),
            KnotVector::uniform(4, 3).unwrap(),
            ControlPoints::from_rows(&[[0.0, 0.0]; 16]).unwrap(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn sphere_like_bump_has_positive_curvature_at_peak() {
        let s = grid_surface(7, 7, |i, j| if i == 3 && j == 3 { 1.0 } else { 0.0 });
        let h = s.mean_curvature(0.5, 0.5).unwrap().unwrap();
        assert!(h.abs() > 0.0);
    }

    #[test]
    fn collapsed_edge_is_undefined() {
        // every point of the first u-row coincides, so S_v vanishes at u = 0
        let mut rows = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                if i == 0 {
                    rows.push([0.0, 0.0, 0.0]);
                } else {
                    rows.push([i as f64, j as f64 - 1.5, 0.2 * (i * j) as f64]);
                }
            }
        }
        let s = BSplineSurface::new(
            KnotVector::uniform(4, 3).unwrap(),
            KnotVector::uniform(4, 3).unwrap(),
            ControlPoints::from_rows(&rows).unwrap(),
        )
        .unwrap();
        let g = s.curvature_grid(3, 3).unwrap();
        assert!(g.values[0].iter().all(Option::is_none));
        assert!(g.values[1].iter().all(Option::is_some));
    }
}
