//! Fairing functionals as Gram matrices of basis derivatives.
//!
//! For a curve and derivative order `r` the matrix entries are
//! `d_ij = ∫ N_i^(r)(t) N_j^(r)(t) dt` over the parameter domain. Entries
//! are integrated span by span with a `p + 1` point Gauss–Legendre rule,
//! which is exact for the piecewise polynomial integrand. Surface
//! functionals are assembled from curve Gram matrices through Kronecker
//! products that follow the lexicographic flattening of the control net.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::ders_at_span;
use crate::quadrature::GaussLegendre;
use crate::{ControlPoints, Error, KnotVector, Result};

/// Below this size matrices are stored densely.
pub const DENSE_THRESHOLD: usize = 16;

/// Relative size below which a row product is treated as cancelled.
pub const CANCELLATION_TOLERANCE: f64 = 1e3 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FunctionalKind {
    /// `∫ ||C^(r)||²` for `r` in 1..=3: stretch, strain and jerk energy.
    CurveOrder(u8),
    /// `∫∫ ||S_u||² + ||S_v||²`.
    SurfaceFirstOrder,
    /// `∫∫ ||S_uu||² + 2 ||S_uv||² + ||S_vv||²`.
    SurfaceSecondOrder,
}

impl FunctionalKind {
    pub fn is_surface(self) -> bool {
        !matches!(self, FunctionalKind::CurveOrder(_))
    }
}

impl fmt::Display for FunctionalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionalKind::CurveOrder(r) => write!(f, "r{r}"),
            FunctionalKind::SurfaceFirstOrder => f.write_str("surface-first"),
            FunctionalKind::SurfaceSecondOrder => f.write_str("surface-second"),
        }
    }
}

impl From<FunctionalKind> for String {
    fn from(kind: FunctionalKind) -> Self {
        kind.to_string()
    }
}

impl TryFrom<String> for FunctionalKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for FunctionalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kind = match s.trim().to_ascii_lowercase().as_str() {
            "r1" | "1" | "stretch" => FunctionalKind::CurveOrder(1),
            "r2" | "2" | "strain" => FunctionalKind::CurveOrder(2),
            "r3" | "3" | "jerk" => FunctionalKind::CurveOrder(3),
            "surface-first" | "s1" | "first" => FunctionalKind::SurfaceFirstOrder,
            "surface-second" | "s2" | "second" | "thin-plate" => FunctionalKind::SurfaceSecondOrder,
            other => {
                return Err(Error::UnsupportedFunctional {
                    kind: other.to_string(),
                    reason: "expected r1, r2, r3, surface-first or surface-second".into(),
                })
            }
        };
        Ok(kind)
    }
}

/// How the matrix was assembled; determines how many off-diagonal entries
/// a row can hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    Curve { degree: usize },
    Surface { degree_u: usize, degree_v: usize, n2: usize },
}

impl Stencil {
    /// Maximum number of structurally nonzero off-diagonal entries per row.
    pub fn neighbor_count(self) -> usize {
        match self {
            Stencil::Curve { degree } => 2 * degree,
            Stencil::Surface {
                degree_u, degree_v, ..
            } => (2 * degree_u + 1) * (2 * degree_v + 1) - 1,
        }
    }

    fn half_bandwidth(self) -> usize {
        match self {
            Stencil::Curve { degree } => degree,
            Stencil::Surface {
                degree_u,
                degree_v,
                n2,
            } => degree_u * n2 + degree_v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    Dense(Vec<f64>),
    /// `upper[i * (half + 1) + k] = d[i][i + k]`.
    Band { half: usize, upper: Vec<f64> },
}

/// Symmetric banded matrix, stored densely below [`DENSE_THRESHOLD`].
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    stencil: Stencil,
    storage: Storage,
}

impl GramMatrix {
    /// Fills entries with `|i - j| <= half bandwidth` from `f(i, j)` for
    /// `i <= j`.
    pub fn from_fn(n: usize, stencil: Stencil, f: impl Fn(usize, usize) -> f64) -> Self {
        let half = stencil.half_bandwidth().min(n.saturating_sub(1));
        let storage = if n < DENSE_THRESHOLD {
            let mut data = vec![0.0; n * n];
            for i in 0..n {
                for j in i..(i + half + 1).min(n) {
                    let v = f(i, j);
                    data[i * n + j] = v;
                    data[j * n + i] = v;
                }
            }
            Storage::Dense(data)
        } else {
            let mut upper = vec![0.0; n * (half + 1)];
            for i in 0..n {
                for j in i..(i + half + 1).min(n) {
                    upper[i * (half + 1) + j - i] = f(i, j);
                }
            }
            Storage::Band { half, upper }
        };
        Self { n, stencil, storage }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn stencil(&self) -> Stencil {
        self.stencil
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    pub fn half_bandwidth(&self) -> usize {
        self.stencil.half_bandwidth().min(self.n.saturating_sub(1))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(d) => d[i * self.n + j],
            Storage::Band { half, upper } => {
                let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
                if hi - lo > *half {
                    0.0
                } else {
                    upper[lo * (half + 1) + hi - lo]
                }
            }
        }
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        self.get(i, i)
    }

    /// Columns that may hold a nonzero in row `i`.
    pub fn row_support(&self, i: usize) -> Range<usize> {
        let w = self.half_bandwidth();
        i.saturating_sub(w)..(i + w + 1).min(self.n)
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.row_support(i).map(move |j| (j, self.get(i, j)))
    }

    pub fn max_abs_in_row(&self, i: usize) -> f64 {
        self.row(i).fold(0.0, |m, (_, v)| m.max(v.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        (0..self.n).map(|i| self.max_abs_in_row(i)).fold(0.0, f64::max)
    }

    /// `alpha * I + beta * self`.
    pub fn shifted(&self, alpha: f64, beta: f64) -> Self {
        Self::from_fn(self.n, self.stencil, |i, j| {
            beta * self.get(i, j) + if i == j { alpha } else { 0.0 }
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Row `i` of `D · P`. Components that cancel to within rounding of
    /// their terms are returned as exactly zero, so that nets with linear
    /// precision (straight lines, planes) have exactly vanishing fairing
    /// vectors and energy.
    pub fn apply_row(&self, i: usize, points: &ControlPoints) -> Vec<f64> {
        let dim = points.dim();
        let mut out = vec![0.0; dim];
        let mut scale = vec![0.0; dim];
        for (j, d) in self.row(i) {
            if d != 0.0 {
                for (c, x) in points.point(j).iter().enumerate() {
                    out[c] += d * x;
                    scale[c] += (d * x).abs();
                }
            }
        }
        for (o, s) in out.iter_mut().zip(&scale) {
            if o.abs() <= CANCELLATION_TOLERANCE * s {
                *o = 0.0;
            }
        }
        out
    }

    /// Fairing vectors `eta_i = Σ_l d_il P_l` for every point.
    pub fn fairing_vectors(&self, points: &ControlPoints) -> Result<ControlPoints> {
        self.check_len(points.len())?;
        let mut out = ControlPoints::zeros(points.dim(), self.n);
        for i in 0..self.n {
            let row = self.apply_row(i, points);
            out.point_mut(i).copy_from_slice(&row);
        }
        Ok(out)
    }

    /// `Σ_coord Pᵀ D P`.
    pub fn quadratic_form(&self, points: &ControlPoints) -> Result<f64> {
        let eta = self.fairing_vectors(points)?;
        Ok(points
            .iter()
            .zip(eta.iter())
            .map(|(p, e)| p.iter().zip(e).map(|(a, b)| a * b).sum::<f64>())
            .sum())
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::DimensionMismatch {
                what: "matrix size vs control points",
                expected: self.n,
                actual: len,
            });
        }
        Ok(())
    }
}

/// Fairing vectors for `points` under `d`.
pub fn fairing_vectors(d: &GramMatrix, points: &ControlPoints) -> Result<ControlPoints> {
    d.fairing_vectors(points)
}

/// Curve Gram matrix of order `order` (0 gives the mass matrix).
pub fn curve_gram(kv: &KnotVector, order: usize) -> Result<GramMatrix> {
    curve_gram_with_rule(kv, order, &GaussLegendre::new(kv.degree() + 1))
}

/// [`curve_gram`] with an explicit per-span quadrature rule.
pub fn curve_gram_with_rule(kv: &KnotVector, order: usize, rule: &GaussLegendre) -> Result<GramMatrix> {
    let p = kv.degree();
    if order > p {
        return Err(Error::UnsupportedOrder { order, degree: p });
    }
    let n = kv.basis_count();
    // band accumulator, acc[i][k] = d[i][i + k]
    let mut acc = vec![vec![0.0; p + 1]; n];
    for (span, a, b) in kv.spans() {
        let first = span - p;
        for (t, w) in rule.on_interval(a, b) {
            let ders = ders_at_span(kv.knots(), p, span, t, order);
            let row = &ders[order];
            for x in 0..=p {
                for y in x..=p {
                    acc[first + x][y - x] += w * row[x] * row[y];
                }
            }
        }
    }
    Ok(GramMatrix::from_fn(n, Stencil::Curve { degree: p }, |i, j| {
        acc[i].get(j - i).copied().unwrap_or(0.0)
    }))
}

/// Surface Gram matrix for a first- or second-order functional.
pub fn surface_gram(kv_u: &KnotVector, kv_v: &KnotVector, kind: FunctionalKind) -> Result<GramMatrix> {
    let (p, q) = (kv_u.degree(), kv_v.degree());
    let terms: Vec<(f64, usize, usize)> = match kind {
        FunctionalKind::SurfaceFirstOrder => vec![(1.0, 1, 0), (1.0, 0, 1)],
        FunctionalKind::SurfaceSecondOrder => {
            if p < 2 || q < 2 {
                return Err(Error::UnsupportedFunctional {
                    kind: kind.to_string(),
                    reason: format!("needs degree at least 2 in both directions, got ({p}, {q})"),
                });
            }
            vec![(1.0, 2, 0), (2.0, 1, 1), (1.0, 0, 2)]
        }
        FunctionalKind::CurveOrder(_) => {
            return Err(Error::UnsupportedFunctional {
                kind: kind.to_string(),
                reason: "curve functionals do not apply to surfaces".into(),
            })
        }
    };
    let max_u = terms.iter().map(|t| t.1).max().unwrap_or(0);
    let max_v = terms.iter().map(|t| t.2).max().unwrap_or(0);
    let gu: Vec<GramMatrix> = (0..=max_u).map(|r| curve_gram(kv_u, r)).collect::<Result<_>>()?;
    let gv: Vec<GramMatrix> = (0..=max_v).map(|r| curve_gram(kv_v, r)).collect::<Result<_>>()?;
    let (n1, n2) = (kv_u.basis_count(), kv_v.basis_count());
    let stencil = Stencil::Surface {
        degree_u: p,
        degree_v: q,
        n2,
    };
    Ok(GramMatrix::from_fn(n1 * n2, stencil, |a, b| {
        let (iu, iv) = (a / n2, a % n2);
        let (ju, jv) = (b / n2, b % n2);
        if iu.abs_diff(ju) > p || iv.abs_diff(jv) > q {
            return 0.0;
        }
        terms
            .iter()
            .map(|&(c, ru, rv)| c * gu[ru].get(iu, ju) * gv[rv].get(iv, jv))
            .sum()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bezier3() -> KnotVector {
        KnotVector::new(vec![0., 0., 0., 0., 1., 1., 1., 1.], 3).unwrap()
    }

    #[test]
    fn bernstein_strain_row() {
        let d = curve_gram(&bezier3(), 2).unwrap();
        for (j, e) in [12.0, -18.0, 0.0, 6.0].iter().enumerate() {
            assert!((d.get(0, j) - e).abs() < 1e-12, "d_0{j} = {}", d.get(0, j));
        }
    }

    #[test]
    fn bernstein_stretch_and_mass_rows() {
        let d1 = curve_gram(&bezier3(), 1).unwrap();
        let g0 = curve_gram(&bezier3(), 0).unwrap();
        for (j, e) in [1.8, -0.9, -0.6, -0.3].iter().enumerate() {
            assert!((d1.get(0, j) - e).abs() < 1e-14);
        }
        for (j, e) in [1. / 7., 1. / 14., 1. / 35., 1. / 140.].iter().enumerate() {
            assert!((g0.get(0, j) - e).abs() < 1e-15);
        }
    }

    #[test]
    fn order_above_degree_is_rejected() {
        let kv = KnotVector::uniform(5, 2).unwrap();
        assert!(matches!(curve_gram(&kv, 3), Err(Error::UnsupportedOrder { .. })));
    }

    #[test]
    fn outside_band_is_zero() {
        let kv = KnotVector::uniform(20, 3).unwrap();
        let d = curve_gram(&kv, 2).unwrap();
        assert!(!d.is_dense());
        for i in 0..20usize {
            for j in 0..20 {
                if i.abs_diff(j) >= 4 {
                    assert_eq!(d.get(i, j), 0.0);
                }
                assert_eq!(d.get(i, j), d.get(j, i));
            }
        }
    }

    #[test]
    fn dense_and_band_storage_agree() {
        let small = curve_gram(&KnotVector::uniform(15, 3).unwrap(), 1).unwrap();
        let big = curve_gram(&KnotVector::uniform(16, 3).unwrap(), 1).unwrap();
        assert!(small.is_dense() && !big.is_dense());
        let rows: Vec<_> = big.row(7).collect();
        assert_eq!(rows.len(), 7);
        assert_eq!(big.row_support(0), 0..4);
    }

    #[test]
    fn bicubic_first_order_corner_entry() {
        let d = surface_gram(&bezier3(), &bezier3(), FunctionalKind::SurfaceFirstOrder).unwrap();
        assert!((d.get(0, 0) - 18.0 / 35.0).abs() < 1e-14);
    }

    #[test]
    fn second_order_surface_needs_quadratic_degree() {
        let kv1 = KnotVector::uniform(4, 1).unwrap();
        let err = surface_gram(&kv1, &bezier3(), FunctionalKind::SurfaceSecondOrder);
        assert!(matches!(err, Err(Error::UnsupportedFunctional { .. })));
        let err = surface_gram(&bezier3(), &bezier3(), FunctionalKind::CurveOrder(2));
        assert!(err.is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("r2".parse::<FunctionalKind>().unwrap(), FunctionalKind::CurveOrder(2));
        assert_eq!("Jerk".parse::<FunctionalKind>().unwrap(), FunctionalKind::CurveOrder(3));
        assert_eq!(
            "surface-second".parse::<FunctionalKind>().unwrap(),
            FunctionalKind::SurfaceSecondOrder
        );
        assert!("r4".parse::<FunctionalKind>().is_err());
        assert!("surface-third".parse::<FunctionalKind>().is_err());
        for k in [
            FunctionalKind::CurveOrder(1),
            FunctionalKind::SurfaceFirstOrder,
            FunctionalKind::SurfaceSecondOrder,
        ] {
            assert_eq!(k.to_string().parse::<FunctionalKind>().unwrap(), k);
        }
    }

    #[test]
    fn zero_matrix_gives_zero_fairing_vectors() {
        let d = GramMatrix::from_fn(5, Stencil::Curve { degree: 2 }, |_, _| 0.0);
        let p = ControlPoints::from_rows(&[[1.0, 2.0]; 5]).unwrap();
        let eta = d.fairing_vectors(&p).unwrap();
        assert!(eta.as_slice().iter().all(|&v| v == 0.0));
        let short = ControlPoints::from_rows(&[[1.0, 2.0]; 4]).unwrap();
        assert!(d.fairing_vectors(&short).is_err());
    }
}
