//! A curve or surface treated uniformly as a flat list of control points
//! with an associated fairing functional.

use crate::gram::{curve_gram, surface_gram};
use crate::{BSplineCurve, BSplineSurface, ControlPoints, Error, FunctionalKind, GramMatrix, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Curve(BSplineCurve),
    Surface(BSplineSurface),
}

impl Geometry {
    pub fn points(&self) -> &ControlPoints {
        match self {
            Geometry::Curve(c) => c.points(),
            Geometry::Surface(s) => s.points(),
        }
    }

    pub fn len(&self) -> usize {
        self.points().len()
    }

    pub fn is_empty(&self) -> bool {
        self.points().is_empty()
    }

    pub fn is_surface(&self) -> bool {
        matches!(self, Geometry::Surface(_))
    }

    pub fn with_points(&self, points: ControlPoints) -> Result<Self> {
        Ok(match self {
            Geometry::Curve(c) => Geometry::Curve(c.with_points(points)?),
            Geometry::Surface(s) => Geometry::Surface(s.with_points(points)?),
        })
    }

    /// The functional used when none is requested: strain energy for
    /// curves, thin-plate energy for surfaces (first order when a degree is
    /// below two).
    pub fn default_kind(&self) -> FunctionalKind {
        match self {
            Geometry::Curve(c) => FunctionalKind::CurveOrder(c.degree().min(2) as u8),
            Geometry::Surface(s) => {
                let (p, q) = s.degrees();
                if p >= 2 && q >= 2 {
                    FunctionalKind::SurfaceSecondOrder
                } else {
                    FunctionalKind::SurfaceFirstOrder
                }
            }
        }
    }

    /// Checks that `kind` can be evaluated on this geometry.
    pub fn check_kind(&self, kind: FunctionalKind) -> Result<()> {
        match (self, kind) {
            (Geometry::Curve(c), FunctionalKind::CurveOrder(r)) => {
                if !(1..=3).contains(&r) {
                    return Err(Error::UnsupportedFunctional {
                        kind: kind.to_string(),
                        reason: "curve order must be 1, 2 or 3".into(),
                    });
                }
                if r as usize > c.degree() {
                    return Err(Error::UnsupportedOrder {
                        order: r as usize,
                        degree: c.degree(),
                    });
                }
                Ok(())
            }
            (Geometry::Surface(s), FunctionalKind::SurfaceSecondOrder) => {
                let (p, q) = s.degrees();
                if p < 2 || q < 2 {
                    return Err(Error::UnsupportedFunctional {
                        kind: kind.to_string(),
                        reason: format!("needs degree at least 2 in both directions, got ({p}, {q})"),
                    });
                }
                Ok(())
            }
            (Geometry::Surface(_), FunctionalKind::SurfaceFirstOrder) => Ok(()),
            (Geometry::Curve(_), _) => Err(Error::UnsupportedFunctional {
                kind: kind.to_string(),
                reason: "surface functionals do not apply to curves".into(),
            }),
            (Geometry::Surface(_), _) => Err(Error::UnsupportedFunctional {
                kind: kind.to_string(),
                reason: "curve functionals do not apply to surfaces".into(),
            }),
        }
    }

    /// Gram matrix of the fairing functional `kind`.
    pub fn gram(&self, kind: FunctionalKind) -> Result<GramMatrix> {
        self.check_kind(kind)?;
        match (self, kind) {
            (Geometry::Curve(c), FunctionalKind::CurveOrder(r)) => curve_gram(c.knots(), r as usize),
            (Geometry::Surface(s), kind) => surface_gram(s.knots_u(), s.knots_v(), kind),
            _ => unreachable!("rejected by check_kind"),
        }
    }

    /// Fairing energy `Σ_coord Pᵀ D P`.
    pub fn energy(&self, kind: FunctionalKind) -> Result<f64> {
        self.gram(kind)?.quadratic_form(self.points())
    }
}

impl From<BSplineCurve> for Geometry {
    fn from(c: BSplineCurve) -> Self {
        Geometry::Curve(c)
    }
}

impl From<BSplineSurface> for Geometry {
    fn from(s: BSplineSurface) -> Self {
        Geometry::Surface(s)
    }
}

/// Fairing energy of a geometry under `kind`.
pub fn energy(geometry: &Geometry, kind: FunctionalKind) -> Result<f64> {
    geometry.energy(kind)
}
