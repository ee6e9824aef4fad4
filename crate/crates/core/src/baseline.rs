//! Direct global energy fairing: minimise
//! `(1 - w)/2 Σ ||P̂_i - P_i||² + w/2 ∫ ||Ĉ^(r)||²`
//! by solving `((1 - w) I + w D) P̂ = (1 - w) P`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::banded::SpdFactor;
use crate::engine::FairingRun;
use crate::metrics::rmse_deviation;
use crate::{Error, FunctionalKind, Geometry, Result};

/// Solves the direct fairing system for a scalar weight in `(0, 1)`.
pub fn energy_fair_direct(geometry: &Geometry, omega: f64, kind: FunctionalKind) -> Result<Geometry> {
    if !(omega > 0.0 && omega < 1.0) {
        return Err(Error::InvalidWeight {
            index: 0,
            value: omega,
            reason: "the direct solve needs a weight strictly between 0 and 1".into(),
        });
    }
    let d = geometry.gram(kind)?;
    let b = d.shifted(1.0 - omega, omega);
    let factor = SpdFactor::new(&b)?;
    let rhs = geometry.points().scaled(1.0 - omega);
    geometry.with_points(factor.solve_points(&rhs))
}

/// Side-by-side metrics of an iterative run and a direct solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ComparisonReport {
    pub kind: FunctionalKind,
    pub iterations: usize,
    pub original_energy: f64,
    pub pia_rmse: f64,
    pub pia_energy: f64,
    pub direct_rmse: f64,
    pub direct_energy: f64,
    /// Largest control point distance between the two results.
    pub max_distance: f64,
    pub bounding_diagonal: f64,
}

impl ComparisonReport {
    pub fn relative_max_distance(&self) -> f64 {
        if self.bounding_diagonal > 0.0 {
            self.max_distance / self.bounding_diagonal
        } else {
            self.max_distance
        }
    }
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "functional: {}", self.kind)?;
        writeln!(f, "original energy: {:.6e}", self.original_energy)?;
        writeln!(f, "{:<8} {:>14} {:>14} {:>10}", "method", "rmse", "energy", "iterations")?;
        writeln!(
            f,
            "{:<8} {:>14.6e} {:>14.6e} {:>10}",
            "pia", self.pia_rmse, self.pia_energy, self.iterations
        )?;
        writeln!(
            f,
            "{:<8} {:>14.6e} {:>14.6e} {:>10}",
            "direct", self.direct_rmse, self.direct_energy, "-"
        )?;
        writeln!(
            f,
            "max control point distance: {:.6e} ({:.6e} of bounding diagonal)",
            self.max_distance,
            self.relative_max_distance()
        )
    }
}

/// Compares an iterative run with a direct solve of the same original.
pub fn compare_runs(
    original: &Geometry,
    kind: FunctionalKind,
    pia: &FairingRun,
    direct: &Geometry,
) -> Result<ComparisonReport> {
    let p0 = original.points();
    let pia_pts = pia.geometry.points();
    let direct_pts = direct.points();
    p0.check_same_shape(pia_pts)?;
    p0.check_same_shape(direct_pts)?;
    if std::mem::discriminant(original) != std::mem::discriminant(&pia.geometry)
        || std::mem::discriminant(original) != std::mem::discriminant(direct)
    {
        return Err(Error::InvalidGeometry("compared results must share the original geometry type".into()));
    }
    let d = original.gram(kind)?;
    Ok(ComparisonReport {
        kind,
        iterations: pia.iterations,
        original_energy: d.quadratic_form(p0)?,
        pia_rmse: rmse_deviation(pia_pts, p0)?,
        pia_energy: d.quadratic_form(pia_pts)?,
        direct_rmse: rmse_deviation(direct_pts, p0)?,
        direct_energy: d.quadratic_form(direct_pts)?,
        max_distance: pia_pts.max_distance(direct_pts)?,
        bounding_diagonal: p0.bounding_diagonal(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{BSplineCurve, ControlPoints, KnotVector};

    fn wiggly() -> Geometry {
        let rows: Vec<[f64; 2]> = (0..10).map(|i| [i as f64, ((i * 7 % 5) as f64 - 2.0) * 0.3]).collect();
        BSplineCurve::new(KnotVector::uniform(10, 3).unwrap(), ControlPoints::from_rows(&rows).unwrap())
            .unwrap()
            .into()
    }

    #[test]
    fn tiny_weight_keeps_points() {
        let g = wiggly();
        let out = energy_fair_direct(&g, 1e-15, FunctionalKind::CurveOrder(2)).unwrap();
        assert!(out.points().max_distance(g.points()).unwrap() < 1e-10);
    }

    #[test]
    fn residual_of_direct_solve() {
        let g = wiggly();
        let k = FunctionalKind::CurveOrder(2);
        let w = 1e-3;
        let out = energy_fair_direct(&g, w, k).unwrap();
        let b = g.gram(k).unwrap().shifted(1.0 - w, w);
        let scale = g.points().max_abs();
        for i in 0..10 {
            let row = b.apply_row(i, out.points());
            for (r, p) in row.iter().zip(g.points().point(i)) {
                assert!((r - (1.0 - w) * p).abs() < 1e-10 * scale);
            }
        }
        assert!(g.energy(k).unwrap() >= out.energy(k).unwrap());
    }

    #[test]
    fn weight_must_be_open_unit() {
        for w in [0.0, 1.0, 2.0] {
            assert!(energy_fair_direct(&wiggly(), w, FunctionalKind::CurveOrder(2)).is_err());
        }
    }
}
