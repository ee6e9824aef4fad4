//! Energy-impact ranking of control points and automatic fairing of the
//! most influential ones.
//!
//! Moving `P_j` alone to its energy-optimal position
//! `P̂_j = P_j - η_j / d_jj` lowers the energy by `Z_j = ||η_j||² / d_jj`,
//! where `η_j = Σ_i d_ji P_i`. Points with large `Z_j` are the ones whose
//! adjustment pays off most.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::engine::{
    weight_upper_bound, FairingConfig, FairingProcess, FairingRun, StopReason, WeightPolicy,
    DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE,
};
use crate::{Error, FunctionalKind, Geometry, GramMatrix, Result};

/// A diagonal entry at or below this fraction of the largest entry in its
/// row is treated as zero. Since `|d_jl| <= sqrt(d_jj d_ll)`, a genuine
/// point only falls below it when its diagonal is about 24 orders of
/// magnitude smaller than a neighbour's, while a row that vanishes
/// analytically sits at rounding level. A global comparison would not work:
/// entries on tiny knot spans can exceed the others by many orders.
pub const EXCLUSION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPoint {
    pub index: usize,
    pub z: f64,
    /// 1 is the largest impact.
    pub rank: usize,
    /// The point has (numerically) no influence on the energy.
    pub excluded: bool,
}

fn is_excluded(d: &GramMatrix, j: usize) -> bool {
    let djj = d.diagonal(j);
    djj <= 0.0 || djj <= EXCLUSION_TOLERANCE * d.max_abs_in_row(j)
}

fn checked_diagonal(d: &GramMatrix, j: usize) -> Result<f64> {
    if j >= d.size() {
        return Err(Error::InvalidArgument(format!(
            "control point {j} out of range for {} points",
            d.size()
        )));
    }
    let djj = d.diagonal(j);
    if is_excluded(d, j) {
        return Err(Error::ExcludedPoint { index: j, diagonal: djj });
    }
    Ok(djj)
}

/// The position of `P_j` minimising the energy with all other points fixed.
pub fn optimal_single_point(geometry: &Geometry, j: usize, kind: FunctionalKind) -> Result<Vec<f64>> {
    let d = geometry.gram(kind)?;
    optimal_single_point_with(&d, geometry, j)
}

pub fn optimal_single_point_with(d: &GramMatrix, geometry: &Geometry, j: usize) -> Result<Vec<f64>> {
    let djj = checked_diagonal(d, j)?;
    let eta = d.apply_row(j, geometry.points());
    Ok(geometry
        .points()
        .point(j)
        .iter()
        .zip(&eta)
        .map(|(p, e)| p - e / djj)
        .collect())
}

/// Energy decrease `Z_j` obtained by moving `P_j` to its optimal position.
pub fn energy_impact(geometry: &Geometry, j: usize, kind: FunctionalKind) -> Result<f64> {
    let d = geometry.gram(kind)?;
    energy_impact_with(&d, geometry, j)
}

pub fn energy_impact_with(d: &GramMatrix, geometry: &Geometry, j: usize) -> Result<f64> {
    let djj = checked_diagonal(d, j)?;
    let eta = d.apply_row(j, geometry.points());
    Ok(eta.iter().map(|e| e * e).sum::<f64>() / djj)
}

/// Ranks all control points by descending `Z_j`, ties broken by ascending
/// index. Excluded points come last with `Z = 0`.
pub fn rank_control_points(geometry: &Geometry, kind: FunctionalKind) -> Result<Vec<RankedPoint>> {
    let d = geometry.gram(kind)?;
    rank_with(&d, geometry)
}

pub fn rank_with(d: &GramMatrix, geometry: &Geometry) -> Result<Vec<RankedPoint>> {
    d.check_len(geometry.len())?;
    let mut entries: Vec<(usize, f64, bool)> = (0..geometry.len())
        .map(|j| {
            if is_excluded(d, j) {
                return (j, 0.0, true);
            }
            let eta = d.apply_row(j, geometry.points());
            (j, eta.iter().map(|e| e * e).sum::<f64>() / d.diagonal(j), false)
        })
        .collect();
    entries.sort_by(|a, b| a.2.cmp(&b.2).then(b.1.total_cmp(&a.1)).then(a.0.cmp(&b.0)));
    Ok(entries
        .into_iter()
        .enumerate()
        .map(|(r, (index, z, excluded))| RankedPoint {
            index,
            z,
            rank: r + 1,
            excluded,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoFairOptions {
    pub kind: FunctionalKind,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub policy: WeightPolicy,
    /// Re-rank and re-select every this many iterations. Off by default:
    /// the ranking is computed once on the input geometry.
    pub rerank_every: Option<usize>,
}

impl AutoFairOptions {
    pub fn new(kind: FunctionalKind) -> Self {
        Self {
            kind,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
            policy: WeightPolicy::Clamp,
            rerank_every: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoFairRun {
    pub run: FairingRun,
    /// Ranking of the input geometry.
    pub ranking: Vec<RankedPoint>,
    /// Selected indices in rank order.
    pub selected: Vec<usize>,
}

/// Fairs only the `m` highest-impact control points. `weights` holds either
/// one value for all selected points or one value per selected point in
/// rank order.
pub fn auto_fair(geometry: &Geometry, m: usize, weights: &[f64], options: &AutoFairOptions) -> Result<AutoFairRun> {
    let n = geometry.len();
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!(
            "selection size must be between 1 and {n}, got {m}"
        )));
    }
    if weights.len() != 1 && weights.len() != m {
        return Err(Error::DimensionMismatch {
            what: "selected point weights",
            expected: m,
            actual: weights.len(),
        });
    }
    let d = Arc::new(geometry.gram(options.kind)?);
    let ranking = rank_with(&d, geometry)?;
    let selected: Vec<usize> = ranking[..m].iter().map(|r| r.index).collect();

    let bounds = weight_upper_bound(&d);
    let assign = |selected: &[usize]| {
        // Inactive points never move, so their weight only has to be valid.
        let mut w: Vec<f64> = bounds.iter().map(|b| 0.5 * b).collect();
        for (rank, &i) in selected.iter().enumerate() {
            w[i] = if weights.len() == 1 { weights[0] } else { weights[rank] };
        }
        w
    };

    let config = FairingConfig {
        kind: options.kind,
        weights: assign(&selected),
        active_set: Some(selected.clone()),
        max_iterations: options.max_iterations,
        tolerance: options.tolerance,
        policy: options.policy,
    };
    let mut process = FairingProcess::with_gram(geometry, &config, d.clone())?;
    match options.rerank_every {
        None | Some(0) => {
            process.run(options.max_iterations)?;
        }
        Some(every) => {
            let mut remaining = options.max_iterations;
            loop {
                let chunk = every.min(remaining);
                let stop = process.run(chunk)?;
                remaining -= chunk;
                if stop != StopReason::IterationCap || remaining == 0 {
                    break;
                }
                let current = process.current_geometry()?;
                let now: Vec<usize> = rank_with(&d, &current)?[..m].iter().map(|r| r.index).collect();
                process.set_weights(&assign(&now))?;
                process.set_active_set(Some(now))?;
            }
        }
    }
    Ok(AutoFairRun {
        run: process.finish()?,
        ranking,
        selected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{BSplineCurve, ControlPoints, KnotVector};

    fn curve(rows: &[[f64; 2]]) -> Geometry {
        BSplineCurve::new(
            KnotVector::uniform(rows.len(), 3).unwrap(),
            ControlPoints::from_rows(rows).unwrap(),
        )
        .unwrap()
        .into()
    }

    fn straight(n: usize) -> Geometry {
        let kv = KnotVector::uniform(n, 3).unwrap();
        let rows: Vec<[f64; 2]> = kv.greville().iter().map(|&t| [t, -2.0 * t]).collect();
        curve(&rows)
    }

    #[test]
    fn straight_line_has_no_impact() {
        let g = straight(9);
        let k = FunctionalKind::CurveOrder(2);
        for j in 0..9 {
            assert!(energy_impact(&g, j, k).unwrap().abs() < 1e-20);
            let p = optimal_single_point(&g, j, k).unwrap();
            assert!((p[0] - g.points().point(j)[0]).abs() < 1e-12);
        }
        let ranking = rank_control_points(&g, k).unwrap();
        let order: Vec<usize> = ranking.iter().map(|r| r.index).collect();
        // All Z are numerically tiny but not exactly equal; just check it is a permutation.
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(sorted, (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn exact_zero_impacts_tie_break_by_index() {
        let rows = [[1.0, 1.0]; 7];
        let ranking = rank_control_points(&curve(&rows), FunctionalKind::CurveOrder(2)).unwrap();
        for (r, p) in ranking.iter().enumerate() {
            assert_eq!(p.index, r);
            assert_eq!(p.rank, r + 1);
            assert_eq!(p.z, 0.0);
        }
    }

    #[test]
    fn impact_equals_energy_drop() {
        let g = curve(&[[0.0, 0.0], [1.0, 0.3], [2.0, -0.5], [3.0, 1.0], [4.0, 0.0], [5.0, 0.2]]);
        let k = FunctionalKind::CurveOrder(2);
        let e = g.energy(k).unwrap();
        for j in 0..6 {
            let mut pts = g.points().clone();
            pts.point_mut(j).copy_from_slice(&optimal_single_point(&g, j, k).unwrap());
            let e_hat = g.with_points(pts).unwrap().energy(k).unwrap();
            let z = energy_impact(&g, j, k).unwrap();
            assert!(((e - e_hat) - z).abs() <= 1e-9 * e, "j={j}");
        }
    }

    #[test]
    fn selection_size_and_weight_count_are_checked() {
        let g = straight(6);
        let o = AutoFairOptions::new(FunctionalKind::CurveOrder(2));
        assert!(auto_fair(&g, 0, &[1e-3], &o).is_err());
        assert!(auto_fair(&g, 7, &[1e-3], &o).is_err());
        assert!(auto_fair(&g, 3, &[1e-3, 1e-3], &o).is_err());
    }

    #[test]
    fn out_of_range_point_is_rejected() {
        assert!(energy_impact(&straight(5), 5, FunctionalKind::CurveOrder(2)).is_err());
    }
}
