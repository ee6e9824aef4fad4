//! Deviation and energy metrics recorded along a fairing run.

use serde::{Deserialize, Serialize};

use crate::points::distance_sq;
use crate::{ControlPoints, Result};

/// Denominators below this are treated as an exact fixed point.
pub const FIXED_POINT_EPS: f64 = 1e-30;

/// One row of a fairing trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricsRecord {
    pub k: usize,
    /// Root mean squared control point deviation from the original.
    pub e_dev: f64,
    /// Relative iteration deviation; absent at `k = 0` and at fixed points.
    pub e_iter: Option<f64>,
    /// Absolute fairing energy.
    pub e_abs: f64,
    /// Energy relative to the original; absent when the original is zero.
    pub e_rel: Option<f64>,
}

/// `sqrt(Σ ||P_i^[k] - P_i||² / n)`.
pub fn rmse_deviation(current: &ControlPoints, original: &ControlPoints) -> Result<f64> {
    current.check_same_shape(original)?;
    if current.is_empty() {
        return Ok(0.0);
    }
    let s: f64 = current
        .iter()
        .zip(original.iter())
        .map(|(a, b)| distance_sq(a, b))
        .sum();
    Ok((s / current.len() as f64).sqrt())
}

/// `sqrt(Σ ||P^[k] - P^[k-1]||² / Σ ||P^[k] - P^[0]||²)`, summed over
/// `indices` when given. Returns `Ok(None)` when the denominator vanishes,
/// which happens exactly at a fixed point of the iteration.
pub fn relative_iter_deviation(
    current: &ControlPoints,
    previous: &ControlPoints,
    initial: &ControlPoints,
    indices: Option<&[usize]>,
) -> Result<Option<f64>> {
    current.check_same_shape(previous)?;
    current.check_same_shape(initial)?;
    let term = |i: usize| {
        (
            distance_sq(current.point(i), previous.point(i)),
            distance_sq(current.point(i), initial.point(i)),
        )
    };
    let (num, den) = match indices {
        Some(idx) => idx.iter().map(|&i| term(i)).fold((0.0, 0.0), add),
        None => (0..current.len()).map(term).fold((0.0, 0.0), add),
    };
    if den < FIXED_POINT_EPS {
        return Ok(None);
    }
    Ok(Some((num / den).sqrt()))
}

fn add(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 + b.0, a.1 + b.1)
}

/// `e_k / e_0`, absent when the initial energy is zero (a straight line
/// under any curve functional, for instance).
pub fn relative_energy(energy: f64, initial_energy: f64) -> Option<f64> {
    if initial_energy > 0.0 {
        Some(energy / initial_energy)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(rows: &[[f64; 2]]) -> ControlPoints {
        ControlPoints::from_rows(rows).unwrap()
    }

    #[test]
    fn rmse_of_identical_sets_is_zero() {
        let a = pts(&[[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(rmse_deviation(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn rmse_single_displacement() {
        let a = pts(&[[0.0, 0.0]; 9]);
        let mut b = a.clone();
        b.point_mut(4)[1] = 3.0;
        assert!((rmse_deviation(&b, &a).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rmse_length_mismatch() {
        let a = pts(&[[0.0, 0.0]; 3]);
        let b = pts(&[[0.0, 0.0]; 4]);
        assert!(rmse_deviation(&a, &b).is_err());
    }

    #[test]
    fn iter_deviation_limits() {
        let p0 = pts(&[[0.0, 0.0], [1.0, 0.0]]);
        let pk = pts(&[[0.0, 1.0], [1.0, 1.0]]);
        assert_eq!(relative_iter_deviation(&pk, &pk, &p0, None).unwrap(), Some(0.0));
        assert_eq!(relative_iter_deviation(&pk, &p0, &p0, None).unwrap(), Some(1.0));
        assert_eq!(relative_iter_deviation(&p0, &p0, &p0, None).unwrap(), None);
    }

    #[test]
    fn iter_deviation_restricted_to_indices() {
        let p0 = pts(&[[0.0, 0.0], [0.0, 0.0]]);
        let prev = pts(&[[0.0, 0.5], [0.0, 0.0]]);
        let pk = pts(&[[0.0, 1.0], [5.0, 0.0]]);
        let v = relative_iter_deviation(&pk, &prev, &p0, Some(&[0])).unwrap().unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn relative_energy_cases() {
        assert_eq!(relative_energy(3.0, 3.0), Some(1.0));
        assert_eq!(relative_energy(1.5, 3.0), Some(0.5));
        assert_eq!(relative_energy(0.0, 0.0), None);
    }
}
