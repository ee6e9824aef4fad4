//! Flat storage for control points of dimension 2 or 3.

use crate::{Error, Result};

/// A sequence of points stored row-major: point `i` occupies
/// `data[i * dim..(i + 1) * dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPoints {
    dim: usize,
    data: Vec<f64>,
}

impl ControlPoints {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidGeometry(format!(
                "points must be 2D or 3D, got dimension {dim}"
            )));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidGeometry(format!(
                "{} coordinates do not divide into {dim}-dimensional points",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGeometry("non-finite coordinate".into()));
        }
        Ok(Self { dim, data })
    }

    /// Builds from a list of rows; every row must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(2);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::InvalidGeometry(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    pub fn zeros(dim: usize, len: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * len],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn point_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }

    /// Coordinate `c` of every point.
    pub fn column(&self, c: usize) -> Vec<f64> {
        self.iter().map(|p| p[c]).collect()
    }

    pub fn set_column(&mut self, c: usize, values: &[f64]) {
        for (i, v) in values.iter().enumerate() {
            self.data[i * self.dim + c] = *v;
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn translated(&self, offset: &[f64]) -> Self {
        let mut out = self.clone();
        for p in out.data.chunks_exact_mut(self.dim) {
            for (x, o) in p.iter_mut().zip(offset) {
                *x += o;
            }
        }
        out
    }

    /// (min, max) corners of the axis-aligned bounding box.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.iter() {
            for c in 0..self.dim {
                lo[c] = lo[c].min(p[c]);
                hi[c] = hi[c].max(p[c]);
            }
        }
        (lo, hi)
    }

    pub fn bounding_diagonal(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let (lo, hi) = self.bounding_box();
        lo.iter()
            .zip(&hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    /// Largest absolute coordinate.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest Euclidean distance between corresponding points.
    pub fn max_distance(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .iter()
            .zip(other.iter())
            .map(|(a, b)| distance(a, b))
            .fold(0.0, f64::max))
    }

    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                what: "point dimension",
                expected: self.dim,
                actual: other.dim,
            });
        }
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                what: "point count",
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(())
    }
}

pub(crate) fn distance_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    distance_sq(a, b).sqrt()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_rows() {
        let rows = vec![vec![0.0, 1.0], vec![1.0, 2.0, 3.0]];
        assert!(ControlPoints::from_rows(&rows).is_err());
    }

    #[test]
    fn rejects_unsupported_dimension() {
        assert!(ControlPoints::new(4, vec![0.0; 8]).is_err());
        assert!(ControlPoints::new(1, vec![0.0; 3]).is_err());
    }

    #[test]
    fn bounding_diagonal_of_unit_square() {
        let p = ControlPoints::from_rows(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]).unwrap();
        assert!((p.bounding_diagonal() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn columns_round_trip() {
        let mut p = ControlPoints::from_rows(&[[0.0, 1.0, 2.0], [3.0, 4.0, 5.0]]).unwrap();
        assert_eq!(p.column(1), vec![1.0, 4.0]);
        p.set_column(1, &[7.0, 8.0]);
        assert_eq!(p.point(1), &[3.0, 8.0, 5.0]);
    }
}
