//! Clamped (open) knot vectors.

use crate::{Error, Result};

/// A clamped knot vector of degree `p`: the first and last `p + 1` knots
/// coincide, and interior knots have multiplicity at most `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    knots: Vec<f64>,
    degree: usize,
}

impl KnotVector {
    pub fn new(knots: Vec<f64>, degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidKnots("degree must be at least 1".into()));
        }
        if knots.len() < 2 * (degree + 1) {
            return Err(Error::InvalidKnots(format!(
                "{} knots cannot carry a clamped spline of degree {degree}",
                knots.len()
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidKnots("non-finite knot".into()));
        }
        if let Some(i) = knots.windows(2).position(|w| w[0] > w[1]) {
            return Err(Error::InvalidKnots(format!(
                "knots decrease at index {i}: {} > {}",
                knots[i],
                knots[i + 1]
            )));
        }
        let m = knots.len();
        let clamped_start = knots[..=degree].iter().all(|&k| k == knots[0]);
        let clamped_end = knots[m - degree - 1..].iter().all(|&k| k == knots[m - 1]);
        if !clamped_start || !clamped_end {
            return Err(Error::InvalidKnots(format!(
                "knot vector is not clamped: first and last {} knots must coincide",
                degree + 1
            )));
        }
        if knots[0] >= knots[m - 1] {
            return Err(Error::InvalidKnots("degenerate parameter domain".into()));
        }
        let interior = &knots[degree + 1..m - degree - 1];
        let mut run = 1;
        for w in interior.windows(2) {
            run = if w[0] == w[1] { run + 1 } else { 1 };
            if run > degree {
                return Err(Error::InvalidKnots(format!(
                    "interior knot {} has multiplicity above the degree",
                    w[0]
                )));
            }
        }
        if interior
            .iter()
            .any(|&k| k == knots[0] || k == knots[m - 1])
        {
            return Err(Error::InvalidKnots(
                "end knots have multiplicity above degree + 1".into(),
            ));
        }
        Ok(Self { knots, degree })
    }

    /// Uniformly spaced clamped knots on `[0, 1]` for `count` control points.
    pub fn uniform(count: usize, degree: usize) -> Result<Self> {
        if count < degree + 1 {
            return Err(Error::InvalidKnots(format!(
                "{count} control points are too few for degree {degree}"
            )));
        }
        let spans = count - degree;
        let mut knots = vec![0.0; degree + 1];
        knots.extend((1..spans).map(|i| i as f64 / spans as f64));
        knots.extend(std::iter::repeat_n(1.0, degree + 1));
        Self::new(knots, degree)
    }

    /// Clamped knots built from strictly increasing interior breakpoints on
    /// the domain `[lower, upper]`.
    pub fn with_interior(lower: f64, upper: f64, interior: &[f64], degree: usize) -> Result<Self> {
        let mut knots = vec![lower; degree + 1];
        knots.extend_from_slice(interior);
        knots.extend(std::iter::repeat_n(upper, degree + 1));
        Self::new(knots, degree)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions (control points) the vector supports.
    pub fn basis_count(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[self.degree], self.knots[self.basis_count()])
    }

    pub fn contains(&self, t: f64) -> bool {
        let (a, b) = self.domain();
        t >= a && t <= b
    }

    /// Index `s` with `knots[s] <= t < knots[s + 1]`; at the right end of the
    /// domain the last non-degenerate span is returned.
    pub fn find_span(&self, t: f64) -> Result<usize> {
        let (a, b) = self.domain();
        if !(t >= a && t <= b) {
            return Err(Error::Domain {
                t,
                lower: a,
                upper: b,
            });
        }
        let n = self.basis_count();
        if t >= self.knots[n] {
            return Ok(n - 1);
        }
        // upper bound in knots[p..=n]
        let slice = &self.knots[self.degree..=n];
        let pos = slice.partition_point(|&k| k <= t);
        Ok(self.degree + pos - 1)
    }

    /// Non-degenerate knot spans as `(span index, lower, upper)`.
    pub fn spans(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        (self.degree..self.basis_count())
            .filter(move |&s| self.knots[s + 1] > self.knots[s])
            .map(move |s| (s, self.knots[s], self.knots[s + 1]))
    }

    /// Greville abscissae: the natural parameter associated with each basis
    /// function.
    pub fn greville(&self) -> Vec<f64> {
        let p = self.degree;
        (0..self.basis_count())
            .map(|i| self.knots[i + 1..=i + p].iter().sum::<f64>() / p as f64)
            .collect()
    }
}
