//! B-spline basis functions and their derivatives.
//!
//! Values are produced with the triangular knot-difference recurrence
//! (Cox–de Boor for the functions, the differentiated recurrence for the
//! derivatives), so no numerical differentiation is involved.

use crate::{Error, KnotVector, Result};

/// Values of the `p + 1` basis functions (or one of their derivatives)
/// that can be nonzero at a parameter. `values[k]` belongs to basis
/// function `first + k`; every other basis function is exactly zero there.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveBasis {
    pub first: usize,
    pub values: Vec<f64>,
}

impl ActiveBasis {
    pub fn indices(&self) -> std::ops::Range<usize> {
        self.first..self.first + self.values.len()
    }

    /// Value for global basis index `i`, zero outside the active window.
    pub fn get(&self, i: usize) -> f64 {
        if self.indices().contains(&i) {
            self.values[i - self.first]
        } else {
            0.0
        }
    }
}

/// Derivative of order `order` of every basis function active at `t`.
pub fn basis_derivatives(kv: &KnotVector, t: f64, order: usize) -> Result<ActiveBasis> {
    let mut all = basis_derivatives_upto(kv, t, order)?;
    let values = all.pop().expect("at least order 0");
    Ok(ActiveBasis {
        first: kv.find_span(t)? - kv.degree(),
        values,
    })
}

/// Rows `0..=max_order` of derivatives for the active basis functions at
/// `t`; row `k` holds the `k`-th derivatives.
pub fn basis_derivatives_upto(kv: &KnotVector, t: f64, max_order: usize) -> Result<Vec<Vec<f64>>> {
    let p = kv.degree();
    if max_order > p {
        return Err(Error::UnsupportedOrder {
            order: max_order,
            degree: p,
        });
    }
    let span = kv.find_span(t)?;
    Ok(ders_at_span(kv.knots(), p, span, t, max_order))
}

/// Derivatives at a known span. `t` must lie in `[knots[span], knots[span+1]]`.
pub(crate) fn ders_at_span(
    knots: &[f64],
    p: usize,
    span: usize,
    t: f64,
    max_order: usize,
) -> Vec<Vec<f64>> {
    // ndu holds basis values (upper triangle) and knot differences (lower).
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = t - knots[span + 1 - j];
        right[j] = knots[span + j] - t;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    let mut ders = vec![vec![0.0; p + 1]; max_order + 1];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }

    let mut a = vec![vec![0.0; p + 1]; 2];
    for r in 0..=p {
        let (mut s1, mut s2) = (0, 1);
        a[0][0] = 1.0;
        for k in 1..=max_order {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[pk + 1][r - k];
                d = a[s2][0] * ndu[r - k][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
            for j in j1..=j2 {
                let col = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][col];
                d += a[s2][j] * ndu[col][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }

    let mut factor = p as f64;
    for (k, row) in ders.iter_mut().enumerate().skip(1) {
        for v in row.iter_mut() {
            *v *= factor;
        }
        factor *= (p - k) as f64;
    }
    ders
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bezier3() -> KnotVector {
        KnotVector::new(vec![0., 0., 0., 0., 1., 1., 1., 1.], 3).unwrap()
    }

    #[test]
    fn clamped_start_is_interpolatory() {
        let b = basis_derivatives(&bezier3(), 0.0, 0).unwrap();
        assert_eq!(b.first, 0);
        assert_eq!(b.values, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn bernstein_second_derivative_at_midpoint() {
        // Bernstein second derivatives (6(1-t), 18t-12, 6-18t, 6t) at 1/2.
        let b = basis_derivatives(&bezier3(), 0.5, 2).unwrap();
        let expected = [3.0, -3.0, -3.0, 3.0];
        for (v, e) in b.values.iter().zip(expected) {
            assert!((v - e).abs() < 1e-12, "{v} vs {e}");
        }
    }

    #[test]
    fn order_above_degree_is_rejected() {
        assert_eq!(
            basis_derivatives(&bezier3(), 0.5, 4),
            Err(Error::UnsupportedOrder { order: 4, degree: 3 })
        );
    }

    #[test]
    fn outside_domain_is_rejected() {
        assert!(matches!(
            basis_derivatives(&bezier3(), -0.1, 0),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn third_derivative_of_cubic_is_piecewise_constant() {
        let kv = KnotVector::uniform(7, 3).unwrap();
        let a = basis_derivatives(&kv, 0.26, 3).unwrap();
        let b = basis_derivatives(&kv, 0.49, 3).unwrap();
        assert_eq!(a.first, b.first);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn active_window_lookup() {
        let kv = KnotVector::uniform(8, 2).unwrap();
        let b = basis_derivatives(&kv, 0.55, 0).unwrap();
        assert_eq!(b.indices().len(), 3);
        assert_eq!(b.get(0), 0.0);
        assert!(b.get(b.first) > 0.0);
    }
}
