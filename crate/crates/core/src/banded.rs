//! Cholesky factorisation of symmetric positive definite band matrices.

use nalgebra::linalg::Cholesky;

use crate::{ControlPoints, Error, GramMatrix, Result};

/// A factorisation `M = L Lᵀ` of a [`GramMatrix`]-shaped SPD matrix.
pub enum SpdFactor {
    Dense(Cholesky<f64, nalgebra::Dyn>),
    /// `lower[i * (w + 1) + k] = L[i][i - w + k]`.
    Band { n: usize, w: usize, lower: Vec<f64> },
}

impl SpdFactor {
    pub fn new(m: &GramMatrix) -> Result<Self> {
        if m.is_dense() {
            let dense = m.to_dense();
            return Cholesky::new(dense)
                .map(SpdFactor::Dense)
                .ok_or_else(|| Error::Numerical(diagnostics(m, None)));
        }
        let n = m.size();
        let w = m.half_bandwidth();
        let idx = |i: usize, j: usize| i * (w + 1) + (j + w - i);
        let mut lower = vec![0.0; n * (w + 1)];
        for i in 0..n {
            let j0 = i.saturating_sub(w);
            for j in j0..=i {
                let k0 = i.saturating_sub(w).max(j.saturating_sub(w));
                let mut s = m.get(i, j);
                for k in k0..j {
                    s -= lower[idx(i, k)] * lower[idx(j, k)];
                }
                if i == j {
                    if s.is_nan() || s <= 0.0 || !s.is_finite() {
                        return Err(Error::Numerical(diagnostics(m, Some((i, s)))));
                    }
                    lower[idx(i, i)] = s.sqrt();
                } else {
                    lower[idx(i, j)] = s / lower[idx(j, j)];
                }
            }
        }
        Ok(SpdFactor::Band { n, w, lower })
    }

    pub fn solve_vec(&self, rhs: &[f64]) -> Vec<f64> {
        match self {
            SpdFactor::Dense(c) => c.solve(&nalgebra::DVector::from_column_slice(rhs)).as_slice().to_vec(),
            SpdFactor::Band { n, w, lower } => {
                let (n, w) = (*n, *w);
                let idx = |i: usize, j: usize| i * (w + 1) + (j + w - i);
                let mut y = rhs.to_vec();
                for i in 0..n {
                    let mut s = y[i];
                    for k in i.saturating_sub(w)..i {
                        s -= lower[idx(i, k)] * y[k];
                    }
                    y[i] = s / lower[idx(i, i)];
                }
                for i in (0..n).rev() {
                    let mut s = y[i];
                    for k in i + 1..(i + w + 1).min(n) {
                        s -= lower[idx(k, i)] * y[k];
                    }
                    y[i] = s / lower[idx(i, i)];
                }
                y
            }
        }
    }

    /// Solves coordinate by coordinate.
    pub fn solve_points(&self, rhs: &ControlPoints) -> ControlPoints {
        let mut out = rhs.clone();
        for c in 0..rhs.dim() {
            let x = self.solve_vec(&rhs.column(c));
            out.set_column(c, &x);
        }
        out
    }
}

fn diagnostics(m: &GramMatrix, pivot: Option<(usize, f64)>) -> String {
    let min_diag = (0..m.size()).map(|i| m.diagonal(i)).fold(f64::INFINITY, f64::min);
    let mut msg = format!(
        "Cholesky factorisation failed: n = {}, half bandwidth = {}, max |entry| = {:e}, min diagonal = {:e}",
        m.size(),
        m.half_bandwidth(),
        m.max_abs(),
        min_diag
    );
    if let Some((i, s)) = pivot {
        msg.push_str(&format!(", non-positive pivot {s:e} at row {i}"));
    }
    msg
}
