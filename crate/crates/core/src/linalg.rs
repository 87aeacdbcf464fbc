//! Small numeric helpers shared across modules.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Symmetric matrix stored as its strict upper triangle plus a diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymMatrix {
    pub n: usize,
    /// `(i, j, value)` with `i < j`.
    pub upper: Vec<(usize, usize, f64)>,
    pub diagonal: Vec<f64>,
}

impl SparseSymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, upper: Vec::new(), diagonal: vec![0.0; n] }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, &d) in self.diagonal.iter().enumerate() {
            m[(i, i)] = d;
        }
        for &(i, j, v) in &self.upper {
            m[(i, j)] += v;
            m[(j, i)] += v;
        }
        m
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.diagonal.iter().zip(x).map(|(d, v)| d * v).collect();
        for &(i, j, v) in &self.upper {
            y[i] += v * x[j];
            y[j] += v * x[i];
        }
        y
    }
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(e^a + e^b)` that tolerates infinite arguments.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    if m == f64::INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Pairwise (cascade) summation with a fixed association order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn symmetry_defect(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn require_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::invalid("matrix is not square"));
    }
    let scale = m.amax().max(1.0);
    if symmetry_defect(m) > 1e-9 * scale {
        return Err(Error::invalid("matrix is not symmetric"));
    }
    Ok(())
}

pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    require_symmetric(m)?;
    if m.nrows() == 0 {
        return Ok(DVector::zeros(0));
    }
    let sym = (m + m.transpose()) * 0.5;
    let vals = sym.symmetric_eigenvalues();
    if vals.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("symmetric eigensolver produced non-finite values".into()));
    }
    Ok(vals)
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    Ok(sym_eigenvalues(m)?.iter().copied().fold(f64::INFINITY, f64::min))
}

pub fn max_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    Ok(sym_eigenvalues(m)?.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Operator 2-norm of a symmetric matrix; zero for an empty matrix.
pub fn sym_operator_norm(m: &DMatrix<f64>) -> Result<f64> {
    Ok(sym_eigenvalues(m)?.iter().fold(0.0f64, |a, &x| a.max(x.abs())))
}

/// Largest singular value of an arbitrary matrix.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

/// Max absolute row sum.
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn logistic_is_stable_at_extremes() {
        assert_eq!(logistic(1000.0), 1.0);
        assert_eq!(logistic(-1000.0), 0.0);
        assert_relative_eq!(logistic(0.3) + logistic(-0.3), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn log_add_exp_handles_infinities() {
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 2.0), 2.0);
        assert_eq!(log_add_exp(f64::INFINITY, 2.0), f64::INFINITY);
        assert_relative_eq!(log_add_exp(0.0, 0.0), 2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn sparse_dense_agree() {
        let s = SparseSymMatrix { n: 3, upper: vec![(0, 1, 2.0), (1, 2, -1.0)], diagonal: vec![1.0, 0.0, 3.0] };
        let d = s.to_dense();
        let x = [1.0, 2.0, 3.0];
        let y = &d * DVector::from_column_slice(&x);
        assert_eq!(s.matvec(&x), y.as_slice());
        assert_relative_eq!(min_eigenvalue(&d).unwrap(), sym_eigenvalues(&d).unwrap().min(), epsilon = 1e-14);
    }

    #[test]
    fn norms_of_rotation() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert_relative_eq!(operator_norm(&m), 1.0, epsilon = 1e-14);
        assert_relative_eq!(inf_norm(&m), 1.0);
        assert!(sym_eigenvalues(&m).is_err());
    }
}
