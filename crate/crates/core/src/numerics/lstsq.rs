use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::error::{dims, Error, Result};

/// Relative pivot threshold below which the Gram matrix is treated as singular.
const PIVOT_TOL: f64 = 1e-13;

/// Least-squares solution of `min ‖Ax − b‖₂` through the normal equations
/// `A^H A x = A^H b` and a Cholesky factorization.
pub fn lstsq(a: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    if b.len() != a.rows() {
        return Err(dims(format!(
            "rhs has {} entries, matrix has {} rows",
            b.len(),
            a.rows()
        )));
    }
    if a.rows() < a.cols() {
        return Err(dims("least squares needs rows >= cols"));
    }
    let gram = a.adjoint().matmul(a);
    let rhs = a.adjoint_matvec(b);
    let l = cholesky(&gram)?;
    Ok(cholesky_solve(&l, &rhs))
}

/// Lower-triangular factor of a Hermitian positive definite matrix.
pub fn cholesky(g: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = g.rows();
    let scale = (0..n).map(|i| g[(i, i)].re).fold(0.0f64, f64::max);
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = g[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > PIVOT_TOL * scale) {
            return Err(Error::RankDeficient);
        }
        let d = d.sqrt();
        l[(j, j)] = Complex64::new(d, 0.0);
        for i in (j + 1)..n {
            let mut s = g[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &ComplexMatrix, b: &[Complex64]) -> Vec<Complex64> {
    let n = l.rows();
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            let t = l[(i, k)] * y[k];
            y[i] -= t;
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let t = l[(k, i)].conj() * y[k];
            y[i] -= t;
        }
        y[i] /= l[(i, i)];
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn identity_returns_rhs() {
        let b = vec![c(1.0), Complex64::new(2.0, -1.0), c(3.0)];
        let x = lstsq(&ComplexMatrix::identity(3), &b).unwrap();
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).norm() < 1e-15);
        }
    }

    #[test]
    fn column_of_ones_gives_mean() {
        let a = ComplexMatrix::from_real(2, 1, &[1.0, 1.0]).unwrap();
        let x = lstsq(&a, &[c(0.0), c(2.0)]).unwrap();
        assert!((x[0] - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn rank_deficient_is_rejected() {
        let a = ComplexMatrix::from_real(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]).unwrap();
        assert!(matches!(
            lstsq(&a, &[c(1.0), c(0.0), c(0.0)]),
            Err(Error::RankDeficient)
        ));
    }
}
