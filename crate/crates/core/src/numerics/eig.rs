//! Cyclic complex Jacobi eigensolver for Hermitian matrices.

use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::error::{dims, Error, Result};

/// Eigenvalues in descending order, eigenvectors as matching columns.
#[derive(Debug, Clone)]
pub struct EigResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl EigResult {
    pub fn reconstruct(&self) -> ComplexMatrix {
        ComplexMatrix::reconstruct(&self.eigenvectors, &self.eigenvalues)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

pub const DEFAULT_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

pub(crate) fn check_hermitian(a: &ComplexMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(dims(format!(
            "{}x{} matrix is not square",
            a.rows(),
            a.cols()
        )));
    }
    let scale = a.as_slice().iter().fold(1.0f64, |m, z| m.max(z.norm()));
    let defect = a.hermitian_defect();
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

/// Unitary 2x2 rotation `[[c, s e^{iφ}], [-s e^{-iφ}, c]]` that annihilates
/// the (p, q) entry of the Hermitian pair `[[app, apq], [conj(apq), aqq]]`.
#[derive(Clone, Copy)]
pub(crate) struct Rotation {
    pub c: f64,
    /// s·e^{iφ}
    pub s_phase: Complex64,
}

impl Rotation {
    pub fn annihilating(app: f64, aqq: f64, apq: Complex64) -> Self {
        let mag = apq.norm();
        let phase = apq / mag;
        let tau = (aqq - app) / (2.0 * mag);
        let t = if tau >= 0.0 {
            1.0 / (tau + (1.0 + tau * tau).sqrt())
        } else {
            -1.0 / (-tau + (1.0 + tau * tau).sqrt())
        };
        let c = 1.0 / (1.0 + t * t).sqrt();
        Rotation {
            c,
            s_phase: phase * (t * c),
        }
    }

    /// M <- M J on columns p, q.
    pub fn apply_right(&self, m: &mut ComplexMatrix, p: usize, q: usize) {
        let c = self.c;
        let sp = self.s_phase;
        for k in 0..m.rows() {
            let mp = m[(k, p)];
            let mq = m[(k, q)];
            m[(k, p)] = mp * c - mq * sp.conj();
            m[(k, q)] = mp * sp + mq * c;
        }
    }

    /// M <- J^H M on rows p, q.
    pub fn apply_left_adjoint(&self, m: &mut ComplexMatrix, p: usize, q: usize) {
        let c = self.c;
        let sp = self.s_phase;
        for k in 0..m.cols() {
            let mp = m[(p, k)];
            let mq = m[(q, k)];
            m[(p, k)] = mp * c - mq * sp;
            m[(q, k)] = mp * sp.conj() + mq * c;
        }
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Eigendecomposition of a Hermitian matrix. The reconstruction error
/// `‖A − VΛV^H‖_F` is driven below `tol·‖A‖_F`.
pub fn hermitian_eig(a: &ComplexMatrix, tol: f64) -> Result<EigResult> {
    check_hermitian(a)?;
    let n = a.rows();
    jacobi(a.hermitian_part(), ComplexMatrix::identity(n), tol)
}

/// Same as [`hermitian_eig`] but starts from an approximate eigenbasis
/// `guess` (unitary), which makes repeated decompositions of slowly varying
/// matrices cheap.
pub fn hermitian_eig_warm(a: &ComplexMatrix, guess: &ComplexMatrix, tol: f64) -> Result<EigResult> {
    check_hermitian(a)?;
    if guess.rows() != a.rows() || !guess.is_square() {
        return Err(dims("warm-start basis does not match the matrix"));
    }
    let rotated = guess.adjoint().matmul(&a.hermitian_part()).matmul(guess);
    jacobi(rotated.hermitian_part(), guess.clone(), tol)
}

fn jacobi(mut a: ComplexMatrix, mut v: ComplexMatrix, tol: f64) -> Result<EigResult> {
    let n = a.rows();
    let norm = a.frobenius_norm();
    let target = (tol.min(1e-12) * 1e-2 * norm).max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= target {
            break;
        }
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let mag = apq.norm();
                if mag == 0.0 || mag <= f64::EPSILON * 1e-3 * (app.abs() * aqq.abs()).sqrt() {
                    a[(p, q)] = Complex64::new(0.0, 0.0);
                    a[(q, p)] = Complex64::new(0.0, 0.0);
                    continue;
                }
                let rot = Rotation::annihilating(app, aqq, apq);
                rot.apply_right(&mut a, p, q);
                rot.apply_left_adjoint(&mut a, p, q);
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
                rot.apply_right(&mut v, p, q);
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    if !eigenvectors.all_finite() {
        return Err(Error::NonFinite("eigenvectors".into()));
    }
    Ok(EigResult {
        eigenvalues,
        eigenvectors,
    })
}

/// Euclidean projection of a Hermitian matrix onto the PSD cone.
pub fn psd_project(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(a, DEFAULT_TOL)?;
    Ok(project_from_eig(&eig))
}

pub(crate) fn project_from_eig(eig: &EigResult) -> ComplexMatrix {
    let clamped: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    ComplexMatrix::reconstruct(&eig.eigenvectors, &clamped).hermitian_part()
}
