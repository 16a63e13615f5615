//! Singular value decomposition by one-sided (Hestenes) Jacobi.
//!
//! Columns of the working matrix are rotated pairwise until mutually
//! orthogonal. Working on the matrix itself, rather than on its Gram matrix,
//! keeps small singular values accurate to roughly `eps·σ_max`.

use num_complex::Complex64;

use super::eig::Rotation;
use super::matrix::{dot, norm, ComplexMatrix};

const MAX_SWEEPS: usize = 80;
const ORTHO_TOL: f64 = 1e-15;

/// Thin SVD `A = U diag(σ) V^H` with `p = min(m, n)` singular triplets.
#[derive(Debug, Clone)]
pub struct Svd {
    /// m x p, orthonormal columns.
    pub u: ComplexMatrix,
    /// p values, descending.
    pub singular_values: Vec<f64>,
    /// n x p, orthonormal columns.
    pub v: ComplexMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut us = self.u.clone();
        for j in 0..us.cols() {
            for i in 0..us.rows() {
                us[(i, j)] *= self.singular_values[j];
            }
        }
        us.matmul(&self.v.adjoint())
    }
}

pub fn svd(a: &ComplexMatrix) -> Svd {
    if a.rows() >= a.cols() {
        tall_svd(a)
    } else {
        let t = tall_svd(&a.adjoint());
        Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        }
    }
}

fn tall_svd(a: &ComplexMatrix) -> Svd {
    let (m, n) = (a.rows(), a.cols());
    let mut w = a.clone();
    let mut v = ComplexMatrix::identity(n);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, Complex64::new(0.0, 0.0));
                for i in 0..m {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    alpha += wp.norm_sqr();
                    beta += wq.norm_sqr();
                    gamma += wp.conj() * wq;
                }
                let g = gamma.norm();
                if g == 0.0 || g <= ORTHO_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                let rot = Rotation::annihilating(alpha, beta, gamma);
                rot.apply_right(&mut w, p, q);
                rot.apply_right(&mut v, p, q);
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n).map(|j| norm(&w.column(j))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let sigma_max = order.first().map(|&i| norms[i]).unwrap_or(0.0);
    let negligible = sigma_max * f64::EPSILON * (m.max(n) as f64);
    let mut u = ComplexMatrix::zeros(m, n);
    let mut filled = Vec::with_capacity(n);
    for (col, &src) in order.iter().enumerate() {
        let s = norms[src];
        if s > negligible && s > 0.0 {
            let c: Vec<Complex64> = w.column(src).iter().map(|z| z / s).collect();
            u.set_column(col, &c);
            filled.push(col);
        }
    }
    let u = complete_columns(u, &filled);
    let singular_values = order.iter().map(|&i| norms[i]).collect();
    let v = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Svd {
        u,
        singular_values,
        v,
    }
}

/// Replaces the columns of `m` not listed in `filled` with unit vectors
/// orthogonal to every other column (modified Gram-Schmidt against the
/// standard basis).
fn complete_columns(mut m: ComplexMatrix, filled: &[usize]) -> ComplexMatrix {
    let rows = m.rows();
    let mut basis: Vec<Vec<Complex64>> = filled.iter().map(|&j| m.column(j)).collect();
    let mut candidate = 0;
    for col in 0..m.cols() {
        if filled.contains(&col) {
            continue;
        }
        while candidate < rows {
            let mut e = vec![Complex64::new(0.0, 0.0); rows];
            e[candidate] = Complex64::new(1.0, 0.0);
            candidate += 1;
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(b, &e);
                    for (x, y) in e.iter_mut().zip(b) {
                        *x -= c * y;
                    }
                }
            }
            let nrm = norm(&e);
            if nrm > 1e-8 {
                let e: Vec<Complex64> = e.iter().map(|z| z / nrm).collect();
                m.set_column(col, &e);
                basis.push(e);
                break;
            }
        }
    }
    m
}

/// Extends `k` orthonormal columns to a full `n x n` unitary basis; the
/// first `k` columns are kept as given.
pub fn complete_basis(cols: &ComplexMatrix) -> ComplexMatrix {
    let n = cols.rows();
    let k = cols.cols().min(n);
    let mut m = ComplexMatrix::zeros(n, n);
    for j in 0..k {
        m.set_column(j, &cols.column(j));
    }
    let filled: Vec<usize> = (0..k).collect();
    complete_columns(m, &filled)
}
