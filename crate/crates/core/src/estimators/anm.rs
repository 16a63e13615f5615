//! Atomic-norm denoising through the semidefinite program
//!
//! ```text
//! min_{B,h} ‖r − h‖²   s.t.  [[B, h], [h^H, 1]] ⪰ 0,  B Hermitian,
//!                            Tr B = β²,  Σ_n B_{n,n+d} = 0 for d ≠ 0
//! ```
//!
//! The off-diagonal sum constraints make `a^H(θ) B a(θ) = β²` for every θ, so
//! the feasible `h` are those with `|a^H(θ) h| ≤ β` everywhere. The solution
//! touches that bound at the source directions, which is why the peaks of
//! `|a^H(θ) h|²` locate the DOAs.
//!
//! Solved by ADMM on the splitting `Z = M(B, h)`: an affine least-squares
//! update of `(B, h)`, a PSD projection of `Z`, and a scaled dual step.
//! The program is homogeneous (`r → c·r` maps `(B, h, β)` to
//! `(c²B, c·h, c·β)`), so it is solved for `r / ‖r‖₂` and rescaled.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::Snapshot;
use crate::error::{invalid, Error, Result};
use crate::numerics::{
    hermitian_eig, hermitian_eig_warm, norm, project_from_eig, ComplexMatrix, DEFAULT_TOL,
};
use crate::spectrum::{find_peaks, AngleGrid, DoaEstimate, Spectrum, SteeringTable};

const BALANCE_RATIO: f64 = 10.0;
const BALANCE_EVERY: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnmConfig {
    /// Fixed β; when `None`, β = `beta_scale · ‖r‖₂`.
    pub beta: Option<f64>,
    pub beta_scale: f64,
    pub rho: f64,
    pub max_iters: usize,
    pub tol_primal: f64,
    pub tol_dual: f64,
}

impl Default for AnmConfig {
    fn default() -> Self {
        Self {
            beta: None,
            beta_scale: 1.2,
            rho: 1.0,
            max_iters: 5000,
            tol_primal: 1e-6,
            tol_dual: 1e-6,
        }
    }
}

impl AnmConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.beta_scale, self.rho, self.tol_primal, self.tol_dual];
        if positive.iter().any(|v| !(*v > 0.0)) || self.max_iters == 0 {
            return Err(invalid("ADMM settings must be positive"));
        }
        if let Some(b) = self.beta {
            if !(b > 0.0) {
                return Err(invalid("beta must be positive"));
            }
        }
        Ok(())
    }

    pub fn beta_for(&self, r: &[Complex64]) -> f64 {
        self.beta.unwrap_or_else(|| self.beta_scale * norm(r))
    }
}

#[derive(Debug, Clone)]
pub struct AnmSolution {
    pub h: Vec<Complex64>,
    pub b: ComplexMatrix,
    pub beta: f64,
    pub iterations: usize,
    /// Final residuals of the normalized (`‖r‖₂ = 1`) problem.
    pub primal_residual: f64,
    pub dual_residual: f64,
}

impl AnmSolution {
    /// `[[B, h], [h^H, 1]]`.
    pub fn lifted(&self) -> ComplexMatrix {
        lift(&self.b, &self.h)
    }

    /// Largest violation of the trace and off-diagonal sum constraints.
    pub fn affine_violation(&self) -> (f64, f64) {
        let n = self.h.len();
        let trace = (self.b.trace().re - self.beta * self.beta).abs();
        let mut worst = 0.0f64;
        for d in 1..n {
            let upper: Complex64 = (0..n - d).map(|i| self.b[(i, i + d)]).sum();
            let lower: Complex64 = (0..n - d).map(|i| self.b[(i + d, i)]).sum();
            worst = worst.max(upper.norm()).max(lower.norm());
        }
        (trace, worst)
    }
}

fn lift(b: &ComplexMatrix, h: &[Complex64]) -> ComplexMatrix {
    let n = h.len();
    ComplexMatrix::from_fn(n + 1, n + 1, |i, j| match (i < n, j < n) {
        (true, true) => b[(i, j)],
        (true, false) => h[i],
        (false, true) => h[j].conj(),
        (false, false) => Complex64::new(1.0, 0.0),
    })
}

/// Euclidean projection of the top-left block of `w` onto Hermitian matrices
/// with trace `β²` and zero off-diagonal sums.
fn project_affine(w: &ComplexMatrix, n: usize, beta_sq: f64) -> ComplexMatrix {
    let mut b = ComplexMatrix::from_fn(n, n, |i, j| (w[(i, j)] + w[(j, i)].conj()) * 0.5);
    let shift = (beta_sq - (0..n).map(|i| b[(i, i)].re).sum::<f64>()) / n as f64;
    for i in 0..n {
        b[(i, i)] = Complex64::new(b[(i, i)].re + shift, 0.0);
    }
    for d in 1..n {
        let mean: Complex64 = (0..n - d).map(|i| b[(i, i + d)]).sum::<Complex64>() / (n - d) as f64;
        for i in 0..n - d {
            let v = b[(i, i + d)] - mean;
            b[(i, i + d)] = v;
            b[(i + d, i)] = v.conj();
        }
    }
    b
}

fn feasible_centre(n: usize, beta_sq: f64) -> ComplexMatrix {
    ComplexMatrix::diag_real(&vec![beta_sq / n as f64; n])
}

/// Solves the denoising SDP for the received vector of `snapshot`.
pub fn anm_denoise(snapshot: &Snapshot, cfg: &AnmConfig) -> Result<AnmSolution> {
    cfg.validate()?;
    let r = &snapshot.received;
    let n = r.len();
    if n == 0 {
        return Err(invalid("empty snapshot"));
    }
    let beta = cfg.beta_for(r);
    let beta_sq = beta * beta;
    if beta == 0.0 || norm(r) == 0.0 {
        return Ok(AnmSolution {
            h: vec![Complex64::new(0.0, 0.0); n],
            b: feasible_centre(n, beta_sq),
            beta,
            iterations: 0,
            primal_residual: 0.0,
            dual_residual: 0.0,
        });
    }

    let scale = norm(r);
    let unit: Vec<Complex64> = r.iter().map(|x| x / scale).collect();
    let (b, h, iterations, primal, dual) = solve_normalized(&unit, (beta / scale).powi(2), cfg)?;
    Ok(AnmSolution {
        h: h.iter().map(|x| x * scale).collect(),
        b: b.scale(Complex64::new(scale * scale, 0.0)),
        beta,
        iterations,
        primal_residual: primal,
        dual_residual: dual,
    })
}

/// ADMM on the normalized problem. Returns `(B, h, iterations, primal, dual)`.
fn solve_normalized(
    r: &[Complex64],
    beta_sq: f64,
    cfg: &AnmConfig,
) -> Result<(ComplexMatrix, Vec<Complex64>, usize, f64, f64)> {
    let n = r.len();
    let mut rho = cfg.rho;
    let mut h = vec![Complex64::new(0.0, 0.0); n];
    let mut b = feasible_centre(n, beta_sq);
    let mut z = lift(&b, &h);
    let mut u = ComplexMatrix::zeros(n + 1, n + 1);
    let mut basis = ComplexMatrix::identity(n + 1);
    let (mut primal, mut dual) = (f64::INFINITY, f64::INFINITY);

    for it in 1..=cfg.max_iters {
        let w = z.sub(&u);
        let denom = 2.0 + 2.0 * rho;
        for i in 0..n {
            h[i] = (r[i] * 2.0 + (w[(i, n)] + w[(n, i)].conj()) * rho) / denom;
        }
        b = project_affine(&w, n, beta_sq);
        let m = lift(&b, &h);

        let v = m.add(&u);
        let eig = hermitian_eig_warm(&v.hermitian_part(), &basis, DEFAULT_TOL)?;
        basis = eig.eigenvectors.clone();
        let z_next = project_from_eig(&eig);

        let diff = m.sub(&z_next);
        u = u.add(&diff);
        primal = diff.frobenius_norm();
        dual = rho * z_next.sub(&z).frobenius_norm();
        z = z_next;

        let eps_primal = cfg.tol_primal * (1.0 + m.frobenius_norm().max(z.frobenius_norm()));
        let eps_dual = cfg.tol_dual * (1.0 + rho * u.frobenius_norm());
        if primal <= eps_primal && dual <= eps_dual {
            restore_feasibility(&mut b, &mut h, beta_sq)?;
            return Ok((b, h, it, primal, dual));
        }

        if it % BALANCE_EVERY == 0 {
            let (p, d) = (primal / eps_primal, dual / eps_dual);
            if p > BALANCE_RATIO * d {
                rho *= 2.0;
                u = u.scale(Complex64::new(0.5, 0.0));
            } else if d > BALANCE_RATIO * p {
                rho *= 0.5;
                u = u.scale(Complex64::new(2.0, 0.0));
            }
        }
    }
    Err(Error::NotConverged {
        iterations: cfg.max_iters,
        primal,
        dual,
    })
}

/// Pulls a nearly feasible `(B, h)` onto the feasible set by mixing in the
/// strictly feasible point `(β²/N · I, 0)`. Both points satisfy the affine
/// constraints, so only the PSD margin changes.
fn restore_feasibility(b: &mut ComplexMatrix, h: &mut [Complex64], beta_sq: f64) -> Result<()> {
    let n = h.len();
    let lam = hermitian_eig(&lift(b, h), DEFAULT_TOL)?.min_eigenvalue();
    if lam >= 0.0 {
        return Ok(());
    }
    let centre_margin = (beta_sq / n as f64).min(1.0);
    let deficit = -lam * (1.0 + 1e-6);
    let t = deficit / (deficit + centre_margin);
    let centre = feasible_centre(n, beta_sq);
    *b = b
        .scale(Complex64::new(1.0 - t, 0.0))
        .add(&centre.scale(Complex64::new(t, 0.0)));
    for x in h.iter_mut() {
        *x *= 1.0 - t;
    }
    Ok(())
}

/// `|a^H(ζ) h|²` on the nominal ULA.
pub fn anm_spectrum(h: &[Complex64], grid: &AngleGrid) -> Result<Spectrum> {
    let table = SteeringTable::ula(grid, h.len());
    Spectrum::new(grid.clone(), table.power(h))
}

pub fn anm(
    snapshot: &Snapshot,
    cfg: &AnmConfig,
    grid: &AngleGrid,
    k: usize,
    min_separation_deg: f64,
) -> Result<(Spectrum, DoaEstimate)> {
    let sol = anm_denoise(snapshot, cfg)?;
    let spec = anm_spectrum(&sol.h, grid)?;
    let est = find_peaks(&spec, k, min_separation_deg)?;
    Ok((spec, est))
}
