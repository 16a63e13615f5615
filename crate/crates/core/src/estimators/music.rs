//! Single-snapshot MUSIC on a Hankel lift of the received vector.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::Snapshot;
use crate::error::{invalid, Result};
use crate::numerics::{complete_basis, svd, ComplexMatrix};
use crate::spectrum::{find_peaks, AngleGrid, DoaEstimate, Spectrum, SteeringTable};

/// Pseudospectrum values are capped here before normalization; the
/// reciprocal is unbounded at exact noise-subspace nulls.
pub const PSEUDOSPECTRUM_CAP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MusicConfig {
    pub hankel_rows: usize,
    pub n_sources: usize,
}

impl MusicConfig {
    /// `L = N/2`.
    pub fn for_array(n_antennas: usize, n_sources: usize) -> Self {
        Self {
            hankel_rows: n_antennas / 2,
            n_sources,
        }
    }

    pub fn validate(&self, n_antennas: usize) -> Result<()> {
        let (l, k) = (self.hankel_rows, self.n_sources);
        if k == 0 {
            return Err(invalid("MUSIC needs at least one source"));
        }
        if k >= l {
            return Err(invalid(format!(
                "K = {k} must be below the Hankel row count L = {l}"
            )));
        }
        if l + k > n_antennas {
            return Err(invalid(format!(
                "L = {l} exceeds N − K = {}",
                n_antennas.saturating_sub(k)
            )));
        }
        Ok(())
    }
}

/// `R[i, j] = r[i + j]`, an `L x (N − L + 1)` Hankel matrix.
pub fn hankel_lift(r: &[Complex64], l: usize) -> Result<ComplexMatrix> {
    let n = r.len();
    if l == 0 || l > n {
        return Err(invalid(format!("Hankel rows {l} outside 1..={n}")));
    }
    Ok(ComplexMatrix::from_fn(l, n - l + 1, |i, j| r[i + j]))
}

/// Left singular vectors beyond the `k` largest, as an `L x (L − k)` matrix.
pub fn noise_subspace(hankel: &ComplexMatrix, k: usize) -> ComplexMatrix {
    let l = hankel.rows();
    let dec = svd(hankel);
    let u = if dec.u.cols() == l {
        dec.u
    } else {
        complete_basis(&dec.u)
    };
    u.columns(k, l)
}

pub fn music_single_snapshot(
    snapshot: &Snapshot,
    cfg: &MusicConfig,
    grid: &AngleGrid,
    min_separation_deg: f64,
) -> Result<(Spectrum, DoaEstimate)> {
    cfg.validate(snapshot.n_antennas())?;
    let hankel = hankel_lift(&snapshot.received, cfg.hankel_rows)?;
    let u2 = noise_subspace(&hankel, cfg.n_sources);
    let table = SteeringTable::ula(grid, cfg.hankel_rows);
    let values: Vec<f64> = (0..grid.len())
        .map(|w| {
            let proj = u2.adjoint_matvec(table.row(w));
            let d: f64 = proj.iter().map(|z| z.norm_sqr()).sum();
            if d > 0.0 {
                (1.0 / d).min(PSEUDOSPECTRUM_CAP)
            } else {
                PSEUDOSPECTRUM_CAP
            }
        })
        .collect();
    let spec = Spectrum::new(grid.clone(), values)?.normalized();
    let est = find_peaks(&spec, cfg.n_sources, min_separation_deg)?;
    Ok((spec, est))
}
