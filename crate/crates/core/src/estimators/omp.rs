//! Orthogonal matching pursuit over a grid dictionary of unit-norm steering
//! vectors.

use num_complex::Complex64;

use crate::array::Snapshot;
use crate::error::{invalid, Result};
use crate::numerics::{lstsq, norm, ComplexMatrix};
use crate::spectrum::{AngleGrid, DoaEstimate, Spectrum, SteeringTable};

#[derive(Debug, Clone)]
pub struct OmpResult {
    /// Selected grid indices in selection order.
    pub indices: Vec<usize>,
    /// Least-squares coefficients of the unit-norm atoms, in selection order.
    pub coefficients: Vec<Complex64>,
    pub residual_norm: f64,
    pub estimate: DoaEstimate,
}

impl OmpResult {
    /// Spectrum that is zero except `|c|²` at the selected atoms.
    pub fn sticks(&self, grid: &AngleGrid) -> Spectrum {
        let mut values = vec![0.0; grid.len()];
        for (&i, c) in self.indices.iter().zip(&self.coefficients) {
            values[i] = c.norm_sqr();
        }
        Spectrum {
            grid: grid.clone(),
            values,
        }
    }
}

pub fn omp_detailed(snapshot: &Snapshot, grid: &AngleGrid, k: usize) -> Result<OmpResult> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    if k > grid.len() {
        return Err(invalid(format!("k = {k} exceeds grid size {}", grid.len())));
    }
    let r = &snapshot.received;
    let n = r.len();
    let table = SteeringTable::ula(grid, n);
    let scale = 1.0 / (n as f64).sqrt();

    let mut indices: Vec<usize> = Vec::with_capacity(k);
    let mut residual = r.clone();
    let mut coefficients = Vec::new();
    for _ in 0..k {
        let corr = table.project(&residual);
        let best = corr
            .iter()
            .enumerate()
            .filter(|(i, _)| !indices.contains(i))
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
            .map(|(i, _)| i)
            .expect("k <= grid size");
        indices.push(best);

        let atoms = ComplexMatrix::from_fn(n, indices.len(), |row, col| {
            table.row(indices[col])[row] * scale
        });
        coefficients = match lstsq(&atoms, r) {
            Ok(c) => c,
            // Numerically duplicate atom: keep the previous fit.
            Err(_) => {
                indices.pop();
                break;
            }
        };
        let fit = atoms.matvec(&coefficients);
        residual = r.iter().zip(&fit).map(|(a, b)| a - b).collect();
    }

    let angles = grid.angles();
    let mut pairs: Vec<(f64, f64)> = indices
        .iter()
        .zip(&coefficients)
        .map(|(&i, c)| (angles[i], c.norm_sqr()))
        .collect();
    let flagged = pairs.len() < k;
    // Pad to k with the strongest remaining correlations.
    if flagged {
        let corr = table.project(&residual);
        let mut order: Vec<usize> = (0..grid.len()).filter(|i| !indices.contains(i)).collect();
        order.sort_by(|&a, &b| corr[b].norm_sqr().total_cmp(&corr[a].norm_sqr()));
        for &i in order.iter().take(k - pairs.len()) {
            pairs.push((angles[i], 0.0));
        }
    }
    Ok(OmpResult {
        residual_norm: norm(&residual),
        indices,
        coefficients,
        estimate: DoaEstimate::from_unsorted(pairs, flagged),
    })
}

/// Greedy sparse recovery of `k` grid atoms; returns the selected angles.
pub fn omp(snapshot: &Snapshot, grid: &AngleGrid, k: usize) -> Result<DoaEstimate> {
    Ok(omp_detailed(snapshot, grid, k)?.estimate)
}
