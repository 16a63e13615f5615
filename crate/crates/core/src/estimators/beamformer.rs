use crate::array::Snapshot;
use crate::error::Result;
use crate::spectrum::{find_peaks, AngleGrid, DoaEstimate, Spectrum, SteeringTable};

/// Matched-filter ("FFT") spectrum `|a^H(ζ) r|²` on the nominal ULA. For
/// angles whose sine lies on a DFT lattice this equals the zero-padded DFT
/// magnitude squared.
pub fn beamformer_spectrum(snapshot: &Snapshot, grid: &AngleGrid) -> Result<Spectrum> {
    let table = SteeringTable::ula(grid, snapshot.n_antennas());
    Spectrum::new(grid.clone(), table.power(&snapshot.received))
}

pub fn beamformer(
    snapshot: &Snapshot,
    grid: &AngleGrid,
    k: usize,
    min_separation_deg: f64,
) -> Result<(Spectrum, DoaEstimate)> {
    let spec = beamformer_spectrum(snapshot, grid)?;
    let est = find_peaks(&spec, k, min_separation_deg)?;
    Ok((spec, est))
}
