use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::CurriculumStage;
use crate::error::{invalid, Result};
use crate::numerics::ComplexMatrix;
use crate::seed;

/// Gains at or below this are redrawn.
const MIN_GAIN: f64 = 0.05;

/// Upper limits of the imperfection magnitudes, all scaled by the imperfect
/// factor `xi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImperfectionCaps {
    /// Max std of antenna position offsets, in wavelengths.
    pub max_pos_std: f64,
    pub max_gain_std: f64,
    /// Radians.
    pub max_phase_std: f64,
    pub coupling_base: f64,
    pub nonlinear_strength: f64,
    pub xi: f64,
}

impl Default for ImperfectionCaps {
    fn default() -> Self {
        Self {
            max_pos_std: 0.15,
            max_gain_std: 0.5,
            max_phase_std: 0.2,
            coupling_base: 0.06,
            nonlinear_strength: 1.0,
            xi: 1.0,
        }
    }
}

impl ImperfectionCaps {
    pub fn with_xi(&self, xi: f64) -> Self {
        Self { xi, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.max_pos_std,
            self.max_gain_std,
            self.max_phase_std,
            self.coupling_base,
            self.nonlinear_strength,
            self.xi,
        ];
        if fields.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(invalid("imperfection caps must be finite and nonnegative"));
        }
        if self.xi * self.coupling_base >= 1.0 {
            return Err(invalid("scaled coupling base must be below 1"));
        }
        Ok(())
    }
}

/// Which effects a realization actually carries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveEffects {
    pub positions: bool,
    pub gains: bool,
    pub phases: bool,
    pub coupling: bool,
    pub nonlinear: bool,
}

/// One concrete draw of the array imperfections.
#[derive(Debug, Clone, PartialEq)]
pub struct ImperfectionRealization {
    /// Added to the nominal positions, in wavelengths. Entry 0 is always 0.
    pub pos_offsets: Vec<f64>,
    pub gains: Vec<f64>,
    /// Radians. Entry 0 is always 0.
    pub phases: Vec<f64>,
    /// Unit diagonal, off-diagonal magnitudes below 1.
    pub coupling: ComplexMatrix,
    /// Nonlinearity strength; 0 means linear.
    pub nonlinear: f64,
    pub active: ActiveEffects,
}

impl ImperfectionRealization {
    pub fn perfect(n: usize) -> Self {
        Self {
            pos_offsets: vec![0.0; n],
            gains: vec![1.0; n],
            phases: vec![0.0; n],
            coupling: ComplexMatrix::identity(n),
            nonlinear: 0.0,
            active: ActiveEffects::default(),
        }
    }

    pub fn n_antennas(&self) -> usize {
        self.gains.len()
    }

    pub fn is_perfect(&self) -> bool {
        *self == Self::perfect(self.n_antennas())
    }
}

/// Draws a realization with only the effects enabled by `stage`. Effects
/// whose scaled cap is zero stay at identity.
pub fn sample_imperfections(
    n_antennas: usize,
    caps: &ImperfectionCaps,
    stage: CurriculumStage,
    rng_seed: u64,
) -> Result<ImperfectionRealization> {
    caps.validate()?;
    if n_antennas < 2 {
        return Err(invalid("array needs at least two antennas"));
    }
    let n = n_antennas;
    let xi = caps.xi;
    let mut rng = seed::rng(rng_seed);
    let mut out = ImperfectionRealization::perfect(n);

    let pos_cap = xi * caps.max_pos_std;
    if stage.positions() && pos_cap > 0.0 {
        let std = rng.gen::<f64>() * pos_cap;
        let normal = Normal::new(0.0, std).map_err(|e| invalid(e.to_string()))?;
        for off in out.pos_offsets.iter_mut().skip(1) {
            *off = normal.sample(&mut rng);
        }
        out.active.positions = true;
    }

    let gain_cap = xi * caps.max_gain_std;
    if stage.gains() && gain_cap > 0.0 {
        let std = rng.gen::<f64>() * gain_cap;
        let normal = Normal::new(0.0, std).map_err(|e| invalid(e.to_string()))?;
        for g in out.gains.iter_mut() {
            *g = loop {
                let v = 1.0 + normal.sample(&mut rng);
                if v > MIN_GAIN {
                    break v;
                }
            };
        }
        out.active.gains = true;
    }

    let phase_cap = xi * caps.max_phase_std;
    if stage.phases() && phase_cap > 0.0 {
        let std = rng.gen::<f64>() * phase_cap;
        let normal = Normal::new(0.0, std).map_err(|e| invalid(e.to_string()))?;
        for p in out.phases.iter_mut().skip(1) {
            *p = normal.sample(&mut rng);
        }
        out.active.phases = true;
    }

    let mc = xi * caps.coupling_base;
    if stage.coupling() && mc > 0.0 {
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let bound = mc.powi(i.abs_diff(j) as i32);
                let mag = rng.gen::<f64>() * bound;
                let psi = rng.gen::<f64>() * std::f64::consts::TAU;
                out.coupling[(i, j)] = Complex64::from_polar(mag, psi);
            }
        }
        out.active.coupling = true;
    }

    let nl = xi * caps.nonlinear_strength;
    if stage.nonlinear() && nl > 0.0 {
        out.nonlinear = nl;
        out.active.nonlinear = true;
    }

    Ok(out)
}
