//! Angle grids, spatial spectra, the Gaussian reference spectrum used as a
//! training target, peak picking and the RMSE metric.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::array::SourceSet;
use crate::error::{dims, invalid, Result};

/// Default spacing between selected peaks, half the 3 dB width of the
/// reference spectrum at N = 16.
pub const DEFAULT_MIN_SEPARATION_DEG: f64 = 5.0;

/// Uniform grid of candidate angles in degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    angles: Vec<f64>,
}

impl AngleGrid {
    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(invalid("grid needs at least two points"));
        }
        if !(start >= -90.0 && stop <= 90.0 && start < stop) {
            return Err(invalid(format!(
                "grid [{start}, {stop}] must lie inside [-90, 90]"
            )));
        }
        let step = (stop - start) / (count - 1) as f64;
        let angles = (0..count).map(|i| start + i as f64 * step).collect();
        Ok(Self { angles })
    }

    /// [-90, 90] with the given spacing (which must divide 180).
    pub fn full(step_deg: f64) -> Result<Self> {
        let count = (180.0 / step_deg).round() as usize + 1;
        Self::new(-90.0, 90.0, count)
    }

    /// 0.5° grid (361 points) used for the training loss.
    pub fn training() -> Self {
        Self::full(0.5).expect("static grid")
    }

    /// 0.1° grid (1801 points) used for peak finding.
    pub fn evaluation() -> Self {
        Self::full(0.1).expect("static grid")
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.angles[1] - self.angles[0]
    }

    pub fn first(&self) -> f64 {
        self.angles[0]
    }

    pub fn last(&self) -> f64 {
        self.angles[self.angles.len() - 1]
    }
}

/// Sampled spatial spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub grid: AngleGrid,
    pub values: Vec<f64>,
}

impl Spectrum {
    pub fn new(grid: AngleGrid, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(dims(format!(
                "{} values on a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(invalid("spectrum values must be nonnegative"));
        }
        Ok(Self { grid, values })
    }

    pub fn argmax(&self) -> usize {
        self.values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Copy scaled to a unit peak (unchanged if all zero).
    pub fn normalized(&self) -> Self {
        let m = self.max();
        let values = if m > 0.0 {
            self.values.iter().map(|v| v / m).collect()
        } else {
            self.values.clone()
        };
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Two-column CSV `angle_deg,value` with 12 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "angle_deg,value")?;
        for (a, v) in self.grid.angles().iter().zip(&self.values) {
            writeln!(w, "{},{}", sig12(*a), sig12(*v))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(f)?;
        Ok(())
    }
}

/// Shortest decimal that round-trips `x` rounded to 12 significant digits.
pub fn sig12(x: f64) -> String {
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{rounded}")
}

/// Estimated DOAs (ascending) with their spectrum values.
#[derive(Debug, Clone, PartialEq)]
pub struct DoaEstimate {
    pub doas: Vec<f64>,
    pub peak_values: Vec<f64>,
    /// Fewer than `k` true local maxima were found and the estimate was
    /// padded with the largest remaining grid points.
    pub flagged: bool,
}

impl DoaEstimate {
    pub fn from_unsorted(mut pairs: Vec<(f64, f64)>, flagged: bool) -> Self {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self {
            doas: pairs.iter().map(|p| p.0).collect(),
            peak_values: pairs.iter().map(|p| p.1).collect(),
            flagged,
        }
    }
}

/// `e^{j 2π d_n/λ · sin θ}` for each position.
pub fn steering_vector(theta_deg: f64, positions: &[f64], wavelength: f64) -> Vec<Complex64> {
    let s = theta_deg.to_radians().sin();
    positions
        .iter()
        .map(|d| Complex64::from_polar(1.0, std::f64::consts::TAU * d / wavelength * s))
        .collect()
}

/// Steering vectors for `n` antennas at half-wavelength spacing on a grid,
/// stored row per angle.
#[derive(Debug, Clone)]
pub struct SteeringTable {
    n: usize,
    rows: Vec<Complex64>,
}

impl SteeringTable {
    pub fn new(grid: &AngleGrid, positions: &[f64], wavelength: f64) -> Self {
        let rows = grid
            .angles()
            .iter()
            .flat_map(|&t| steering_vector(t, positions, wavelength))
            .collect();
        Self {
            n: positions.len(),
            rows,
        }
    }

    pub fn ula(grid: &AngleGrid, n: usize) -> Self {
        Self::new(grid, &ula_positions(n), 1.0)
    }

    pub fn n_antennas(&self) -> usize {
        self.n
    }

    pub fn row(&self, w: usize) -> &[Complex64] {
        &self.rows[w * self.n..(w + 1) * self.n]
    }

    /// `a^H(ζ_ω) z` for every grid angle.
    pub fn project(&self, z: &[Complex64]) -> Vec<Complex64> {
        self.rows
            .chunks_exact(self.n)
            .map(|a| a.iter().zip(z).map(|(ai, zi)| ai.conj() * zi).sum())
            .collect()
    }

    /// `|a^H(ζ_ω) z|²` for every grid angle.
    pub fn power(&self, z: &[Complex64]) -> Vec<f64> {
        self.project(z).iter().map(|p| p.norm_sqr()).collect()
    }
}

/// Half-wavelength ULA positions in wavelengths.
pub fn ula_positions(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 * i as f64).collect()
}

/// `|a^H(ζ) z|²` on a grid, with positions in wavelengths.
pub fn eval_spectrum(z: &[Complex64], grid: &AngleGrid, positions: &[f64]) -> Result<Spectrum> {
    if z.len() != positions.len() {
        return Err(dims(format!(
            "{} samples for {} positions",
            z.len(),
            positions.len()
        )));
    }
    let values = SteeringTable::new(grid, positions, 1.0).power(z);
    Spectrum::new(grid.clone(), values)
}

/// Gaussian width `σ_G = σ̄_G / N` in degrees.
pub fn gaussian_width(sigma_bar: f64, n_antennas: usize) -> f64 {
    sigma_bar / n_antennas as f64
}

/// Sum of Gaussian bumps `A · exp(−(ζ−θ_k)²/σ_G²)` centred on the true DOAs.
pub fn reference_spectrum(
    truth: &SourceSet,
    amplitude: f64,
    sigma_bar: f64,
    n_antennas: usize,
    grid: &AngleGrid,
) -> Result<Spectrum> {
    if !(sigma_bar > 0.0) || n_antennas == 0 {
        return Err(invalid("sigma_bar and N must be positive"));
    }
    Spectrum::new(
        grid.clone(),
        reference_values(
            &truth.doas,
            amplitude,
            gaussian_width(sigma_bar, n_antennas),
            grid,
        ),
    )
}

pub(crate) fn reference_values(
    doas: &[f64],
    amplitude: f64,
    sigma_g: f64,
    grid: &AngleGrid,
) -> Vec<f64> {
    let inv = 1.0 / (sigma_g * sigma_g);
    grid.angles()
        .iter()
        .map(|z| {
            doas.iter()
                .map(|t| amplitude * (-(z - t) * (z - t) * inv).exp())
                .sum()
        })
        .collect()
}

/// `(1/Ω) Σ_ω (ref_ω − est_ω)²`.
pub fn spectrum_loss(reference: &Spectrum, estimate: &Spectrum) -> Result<f64> {
    if reference.grid != estimate.grid {
        return Err(dims("spectra are on different grids"));
    }
    let omega = reference.values.len() as f64;
    Ok(reference
        .values
        .iter()
        .zip(&estimate.values)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / omega)
}

/// Peak value floor for the log-domain refinement.
const LOG_FLOOR: f64 = 1e-300;

fn refine(values: &[f64], i: usize) -> (f64, f64) {
    let y0 = values[i].max(LOG_FLOOR).ln();
    let ym = values[i - 1].max(LOG_FLOOR).ln();
    let yp = values[i + 1].max(LOG_FLOOR).ln();
    let denom = ym - 2.0 * y0 + yp;
    if !(denom < 0.0) {
        return (0.0, values[i]);
    }
    let offset = (0.5 * (ym - yp) / denom).clamp(-0.5, 0.5);
    let peak = (y0 - 0.25 * (ym - yp) * offset).exp();
    (offset, peak)
}

/// Picks `k` peaks: strict interior local maxima, refined by a parabola
/// through the log-values, kept greedily by height subject to
/// `min_separation_deg`. Pads with the largest remaining grid points (and
/// flags the estimate) when there are not enough maxima.
pub fn find_peaks(spec: &Spectrum, k: usize, min_separation_deg: f64) -> Result<DoaEstimate> {
    let v = &spec.values;
    let omega = v.len();
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    if k > omega {
        return Err(invalid(format!("k = {k} exceeds grid size {omega}")));
    }
    let angles = spec.grid.angles();
    let step = spec.grid.step();

    let mut candidates: Vec<(f64, f64)> = (1..omega.saturating_sub(1))
        .filter(|&i| v[i] > v[i - 1] && v[i] > v[i + 1])
        .map(|i| {
            let (off, peak) = refine(v, i);
            (angles[i] + off * step, peak)
        })
        .collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1));

    let separated =
        |kept: &[(f64, f64)], a: f64| kept.iter().all(|p| (p.0 - a).abs() >= min_separation_deg);
    let mut kept: Vec<(f64, f64)> = Vec::with_capacity(k);
    for c in candidates {
        if kept.len() == k {
            break;
        }
        if separated(&kept, c.0) {
            kept.push(c);
        }
    }

    let flagged = kept.len() < k;
    if flagged {
        let mut order: Vec<usize> = (0..omega).collect();
        order.sort_by(|&a, &b| v[b].total_cmp(&v[a]));
        for strict in [true, false] {
            for &i in &order {
                if kept.len() == k {
                    break;
                }
                let a = angles[i];
                let taken = kept.iter().any(|p| p.0 == a);
                if !taken && (!strict || separated(&kept, a)) {
                    kept.push((a, v[i]));
                }
            }
        }
    }
    Ok(DoaEstimate::from_unsorted(kept, flagged))
}

/// `sqrt( Σ_trials Σ_k (θ̂ − θ)² / (N_sim · K) )`, pairing estimates with
/// truths after sorting both.
pub fn rmse(estimates: &[DoaEstimate], truths: &[SourceSet]) -> Result<f64> {
    if estimates.len() != truths.len() {
        return Err(dims(format!(
            "{} estimates for {} truths",
            estimates.len(),
            truths.len()
        )));
    }
    if estimates.is_empty() {
        return Err(invalid("no trials"));
    }
    let k = truths[0].len();
    let mut sum = 0.0;
    for (e, t) in estimates.iter().zip(truths) {
        if e.doas.len() != k || t.len() != k {
            return Err(dims(
                "every trial must carry the same K estimates and truths",
            ));
        }
        sum += sorted_squared_error(&e.doas, &t.doas);
    }
    Ok((sum / (estimates.len() * k) as f64).sqrt())
}

pub(crate) fn sorted_squared_error(est: &[f64], truth: &[f64]) -> f64 {
    let mut a = est.to_vec();
    let mut b = truth.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steering_examples() {
        let ones = steering_vector(0.0, &ula_positions(5), 1.0);
        assert!(ones
            .iter()
            .all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
        let alt = steering_vector(90.0, &ula_positions(4), 1.0);
        for (n, z) in alt.iter().enumerate() {
            let expect = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((z - Complex64::new(expect, 0.0)).norm() < 1e-14);
        }
        let a = steering_vector(30.0, &ula_positions(2), 1.0);
        assert!((a[1] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn matched_vector_peaks_at_one() {
        let grid = AngleGrid::evaluation();
        let pos = ula_positions(16);
        let z: Vec<Complex64> = steering_vector(12.3, &pos, 1.0)
            .iter()
            .map(|a| a / 16.0)
            .collect();
        let s = eval_spectrum(&z, &grid, &pos).unwrap();
        let i = s.argmax();
        assert!((grid.angles()[i] - 12.3).abs() < 1e-9);
        assert!((s.values[i] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_vector_and_scaling() {
        let grid = AngleGrid::training();
        let pos = ula_positions(8);
        let s = eval_spectrum(&[Complex64::new(0.0, 0.0); 8], &grid, &pos).unwrap();
        assert!(s.values.iter().all(|&v| v == 0.0));
        let z: Vec<Complex64> = (0..8)
            .map(|i| Complex64::new(i as f64, 1.0 - i as f64))
            .collect();
        let c = Complex64::new(-2.0, 0.5);
        let zc: Vec<Complex64> = z.iter().map(|x| x * c).collect();
        let a = eval_spectrum(&z, &grid, &pos).unwrap();
        let b = eval_spectrum(&zc, &grid, &pos).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x * c.norm_sqr() - y).abs() <= 1e-12 * y.max(1.0));
        }
        assert_eq!(a.argmax(), b.argmax());
    }

    #[test]
    fn reference_peak_and_loss_examples() {
        let grid = AngleGrid::full(1.0).unwrap();
        let r =
            reference_spectrum(&SourceSet::unit(&[0.0]).unwrap(), 1.0, 100.0, 16, &grid).unwrap();
        assert_eq!(r.values[90], 1.0);
        assert_eq!(spectrum_loss(&r, &r).unwrap(), 0.0);
        let g = AngleGrid::full(1.0).unwrap();
        let ones = Spectrum::new(g.clone(), vec![1.0; 181]).unwrap();
        let zeros = Spectrum::new(g, vec![0.0; 181]).unwrap();
        assert_eq!(spectrum_loss(&ones, &zeros).unwrap(), 1.0);
        let other = Spectrum::new(AngleGrid::training(), vec![0.0; 361]).unwrap();
        assert!(spectrum_loss(&ones, &other).is_err());
    }

    #[test]
    fn bump_refines_to_exact_centre() {
        let grid = AngleGrid::evaluation();
        let s = Spectrum::new(grid.clone(), reference_values(&[10.03], 1.0, 6.25, &grid)).unwrap();
        let e = find_peaks(&s, 1, 5.0).unwrap();
        assert!(!e.flagged);
        assert!((e.doas[0] - 10.03).abs() < 1e-9);
    }

    #[test]
    fn flat_spectrum_is_flagged() {
        let s = Spectrum::new(AngleGrid::training(), vec![1.0; 361]).unwrap();
        let e = find_peaks(&s, 1, 5.0).unwrap();
        assert!(e.flagged);
        assert_eq!(e.doas.len(), 1);
        assert!(find_peaks(&s, 362, 5.0).is_err());
    }

    #[test]
    fn symmetric_pair_sorted() {
        let grid = AngleGrid::evaluation();
        let s = Spectrum::new(
            grid.clone(),
            reference_values(&[30.0, -30.0], 1.0, 6.25, &grid),
        )
        .unwrap();
        let e = find_peaks(&s, 2, 5.0).unwrap();
        assert!((e.doas[0] + 30.0).abs() < 1e-6 && (e.doas[1] - 30.0).abs() < 1e-6);
    }

    #[test]
    fn rmse_examples() {
        let t = SourceSet::unit(&[10.0]).unwrap();
        let e = DoaEstimate::from_unsorted(vec![(11.0, 1.0)], false);
        assert_eq!(rmse(&[e], std::slice::from_ref(&t)).unwrap(), 1.0);
        let exact = DoaEstimate::from_unsorted(vec![(10.0, 1.0)], false);
        assert_eq!(rmse(&[exact], std::slice::from_ref(&t)).unwrap(), 0.0);
        let two = DoaEstimate::from_unsorted(vec![(1.0, 1.0), (2.0, 1.0)], false);
        assert!(rmse(&[two], &[t]).is_err());
    }

    #[test]
    fn csv_format() {
        let s = Spectrum::new(
            AngleGrid::new(-1.0, 1.0, 3).unwrap(),
            vec![0.1234567890123456, 0.0, 2.0],
        )
        .unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "angle_deg,value\n-1,0.123456789012\n0,0\n1,2\n");
    }
}
