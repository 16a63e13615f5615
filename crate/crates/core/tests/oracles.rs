//! Independent oracles for the derived worked examples.

use num_complex::Complex64;
use rand::Rng;

use sdoa::array::{
    synthesize_noiseless, synthesize_snapshot, ArrayConfig, ImperfectionRealization, Snapshot,
    SourceSet,
};
use sdoa::bench::{spectrum_overlay, sweep_snr, ExperimentConfig, SweepRange};
use sdoa::estimators::{
    anm_spectrum, beamformer, hankel_lift, music_single_snapshot, omp_detailed, Method, MusicConfig,
};
use sdoa::numerics::{hermitian_eig, lstsq, psd_project, svd, ComplexMatrix, DEFAULT_TOL};
use sdoa::seed;
use sdoa::spectrum::{reference_spectrum, spectrum_loss, steering_vector, AngleGrid, Spectrum};

fn perfect(doas: &[f64], snr_db: Option<f64>, noise_seed: u64) -> Snapshot {
    let array = ArrayConfig::ula(16);
    let real = ImperfectionRealization::perfect(16);
    let src = SourceSet::unit(doas).unwrap();
    match snr_db {
        Some(s) => synthesize_snapshot(&array, &real, &src, s, noise_seed).unwrap(),
        None => synthesize_noiseless(&array, &real, &src).unwrap(),
    }
}

/// Angles of strict interior local maxima.
fn local_maxima(s: &Spectrum) -> Vec<f64> {
    let v = &s.values;
    (1..v.len() - 1)
        .filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1])
        .map(|i| s.grid.angles()[i])
        .collect()
}

fn has_max_near(maxima: &[f64], theta: f64, tol: f64) -> bool {
    maxima.iter().any(|m| (m - theta).abs() <= tol)
}

fn random_matrix(rows: usize, cols: usize, rng: &mut seed::Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

#[test]
fn beamformer_resolves_three_sources_at_30_db() {
    let snap = perfect(&[-30.0, 10.0, 20.0], Some(30.0), 3);
    let (spec, _) = beamformer(&snap, &AngleGrid::evaluation(), 3, 5.0).unwrap();
    let maxima = local_maxima(&spec);
    for t in [-30.0, 10.0, 20.0] {
        assert!(has_max_near(&maxima, t, 1.0), "{t}: {maxima:?}");
    }
}

#[test]
fn beamformer_two_wide_sources() {
    let (_, est) = beamformer(
        &perfect(&[-40.0, 40.0], Some(30.0), 4),
        &AngleGrid::evaluation(),
        2,
        5.0,
    )
    .unwrap();
    assert!(
        (est.doas[0] + 40.0).abs() < 1.0 && (est.doas[1] - 40.0).abs() < 1.0,
        "{:?}",
        est.doas
    );
}

/// Root of the derivative of `Σ exp(−(x−θ_k)²/σ²)` bracketed by `[lo, hi]`.
fn stationary_point(doas: &[f64], sigma: f64, mut lo: f64, mut hi: f64) -> f64 {
    let slope = |x: f64| -> f64 {
        doas.iter()
            .map(|t| {
                -2.0 * (x - t) / (sigma * sigma) * (-(x - t) * (x - t) / (sigma * sigma)).exp()
            })
            .sum()
    };
    assert!(slope(lo) > 0.0 && slope(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn reference_has_a_maximum_per_source() {
    let grid = AngleGrid::evaluation();
    let doas = [-30.0, 10.0, 20.0];
    let s = reference_spectrum(&SourceSet::unit(&doas).unwrap(), 1.0, 100.0, 16, &grid).unwrap();
    let maxima = local_maxima(&s);
    assert_eq!(maxima.len(), 3, "{maxima:?}");
    // Bumps 10° apart pull each other's maxima inward.
    let exact = [
        stationary_point(&doas, 6.25, -35.0, -25.0),
        stationary_point(&doas, 6.25, 5.0, 14.9),
        stationary_point(&doas, 6.25, 15.1, 25.0),
    ];
    assert!((exact[0] + 30.0).abs() < 1e-3);
    assert!(exact[1] > 11.0 && exact[2] < 19.0, "{exact:?}");
    for (m, e) in maxima.iter().zip(exact) {
        assert!(
            (m - e).abs() <= grid.step() + 1e-9,
            "{maxima:?} vs {exact:?}"
        );
    }
}

#[test]
fn spectrum_loss_matches_two_pass_sum() {
    let mut rng = seed::rng(189);
    let grid = AngleGrid::training();
    let a: Vec<f64> = (0..grid.len()).map(|_| rng.gen::<f64>()).collect();
    let b: Vec<f64> = (0..grid.len()).map(|_| rng.gen::<f64>()).collect();
    let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let mut want = 0.0;
    for d in &diffs {
        want += d * d;
    }
    want /= grid.len() as f64;
    let got = spectrum_loss(
        &Spectrum::new(grid.clone(), a).unwrap(),
        &Spectrum::new(grid, b).unwrap(),
    )
    .unwrap();
    assert!((got - want).abs() < 1e-12);
}

#[test]
fn single_source_hankel_is_rank_one() {
    let h = hankel_lift(&perfect(&[23.0], None, 0).received, 8).unwrap();
    assert_eq!((h.rows(), h.cols()), (8, 9));
    let s = svd(&h).singular_values;
    assert!(s[1] / s[0] < 1e-10, "{s:?}");
}

#[test]
fn lstsq_residual_is_orthogonal() {
    let mut rng = seed::rng(281);
    let a = random_matrix(16, 3, &mut rng);
    let b: Vec<Complex64> = (0..16)
        .map(|_| Complex64::new(rng.gen(), rng.gen()))
        .collect();
    let x = lstsq(&a, &b).unwrap();
    let ax = a.matvec(&x);
    let res: Vec<Complex64> = ax.iter().zip(&b).map(|(p, q)| p - q).collect();
    let normal = a.adjoint_matvec(&res);
    assert!(normal.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() < 1e-9);
}

#[test]
fn psd_projection_is_nearest_psd_among_samples() {
    let mut rng = seed::rng(272);
    let a = random_matrix(6, 6, &mut rng).hermitian_part();
    let p = psd_project(&a).unwrap();
    assert!(hermitian_eig(&p, DEFAULT_TOL).unwrap().min_eigenvalue() >= -1e-12);
    let dist = p.sub(&a).frobenius_norm();
    for _ in 0..100 {
        let g = random_matrix(6, 6, &mut rng);
        let q = g.matmul(&g.adjoint());
        assert!(dist <= q.sub(&a).frobenius_norm() + 1e-12);
    }
}

#[test]
fn random_hermitian_trace_identity() {
    let mut rng = seed::rng(254);
    let a = random_matrix(16, 16, &mut rng).hermitian_part();
    let e = hermitian_eig(&a, DEFAULT_TOL).unwrap();
    assert!((e.eigenvalues.iter().sum::<f64>() - a.trace().re).abs() < 1e-10);
}

#[test]
fn omp_first_pick_is_the_stronger_source() {
    let array = ArrayConfig::ula(16);
    let src = SourceSet::new(
        vec![-20.0, 35.0],
        vec![Complex64::new(0.5, 0.0), Complex64::new(0.0, 2.0)],
    )
    .unwrap();
    let snap = synthesize_noiseless(&array, &ImperfectionRealization::perfect(16), &src).unwrap();
    let res = omp_detailed(&snap, &AngleGrid::full(1.0).unwrap(), 1).unwrap();
    assert_eq!(res.estimate.doas, vec![35.0]);
    let r_norm = snap
        .received
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt();
    assert!(res.residual_norm < r_norm);
}

#[test]
fn anm_polynomial_of_a_steering_vector_peaks_there() {
    let h = steering_vector(15.0, &sdoa::spectrum::ula_positions(16), 1.0);
    let s = anm_spectrum(&h, &AngleGrid::evaluation()).unwrap();
    assert!((s.grid.angles()[s.argmax()] - 15.0).abs() < 1e-9);
    let zero = anm_spectrum(&[Complex64::new(0.0, 0.0); 16], &AngleGrid::evaluation()).unwrap();
    assert!(zero.values.iter().all(|v| *v == 0.0));
}

#[test]
fn music_monte_carlo_at_30_db() {
    let grid = AngleGrid::evaluation();
    let cfg = MusicConfig::for_array(16, 3);
    let mut sq = 0.0;
    for t in 0..100 {
        let snap = perfect(&[-30.0, 10.0, 20.0], Some(30.0), seed::derive(340, 0, t));
        let (_, est) = music_single_snapshot(&snap, &cfg, &grid, 5.0).unwrap();
        sq += est
            .doas
            .iter()
            .zip([-30.0, 10.0, 20.0])
            .map(|(e, d)| (e - d).powi(2))
            .sum::<f64>();
    }
    let rmse = (sq / 300.0).sqrt();
    assert!(rmse < 0.5, "{rmse}");
}

fn classical_config() -> ExperimentConfig {
    ExperimentConfig {
        estimators: Method::CLASSICAL
            .iter()
            .map(|m| m.name().to_owned())
            .collect(),
        ..ExperimentConfig::default()
    }
}

#[test]
fn scenario_peaks_near_truth_for_every_classical_estimator() {
    let mut cfg = classical_config();
    cfg.spectrum.doas = vec![-30.0, 10.0, 20.0];
    cfg.spectrum.snr_db = 20.0;
    cfg.spectrum.xi = 0.0;
    for (m, _, est) in spectrum_overlay(&cfg, None).unwrap() {
        for (e, t) in est.doas.iter().zip(&cfg.spectrum.doas) {
            assert!((e - t).abs() <= 2.0, "{m}: {:?}", est.doas);
        }
    }
}

#[test]
fn music_sweep_at_30_db_perfect_array() {
    let mut cfg = classical_config();
    cfg.eval.n_trials = 50;
    cfg.eval.xi = 0.0;
    cfg.eval.snr_sweep = SweepRange {
        start: 30.0,
        stop: 30.0,
        step: 1.0,
    };
    let rows = sweep_snr(&cfg, None).unwrap();
    assert_eq!(rows.len(), 4);
    let music = rows.iter().find(|r| r.estimator == Method::Music).unwrap();
    assert!(music.rmse_deg < 0.5, "{}", music.rmse_deg);
    assert!(rows.iter().all(|r| r.rmse_deg >= 0.0 && r.n_trials == 50));
}
