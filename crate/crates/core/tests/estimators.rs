use num_complex::Complex64;
use rand::Rng;
use sdoa::array::{
    synthesize_noiseless, synthesize_snapshot, ArrayConfig, ImperfectionRealization, Snapshot,
    SourceSet,
};
use sdoa::estimators::{
    anm, anm_denoise, beamformer, beamformer_spectrum, hankel_lift, music_single_snapshot,
    omp_detailed, AnmConfig, Method, MusicConfig,
};
use sdoa::numerics::hermitian_eig;
use sdoa::spectrum::AngleGrid;

fn noiseless(doas: &[f64], n: usize) -> Snapshot {
    synthesize_noiseless(
        &ArrayConfig::ula(n),
        &ImperfectionRealization::perfect(n),
        &SourceSet::unit(doas).unwrap(),
    )
    .unwrap()
}

/// Direct zero-padded DFT of `r` evaluated at bin `m` of `len`.
fn dft_power(r: &[Complex64], m: usize, len: usize) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, x) in r.iter().enumerate() {
        acc += x * Complex64::from_polar(
            1.0,
            -2.0 * std::f64::consts::PI * (m * n) as f64 / len as f64,
        );
    }
    acc.norm_sqr()
}

#[test]
fn beamformer_matches_dft_on_lattice() {
    let snap = synthesize_snapshot(
        &ArrayConfig::ula(16),
        &ImperfectionRealization::perfect(16),
        &SourceSet::unit(&[-20.0, 12.0]).unwrap(),
        10.0,
        9,
    )
    .unwrap();
    // With d = λ/2, sin ζ = 2m/L maps angle ζ to DFT bin m of length L.
    let len = 64;
    for m in 0..len / 2 {
        let s = 2.0 * m as f64 / len as f64;
        let angle = s.asin().to_degrees();
        let grid = AngleGrid::new(angle, angle + 1.0, 2).unwrap();
        let ours = beamformer_spectrum(&snap, &grid).unwrap().values[0];
        let want = dft_power(&snap.received, m, len);
        assert!(
            (ours - want).abs() <= 1e-9 * want.max(1.0),
            "bin {m}: {ours} vs {want}"
        );
    }
}

#[test]
fn beamformer_single_source_peak() {
    let snap = noiseless(&[17.0], 16);
    let (spec, est) = beamformer(&snap, &AngleGrid::evaluation(), 1, 5.0).unwrap();
    assert!((est.doas[0] - 17.0).abs() < 0.05);
    assert!((spec.max() - 256.0).abs() < 1e-6);
}

#[test]
fn hankel_lift_has_constant_antidiagonals() {
    let r: Vec<Complex64> = (0..6)
        .map(|i| Complex64::new(i as f64, -(i as f64)))
        .collect();
    let h = hankel_lift(&r, 3).unwrap();
    assert_eq!((h.rows(), h.cols()), (3, 4));
    for i in 0..3 {
        for j in 0..4 {
            assert_eq!(h[(i, j)], r[i + j]);
        }
    }
    assert!(hankel_lift(&r, 7).is_err());
}

#[test]
fn music_noiseless_on_grid() {
    let grid = AngleGrid::evaluation();
    for doas in [vec![-30.0, 20.0], vec![-40.0, -10.0, 25.0], vec![0.0]] {
        let snap = noiseless(&doas, 16);
        let cfg = MusicConfig::for_array(16, doas.len());
        let (spec, est) = music_single_snapshot(&snap, &cfg, &grid, 5.0).unwrap();
        assert!((spec.max() - 1.0).abs() < 1e-12);
        for (e, t) in est.doas.iter().zip(&doas) {
            assert!((e - t).abs() <= 0.05, "{doas:?}: {:?}", est.doas);
        }
    }
}

#[test]
fn music_rejects_bad_order() {
    let snap = noiseless(&[0.0], 16);
    let cfg = MusicConfig {
        hankel_rows: 8,
        n_sources: 8,
    };
    assert!(music_single_snapshot(&snap, &cfg, &AngleGrid::training(), 5.0).is_err());
}

#[test]
fn omp_recovers_two_atoms() {
    let grid = AngleGrid::full(1.0).unwrap();
    let snap = noiseless(&[-30.0, 25.0], 16);
    let res = omp_detailed(&snap, &grid, 2).unwrap();
    assert_eq!(res.estimate.doas, vec![-30.0, 25.0]);
    assert!(res.residual_norm < 1e-9);
    assert!(!res.estimate.flagged);
    let sticks = res.sticks(&grid);
    assert_eq!(sticks.values.iter().filter(|v| **v > 0.0).count(), 2);
}

#[test]
fn anm_single_source_peak() {
    let snap = noiseless(&[12.3], 16);
    let (_, est) = anm(
        &snap,
        &AnmConfig::default(),
        &AngleGrid::evaluation(),
        1,
        5.0,
    )
    .unwrap();
    assert!((est.doas[0] - 12.3).abs() <= 0.2, "{:?}", est.doas);
}

#[test]
fn anm_two_sources() {
    let snap = noiseless(&[-30.0, 20.0], 16);
    let (_, est) = anm(
        &snap,
        &AnmConfig::default(),
        &AngleGrid::evaluation(),
        2,
        5.0,
    )
    .unwrap();
    for (e, t) in est.doas.iter().zip([-30.0, 20.0]) {
        assert!((e - t).abs() <= 0.5, "{:?}", est.doas);
    }
}

#[test]
fn anm_solution_is_feasible() {
    let mut rng = sdoa::seed::rng(77);
    for _ in 0..5 {
        let r: Vec<Complex64> = (0..16)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let snap = Snapshot::from_received(r, SourceSet::unit(&[0.0]).unwrap());
        let sol = anm_denoise(&snap, &AnmConfig::default()).unwrap();
        let min_eig = hermitian_eig(&sol.lifted(), 1e-12)
            .unwrap()
            .min_eigenvalue();
        let (tr, off) = sol.affine_violation();
        assert!(min_eig >= -1e-8, "min eig {min_eig}");
        assert!(tr <= 1e-8 && off <= 1e-8, "{tr} {off}");
    }
}

#[test]
fn anm_zero_input() {
    let snap = Snapshot::from_received(
        vec![Complex64::new(0.0, 0.0); 16],
        SourceSet::unit(&[0.0]).unwrap(),
    );
    let sol = anm_denoise(&snap, &AnmConfig::default()).unwrap();
    assert!(sol.h.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
}

#[test]
fn method_names_round_trip() {
    for m in Method::ALL {
        assert_eq!(m.name().parse::<Method>().unwrap(), m);
    }
    let err = "capon".parse::<Method>().unwrap_err().to_string();
    assert!(err.contains("fft") && err.contains("sdoanet"));
}
