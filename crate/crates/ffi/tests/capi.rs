use std::ffi::{CStr, CString};
use std::ptr;

use sdoa_ffi::*;

fn last_error() -> String {
    let p = sdoa_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn simulate(doas: &[f64], n: usize, snr: f64, xi: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    let st = unsafe {
        sdoa_simulate(
            doas.as_ptr(),
            doas.len(),
            n,
            snr,
            xi,
            seed,
            re.as_mut_ptr(),
            im.as_mut_ptr(),
        )
    };
    assert_eq!(st, SdoaStatus::Ok);
    (re, im)
}

#[test]
fn version_matches_package() {
    let v = unsafe { CStr::from_ptr(sdoa_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    assert_eq!(sdoa_eval_grid_len(), 1801);
}

#[test]
fn simulate_is_deterministic_and_noiseless_has_unit_power() {
    let a = simulate(&[-20.0, 15.0], 16, 10.0, 1.0, 7);
    let b = simulate(&[-20.0, 15.0], 16, 10.0, 1.0, 7);
    assert_eq!(a, b);
    let (re, im) = simulate(&[30.0], 16, f64::INFINITY, 0.0, 1);
    for (r, i) in re.iter().zip(&im) {
        assert!((r.hypot(*i) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn classical_estimate_recovers_sources() {
    let (re, im) = simulate(&[-25.0, 20.0], 16, f64::INFINITY, 0.0, 3);
    for name in ["fft", "music", "omp", "anm"] {
        let m = CString::new(name).unwrap();
        let mut doas = [0.0; 2];
        let st = unsafe {
            sdoa_estimate(
                m.as_ptr(),
                re.as_ptr(),
                im.as_ptr(),
                16,
                2,
                doas.as_mut_ptr(),
            )
        };
        assert_eq!(st, SdoaStatus::Ok, "{name}: {}", last_error());
        assert!(
            (doas[0] + 25.0).abs() < 1.5 && (doas[1] - 20.0).abs() < 1.5,
            "{name}: {doas:?}"
        );
    }
}

#[test]
fn unknown_method_and_null_pointers_are_reported() {
    let (re, im) = simulate(&[0.0], 16, 20.0, 0.0, 1);
    let mut doas = [0.0; 1];
    let bad = CString::new("capon").unwrap();
    let st = unsafe {
        sdoa_estimate(
            bad.as_ptr(),
            re.as_ptr(),
            im.as_ptr(),
            16,
            1,
            doas.as_mut_ptr(),
        )
    };
    assert_eq!(st, SdoaStatus::InvalidArgument);
    assert!(last_error().contains("capon"));

    let fft = CString::new("fft").unwrap();
    let st = unsafe {
        sdoa_estimate(
            fft.as_ptr(),
            ptr::null(),
            im.as_ptr(),
            16,
            1,
            doas.as_mut_ptr(),
        )
    };
    assert_eq!(st, SdoaStatus::NullPointer);

    let st = unsafe { sdoa_model_init(16, 0, ptr::null_mut()) };
    assert_eq!(st, SdoaStatus::NullPointer);
    assert_eq!(unsafe { sdoa_model_n_antennas(ptr::null()) }, 0);
    unsafe { sdoa_model_free(ptr::null_mut()) };
}

#[test]
fn reference_spectrum_peaks_at_sources() {
    let len = sdoa_eval_grid_len();
    let mut out = vec![0.0; len];
    let doas = [-40.0, 10.0];
    let st = unsafe { sdoa_reference_spectrum(doas.as_ptr(), 2, 100.0, 16, out.as_mut_ptr(), len) };
    assert_eq!(st, SdoaStatus::Ok);
    assert!((out[500] - 1.0).abs() < 1e-9);
    assert!((out[1000] - 1.0).abs() < 1e-9);
    assert!(out.iter().all(|v| *v >= 0.0));

    let mut short = vec![0.0; 10];
    let st =
        unsafe { sdoa_reference_spectrum(doas.as_ptr(), 2, 100.0, 16, short.as_mut_ptr(), 10) };
    assert_eq!(st, SdoaStatus::BufferTooSmall);
}

#[test]
fn model_lifecycle() {
    let mut model: *mut SdoaModel = ptr::null_mut();
    assert_eq!(
        unsafe { sdoa_model_init(16, 5, &mut model) },
        SdoaStatus::Ok
    );
    assert_eq!(unsafe { sdoa_model_n_antennas(model) }, 16);

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("m.bin").to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { sdoa_model_save(model, path.as_ptr()) },
        SdoaStatus::Ok
    );

    let mut loaded: *mut SdoaModel = ptr::null_mut();
    assert_eq!(
        unsafe { sdoa_model_load(path.as_ptr(), &mut loaded) },
        SdoaStatus::Ok
    );

    let (re, im) = simulate(&[-10.0, 30.0], 16, 20.0, 0.5, 9);
    let len = sdoa_eval_grid_len();
    let run = |m: *const SdoaModel| {
        let mut doas = [0.0; 2];
        let mut spec = vec![0.0; len];
        let st = unsafe {
            sdoa_model_estimate(
                m,
                re.as_ptr(),
                im.as_ptr(),
                16,
                2,
                doas.as_mut_ptr(),
                spec.as_mut_ptr(),
                len,
            )
        };
        assert_eq!(st, SdoaStatus::Ok, "{}", last_error());
        (doas, spec)
    };
    let (d1, s1) = run(model);
    let (d2, s2) = run(loaded);
    assert_eq!(d1, d2);
    assert_eq!(s1, s2);
    assert!(s1.iter().all(|v| v.is_finite() && *v >= 0.0));

    let mut doas = [0.0; 2];
    let st = unsafe {
        sdoa_model_estimate(
            model,
            re.as_ptr(),
            im.as_ptr(),
            8,
            2,
            doas.as_mut_ptr(),
            ptr::null_mut(),
            0,
        )
    };
    assert_eq!(st, SdoaStatus::Dimension);

    unsafe {
        sdoa_model_free(model);
        sdoa_model_free(loaded);
    }
}

#[test]
fn load_missing_file_is_io_error() {
    let mut m: *mut SdoaModel = ptr::null_mut();
    let p = CString::new("/nonexistent/model.bin").unwrap();
    assert_eq!(
        unsafe { sdoa_model_load(p.as_ptr(), &mut m) },
        SdoaStatus::Io
    );
    assert!(m.is_null());
}
