//! C ABI over the `sdoa` crate.
//!
//! Every fallible function returns an [`SdoaStatus`]; on failure a message is
//! available from [`sdoa_last_error`] on the same thread. Models are opaque
//! handles created by `sdoa_model_load` / `sdoa_model_init` and released with
//! `sdoa_model_free`. Complex vectors cross the boundary as separate real and
//! imaginary arrays. Spectra are sampled on the evaluation grid
//! `-90 + 0.1·i` degrees, `i = 0..sdoa_eval_grid_len()`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use num_complex::Complex64;
use sdoa::array::{
    sample_imperfections, synthesize_noiseless, synthesize_snapshot, ArrayConfig, CurriculumStage,
};
use sdoa::array::{ImperfectionCaps, Snapshot, SourceSet};
use sdoa::bench::EstimatorSet;
use sdoa::estimators::{AnmConfig, Method};
use sdoa::net::{self, NetConfig, NetworkParams};
use sdoa::spectrum::{reference_spectrum, AngleGrid, DEFAULT_MIN_SEPARATION_DEG};
use sdoa::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdoaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    NotConverged = 4,
    Numerical = 5,
    Io = 6,
    Format = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Opaque trained or initialized network.
pub struct SdoaModel {
    params: NetworkParams,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SdoaStatus {
    match e {
        Error::InvalidArgument(_) | Error::Config(_) => SdoaStatus::InvalidArgument,
        Error::Dimension(_) => SdoaStatus::Dimension,
        Error::NotConverged { .. } | Error::Diverged { .. } => SdoaStatus::NotConverged,
        Error::NotHermitian(_) | Error::RankDeficient | Error::NonFinite(_) => {
            SdoaStatus::Numerical
        }
        Error::Io(_) => SdoaStatus::Io,
        Error::Format(_) | Error::Json(_) => SdoaStatus::Format,
    }
}

struct Fail(SdoaStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SdoaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SdoaStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SdoaStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(SdoaStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a, T>(ptr: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(SdoaStatus::InvalidArgument, "path is not UTF-8".into()))?;
    Ok(Path::new(s))
}

unsafe fn snapshot(re: *const f64, im: *const f64, n: usize) -> Result<Snapshot, Fail> {
    let re = slice(re, n, "re")?;
    let im = slice(im, n, "im")?;
    let r = re
        .iter()
        .zip(im)
        .map(|(a, b)| Complex64::new(*a, *b))
        .collect();
    Ok(Snapshot::from_received(r, SourceSet::unit(&[0.0])?))
}

fn write_spectrum(values: &[f64], out: *mut f64, out_len: usize) -> Result<(), Fail> {
    if out.is_null() {
        return Ok(());
    }
    if out_len < values.len() {
        return Err(Fail(
            SdoaStatus::BufferTooSmall,
            format!(
                "spectrum needs {} values, buffer holds {out_len}",
                values.len()
            ),
        ));
    }
    unsafe { slice_mut(out, values.len(), "spectrum")? }.copy_from_slice(values);
    Ok(())
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn sdoa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sdoa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Number of points on the evaluation grid.
#[no_mangle]
pub extern "C" fn sdoa_eval_grid_len() -> usize {
    AngleGrid::evaluation().len()
}

/// Loads a model file. `*out` receives a handle owned by the caller.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sdoa_model_load(
    path_: *const c_char,
    out: *mut *mut SdoaModel,
) -> SdoaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let params = net::load_model(path(path_)?)?;
        *out = Box::into_raw(Box::new(SdoaModel { params }));
        Ok(())
    })
}

/// Fresh network with the default configuration for `n_antennas` antennas.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sdoa_model_init(
    n_antennas: usize,
    seed: u64,
    out: *mut *mut SdoaModel,
) -> SdoaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = NetConfig {
            n_antennas,
            ..NetConfig::default()
        };
        let params = net::init_params(&cfg, seed)?;
        *out = Box::into_raw(Box::new(SdoaModel { params }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library; `path` must be nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn sdoa_model_save(
    model: *const SdoaModel,
    path_: *const c_char,
) -> SdoaStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        net::save_model(&m.params, path(path_)?)?;
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn sdoa_model_free(model: *mut SdoaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Antenna count the model expects, 0 for a null handle.
///
/// # Safety
/// `model` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn sdoa_model_n_antennas(model: *const SdoaModel) -> usize {
    model.as_ref().map_or(0, |m| m.params.cfg.n_antennas)
}

/// Network estimate of `k` DOAs (ascending, degrees) from one snapshot.
/// `spectrum_out` may be null; otherwise it receives the spatial spectrum on
/// the evaluation grid.
///
/// # Safety
/// `re`/`im` hold `n` values, `doas_out` holds `k`, `spectrum_out` holds
/// `spectrum_len` or is null.
#[no_mangle]
pub unsafe extern "C" fn sdoa_model_estimate(
    model: *const SdoaModel,
    re: *const f64,
    im: *const f64,
    n: usize,
    k: usize,
    doas_out: *mut f64,
    spectrum_out: *mut f64,
    spectrum_len: usize,
) -> SdoaStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let snap = snapshot(re, im, n)?;
        let (spec, est) = net::estimate(
            &m.params,
            &snap,
            &AngleGrid::evaluation(),
            k,
            DEFAULT_MIN_SEPARATION_DEG,
        )?;
        slice_mut(doas_out, k, "doas_out")?.copy_from_slice(&est.doas);
        write_spectrum(&spec.values, spectrum_out, spectrum_len)
    })
}

/// Classical estimate with `method` one of "fft", "music", "omp", "anm".
///
/// # Safety
/// `method` is nul-terminated; `re`/`im` hold `n` values, `doas_out` holds `k`.
#[no_mangle]
pub unsafe extern "C" fn sdoa_estimate(
    method: *const c_char,
    re: *const f64,
    im: *const f64,
    n: usize,
    k: usize,
    doas_out: *mut f64,
) -> SdoaStatus {
    guard(|| {
        if method.is_null() {
            return Err(null("method"));
        }
        let name = CStr::from_ptr(method)
            .to_str()
            .map_err(|_| Fail(SdoaStatus::InvalidArgument, "method is not UTF-8".into()))?;
        let m: Method = name.parse()?;
        if m == Method::Sdoanet {
            return Err(Fail(
                SdoaStatus::InvalidArgument,
                "use sdoa_model_estimate for the network".into(),
            ));
        }
        let snap = snapshot(re, im, n)?;
        let set = EstimatorSet {
            grid: AngleGrid::evaluation(),
            k,
            min_separation_deg: DEFAULT_MIN_SEPARATION_DEG,
            anm: AnmConfig::default(),
            model: None,
        };
        let (_, est) = set.run(m, &snap)?;
        slice_mut(doas_out, k, "doas_out")?.copy_from_slice(&est.doas);
        Ok(())
    })
}

/// Synthesizes one snapshot from unit-amplitude sources on an `n`-antenna
/// array with all imperfections scaled by `xi`. An infinite `snr_db` gives a
/// noise-free snapshot.
///
/// # Safety
/// `doas` holds `k` values; `re_out`/`im_out` hold `n`.
#[no_mangle]
pub unsafe extern "C" fn sdoa_simulate(
    doas: *const f64,
    k: usize,
    n: usize,
    snr_db: f64,
    xi: f64,
    seed: u64,
    re_out: *mut f64,
    im_out: *mut f64,
) -> SdoaStatus {
    guard(|| {
        let sources = SourceSet::unit(slice(doas, k, "doas")?)?;
        let array = ArrayConfig::ula(n);
        let caps = ImperfectionCaps::default().with_xi(xi);
        let realization = sample_imperfections(n, &caps, CurriculumStage::AllEffects, seed)?;
        let snap = if snr_db == f64::INFINITY {
            synthesize_noiseless(&array, &realization, &sources)?
        } else {
            synthesize_snapshot(&array, &realization, &sources, snr_db, seed.wrapping_add(1))?
        };
        let re = slice_mut(re_out, n, "re_out")?;
        let im = slice_mut(im_out, n, "im_out")?;
        for (i, z) in snap.received.iter().enumerate() {
            re[i] = z.re;
            im[i] = z.im;
        }
        Ok(())
    })
}

/// Gaussian reference spectrum (unit peaks, width `sigma_bar / n`) on the
/// evaluation grid.
///
/// # Safety
/// `doas` holds `k` values; `out` holds `out_len`.
#[no_mangle]
pub unsafe extern "C" fn sdoa_reference_spectrum(
    doas: *const f64,
    k: usize,
    sigma_bar: f64,
    n: usize,
    out: *mut f64,
    out_len: usize,
) -> SdoaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let truth = SourceSet::unit(slice(doas, k, "doas")?)?;
        let spec = reference_spectrum(&truth, 1.0, sigma_bar, n, &AngleGrid::evaluation())?;
        write_spectrum(&spec.values, out, out_len)
    })
}
