//! C ABI for `holomimo`.
//!
//! Objects cross the boundary as opaque handles created by `hm_*_new`
//! functions and released with the matching `hm_*_free`. Every fallible call
//! returns an [`HmStatus`]; on failure a description is available from
//! [`hm_last_error_message`] on the same thread. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use holomimo::capacity::{self, capacity, epa, link_budget};
use holomimo::experiment::{self, svd_waterfilling_capacity, Scheme, SweepConfig, SweepResult};
use holomimo::{build_channel, build_mode_precoder, build_svd_precoder, channel_svd, Aperture, ChannelMatrix, Error, Point3};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HmStatus {
    Ok = 0,
    InvalidArgument = 1,
    Singularity = 2,
    DimensionMismatch = 3,
    Numerical = 4,
    Io = 5,
    NullPointer = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Precoding schemes, numbered as in the CSV scheme order.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HmScheme {
    SvdWf = 0,
    SvdEpa = 1,
    OamUnfocused = 2,
    OamFocused = 3,
    WalshRadial = 4,
    WalshAngular = 5,
    WalshPolar = 6,
}

impl From<HmScheme> for Scheme {
    fn from(s: HmScheme) -> Self {
        match s {
            HmScheme::SvdWf => Scheme::SvdWf,
            HmScheme::SvdEpa => Scheme::SvdEpa,
            HmScheme::OamUnfocused => Scheme::OamUnfocused,
            HmScheme::OamFocused => Scheme::OamFocused,
            HmScheme::WalshRadial => Scheme::WalshRadial,
            HmScheme::WalshAngular => Scheme::WalshAngular,
            HmScheme::WalshPolar => Scheme::WalshPolar,
        }
    }
}

impl From<Scheme> for HmScheme {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::SvdWf => HmScheme::SvdWf,
            Scheme::SvdEpa => HmScheme::SvdEpa,
            Scheme::OamUnfocused => HmScheme::OamUnfocused,
            Scheme::OamFocused => HmScheme::OamFocused,
            Scheme::WalshRadial => HmScheme::WalshRadial,
            Scheme::WalshAngular => HmScheme::WalshAngular,
            Scheme::WalshPolar => HmScheme::WalshPolar,
        }
    }
}

/// One row of a sweep result.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HmRecord {
    pub d_over_dr: f64,
    pub d_wavelengths: f64,
    pub scheme: HmScheme,
    pub capacity_bits: f64,
}

/// Sampled disk aperture.
pub struct HmAperture(Aperture);

/// Channel matrix between two apertures.
pub struct HmChannel(ChannelMatrix);

/// Sweep configuration.
pub struct HmSweepConfig(SweepConfig);

/// Completed sweep.
pub struct HmSweepResult(SweepResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HmStatus {
    match e {
        Error::InvalidArgument(_) | Error::Config(_) => HmStatus::InvalidArgument,
        Error::Singularity => HmStatus::Singularity,
        Error::DimensionMismatch(_) => HmStatus::DimensionMismatch,
        Error::Numerical(_) => HmStatus::Numerical,
        Error::Io(_) | Error::Csv(_) => HmStatus::Io,
        Error::Sweep { source, .. } => status_of(source),
    }
}

enum Failure {
    Lib(Error),
    Null(&'static str),
    Small(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HmStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            let status = status_of(&e);
            set_last_error(e.to_string());
            status
        }
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            HmStatus::NullPointer
        }
        Ok(Err(Failure::Small(needed))) => {
            set_last_error(format!("buffer too small: {needed} elements required"));
            HmStatus::BufferTooSmall
        }
        Err(_) => {
            set_last_error("internal panic".to_string());
            HmStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, needed: usize, what: &'static str) -> Result<&'a mut [T], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    if len < needed {
        return Err(Failure::Small(needed));
    }
    Ok(std::slice::from_raw_parts_mut(p, needed))
}

unsafe fn cstr<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Lib(Error::InvalidArgument(format!("{what} is not valid UTF-8"))))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length, or 0
/// when there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hm_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Green's function between two points given as `[x, y, z]` in wavelengths.
///
/// # Safety
/// `rx` and `tx` must point to 3 doubles; `re`, `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hm_green(rx: *const f64, tx: *const f64, re: *mut f64, im: *mut f64) -> HmStatus {
    guard(|| {
        let (rx, tx) = (deref(rx, "rx")?, deref(tx, "tx")?);
        let rx = std::slice::from_raw_parts(rx, 3);
        let tx = std::slice::from_raw_parts(tx, 3);
        let g = holomimo::green(Point3::new(rx[0], rx[1], rx[2]), Point3::new(tx[0], tx[1], tx[2]))?;
        *out(re, "re")? = g.re;
        *out(im, "im")? = g.im;
        Ok(())
    })
}

/// Samples a disk of `radius` wavelengths at `pitch`, in the plane `z`.
///
/// # Safety
/// `out_aperture` must be writable; the handle is released with
/// [`hm_aperture_free`].
#[no_mangle]
pub unsafe extern "C" fn hm_aperture_new(radius: f64, pitch: f64, z: f64, out_aperture: *mut *mut HmAperture) -> HmStatus {
    guard(|| {
        let slot = out(out_aperture, "out_aperture")?;
        *slot = boxed(HmAperture(holomimo::sample_disk(radius, pitch, z)?));
        Ok(())
    })
}

/// # Safety
/// `aperture` must be null or a handle from [`hm_aperture_new`].
#[no_mangle]
pub unsafe extern "C" fn hm_aperture_free(aperture: *mut HmAperture) {
    free(aperture)
}

/// Number of samples; 0 for a null handle.
///
/// # Safety
/// `aperture` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hm_aperture_point_count(aperture: *const HmAperture) -> usize {
    aperture.as_ref().map_or(0, |a| a.0.len())
}

/// Copies sample coordinates (wavelengths) into `xs` / `ys`, each of
/// capacity `len`.
///
/// # Safety
/// `xs` and `ys` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hm_aperture_points(aperture: *const HmAperture, xs: *mut f64, ys: *mut f64, len: usize) -> HmStatus {
    guard(|| {
        let a = &deref(aperture, "aperture")?.0;
        let n = a.len();
        let xs = out_slice(xs, len, n, "xs")?;
        let ys = out_slice(ys, len, n, "ys")?;
        for ((x, y), p) in xs.iter_mut().zip(ys.iter_mut()).zip(a.points()) {
            *x = p.x;
            *y = p.y;
        }
        Ok(())
    })
}

/// Channel from `tx` to `rx`; the apertures must lie in different planes.
///
/// # Safety
/// Handles must be live; `out_channel` writable.
#[no_mangle]
pub unsafe extern "C" fn hm_channel_new(tx: *const HmAperture, rx: *const HmAperture, out_channel: *mut *mut HmChannel) -> HmStatus {
    guard(|| {
        let (tx, rx) = (deref(tx, "tx")?, deref(rx, "rx")?);
        let slot = out(out_channel, "out_channel")?;
        *slot = boxed(HmChannel(build_channel(&tx.0, &rx.0)?));
        Ok(())
    })
}

/// # Safety
/// `channel` must be null or a handle from [`hm_channel_new`].
#[no_mangle]
pub unsafe extern "C" fn hm_channel_free(channel: *mut HmChannel) {
    free(channel)
}

/// # Safety
/// `channel` must be live; `rows`, `cols` writable.
#[no_mangle]
pub unsafe extern "C" fn hm_channel_dims(channel: *const HmChannel, rows: *mut usize, cols: *mut usize) -> HmStatus {
    guard(|| {
        let h = &deref(channel, "channel")?.0;
        *out(rows, "rows")? = h.rx_count();
        *out(cols, "cols")? = h.tx_count();
        Ok(())
    })
}

/// Copies the matrix in row-major order into split real/imaginary buffers
/// of capacity `len` (at least rows × cols).
///
/// # Safety
/// `re` and `im` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hm_channel_entries(channel: *const HmChannel, re: *mut f64, im: *mut f64, len: usize) -> HmStatus {
    guard(|| {
        let h = deref(channel, "channel")?.0.entries();
        let n = h.len();
        let re = out_slice(re, len, n, "re")?;
        let im = out_slice(im, len, n, "im")?;
        for (k, c) in h.iter().enumerate() {
            re[k] = c.re;
            im[k] = c.im;
        }
        Ok(())
    })
}

/// Singular values in non-increasing order; `written` receives
/// min(rows, cols).
///
/// # Safety
/// `values` must point to `len` writable doubles; `written` writable.
#[no_mangle]
pub unsafe extern "C" fn hm_channel_singular_values(channel: *const HmChannel, values: *mut f64, len: usize, written: *mut usize) -> HmStatus {
    guard(|| {
        let h = &deref(channel, "channel")?.0;
        let svd = channel_svd(h)?;
        let s = svd.singular_values();
        let dst = out_slice(values, len, s.len(), "values")?;
        dst.iter_mut().zip(s.iter()).for_each(|(d, v)| *d = *v);
        *out(written, "written")? = s.len();
        Ok(())
    })
}

/// Capacity (bit/s/Hz) of one scheme on `channel`, with `tx` the aperture
/// the channel was built from. Uses the distance-compensated link budget at
/// `snr_db`; `n_modes` is ignored for `SvdWf`.
///
/// # Safety
/// Handles must be live; `capacity_bits` writable.
#[no_mangle]
pub unsafe extern "C" fn hm_scheme_capacity(
    channel: *const HmChannel,
    tx: *const HmAperture,
    scheme: HmScheme,
    n_modes: usize,
    snr_db: f64,
    capacity_bits: *mut f64,
) -> HmStatus {
    guard(|| {
        let h = &deref(channel, "channel")?.0;
        let tx = &deref(tx, "tx")?.0;
        let dst = out(capacity_bits, "capacity_bits")?;
        if h.tx_layout_id() != tx.layout_id() {
            return Err(Error::DimensionMismatch("channel was not built from this transmit aperture".into()).into());
        }
        let d = h.separation().abs();
        let link = link_budget(snr_db, d)?;
        let scheme = Scheme::from(scheme);
        let c = match scheme {
            Scheme::SvdWf => svd_waterfilling_capacity(h, &channel_svd(h)?, &link)?.0,
            Scheme::SvdEpa => {
                let f = build_svd_precoder(&channel_svd(h)?, n_modes)?;
                capacity(h, &f, &epa(n_modes)?, &link)?
            }
            _ => {
                let family = scheme.family(n_modes, d).expect("geometric scheme");
                let f = build_mode_precoder(family, tx, n_modes)?;
                capacity(h, &f, &epa(n_modes)?, &link)?
            }
        };
        *dst = c;
        Ok(())
    })
}

/// Water-filling of a unit-or-smaller `budget` over `len` gains; writes
/// `len` weights.
///
/// # Safety
/// `gains` must point to `len` doubles, `weights` to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hm_waterfill(gains: *const f64, len: usize, budget: f64, weights: *mut f64) -> HmStatus {
    guard(|| {
        if gains.is_null() {
            return Err(Failure::Null("gains"));
        }
        let g = std::slice::from_raw_parts(gains, len);
        let q = capacity::waterfill(g, budget)?;
        let dst = out_slice(weights, len, len, "weights")?;
        dst.copy_from_slice(q.weights());
        Ok(())
    })
}

/// Default (reference) sweep configuration.
///
/// # Safety
/// `out_config` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hm_sweep_config_default(out_config: *mut *mut HmSweepConfig) -> HmStatus {
    guard(|| {
        *out(out_config, "out_config")? = boxed(HmSweepConfig(SweepConfig::default()));
        Ok(())
    })
}

/// Parses a flat JSON configuration; absent fields take default values.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_config` writable.
#[no_mangle]
pub unsafe extern "C" fn hm_sweep_config_from_json(json: *const c_char, out_config: *mut *mut HmSweepConfig) -> HmStatus {
    guard(|| {
        let text = cstr(json, "json")?;
        let slot = out(out_config, "out_config")?;
        *slot = boxed(HmSweepConfig(SweepConfig::from_json(text)?));
        Ok(())
    })
}

/// # Safety
/// `config` must be null or a config handle.
#[no_mangle]
pub unsafe extern "C" fn hm_sweep_config_free(config: *mut HmSweepConfig) {
    free(config)
}

/// Runs the sweep.
///
/// # Safety
/// `config` must be live; `out_result` writable.
#[no_mangle]
pub unsafe extern "C" fn hm_sweep_run(config: *const HmSweepConfig, out_result: *mut *mut HmSweepResult) -> HmStatus {
    guard(|| {
        let cfg = &deref(config, "config")?.0;
        let slot = out(out_result, "out_result")?;
        *slot = boxed(HmSweepResult(experiment::run_sweep(cfg)?));
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a result handle.
#[no_mangle]
pub unsafe extern "C" fn hm_sweep_result_free(result: *mut HmSweepResult) {
    free(result)
}

/// Number of records; 0 for a null handle.
///
/// # Safety
/// `result` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn hm_sweep_result_len(result: *const HmSweepResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.records.len())
}

/// # Safety
/// `result` must be live; `record` writable.
#[no_mangle]
pub unsafe extern "C" fn hm_sweep_result_record(result: *const HmSweepResult, index: usize, record: *mut HmRecord) -> HmStatus {
    guard(|| {
        let r = &deref(result, "result")?.0;
        let dst = out(record, "record")?;
        let rec = r
            .records
            .get(index)
            .ok_or_else(|| Error::InvalidArgument(format!("record index {index} out of range ({})", r.records.len())))?;
        *dst = HmRecord {
            d_over_dr: rec.d_over_dr,
            d_wavelengths: rec.d_wavelengths,
            scheme: rec.scheme.into(),
            capacity_bits: rec.capacity_bits,
        };
        Ok(())
    })
}

/// Writes the result CSV (same format as the CLI) to `path`.
///
/// # Safety
/// `result` must be live; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hm_sweep_result_write_csv(result: *const HmSweepResult, path: *const c_char) -> HmStatus {
    guard(|| {
        let r = &deref(result, "result")?.0;
        let path = cstr(path, "path")?;
        experiment::emit_csv(r, Path::new(path))?;
        Ok(())
    })
}
