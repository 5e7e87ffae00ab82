//! C ABI over `neuroenc`.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free` function. Every fallible call returns an
//! [`NeStatus`]; the message for the most recent failure on the calling
//! thread is available from [`ne_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use neuroenc::codec::{decode_image, encode_image, CodecError, EncodeMode, EncodedImage, ImageU8};
use neuroenc::io::{load_config, read_spike_table, write_spike_table, Config, ConfigError};
use neuroenc::model::{
    excitatory_current, interspike_interval_analytic, pixel_to_input_voltage, validate_params, DecodeTolerance,
    ModelError, Pixel,
};
use neuroenc::simulator::{simulate_branch, SimConfig, SimError};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    InvalidConfig = 4,
    NonSpiking = 5,
    OutOfRange = 6,
    CorruptWindow = 7,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeMode {
    Analytic = 0,
    Simulated = 1,
}

/// Device parameters, branches and power table.
pub struct NeConfig(Config);

/// An encoded image: one spike train per pixel window.
pub struct NeEncoding(EncodedImage);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: NeStatus, msg: impl Into<String>) -> NeStatus {
    set_error(msg);
    status
}

fn model_status(e: &ModelError) -> NeStatus {
    match e {
        ModelError::NonSpiking { .. } => NeStatus::NonSpiking,
        ModelError::OutOfRange { .. } => NeStatus::OutOfRange,
        _ => NeStatus::InvalidArgument,
    }
}

fn codec_status(e: &CodecError) -> NeStatus {
    match e {
        CodecError::InvalidConfig(_) => NeStatus::InvalidConfig,
        CodecError::CorruptWindow { .. } => NeStatus::CorruptWindow,
        CodecError::Model { source, .. } => model_status(source),
        CodecError::Sim { source: SimError::NonSpiking, .. } => NeStatus::NonSpiking,
        _ => NeStatus::InvalidArgument,
    }
}

/// Run `f`, turning panics into `NeStatus::Panic`.
fn guard(f: impl FnOnce() -> NeStatus) -> NeStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(NeStatus::Panic, "internal panic"))
}

macro_rules! deref {
    ($ptr:expr) => {
        match unsafe { $ptr.as_ref() } {
            Some(v) => v,
            None => return fail(NeStatus::NullPointer, concat!(stringify!($ptr), " is null")),
        }
    };
}

macro_rules! out {
    ($ptr:expr) => {
        match unsafe { $ptr.as_mut() } {
            Some(v) => v,
            None => return fail(NeStatus::NullPointer, concat!(stringify!($ptr), " is null")),
        }
    };
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ne_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Default configuration. Never NULL.
#[no_mangle]
pub extern "C" fn ne_config_default() -> *mut NeConfig {
    Box::into_raw(Box::new(NeConfig(Config::default())))
}

/// Parse `key = value` configuration text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ne_config_parse(text: *const c_char, out: *mut *mut NeConfig) -> NeStatus {
    guard(|| {
        let out = out!(out);
        *out = ptr::null_mut();
        if text.is_null() {
            return fail(NeStatus::NullPointer, "text is null");
        }
        let Ok(text) = CStr::from_ptr(text).to_str() else {
            return fail(NeStatus::ParseError, "config text is not UTF-8");
        };
        match load_config(text) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(NeConfig(cfg)));
                NeStatus::Ok
            }
            Err(e @ ConfigError::InvariantViolation(_)) => fail(NeStatus::InvalidConfig, e.to_string()),
            Err(e) => fail(NeStatus::ParseError, e.to_string()),
        }
    })
}

/// # Safety
/// `cfg` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ne_config_free(cfg: *mut NeConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// `NeStatus::Ok` when every pixel spikes on every branch inside one window.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ne_config_validate(cfg: *const NeConfig) -> NeStatus {
    guard(|| {
        let cfg = &deref!(cfg).0;
        let report = validate_params(&cfg.branches, &cfg.params);
        if report.is_ok() {
            NeStatus::Ok
        } else {
            fail(NeStatus::InvalidConfig, report.to_string())
        }
    })
}

/// Number of branches, or 0 for a NULL handle.
///
/// # Safety
/// `cfg` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ne_config_branch_count(cfg: *const NeConfig) -> usize {
    cfg.as_ref().map_or(0, |c| c.0.branches.len())
}

/// Enable period in seconds, or 0 for a NULL handle.
///
/// # Safety
/// `cfg` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ne_config_t_samp(cfg: *const NeConfig) -> f64 {
    cfg.as_ref().map_or(0.0, |c| c.0.params.t_samp)
}

/// Excitatory current (amperes) of `branch` at `pixel`.
///
/// # Safety
/// `cfg` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ne_excitatory_current(cfg: *const NeConfig, pixel: u8, branch: usize, out: *mut f64) -> NeStatus {
    guard(|| {
        let cfg = &deref!(cfg).0;
        let out = out!(out);
        let Some(b) = cfg.branches.get(branch) else {
            return fail(NeStatus::InvalidArgument, format!("branch {branch} out of range"));
        };
        *out = excitatory_current(pixel_to_input_voltage(Pixel(pixel)), b, &cfg.params);
        NeStatus::Ok
    })
}

/// Analytic inter-spike interval `D_index` (seconds) at `pixel`.
///
/// # Safety
/// `cfg` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ne_interval_analytic(cfg: *const NeConfig, pixel: u8, index: usize, out: *mut f64) -> NeStatus {
    guard(|| {
        let cfg = &deref!(cfg).0;
        let out = out!(out);
        match interspike_interval_analytic(Pixel(pixel), index, &cfg.branches, &cfg.params) {
            Ok(d) => {
                *out = d;
                NeStatus::Ok
            }
            Err(e) => fail(model_status(&e), e.to_string()),
        }
    })
}

/// Simulated time to first spike (seconds) of `branch` at `pixel`, default step.
///
/// # Safety
/// `cfg` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ne_simulate_branch(cfg: *const NeConfig, pixel: u8, branch: usize, out: *mut f64) -> NeStatus {
    guard(|| {
        let cfg = &deref!(cfg).0;
        let out = out!(out);
        let Some(b) = cfg.branches.get(branch) else {
            return fail(NeStatus::InvalidArgument, format!("branch {branch} out of range"));
        };
        match simulate_branch(Pixel(pixel), b, &cfg.params, &SimConfig::for_params(&cfg.params)) {
            Ok(x) => {
                *out = x;
                NeStatus::Ok
            }
            Err(SimError::NonSpiking) => fail(NeStatus::NonSpiking, "branch does not spike within the window"),
            Err(e) => fail(NeStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Decode interval `D_index` (seconds) back to a pixel.
///
/// # Safety
/// `cfg` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ne_decode_interval(cfg: *const NeConfig, interval: f64, index: usize, out: *mut u8) -> NeStatus {
    guard(|| {
        let cfg = &deref!(cfg).0;
        let out = out!(out);
        match neuroenc::model::decode_pixel_from_interval(
            interval,
            index,
            &cfg.branches,
            &cfg.params,
            DecodeTolerance::default(),
        ) {
            Ok(p) => {
                *out = p.value();
                NeStatus::Ok
            }
            Err(e) => fail(model_status(&e), e.to_string()),
        }
    })
}

/// Single-neuron power in nanowatts at `pixel`.
///
/// # Safety
/// `cfg` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ne_power_nw(cfg: *const NeConfig, pixel: u8, out: *mut f64) -> NeStatus {
    guard(|| {
        let cfg = &deref!(cfg).0;
        *out!(out) = cfg.power.power_nw(Pixel(pixel));
        NeStatus::Ok
    })
}

/// Encode a `rows x cols` row-major 8-bit image.
///
/// # Safety
/// `pixels` must point to `rows * cols` readable bytes (may be NULL when that
/// product is 0); `cfg` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ne_encode(
    cfg: *const NeConfig,
    pixels: *const u8,
    rows: usize,
    cols: usize,
    mode: NeMode,
    out: *mut *mut NeEncoding,
) -> NeStatus {
    guard(|| {
        let cfg = &deref!(cfg).0;
        let out = out!(out);
        *out = ptr::null_mut();
        let Some(len) = rows.checked_mul(cols) else {
            return fail(NeStatus::InvalidArgument, "rows * cols overflows");
        };
        let data = if len == 0 {
            Vec::new()
        } else if pixels.is_null() {
            return fail(NeStatus::NullPointer, "pixels is null");
        } else {
            std::slice::from_raw_parts(pixels, len).to_vec()
        };
        let img = ImageU8::new(rows, cols, data).expect("length matches");
        let mode = match mode {
            NeMode::Analytic => EncodeMode::Analytic,
            NeMode::Simulated => EncodeMode::Simulated,
        };
        match encode_image(&img, &cfg.branches, &cfg.params, None, mode) {
            Ok(enc) => {
                *out = Box::into_raw(Box::new(NeEncoding(enc)));
                NeStatus::Ok
            }
            Err(e) => fail(codec_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `enc` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ne_encoding_free(enc: *mut NeEncoding) {
    if !enc.is_null() {
        drop(Box::from_raw(enc));
    }
}

/// Number of pixel windows, or 0 for a NULL handle.
///
/// # Safety
/// `enc` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ne_encoding_window_count(enc: *const NeEncoding) -> usize {
    enc.as_ref().map_or(0, |e| e.0.windows.len())
}

/// Total encoding time `rows * cols * t_samp` in seconds, or 0 for NULL.
///
/// # Safety
/// `enc` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ne_encoding_duration(enc: *const NeEncoding) -> f64 {
    enc.as_ref().map_or(0.0, |e| e.0.duration())
}

/// Number of branches that failed to spike across all windows.
///
/// # Safety
/// `enc` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ne_encoding_warning_count(enc: *const NeEncoding) -> usize {
    enc.as_ref().map_or(0, |e| e.0.warnings.len())
}

/// Number of spikes in window `window`.
///
/// # Safety
/// `enc` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ne_encoding_event_count(enc: *const NeEncoding, window: usize, out: *mut usize) -> NeStatus {
    guard(|| {
        let enc = &deref!(enc).0;
        let out = out!(out);
        match enc.windows.get(window) {
            Some(w) => {
                *out = w.len();
                NeStatus::Ok
            }
            None => fail(NeStatus::InvalidArgument, format!("window {window} out of range")),
        }
    })
}

/// Spike `k` of window `window`: branch id and absolute time in seconds.
///
/// # Safety
/// `enc` must be a live handle; `branch_id` and `time` writable.
#[no_mangle]
pub unsafe extern "C" fn ne_encoding_event(
    enc: *const NeEncoding,
    window: usize,
    k: usize,
    branch_id: *mut usize,
    time: *mut f64,
) -> NeStatus {
    guard(|| {
        let enc = &deref!(enc).0;
        let branch_id = out!(branch_id);
        let time = out!(time);
        match enc.windows.get(window).and_then(|w| w.events.get(k)) {
            Some(ev) => {
                *branch_id = ev.branch_id;
                *time = ev.t;
                NeStatus::Ok
            }
            None => fail(NeStatus::InvalidArgument, format!("event {k} of window {window} out of range")),
        }
    })
}

/// Decode into `pixels`, which must hold exactly one byte per window.
///
/// # Safety
/// `cfg` and `enc` must be live handles; `pixels` must point to `len`
/// writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ne_decode(cfg: *const NeConfig, enc: *const NeEncoding, pixels: *mut u8, len: usize) -> NeStatus {
    guard(|| {
        let cfg = &deref!(cfg).0;
        let enc = &deref!(enc).0;
        if len != enc.windows.len() {
            return fail(
                NeStatus::InvalidArgument,
                format!("buffer holds {len} pixels, encoding has {}", enc.windows.len()),
            );
        }
        match decode_image(enc, &cfg.branches, &cfg.params) {
            Ok(img) => {
                if len > 0 {
                    if pixels.is_null() {
                        return fail(NeStatus::NullPointer, "pixels is null");
                    }
                    std::slice::from_raw_parts_mut(pixels, len).copy_from_slice(img.as_bytes());
                }
                NeStatus::Ok
            }
            Err(e) => fail(codec_status(&e), e.to_string()),
        }
    })
}

/// Serialize an encoding as a spike-table CSV string. Free with [`ne_string_free`].
///
/// # Safety
/// `enc` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ne_encoding_to_csv(enc: *const NeEncoding, out: *mut *mut c_char) -> NeStatus {
    guard(|| {
        let enc = &deref!(enc).0;
        let out = out!(out);
        *out = ptr::null_mut();
        let mut buf = Vec::new();
        write_spike_table(enc, &mut buf).expect("writing to memory");
        *out = CString::new(buf).expect("CSV has no NUL").into_raw();
        NeStatus::Ok
    })
}

/// Parse a spike-table CSV string.
///
/// # Safety
/// `csv` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ne_encoding_from_csv(csv: *const c_char, out: *mut *mut NeEncoding) -> NeStatus {
    guard(|| {
        let out = out!(out);
        *out = ptr::null_mut();
        if csv.is_null() {
            return fail(NeStatus::NullPointer, "csv is null");
        }
        let Ok(text) = CStr::from_ptr(csv).to_str() else {
            return fail(NeStatus::ParseError, "spike table is not UTF-8");
        };
        match read_spike_table(text) {
            Ok(enc) => {
                *out = Box::into_raw(Box::new(NeEncoding(enc)));
                NeStatus::Ok
            }
            Err(e) => fail(NeStatus::ParseError, e.to_string()),
        }
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ne_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
