//! C interface to `wavesim`.
//!
//! Every entry point returns a [`WsStatus`]. On failure the message is kept
//! per thread and can be read with [`ws_last_error_message`]. Models and
//! fields are opaque handles released with their `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wavesim::basis::bswi43;
use wavesim::element::{crack_flexibilities, MaterialProps, SectionProps};
use wavesim::error::WaveError;
use wavesim::excitation::hanning_toneburst;
use wavesim::laplace::TimeSeriesField;
use wavesim::scenario::{prepare, simulate, Prepared, SimConfig};

/// Result codes shared by all functions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    SolverError = 4,
    Panic = 5,
}

/// A prepared simulation built from a JSON configuration.
pub struct WsModel {
    prepared: Prepared,
}

/// Sampled probe histories, one channel per probe.
pub struct WsField {
    field: TimeSeriesField,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: WsStatus, msg: impl Into<String>) -> WsStatus {
    set_error(msg);
    status
}

fn from_wave_error(e: WaveError) -> WsStatus {
    let status = match e {
        WaveError::Config(_) | WaveError::Domain(_) | WaveError::NoCrack | WaveError::InteriorLoad(_) => {
            WsStatus::InvalidArgument
        }
        _ => WsStatus::SolverError,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> WsStatus) -> WsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == WsStatus::Ok {
                set_error("");
            }
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            fail(WsStatus::Panic, format!("panic: {msg}"))
        }
    }
}

/// Copies `src` into a caller buffer of `len` doubles.
unsafe fn write_slice(src: &[f64], out: *mut f64, len: usize) -> WsStatus {
    if out.is_null() {
        return fail(WsStatus::NullPointer, "output buffer is null");
    }
    if len < src.len() {
        return fail(
            WsStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        );
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    WsStatus::Ok
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ws_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length including the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ws_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// Number of BSWI4,3 shape functions per element.
#[no_mangle]
pub extern "C" fn ws_basis_len() -> usize {
    bswi43().len()
}

/// Evaluates the element shape functions at `xi` in [0, 1].
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ws_basis_eval(xi: f64, out: *mut f64, len: usize) -> WsStatus {
    guard(|| match bswi43().eval(xi) {
        Ok(v) => write_slice(&v, out, len),
        Err(e) => from_wave_error(e),
    })
}

/// Rotational and shear crack flexibilities of a rectangular section.
///
/// Lengths in m, moduli in Pa, density in kg/m³; `depth` is the crack depth.
///
/// # Safety
/// `c_b` and `c_s` must be valid pointers to doubles.
#[no_mangle]
pub unsafe extern "C" fn ws_crack_flexibilities(
    youngs_modulus: f64,
    poisson_ratio: f64,
    density: f64,
    width: f64,
    height: f64,
    depth: f64,
    c_b: *mut f64,
    c_s: *mut f64,
) -> WsStatus {
    guard(|| {
        if c_b.is_null() || c_s.is_null() {
            return fail(WsStatus::NullPointer, "output pointer is null");
        }
        let result = MaterialProps::new(youngs_modulus, poisson_ratio, density).and_then(|mat| {
            let sec = SectionProps::rectangular(width, height)?;
            crack_flexibilities(&mat, &sec, depth)
        });
        match result {
            Ok((b, s)) => {
                *c_b = b;
                *c_s = s;
                WsStatus::Ok
            }
            Err(e) => from_wave_error(e),
        }
    })
}

/// Samples a Hanning-windowed toneburst. `written` receives the sample count;
/// with a too-small buffer it still receives the count required.
///
/// # Safety
/// `out` must point to `len` writable doubles and `written` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ws_toneburst(
    fc: f64,
    cycles: u32,
    dt: f64,
    out: *mut f64,
    len: usize,
    written: *mut usize,
) -> WsStatus {
    guard(|| {
        if written.is_null() {
            return fail(WsStatus::NullPointer, "written pointer is null");
        }
        match hanning_toneburst(fc, cycles, dt) {
            Ok(sig) => {
                *written = sig.samples.len();
                write_slice(&sig.samples, out, len)
            }
            Err(e) => from_wave_error(e),
        }
    })
}

/// Builds a model from a JSON configuration in the CLI schema.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `model` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ws_model_new(config_json: *const c_char, model: *mut *mut WsModel) -> WsStatus {
    guard(|| {
        if config_json.is_null() || model.is_null() {
            return fail(WsStatus::NullPointer, "null argument");
        }
        *model = ptr::null_mut();
        let Ok(text) = CStr::from_ptr(config_json).to_str() else {
            return fail(WsStatus::InvalidArgument, "configuration is not UTF-8");
        };
        match SimConfig::from_json(text).and_then(|c| prepare(&c)) {
            Ok(prepared) => {
                *model = Box::into_raw(Box::new(WsModel { prepared }));
                WsStatus::Ok
            }
            Err(e) => from_wave_error(e),
        }
    })
}

/// Number of degrees of freedom in the assembled model.
///
/// # Safety
/// `model` must be null or a handle from [`ws_model_new`].
#[no_mangle]
pub unsafe extern "C" fn ws_model_dofs(model: *const WsModel) -> usize {
    model.as_ref().map_or(0, |m| m.prepared.system.n_dof())
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle from [`ws_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ws_model_free(model: *mut WsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Runs the model with its configured solver and returns the probe histories.
///
/// # Safety
/// `model` must be a live handle and `field` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ws_model_run(model: *const WsModel, field: *mut *mut WsField) -> WsStatus {
    guard(|| {
        let Some(m) = model.as_ref() else {
            return fail(WsStatus::NullPointer, "model is null");
        };
        if field.is_null() {
            return fail(WsStatus::NullPointer, "field pointer is null");
        }
        *field = ptr::null_mut();
        match simulate(&m.prepared) {
            Ok(r) => {
                *field = Box::into_raw(Box::new(WsField { field: r.waveforms }));
                WsStatus::Ok
            }
            Err(e) => from_wave_error(e),
        }
    })
}

/// Number of probe channels.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ws_field_channels(field: *const WsField) -> usize {
    field.as_ref().map_or(0, |f| f.field.channels())
}

/// Samples per channel.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ws_field_len(field: *const WsField) -> usize {
    field.as_ref().map_or(0, |f| f.field.len())
}

/// Sample spacing (s), or 0 for a null handle.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ws_field_dt(field: *const WsField) -> f64 {
    field.as_ref().map_or(0.0, |f| f.field.dt)
}

/// Copies channel `channel` into `out`.
///
/// # Safety
/// `field` must be a live handle and `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ws_field_copy(field: *const WsField, channel: usize, out: *mut f64, len: usize) -> WsStatus {
    guard(|| {
        let Some(f) = field.as_ref() else {
            return fail(WsStatus::NullPointer, "field is null");
        };
        match f.field.values.get(channel) {
            Some(v) => write_slice(v, out, len),
            None => fail(
                WsStatus::InvalidArgument,
                format!("channel {channel} out of range ({} channels)", f.field.channels()),
            ),
        }
    })
}

/// Releases a field. Null is ignored.
///
/// # Safety
/// `field` must be null or a handle from [`ws_model_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ws_field_free(field: *mut WsField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}
