//! C ABI for the `lcsfid` fidelity engine.
//!
//! Every fallible function returns an [`LcsfidStatus`]; on failure a message
//! for the calling thread is available from [`lcsfid_last_error`]. Devices are
//! opaque handles created by `lcsfid_device_new*` and released with
//! [`lcsfid_device_free`]. Times inside schedules and samples are in units of
//! the Larmor period, angular frequencies in radians per Larmor period.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lcsfid::ensemble::{self, FidelityResult, Integrator, McIntegrand, Method, TimingMode};
use lcsfid::{closedform, DeviceParams, Error, ErrorSample, IntegrationOptions, PulseSchedule, TimeSource};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcsfidStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Convergence = 3,
    PulseOverlap = 4,
    OutOfRange = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcsfidMethod {
    Quadrature = 0,
    MonteCarlo = 1,
}

/// How an ensemble value was obtained.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LcsfidIntegrator {
    #[default]
    Exact = 0,
    GaussHermite = 1,
    AdaptiveSimpson = 2,
    MonteCarlo = 3,
}

/// Integration settings. Fill with [`lcsfid_options_default`]; a null
/// pointer anywhere an options pointer is accepted means the defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LcsfidOptions {
    /// An [`LcsfidMethod`] value.
    pub method: i32,
    pub hermite_order: u32,
    pub mc_samples: u64,
    pub seed: u64,
    pub rel_tolerance: f64,
    /// Detection window in Larmor periods; zero, negative or infinite
    /// disables truncation.
    pub t_bin: f64,
    /// Nonzero: Monte Carlo averages the density-matrix simulation instead
    /// of the closed form.
    pub oracle_integrand: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LcsfidResult {
    pub value: f64,
    pub std_error: f64,
    pub evaluations: u64,
    pub integrator: LcsfidIntegrator,
    /// Cycle lengthening applied, in Larmor periods.
    pub cycle_shift: f64,
}

/// Opaque device description.
pub struct LcsfidDevice {
    params: DeviceParams,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> LcsfidStatus {
    match err {
        Error::InvalidParameter { .. } | Error::IndexOutOfRange { .. } | Error::ImpossibleOutcome { .. } => {
            LcsfidStatus::InvalidArgument
        }
        Error::PulseOverlap { .. } => LcsfidStatus::PulseOverlap,
        Error::Convergence { .. } => LcsfidStatus::Convergence,
        Error::OutOfRange { .. } => LcsfidStatus::OutOfRange,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, translating errors and panics into a status code.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> LcsfidStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            LcsfidStatus::Ok
        }
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("null pointer: {name}"));
            LcsfidStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            LcsfidStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, value: T, name: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn device<'a>(dev: *const LcsfidDevice) -> Result<&'a DeviceParams, Failure> {
    dev.as_ref().map(|d| &d.params).ok_or(Failure::Null("device"))
}

unsafe fn slice<'a>(data: *const f64, len: usize, name: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn options(opts: *const LcsfidOptions) -> Result<IntegrationOptions, Failure> {
    let Some(o) = opts.as_ref() else {
        return Ok(IntegrationOptions::default());
    };
    let t_bin = (o.t_bin > 0.0 && o.t_bin.is_finite()).then_some(o.t_bin);
    let converted = IntegrationOptions {
        method: match o.method {
            m if m == LcsfidMethod::Quadrature as i32 => Method::Quadrature,
            m if m == LcsfidMethod::MonteCarlo as i32 => Method::MonteCarlo,
            m => return Err(Error::InvalidParameter {
                name: "method",
                reason: format!("unknown method {m}"),
            }
            .into()),
        },
        hermite_order: o.hermite_order as usize,
        mc_samples: usize::try_from(o.mc_samples).unwrap_or(usize::MAX),
        seed: o.seed,
        rel_tolerance: o.rel_tolerance,
        t_bin,
        integrand: if o.oracle_integrand != 0 {
            McIntegrand::Oracle
        } else {
            McIntegrand::ClosedForm
        },
    };
    converted.validate()?;
    Ok(converted)
}

fn to_c(r: &FidelityResult, shift: f64) -> LcsfidResult {
    LcsfidResult {
        value: r.value,
        std_error: r.stderr,
        evaluations: r.evaluations as u64,
        integrator: match r.method {
            Integrator::Exact => LcsfidIntegrator::Exact,
            Integrator::GaussHermite => LcsfidIntegrator::GaussHermite,
            Integrator::AdaptiveSimpson => LcsfidIntegrator::AdaptiveSimpson,
            Integrator::MonteCarlo => LcsfidIntegrator::MonteCarlo,
        },
        cycle_shift: shift,
    }
}

fn timing(corrected: i32) -> TimingMode {
    if corrected != 0 {
        TimingMode::Corrected
    } else {
        TimingMode::Nominal
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lcsfid_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call into the library from the
/// same thread.
#[no_mangle]
pub extern "C" fn lcsfid_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn lcsfid_options_default() -> LcsfidOptions {
    let d = IntegrationOptions::default();
    LcsfidOptions {
        method: LcsfidMethod::Quadrature as i32,
        hermite_order: d.hermite_order as u32,
        mc_samples: d.mc_samples as u64,
        seed: d.seed,
        rel_tolerance: d.rel_tolerance,
        t_bin: 0.0,
        oracle_integrand: 0,
    }
}

/// Creates a device from lifetime and dephasing time (seconds), the
/// excited-to-ground g-factor ratio and the Larmor period (seconds).
/// `t2_star` may be `INFINITY`.
///
/// # Safety
/// `out` must be null or valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn lcsfid_device_new(
    tau_d: f64,
    t2_star: f64,
    g_ratio: f64,
    t_lg: f64,
    out: *mut *mut LcsfidDevice,
) -> LcsfidStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let params = DeviceParams::new(tau_d, t2_star, g_ratio, TimeSource::Period(t_lg))?;
        write(out, Box::into_raw(Box::new(LcsfidDevice { params })), "out")
    })
}

/// Creates a device from Landé factors and a magnetic field in tesla.
///
/// # Safety
/// `out` must be null or valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn lcsfid_device_new_field(
    tau_d: f64,
    t2_star: f64,
    g_ground: f64,
    g_excited: f64,
    field_b: f64,
    out: *mut *mut LcsfidDevice,
) -> LcsfidStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let source = TimeSource::Field { g_ground, field_b };
        let params = DeviceParams::from_g_factors(tau_d, t2_star, g_ground, g_excited, source)?;
        write(out, Box::into_raw(Box::new(LcsfidDevice { params })), "out")
    })
}

/// Releases a device. Null is ignored.
///
/// # Safety
/// `dev` must be null or a pointer obtained from `lcsfid_device_new*` that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn lcsfid_device_free(dev: *mut LcsfidDevice) {
    if !dev.is_null() {
        drop(Box::from_raw(dev));
    }
}

/// Larmor period of the device in seconds.
///
/// # Safety
/// `dev` must be a live device handle or null; `out` valid or null.
#[no_mangle]
pub unsafe extern "C" fn lcsfid_device_t_lg(dev: *const LcsfidDevice, out: *mut f64) -> LcsfidStatus {
    guard(|| write(out, device(dev)?.t_lg(), "out"))
}

/// Ensemble gate fidelity; with `corrected` nonzero the cycle shift that
/// maximizes it is applied and reported.
///
/// # Safety
/// `dev` must be a live device handle or null; `opts` null or valid; `out`
/// valid or null.
#[no_mangle]
pub unsafe extern "C" fn lcsfid_gate_fidelity(
    dev: *const LcsfidDevice,
    corrected: i32,
    opts: *const LcsfidOptions,
    out: *mut LcsfidResult,
) -> LcsfidStatus {
    guard(|| {
        let params = device(dev)?;
        let opts = options(opts)?;
        let (r, shift) = ensemble::gate_fidelity_timed(params, timing(corrected), &opts)?;
        write(out, to_c(&r, shift), "out")
    })
}

/// Ensemble state fidelity of an `photons`-photon cluster under nominal or
/// corrected timing.
///
/// # Safety
/// As for [`lcsfid_gate_fidelity`].
#[no_mangle]
pub unsafe extern "C" fn lcsfid_state_fidelity(
    dev: *const LcsfidDevice,
    photons: usize,
    corrected: i32,
    opts: *const LcsfidOptions,
    out: *mut LcsfidResult,
) -> LcsfidStatus {
    guard(|| {
        let params = device(dev)?;
        let opts = options(opts)?;
        let (r, shift) = ensemble::state_fidelity_timed(params, photons, timing(corrected), &opts)?;
        write(out, to_c(&r, shift), "out")
    })
}

/// Ensemble state fidelity for explicit pulse offsets `e_0 … e_{n+1}` (Larmor
/// periods, `e_0 = 0`); the photon count is `len - 2`.
///
/// # Safety
/// `offsets` must point to `len` doubles; other pointers as for
/// [`lcsfid_gate_fidelity`].
#[no_mangle]
pub unsafe extern "C" fn lcsfid_state_fidelity_offsets(
    dev: *const LcsfidDevice,
    offsets: *const f64,
    len: usize,
    opts: *const LcsfidOptions,
    out: *mut LcsfidResult,
) -> LcsfidStatus {
    guard(|| {
        let params = device(dev)?;
        let schedule = PulseSchedule::new(slice(offsets, len, "offsets")?.to_vec())?;
        let r = ensemble::ensemble_state_fidelity(params, &schedule, &options(opts)?)?;
        write(out, to_c(&r, 0.0), "out")
    })
}

/// Closed-form state fidelity of a rotation-error vector (`len >= 2`).
///
/// # Safety
/// `errors` must point to `len` doubles; `out` valid or null.
#[no_mangle]
pub unsafe extern "C" fn lcsfid_closed_form_state_fidelity(errors: *const f64, len: usize, out: *mut f64) -> LcsfidStatus {
    guard(|| {
        let v = closedform::state_fidelity_closed(slice(errors, len, "errors")?)?;
        write(out, v, "out")
    })
}

/// Gate fidelity `cos²(e/2)` of a single rotation error.
///
/// # Safety
/// `out` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn lcsfid_closed_form_gate_fidelity(error: f64, out: *mut f64) -> LcsfidStatus {
    guard(|| write(out, closedform::gate_fidelity_closed(error)?, "out"))
}

/// Fidelity of one simulated run: pulse offsets (`n + 2` entries), realized
/// precession frequency and excited-state dwell times (`n + 2` entries).
///
/// # Safety
/// `offsets` and `decay_times` must point to `len` doubles each; `dev` and
/// `out` as for [`lcsfid_gate_fidelity`].
#[no_mangle]
pub unsafe extern "C" fn lcsfid_single_shot_fidelity(
    dev: *const LcsfidDevice,
    offsets: *const f64,
    decay_times: *const f64,
    len: usize,
    omega_prime: f64,
    out: *mut f64,
) -> LcsfidStatus {
    guard(|| {
        let params = device(dev)?;
        let schedule = PulseSchedule::new(slice(offsets, len, "offsets")?.to_vec())?;
        let sample = ErrorSample::new(omega_prime, slice(decay_times, len, "decay_times")?.to_vec())?;
        write(out, lcsfid::single_shot_fidelity(params, &schedule, &sample)?, "out")
    })
}

/// Copies the last error message into `buf` (NUL-terminated, truncated to
/// `len`); returns the full message length, or 0 if there is none.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn lcsfid_last_error_copy(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_deref().map(CStr::to_bytes) else {
            return 0;
        };
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}
