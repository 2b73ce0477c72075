//! C ABI over `qdc-core`.
//!
//! Handles are opaque and owned by the caller once returned; release them with the
//! matching `*_free`. Every fallible call returns a [`QdcStatus`] and, on failure,
//! leaves a message retrievable with [`qdc_last_error_message`] on the same thread.
//! Angles are in radians.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qdc_core::analytic::{classify, steady_sy, steady_sz, Label};
use qdc_core::collision::{evolve_to_steady, CollisionMode, CollisionSettings, ReservoirPhase};
use qdc_core::model::{bloch_density, BlochAngles, ClassifierConfig, ReservoirSpec};
use qdc_core::trainer::{gd_train, TrainOutcome, TrainSettings, TrainStatus, TrainableParam};
use qdc_core::QdcError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QdcStatus {
    Ok = 0,
    NullPointer = 1,
    Config = 2,
    Dimension = 3,
    Contract = 4,
    Undefined = 5,
    OutOfRange = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QdcParam {
    Coupling = 0,
    Theta = 1,
    Phi = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QdcTrainStatus {
    Converged = 0,
    MaxEpisodes = 1,
    Diverged = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QdcCollisionMode {
    Joint = 0,
    Mixture = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QdcReservoirPhase {
    Locked = 0,
    Averaged = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QdcSimulateOptions {
    pub max_collisions: usize,
    /// Bound on the trace distance to the fixed point.
    pub steady_tol: f64,
    pub max_dim: usize,
    pub mode: QdcCollisionMode,
    pub phase: QdcReservoirPhase,
    pub seed: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QdcSteadyState {
    pub sz: f64,
    pub sy: f64,
    pub collisions_used: usize,
    pub converged: bool,
}

/// Reservoirs plus collision parameters, built up one reservoir at a time.
pub struct QdcClassifier {
    reservoirs: Vec<ReservoirSpec>,
    tau: f64,
    r: f64,
    target: BlochAngles,
}

pub struct QdcTrainResult {
    outcome: TrainOutcome,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    let c = CString::new(msg).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn status_of(e: &QdcError) -> QdcStatus {
    match e {
        QdcError::Config(_) => QdcStatus::Config,
        QdcError::Dimension(_) => QdcStatus::Dimension,
        QdcError::Contract(_) => QdcStatus::Contract,
        QdcError::Undefined(_) => QdcStatus::Undefined,
    }
}

/// Runs `f`, converting errors and panics into a status plus a stored message.
fn guard<F>(f: F) -> QdcStatus
where
    F: FnOnce() -> Result<(), (QdcStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            clear_last_error();
            QdcStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            QdcStatus::Panic
        }
    }
}

fn core_err(e: QdcError) -> (QdcStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (QdcStatus, String) {
    (QdcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, (QdcStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (QdcStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

impl QdcClassifier {
    fn config(&self) -> Result<ClassifierConfig, (QdcStatus, String)> {
        ClassifierConfig::new(self.reservoirs.clone(), self.tau, self.r, bloch_density(self.target))
            .map_err(core_err)
    }
}

/// Message for the last failed call on this thread, or null. The pointer stays valid
/// until the next `qdc_*` call on the same thread.
#[no_mangle]
pub extern "C" fn qdc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| match slot.borrow().as_ref() {
        Some(c) => c.as_ptr(),
        None => ptr::null(),
    })
}

/// New classifier with no reservoirs and the target in |+⟩. Writes the handle to `out`.
///
/// # Safety
/// `out` must be null or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn qdc_classifier_new(tau: f64, r: f64, out: *mut *mut QdcClassifier) -> QdcStatus {
    guard(|| {
        let out = borrow_mut(out, "out")?;
        // validated here so a bad tau or r is reported at construction
        let probe = ReservoirSpec::new(BlochAngles::new(0.0, 0.0).map_err(core_err)?, 0.0).map_err(core_err)?;
        ClassifierConfig::with_plus_target(vec![probe], tau, r).map_err(core_err)?;
        let handle = QdcClassifier {
            reservoirs: Vec::new(),
            tau,
            r,
            target: BlochAngles::new(std::f64::consts::FRAC_PI_2, 0.0).map_err(core_err)?,
        };
        *out = Box::into_raw(Box::new(handle));
        Ok(())
    })
}

/// # Safety
/// `handle` must be null or a pointer from [`qdc_classifier_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qdc_classifier_free(handle: *mut QdcClassifier) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Appends a reservoir in the pure state `(theta, phi)` with coupling `g ≥ 0`.
///
/// # Safety
/// `handle` must be null or a live classifier handle.
#[no_mangle]
pub unsafe extern "C" fn qdc_classifier_add_reservoir(
    handle: *mut QdcClassifier,
    theta: f64,
    phi: f64,
    g: f64,
) -> QdcStatus {
    guard(|| {
        let c = borrow_mut(handle, "classifier")?;
        let spec = ReservoirSpec::new(BlochAngles::new(theta, phi).map_err(core_err)?, g).map_err(core_err)?;
        c.reservoirs.push(spec);
        Ok(())
    })
}

/// Initial target state; the steady state does not depend on it.
///
/// # Safety
/// `handle` must be null or a live classifier handle.
#[no_mangle]
pub unsafe extern "C" fn qdc_classifier_set_target(handle: *mut QdcClassifier, theta: f64, phi: f64) -> QdcStatus {
    guard(|| {
        let c = borrow_mut(handle, "classifier")?;
        c.target = BlochAngles::new(theta, phi).map_err(core_err)?;
        Ok(())
    })
}

/// Number of reservoirs added so far; 0 for a null handle.
///
/// # Safety
/// `handle` must be null or a live classifier handle.
#[no_mangle]
pub unsafe extern "C" fn qdc_classifier_len(handle: *const QdcClassifier) -> usize {
    handle.as_ref().map_or(0, |c| c.reservoirs.len())
}

/// Closed-form steady `⟨σz⟩`.
///
/// # Safety
/// `handle` must be null or a live classifier handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn qdc_steady_sz(handle: *const QdcClassifier, out: *mut f64) -> QdcStatus {
    guard(|| {
        let c = borrow(handle, "classifier")?;
        let out = borrow_mut(out, "out")?;
        let cfg = c.config()?;
        *out = steady_sz(cfg.reservoirs()).map_err(core_err)?;
        Ok(())
    })
}

/// Closed-form steady `⟨σy⟩`.
///
/// # Safety
/// `handle` must be null or a live classifier handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn qdc_steady_sy(handle: *const QdcClassifier, out: *mut f64) -> QdcStatus {
    guard(|| {
        let c = borrow(handle, "classifier")?;
        let out = borrow_mut(out, "out")?;
        *out = steady_sy(&c.config()?).map_err(core_err)?;
        Ok(())
    })
}

/// Label for a readout value: 0 when `value ≥ 0`, 1 otherwise (also 1 for NaN).
#[no_mangle]
pub extern "C" fn qdc_classify(value: f64) -> u8 {
    match classify(value) {
        Label::Zero => 0,
        Label::One => 1,
    }
}

#[no_mangle]
pub extern "C" fn qdc_simulate_options_default() -> QdcSimulateOptions {
    let d = CollisionSettings::default();
    QdcSimulateOptions {
        max_collisions: d.max_collisions,
        steady_tol: d.steady_tol,
        max_dim: d.max_dim,
        mode: QdcCollisionMode::Joint,
        phase: QdcReservoirPhase::Locked,
        seed: d.seed,
    }
}

/// Repeated collisions until the steady state. `options` may be null for defaults.
///
/// # Safety
/// `handle` must be a live classifier handle, `options` null or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qdc_simulate(
    handle: *const QdcClassifier,
    options: *const QdcSimulateOptions,
    out: *mut QdcSteadyState,
) -> QdcStatus {
    guard(|| {
        let c = borrow(handle, "classifier")?;
        let out = borrow_mut(out, "out")?;
        let o = options.as_ref().copied().unwrap_or_else(|| qdc_simulate_options_default());
        let settings = CollisionSettings {
            max_collisions: o.max_collisions,
            steady_tol: o.steady_tol,
            max_dim: o.max_dim,
            mode: match o.mode {
                QdcCollisionMode::Joint => CollisionMode::Joint,
                QdcCollisionMode::Mixture => CollisionMode::Mixture,
            },
            phase: match o.phase {
                QdcReservoirPhase::Locked => ReservoirPhase::Locked,
                QdcReservoirPhase::Averaged => ReservoirPhase::Averaged,
            },
            seed: o.seed,
            ..CollisionSettings::default()
        };
        let run = evolve_to_steady(&c.config()?, &settings).map_err(core_err)?;
        *out = QdcSteadyState {
            sz: run.sz(),
            sy: run.sy(),
            collisions_used: run.collisions_used,
            converged: run.converged,
        };
        Ok(())
    })
}

/// Gradient descent on one parameter family. `max_episodes = 0` or `cost_tol ≤ 0`
/// select the library defaults.
///
/// # Safety
/// `handle` must be a live classifier handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qdc_train(
    handle: *const QdcClassifier,
    param: QdcParam,
    eta: f64,
    desired: f64,
    max_episodes: usize,
    cost_tol: f64,
    out: *mut *mut QdcTrainResult,
) -> QdcStatus {
    guard(|| {
        let c = borrow(handle, "classifier")?;
        let out = borrow_mut(out, "out")?;
        let mut settings = TrainSettings::new(eta, desired);
        if max_episodes > 0 {
            settings.max_episodes = max_episodes;
        }
        if cost_tol > 0.0 {
            settings.cost_tol = cost_tol;
        }
        let param = match param {
            QdcParam::Coupling => TrainableParam::CouplingG,
            QdcParam::Theta => TrainableParam::Theta,
            QdcParam::Phi => TrainableParam::Phi,
        };
        let outcome = gd_train(&c.config()?, param, &settings).map_err(core_err)?;
        *out = Box::into_raw(Box::new(QdcTrainResult { outcome }));
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a pointer from [`qdc_train`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qdc_train_result_free(result: *mut QdcTrainResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// # Safety
/// `result` must be a live train result; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qdc_train_result_status(
    result: *const QdcTrainResult,
    out: *mut QdcTrainStatus,
) -> QdcStatus {
    guard(|| {
        let r = borrow(result, "result")?;
        *borrow_mut(out, "out")? = match r.outcome.status {
            TrainStatus::Converged => QdcTrainStatus::Converged,
            TrainStatus::MaxEpisodes => QdcTrainStatus::MaxEpisodes,
            TrainStatus::Diverged => QdcTrainStatus::Diverged,
        };
        Ok(())
    })
}

/// Number of recorded episodes, including the initial one; 0 for null.
///
/// # Safety
/// `result` must be null or a live train result.
#[no_mangle]
pub unsafe extern "C" fn qdc_train_result_len(result: *const QdcTrainResult) -> usize {
    result.as_ref().map_or(0, |r| r.outcome.records.len())
}

/// Number of episodes whose cost rose above the previous one; 0 for null.
///
/// # Safety
/// `result` must be null or a live train result.
#[no_mangle]
pub unsafe extern "C" fn qdc_train_result_cost_increases(result: *const QdcTrainResult) -> usize {
    result.as_ref().map_or(0, |r| r.outcome.cost_increases)
}

/// Readout and cost of record `index`. Any of the output pointers may be null.
///
/// # Safety
/// `result` must be a live train result; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn qdc_train_result_record(
    result: *const QdcTrainResult,
    index: usize,
    episode: *mut usize,
    actual: *mut f64,
    cost: *mut f64,
) -> QdcStatus {
    guard(|| {
        let r = borrow(result, "result")?;
        let rec = r.outcome.records.get(index).ok_or_else(|| {
            (
                QdcStatus::OutOfRange,
                format!("record {index} of {}", r.outcome.records.len()),
            )
        })?;
        if let Some(p) = episode.as_mut() {
            *p = rec.episode;
        }
        if let Some(p) = actual.as_mut() {
            *p = rec.actual;
        }
        if let Some(p) = cost.as_mut() {
            *p = rec.cost;
        }
        Ok(())
    })
}

/// Copies the parameter values of record `index` into `values` (capacity `cap`) and
/// writes their count to `written`. Fails with `OutOfRange` if `cap` is too small.
///
/// # Safety
/// `result` must be a live train result, `values` writable for `cap` doubles,
/// `written` null or writable.
#[no_mangle]
pub unsafe extern "C" fn qdc_train_result_params(
    result: *const QdcTrainResult,
    index: usize,
    values: *mut f64,
    cap: usize,
    written: *mut usize,
) -> QdcStatus {
    guard(|| {
        let r = borrow(result, "result")?;
        let rec = r.outcome.records.get(index).ok_or_else(|| {
            (
                QdcStatus::OutOfRange,
                format!("record {index} of {}", r.outcome.records.len()),
            )
        })?;
        if let Some(w) = written.as_mut() {
            *w = rec.params.len();
        }
        if cap < rec.params.len() {
            return Err((
                QdcStatus::OutOfRange,
                format!("buffer holds {cap} values, need {}", rec.params.len()),
            ));
        }
        if values.is_null() {
            return Err(null("values"));
        }
        std::slice::from_raw_parts_mut(values, rec.params.len()).copy_from_slice(&rec.params);
        Ok(())
    })
}
