//! C ABI over the outage estimators: an opaque system handle, status codes,
//! and out-parameter results, so the library can be driven from C, Python,
//! MATLAB, or anything else that can call a C function.
//!
//! The generated header lands in `include/isac_outage.h` at build time.

use std::ffi::{c_char, CStr};

use isac_outage::outage::{
    ergodic_rate_montecarlo, target_op_analytic, target_op_montecarlo, user_op_analytic,
    user_op_montecarlo,
};
use isac_outage::{IsacError, OutageQuery, SystemConfig};

/// Status of an FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsacStatus {
    Ok = 0,
    InvalidConfig = 1,
    DegenerateBeamformer = 2,
    SingularFisher = 3,
    NonPsdCovariance = 4,
    AccuracyNotReached = 5,
    QuadratureNotConverged = 6,
    NullPointer = 7,
}

impl From<&IsacError> for IsacStatus {
    fn from(err: &IsacError) -> Self {
        match err {
            IsacError::InvalidConfig { .. } => IsacStatus::InvalidConfig,
            IsacError::DegenerateBeamformer { .. } => IsacStatus::DegenerateBeamformer,
            IsacError::SingularFisher { .. } => IsacStatus::SingularFisher,
            IsacError::NonPsdCovariance { .. } => IsacStatus::NonPsdCovariance,
            IsacError::AccuracyNotReached { .. } => IsacStatus::AccuracyNotReached,
            IsacError::QuadratureNotConverged { .. } => IsacStatus::QuadratureNotConverged,
        }
    }
}

/// Opaque handle holding a validated system configuration.
pub struct IsacSystem {
    config: SystemConfig,
}

/// Build a system handle from scalar parameters. Returns null and writes a
/// status on invalid input. The handle must be released with
/// [`isac_system_free`].
#[no_mangle]
pub extern "C" fn isac_system_new(
    n: u32,
    m: u32,
    p_t: f64,
    sigma_u2: f64,
    sigma_r2: f64,
    l: u32,
    alpha_mag: f64,
    alpha_phase: f64,
    b1_mag: f64,
    b1_phase: f64,
    b2_mag: f64,
    b2_phase: f64,
    status: *mut IsacStatus,
) -> *mut IsacSystem {
    let config = SystemConfig {
        n: n as usize,
        m: m as usize,
        p_t,
        sigma_u2,
        sigma_r2,
        l: l as usize,
        alpha_mag,
        alpha_phase,
        b1_mag,
        b1_phase,
        b2_mag,
        b2_phase,
    };
    let result = match config.validate() {
        Ok(()) => {
            let handle = Box::into_raw(Box::new(IsacSystem { config }));
            (IsacStatus::Ok, handle)
        }
        Err(err) => ((&err).into(), std::ptr::null_mut()),
    };
    if !status.is_null() {
        unsafe { *status = result.0 };
    }
    result.1
}

/// Release a handle created by [`isac_system_new`]. Null is a no-op.
///
/// # Safety
/// `system` must be a pointer previously returned by [`isac_system_new`]
/// that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn isac_system_free(system: *mut IsacSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

fn query_of(system: &IsacSystem) -> OutageQuery {
    OutageQuery::new(system.config.clone())
}

unsafe fn with_out<T>(
    out: *mut f64,
    result: Result<(f64, T), IsacError>,
    extra: impl FnOnce(T),
) -> IsacStatus {
    if out.is_null() {
        return IsacStatus::NullPointer;
    }
    match result {
        Ok((value, rest)) => {
            *out = value;
            extra(rest);
            IsacStatus::Ok
        }
        Err(err) => (&err).into(),
    }
}

/// Analytic user outage probability `P(SINR < gamma)`.
///
/// # Safety
/// `system` must be a live handle from [`isac_system_new`]; `out` must point
/// to writable memory for one double.
#[no_mangle]
pub unsafe extern "C" fn isac_user_outage_analytic(
    system: *const IsacSystem,
    gamma: f64,
    out: *mut f64,
) -> IsacStatus {
    let Some(system) = system.as_ref() else {
        return IsacStatus::NullPointer;
    };
    let mut query = query_of(system);
    query.gamma = gamma;
    with_out(out, user_op_analytic(&query).map(|e| (e.value, ())), |()| {})
}

/// Analytic target outage probability `P(CRB > epsilon)` with
/// `theta_nodes` quadrature nodes per half-interval (pass 0 for the default).
///
/// # Safety
/// As for [`isac_user_outage_analytic`].
#[no_mangle]
pub unsafe extern "C" fn isac_target_outage_analytic(
    system: *const IsacSystem,
    epsilon: f64,
    theta_nodes: usize,
    out: *mut f64,
) -> IsacStatus {
    let Some(system) = system.as_ref() else {
        return IsacStatus::NullPointer;
    };
    let mut query = query_of(system);
    query.epsilon = epsilon;
    if theta_nodes > 0 {
        query.theta_nodes = theta_nodes;
    }
    with_out(out, target_op_analytic(&query).map(|e| (e.value, ())), |()| {})
}

/// Monte Carlo user outage probability over `trials` seeded realizations.
/// `std_error` may be null if the caller does not need it.
///
/// # Safety
/// As for [`isac_user_outage_analytic`]; `std_error` is optional.
#[no_mangle]
pub unsafe extern "C" fn isac_user_outage_montecarlo(
    system: *const IsacSystem,
    gamma: f64,
    trials: u64,
    seed: u64,
    out: *mut f64,
    std_error: *mut f64,
) -> IsacStatus {
    let Some(system) = system.as_ref() else {
        return IsacStatus::NullPointer;
    };
    let mut query = query_of(system);
    query.gamma = gamma;
    query.trials = trials;
    query.seed = seed;
    with_out(
        out,
        user_op_montecarlo(&query).map(|e| (e.value, e.std_error)),
        |se| {
            if !std_error.is_null() {
                *std_error = se;
            }
        },
    )
}

/// Monte Carlo target outage probability over `trials` seeded realizations.
///
/// # Safety
/// As for [`isac_user_outage_montecarlo`].
#[no_mangle]
pub unsafe extern "C" fn isac_target_outage_montecarlo(
    system: *const IsacSystem,
    epsilon: f64,
    trials: u64,
    seed: u64,
    out: *mut f64,
    std_error: *mut f64,
) -> IsacStatus {
    let Some(system) = system.as_ref() else {
        return IsacStatus::NullPointer;
    };
    let mut query = query_of(system);
    query.epsilon = epsilon;
    query.trials = trials;
    query.seed = seed;
    with_out(
        out,
        target_op_montecarlo(&query).map(|e| (e.value, e.std_error)),
        |se| {
            if !std_error.is_null() {
                *std_error = se;
            }
        },
    )
}

/// Monte Carlo ergodic rate `E[log2(1 + SINR)]` in bits per channel use.
///
/// # Safety
/// As for [`isac_user_outage_montecarlo`].
#[no_mangle]
pub unsafe extern "C" fn isac_ergodic_rate_montecarlo(
    system: *const IsacSystem,
    trials: u64,
    seed: u64,
    out: *mut f64,
    std_error: *mut f64,
) -> IsacStatus {
    let Some(system) = system.as_ref() else {
        return IsacStatus::NullPointer;
    };
    let mut query = query_of(system);
    query.trials = trials;
    query.seed = seed;
    with_out(
        out,
        ergodic_rate_montecarlo(&query).map(|e| (e.value, e.std_error)),
        |se| {
            if !std_error.is_null() {
                *std_error = se;
            }
        },
    )
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn isac_status_message(status: IsacStatus) -> *const c_char {
    let msg: &'static CStr = match status {
        IsacStatus::Ok => c"ok",
        IsacStatus::InvalidConfig => c"invalid configuration",
        IsacStatus::DegenerateBeamformer => c"degenerate beamformer",
        IsacStatus::SingularFisher => c"singular Fisher information",
        IsacStatus::NonPsdCovariance => c"covariance not positive semidefinite",
        IsacStatus::AccuracyNotReached => c"CDF accuracy target not reached",
        IsacStatus::QuadratureNotConverged => c"theta quadrature did not converge",
        IsacStatus::NullPointer => c"null pointer argument",
    };
    msg.as_ptr()
}

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn isac_version() -> *const c_char {
    static VERSION: &CStr = c"0.1.0";
    VERSION.as_ptr()
}
