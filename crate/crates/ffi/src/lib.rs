//! C ABI over the `qamgame` solver.
//!
//! Every fallible function returns a [`QgStatus`] and writes its result
//! through an out-pointer. On failure a human-readable message is kept per
//! thread and can be read with [`qg_last_error_message`]. Objects are opaque
//! handles created by `*_new` functions and released by the matching
//! `*_free`.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qamgame::delay_qos::{self, LinkOperatingPoint, TrafficQoS};
use qamgame::game::{self, EquilibriumResult, NetworkEnv, Policy, SolverOptions, UserProfile};
use qamgame::modulation::{Coding, CodingGainModel, ModulationScheme, SirValue};
use qamgame::Error;

/// Result codes; the non-zero values follow the CLI exit codes where they overlap.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QgStatus {
    Ok = 0,
    InvalidArgument = 2,
    DelayInfeasible = 3,
    SystemInfeasible = 4,
    Numeric = 5,
    NullPointer = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QgPolicy {
    ParetoDominant = 0,
    MaxRate = 1,
}

/// Poisson packet arrivals (packets/s) and the mean-delay bound (s).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QgTraffic {
    pub arrival_rate: f64,
    pub delay_bound: f64,
}

/// One user's share of an equilibrium.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QgUserResult {
    pub bits_per_symbol: u32,
    pub symbol_rate: f64,
    /// Linear target SIR.
    pub target_sir: f64,
    pub achieved_sir: f64,
    pub power: f64,
    /// Bits per joule.
    pub utility: f64,
    pub size: f64,
}

pub struct QgScheme(ModulationScheme);

pub struct QgNetwork {
    bandwidth: f64,
    noise_power: f64,
    users: Vec<UserProfile>,
}

pub struct QgEquilibrium(EquilibriumResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(error: &Error) -> QgStatus {
    match error {
        Error::Domain(_) | Error::Configuration(_) => QgStatus::InvalidArgument,
        Error::DelayInfeasible { .. } | Error::Unstable { .. } | Error::InfeasibleTarget { .. } => {
            QgStatus::DelayInfeasible
        }
        Error::SystemInfeasible { .. } => QgStatus::SystemInfeasible,
        Error::Numeric(_) | Error::Bracketing { .. } | Error::Convergence { .. } => QgStatus::Numeric,
    }
}

/// Runs `body`, turning errors and panics into status codes.
fn guard<F>(body: F) -> QgStatus
where
    F: FnOnce() -> Result<(), QgFailure>,
{
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => QgStatus::Ok,
        Ok(Err(QgFailure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            QgStatus::NullPointer
        }
        Ok(Err(QgFailure::Solver(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic".to_string());
            QgStatus::Panic
        }
    }
}

enum QgFailure {
    Null(&'static str),
    Solver(Error),
}

impl From<Error> for QgFailure {
    fn from(e: Error) -> Self {
        QgFailure::Solver(e)
    }
}

fn invalid(msg: impl Into<String>) -> QgFailure {
    QgFailure::Solver(Error::Configuration(msg.into()))
}

unsafe fn borrow<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, QgFailure> {
    p.as_ref().ok_or(QgFailure::Null(what))
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), QgFailure> {
    if out.is_null() {
        return Err(QgFailure::Null("out"));
    }
    out.write(value);
    Ok(())
}

fn traffic(t: QgTraffic) -> Result<TrafficQoS, QgFailure> {
    Ok(TrafficQoS::new(t.arrival_rate, t.delay_bound)?)
}

/// Constant coding gain for the even sizes up to `max_b`.
fn coding(max_b: u32, coded: bool, gain_db: f64) -> Result<Coding, QgFailure> {
    if !coded {
        return Ok(Coding::Uncoded);
    }
    let gains: BTreeMap<u32, f64> = (2..=max_b.max(2)).step_by(2).map(|b| (b, gain_db)).collect();
    Ok(Coding::Trellis(CodingGainModel::new(gains, "constant gain")?))
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates an M-QAM scheme with `bits_per_symbol` bits per symbol and
/// `packet_bits`-bit packets. With `coded` set, `gain_db` is the constant
/// trellis coding gain.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn qg_scheme_new(
    bits_per_symbol: u32,
    packet_bits: u32,
    coded: bool,
    gain_db: f64,
    out: *mut *mut QgScheme,
) -> QgStatus {
    guard(|| {
        let scheme = ModulationScheme::new(bits_per_symbol, packet_bits, coding(bits_per_symbol, coded, gain_db)?)?;
        write(out, Box::into_raw(Box::new(QgScheme(scheme))))
    })
}

/// # Safety
/// `scheme` must be NULL or a handle from [`qg_scheme_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qg_scheme_free(scheme: *mut QgScheme) {
    if !scheme.is_null() {
        drop(Box::from_raw(scheme));
    }
}

/// Efficiency (zero-power-adjusted packet success rate) at linear SIR `sir`.
///
/// # Safety
/// `scheme` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qg_scheme_efficiency(scheme: *const QgScheme, sir: f64, out: *mut f64) -> QgStatus {
    guard(|| {
        let s = borrow(scheme, "scheme")?;
        write(out, s.0.efficiency(SirValue::new(sir)?))
    })
}

/// # Safety
/// `scheme` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qg_scheme_efficiency_derivative(scheme: *const QgScheme, sir: f64, out: *mut f64) -> QgStatus {
    guard(|| {
        let s = borrow(scheme, "scheme")?;
        write(out, s.0.efficiency_derivative(SirValue::new(sir)?)?)
    })
}

/// Smallest linear SIR achieving efficiency `eta`.
///
/// # Safety
/// `scheme` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qg_scheme_efficiency_inverse(scheme: *const QgScheme, eta: f64, out: *mut f64) -> QgStatus {
    guard(|| {
        let s = borrow(scheme, "scheme")?;
        write(out, s.0.efficiency_inverse(eta)?.linear())
    })
}

/// Energy-optimal linear SIR.
///
/// # Safety
/// `scheme` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qg_scheme_optimal_sir(scheme: *const QgScheme, out: *mut f64) -> QgStatus {
    guard(|| {
        let s = borrow(scheme, "scheme")?;
        write(out, s.0.optimal_sir()?.linear())
    })
}

/// Peak utility in units of bandwidth times effective channel gain.
///
/// # Safety
/// `scheme` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qg_scheme_peak_utility(scheme: *const QgScheme, out: *mut f64) -> QgStatus {
    guard(|| {
        let s = borrow(scheme, "scheme")?;
        write(out, s.0.peak_utility_coefficient()?)
    })
}

/// Mean packet delay (s) at the given symbol rate and linear SIR.
///
/// # Safety
/// `scheme` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qg_avg_delay(
    scheme: *const QgScheme,
    symbol_rate: f64,
    sir: f64,
    traffic_qos: QgTraffic,
    out: *mut f64,
) -> QgStatus {
    guard(|| {
        let s = borrow(scheme, "scheme")?;
        let op = LinkOperatingPoint::new(&s.0, symbol_rate, SirValue::new(sir)?)?;
        write(out, delay_qos::avg_delay(&op, &traffic(traffic_qos)?)?)
    })
}

/// Lowest linear SIR meeting the delay bound at `symbol_rate`.
///
/// # Safety
/// `scheme` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qg_sir_floor(
    scheme: *const QgScheme,
    symbol_rate: f64,
    traffic_qos: QgTraffic,
    out: *mut f64,
) -> QgStatus {
    guard(|| {
        let s = borrow(scheme, "scheme")?;
        write(
            out,
            delay_qos::sir_floor(&s.0, symbol_rate, &traffic(traffic_qos)?)?.linear(),
        )
    })
}

/// Critical bit rate at which the energy-optimal SIR meets the delay bound exactly.
///
/// # Safety
/// `scheme` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qg_omega_star(scheme: *const QgScheme, traffic_qos: QgTraffic, out: *mut f64) -> QgStatus {
    guard(|| {
        let s = borrow(scheme, "scheme")?;
        write(out, delay_qos::omega_star(&s.0, &traffic(traffic_qos)?)?)
    })
}

/// Creates an empty network with bandwidth `bandwidth` (Hz) and receiver
/// noise power `noise_power` (W).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qg_network_new(bandwidth: f64, noise_power: f64, out: *mut *mut QgNetwork) -> QgStatus {
    guard(|| {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) || !(noise_power > 0.0 && noise_power.is_finite()) {
            return Err(invalid("bandwidth and noise power must be positive"));
        }
        let net = QgNetwork {
            bandwidth,
            noise_power,
            users: Vec::new(),
        };
        write(out, Box::into_raw(Box::new(net)))
    })
}

/// # Safety
/// `network` must be NULL or a handle from [`qg_network_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qg_network_free(network: *mut QgNetwork) {
    if !network.is_null() {
        drop(Box::from_raw(network));
    }
}

/// Appends a user. With `coded` set, `gain_db` applies to every constellation.
///
/// # Safety
/// `network` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qg_network_add_user(
    network: *mut QgNetwork,
    channel_gain: f64,
    traffic_qos: QgTraffic,
    packet_bits: u32,
    max_bits_per_symbol: u32,
    coded: bool,
    gain_db: f64,
) -> QgStatus {
    guard(|| {
        let net = network.as_mut().ok_or(QgFailure::Null("network"))?;
        let user = UserProfile::new(
            channel_gain,
            traffic(traffic_qos)?,
            packet_bits,
            max_bits_per_symbol,
            coding(max_bits_per_symbol, coded, gain_db)?,
        )?;
        net.users.push(user);
        Ok(())
    })
}

/// Number of users added so far.
///
/// # Safety
/// `network` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qg_network_user_count(network: *const QgNetwork, out: *mut usize) -> QgStatus {
    guard(|| {
        let net = borrow(network, "network")?;
        write(out, net.users.len())
    })
}

/// Solves for the Nash equilibrium with default solver settings.
///
/// # Safety
/// `network` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qg_nash_equilibrium(
    network: *const QgNetwork,
    policy: QgPolicy,
    out: *mut *mut QgEquilibrium,
) -> QgStatus {
    guard(|| {
        let net = borrow(network, "network")?;
        let env = NetworkEnv::new(net.bandwidth, net.noise_power, net.users.clone())?;
        let policy = match policy {
            QgPolicy::ParetoDominant => Policy::ParetoDominant,
            QgPolicy::MaxRate => Policy::MaxRate,
        };
        let eq = game::nash_equilibrium(&env, policy, SolverOptions::default())?;
        write(out, Box::into_raw(Box::new(QgEquilibrium(eq))))
    })
}

/// # Safety
/// `equilibrium` must be NULL or a handle from [`qg_nash_equilibrium`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qg_equilibrium_free(equilibrium: *mut QgEquilibrium) {
    if !equilibrium.is_null() {
        drop(Box::from_raw(equilibrium));
    }
}

/// # Safety
/// `equilibrium` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qg_equilibrium_user(
    equilibrium: *const QgEquilibrium,
    index: usize,
    out: *mut QgUserResult,
) -> QgStatus {
    guard(|| {
        let eq = &borrow(equilibrium, "equilibrium")?.0;
        let s = eq
            .strategies
            .get(index)
            .ok_or_else(|| invalid(format!("user index {index} out of range")))?;
        write(
            out,
            QgUserResult {
                bits_per_symbol: s.bits_per_symbol,
                symbol_rate: s.symbol_rate,
                target_sir: s.target_sir.linear(),
                achieved_sir: eq.achieved_sirs[index],
                power: s.power.unwrap_or(f64::NAN),
                utility: eq.utilities[index],
                size: eq.user_sizes[index],
            },
        )
    })
}

/// Sum of user sizes, sweep count and convergence flag.
///
/// # Safety
/// `equilibrium` must be a live handle; each out-pointer must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn qg_equilibrium_summary(
    equilibrium: *const QgEquilibrium,
    sum_size: *mut f64,
    iterations: *mut usize,
    converged: *mut bool,
) -> QgStatus {
    guard(|| {
        let eq = &borrow(equilibrium, "equilibrium")?.0;
        if !sum_size.is_null() {
            sum_size.write(eq.sum_size);
        }
        if !iterations.is_null() {
            iterations.write(eq.iterations);
        }
        if !converged.is_null() {
            converged.write(eq.converged);
        }
        Ok(())
    })
}
