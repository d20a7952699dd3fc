//! Best responses and the matched-filter Nash equilibrium.
//!
//! A user's utility is `u = b R_s f_b(g) / p` bits per joule. With a linear
//! receiver `g = (B / R_s) p h_eff`, so `u = B h_eff b f_b(g) / g`. For a
//! given constellation the utility depends only on the operating SIR. The
//! SIR-domain part of a best response (constellation, symbol rate, target
//! SIR) is therefore fixed by the user's own traffic and the bandwidth. The
//! only coupling between users is through the powers needed to reach the
//! target SIRs, and [`nash_equilibrium`] solves for those.

use crate::delay_qos::{self, LinkOperatingPoint, TrafficQoS};
use crate::error::{Error, Result};
use crate::modulation::{Coding, ModulationScheme, SirValue};

#[derive(Debug, Clone, PartialEq)]
pub struct UserProfile {
    pub channel_gain: f64,
    pub traffic: TrafficQoS,
    pub packet_bits: u32,
    pub max_bits_per_symbol: u32,
    pub coding: Coding,
}

impl UserProfile {
    pub fn new(
        channel_gain: f64,
        traffic: TrafficQoS,
        packet_bits: u32,
        max_bits_per_symbol: u32,
        coding: Coding,
    ) -> Result<Self> {
        if !(channel_gain > 0.0 && channel_gain.is_finite()) {
            return Err(Error::domain(format!(
                "channel gain must be positive, got {channel_gain}"
            )));
        }
        if max_bits_per_symbol < 2 || !max_bits_per_symbol.is_multiple_of(2) {
            return Err(Error::domain(format!(
                "constellation cap must be an even integer >= 2, got {max_bits_per_symbol}"
            )));
        }
        if packet_bits == 0 {
            return Err(Error::domain("packet length must be at least 1 bit"));
        }
        Ok(Self {
            channel_gain,
            traffic,
            packet_bits,
            max_bits_per_symbol,
            coding,
        })
    }

    pub fn scheme(&self, bits_per_symbol: u32) -> Result<ModulationScheme> {
        ModulationScheme::new(bits_per_symbol, self.packet_bits, self.coding.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkEnv {
    pub bandwidth: f64,
    pub noise_power: f64,
    pub users: Vec<UserProfile>,
}

impl NetworkEnv {
    pub fn new(bandwidth: f64, noise_power: f64, users: Vec<UserProfile>) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::domain(format!("bandwidth must be positive, got {bandwidth}")));
        }
        if !(noise_power > 0.0 && noise_power.is_finite()) {
            return Err(Error::domain(format!(
                "noise power must be positive, got {noise_power}"
            )));
        }
        if users.is_empty() {
            return Err(Error::domain("network needs at least one user"));
        }
        Ok(Self {
            bandwidth,
            noise_power,
            users,
        })
    }
}

/// Which of the equally good symbol rates a best response uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Lowest admissible symbol rate; yields the Pareto-dominant equilibrium.
    ParetoDominant,
    /// Always transmit at `R_s = B`.
    MaxRate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Strategy {
    pub bits_per_symbol: u32,
    pub symbol_rate: f64,
    pub target_sir: SirValue,
    /// Filled in by the equilibrium solver.
    pub power: Option<f64>,
}

impl Strategy {
    pub fn target(&self) -> LinkTarget {
        LinkTarget {
            symbol_rate: self.symbol_rate,
            sir: self.target_sir,
        }
    }
}

/// Per-user symbol rate and SIR that the power control has to deliver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkTarget {
    pub symbol_rate: f64,
    pub sir: SirValue,
}

/// Lowest even constellation up to the user's cap that can meet the delay
/// bound at full bandwidth.
pub fn select_constellation(user: &UserProfile, bandwidth: f64) -> Result<u32> {
    let mut last_eta = f64::NAN;
    for b in (2..=user.max_bits_per_symbol).step_by(2) {
        let scheme = user.scheme(b)?;
        if delay_qos::feasible_at_bandwidth(&scheme, bandwidth, &user.traffic) {
            return Ok(b);
        }
        last_eta = delay_qos::required_efficiency(&scheme, bandwidth, &user.traffic)?;
    }
    Err(Error::DelayInfeasible {
        user: None,
        bits_per_symbol: user.max_bits_per_symbol,
        required_efficiency: last_eta,
    })
}

/// SIR-domain best response of one user (power is left empty).
///
/// With `b` the lowest feasible constellation: if the critical rate
/// `Omega*_b / b` fits in the band, the user runs at the energy-optimal SIR
/// and any symbol rate in `[Omega*_b / b, B]`; otherwise it must run at
/// `R_s = B` and raise its SIR to the delay floor.
pub fn best_response(user: &UserProfile, bandwidth: f64, policy: Policy) -> Result<Strategy> {
    let b = select_constellation(user, bandwidth)?;
    let scheme = user.scheme(b)?;
    let critical_rate = delay_qos::omega_star(&scheme, &user.traffic)? / b as f64;
    let (symbol_rate, target_sir) = if critical_rate <= bandwidth {
        let rate = match policy {
            Policy::ParetoDominant => critical_rate,
            Policy::MaxRate => bandwidth,
        };
        (rate, scheme.optimal_sir()?)
    } else {
        (bandwidth, delay_qos::sir_floor(&scheme, bandwidth, &user.traffic)?)
    };

    let op = LinkOperatingPoint::new(&scheme, symbol_rate, target_sir)?;
    let delay = delay_qos::avg_delay(&op, &user.traffic)?;
    if delay > user.traffic.delay_bound() * (1.0 + 1e-9) {
        return Err(Error::Numeric(format!(
            "best response misses its delay bound: {delay} > {}",
            user.traffic.delay_bound()
        )));
    }
    Ok(Strategy {
        bits_per_symbol: b,
        symbol_rate,
        target_sir,
        power: None,
    })
}

/// Share of the receiver's interference budget a user occupies,
/// `(1 + B / (R_s g))^-1`.
pub fn user_size(symbol_rate: f64, sir: SirValue, bandwidth: f64) -> f64 {
    let load = symbol_rate * sir.linear();
    load / (load + bandwidth)
}

fn interference(env: &NetworkEnv, k: usize, powers: &[f64]) -> f64 {
    env.noise_power
        + powers
            .iter()
            .zip(&env.users)
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, (p, u))| p * u.channel_gain)
            .sum::<f64>()
}

/// Power that gives user `k` exactly its target SIR against the other users'
/// current powers (matched-filter receiver).
pub fn required_power(env: &NetworkEnv, k: usize, targets: &[LinkTarget], powers: &[f64]) -> f64 {
    let t = &targets[k];
    t.sir.linear() * (t.symbol_rate / env.bandwidth) * interference(env, k, powers) / env.users[k].channel_gain
}

/// Matched-filter output SIR of user `k`.
pub fn achieved_sir(env: &NetworkEnv, k: usize, targets: &[LinkTarget], powers: &[f64]) -> f64 {
    (env.bandwidth / targets[k].symbol_rate) * powers[k] * env.users[k].channel_gain / interference(env, k, powers)
}

/// Sum of user sizes; the targets are jointly reachable iff it is below 1.
pub fn sum_size(env: &NetworkEnv, targets: &[LinkTarget]) -> f64 {
    targets
        .iter()
        .map(|t| user_size(t.symbol_rate, t.sir, env.bandwidth))
        .sum()
}

/// Exact simultaneous solution `p_k = sigma^2 Phi_k / (h_k (1 - sum_j Phi_j))`.
pub fn closed_form_powers(env: &NetworkEnv, targets: &[LinkTarget]) -> Result<Vec<f64>> {
    check_targets(env, targets)?;
    let total = sum_size(env, targets);
    if total >= 1.0 {
        return Err(Error::SystemInfeasible { sum_size: total });
    }
    Ok(targets
        .iter()
        .zip(&env.users)
        .map(|(t, u)| {
            env.noise_power * user_size(t.symbol_rate, t.sir, env.bandwidth) / (u.channel_gain * (1.0 - total))
        })
        .collect())
}

fn check_targets(env: &NetworkEnv, targets: &[LinkTarget]) -> Result<()> {
    if targets.len() != env.users.len() {
        return Err(Error::domain(format!(
            "{} targets for {} users",
            targets.len(),
            env.users.len()
        )));
    }
    Ok(())
}

/// One Gauss-Seidel pass in user order. Returns the largest relative change.
pub fn sequential_sweep(env: &NetworkEnv, targets: &[LinkTarget], powers: &mut [f64]) -> f64 {
    let mut max_change: f64 = 0.0;
    for k in 0..powers.len() {
        let next = required_power(env, k, targets, powers);
        let change = if next == powers[k] {
            0.0
        } else {
            (next - powers[k]).abs() / next.abs().max(powers[k].abs())
        };
        max_change = max_change.max(change);
        powers[k] = next;
    }
    max_change
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerIteration {
    pub powers: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Sequential power updates from all-zero powers until the largest relative
/// change drops below `tol` or `max_iter` sweeps have run.
pub fn iterate_powers(env: &NetworkEnv, targets: &[LinkTarget], tol: f64, max_iter: usize) -> Result<PowerIteration> {
    check_targets(env, targets)?;
    let mut powers = vec![0.0; targets.len()];
    for iteration in 1..=max_iter {
        if sequential_sweep(env, targets, &mut powers) < tol {
            return Ok(PowerIteration {
                powers,
                iterations: iteration,
                converged: true,
            });
        }
    }
    Ok(PowerIteration {
        powers,
        iterations: max_iter,
        converged: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100_000,
        }
    }
}

/// Relative agreement required between the iterated and closed-form powers.
pub const CLOSED_FORM_AGREEMENT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub strategies: Vec<Strategy>,
    pub achieved_sirs: Vec<f64>,
    /// Bits per joule.
    pub utilities: Vec<f64>,
    pub user_sizes: Vec<f64>,
    pub sum_size: f64,
    pub iterations: usize,
    pub converged: bool,
    pub closed_form_powers: Vec<f64>,
    pub max_power_gap: f64,
}

/// Nash equilibrium of the delay-constrained power game with a matched filter.
pub fn nash_equilibrium(env: &NetworkEnv, policy: Policy, options: SolverOptions) -> Result<EquilibriumResult> {
    let mut strategies = env
        .users
        .iter()
        .enumerate()
        .map(|(k, u)| best_response(u, env.bandwidth, policy).map_err(|e| e.for_user(k)))
        .collect::<Result<Vec<_>>>()?;
    let targets: Vec<LinkTarget> = strategies.iter().map(Strategy::target).collect();
    let user_sizes: Vec<f64> = targets
        .iter()
        .map(|t| user_size(t.symbol_rate, t.sir, env.bandwidth))
        .collect();
    let total = user_sizes.iter().sum::<f64>();
    if total >= 1.0 {
        return Err(Error::SystemInfeasible { sum_size: total });
    }

    let run = iterate_powers(env, &targets, options.tol, options.max_iter)?;
    let closed = closed_form_powers(env, &targets)?;
    let max_power_gap = run
        .powers
        .iter()
        .zip(&closed)
        .map(|(p, q)| ((p - q) / q).abs())
        .fold(0.0, f64::max);
    if run.converged && max_power_gap > CLOSED_FORM_AGREEMENT {
        return Err(Error::Numeric(format!(
            "power iteration settled {max_power_gap:e} away from the closed-form solution"
        )));
    }

    let achieved_sirs: Vec<f64> = (0..targets.len())
        .map(|k| achieved_sir(env, k, &targets, &run.powers))
        .collect();
    let mut utilities = Vec::with_capacity(targets.len());
    for (k, s) in strategies.iter_mut().enumerate() {
        let p = run.powers[k];
        s.power = Some(p);
        let scheme = env.users[k].scheme(s.bits_per_symbol)?;
        let rate = s.bits_per_symbol as f64 * s.symbol_rate;
        utilities.push(rate * scheme.efficiency(SirValue::new(achieved_sirs[k])?) / p);
    }

    Ok(EquilibriumResult {
        strategies,
        achieved_sirs,
        utilities,
        user_sizes,
        sum_size: total,
        iterations: run.iterations,
        converged: run.converged,
        closed_form_powers: closed,
        max_power_gap,
    })
}
