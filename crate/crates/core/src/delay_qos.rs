//! Average-delay model of a FIFO queue feeding a stop-and-retransmit link.
//!
//! Packets of `L` bits arrive as a Poisson stream and are sent at `b R_s`
//! bits per second, so one transmission takes `tau = L / (b R_s)`. A
//! transmission succeeds with probability `f_b(g)` and failed packets are
//! resent until they get through. The service time is therefore `tau`
//! times a geometric number of attempts, and the Pollaczek-Khinchine
//! formula gives the mean sojourn time
//!
//! ```text
//! W = tau (1 - lambda tau / 2) / (f_b(g) - lambda tau),   f_b(g) > lambda tau
//! ```
//!
//! [`simulate_mg1`] draws that queue directly and serves as an independent
//! check of the closed form.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Geometric};

use crate::error::{Error, Result};
use crate::modulation::{ModulationScheme, SirValue};

/// Poisson arrival rate (packets/s) and average-delay bound (s) of one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficQoS {
    arrival_rate: f64,
    delay_bound: f64,
}

impl TrafficQoS {
    pub fn new(arrival_rate: f64, delay_bound: f64) -> Result<Self> {
        if !(arrival_rate >= 0.0 && arrival_rate.is_finite()) {
            return Err(Error::domain(format!("arrival rate must be >= 0, got {arrival_rate}")));
        }
        if !(delay_bound > 0.0 && delay_bound.is_finite()) {
            return Err(Error::domain(format!(
                "delay bound must be positive, got {delay_bound}"
            )));
        }
        Ok(Self {
            arrival_rate,
            delay_bound,
        })
    }

    pub fn arrival_rate(&self) -> f64 {
        self.arrival_rate
    }

    pub fn delay_bound(&self) -> f64 {
        self.delay_bound
    }

    pub fn with_delay_bound(&self, delay_bound: f64) -> Result<Self> {
        Self::new(self.arrival_rate, delay_bound)
    }
}

/// Symbol rate, SIR and modulation at which a link is operated.
#[derive(Debug, Clone, Copy)]
pub struct LinkOperatingPoint<'a> {
    pub scheme: &'a ModulationScheme,
    pub symbol_rate: f64,
    pub sir: SirValue,
}

impl<'a> LinkOperatingPoint<'a> {
    pub fn new(scheme: &'a ModulationScheme, symbol_rate: f64, sir: SirValue) -> Result<Self> {
        check_symbol_rate(symbol_rate)?;
        Ok(Self {
            scheme,
            symbol_rate,
            sir,
        })
    }

    /// Packet transmission time `tau`.
    pub fn packet_time(&self) -> f64 {
        packet_time(self.scheme, self.symbol_rate)
    }
}

fn check_symbol_rate(symbol_rate: f64) -> Result<()> {
    if !(symbol_rate > 0.0 && symbol_rate.is_finite()) {
        return Err(Error::domain(format!(
            "symbol rate must be positive, got {symbol_rate}"
        )));
    }
    Ok(())
}

fn packet_time(scheme: &ModulationScheme, symbol_rate: f64) -> f64 {
    scheme.packet_bits() as f64 / (scheme.bits_per_symbol() as f64 * symbol_rate)
}

/// Packets per second delivered when the queue is never empty.
pub fn service_rate(op: &LinkOperatingPoint<'_>) -> f64 {
    op.scheme.efficiency(op.sir) / op.packet_time()
}

/// Mean packet delay (queueing plus all transmissions).
pub fn avg_delay(op: &LinkOperatingPoint<'_>, traffic: &TrafficQoS) -> Result<f64> {
    let tau = op.packet_time();
    let load = traffic.arrival_rate * tau;
    let efficiency = op.scheme.efficiency(op.sir);
    if efficiency <= load {
        return Err(Error::Unstable { efficiency, load });
    }
    Ok(tau * (1.0 - 0.5 * load) / (efficiency - load))
}

/// Smallest efficiency `eta_b` meeting the delay bound at symbol rate `symbol_rate`.
///
/// Evaluated as `lambda tau + tau (1 - lambda tau / 2) / D`, which expands to
/// `L lambda/(b R_s) + L/(b R_s D) - L^2 lambda/(2 b^2 R_s^2 D)`.
pub fn required_efficiency(scheme: &ModulationScheme, symbol_rate: f64, traffic: &TrafficQoS) -> Result<f64> {
    check_symbol_rate(symbol_rate)?;
    let tau = packet_time(scheme, symbol_rate);
    let load = traffic.arrival_rate * tau;
    Ok(load + tau * (1.0 - 0.5 * load) / traffic.delay_bound)
}

/// SIR at which the mean delay equals the bound exactly.
pub fn sir_floor(scheme: &ModulationScheme, symbol_rate: f64, traffic: &TrafficQoS) -> Result<SirValue> {
    let eta = required_efficiency(scheme, symbol_rate, traffic)?;
    if !(eta >= 0.0 && eta < scheme.max_efficiency()) {
        return Err(Error::DelayInfeasible {
            user: None,
            bits_per_symbol: scheme.bits_per_symbol(),
            required_efficiency: eta,
        });
    }
    scheme.efficiency_inverse(eta)
}

/// Bit rate `b R_s` at which operating at the energy-optimal SIR meets the
/// delay bound with equality.
///
/// Positive root of the quadratic `f* R^2 - L(lambda + 1/D) R + L^2 lambda/(2D) = 0`.
pub fn omega_star(scheme: &ModulationScheme, traffic: &TrafficQoS) -> Result<f64> {
    let f_star = scheme.efficiency(scheme.optimal_sir()?);
    Ok(omega_for_efficiency(scheme.packet_bits() as f64, f_star, traffic))
}

pub(crate) fn omega_for_efficiency(packet_bits: f64, f_star: f64, traffic: &TrafficQoS) -> f64 {
    let lambda = traffic.arrival_rate;
    let inv_d = 1.0 / traffic.delay_bound;
    let radical = (inv_d * inv_d + lambda * lambda + 2.0 * (1.0 - f_star) * lambda * inv_d).sqrt();
    packet_bits * (inv_d + lambda + radical) / (2.0 * f_star)
}

/// Whether the delay bound can be met at all with symbol rate `bandwidth`.
///
/// True iff `eta_b(R_s = B) < 1 - 2^-L`.
pub fn feasible_at_bandwidth(scheme: &ModulationScheme, bandwidth: f64, traffic: &TrafficQoS) -> bool {
    match required_efficiency(scheme, bandwidth, traffic) {
        Ok(eta) => {
            let feasible = eta < scheme.max_efficiency();
            debug_assert!(!feasible || eta >= 0.0);
            feasible
        }
        Err(_) => false,
    }
}

/// Sample mean sojourn time of a simulated run with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mg1Estimate {
    pub mean_delay: f64,
    pub std_error: f64,
    pub packets: u64,
}

const BATCHES: u64 = 100;

/// Simulates the ARQ queue for `n_packets` packets.
///
/// Waiting times follow the Lindley recursion `W_{n+1} = max(0, W_n + S_n - A_{n+1})`
/// for a FIFO single server starting empty. Each service `S_n` is `tau` times
/// `1 + Geometric(f)` attempts, and inter-arrival gaps are exponential with
/// rate `lambda`. Randomness comes from ChaCha8 seeded with
/// `ChaCha8Rng::seed_from_u64(seed)`, so a seed reproduces a run bit for bit.
///
/// Sojourn times are correlated, so the standard error uses 100 batch
/// means (or single packets when fewer than 100 are simulated).
pub fn simulate_mg1(
    op: &LinkOperatingPoint<'_>,
    traffic: &TrafficQoS,
    n_packets: u64,
    seed: u64,
) -> Result<Mg1Estimate> {
    if n_packets == 0 {
        return Err(Error::domain("simulation needs at least one packet"));
    }
    let tau = op.packet_time();
    let load = traffic.arrival_rate * tau;
    let efficiency = op.scheme.efficiency(op.sir);
    if efficiency <= load {
        return Err(Error::Unstable { efficiency, load });
    }

    // Time is measured in units of tau, so an error-free idle link yields exactly 1.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let attempts = Geometric::new(efficiency).map_err(|e| Error::Numeric(e.to_string()))?;
    let gaps = if load > 0.0 {
        Some(Exp::new(load).map_err(|e| Error::Numeric(e.to_string()))?)
    } else {
        None
    };

    let batches = BATCHES.min(n_packets);
    let batch_len = n_packets / batches;
    let mut batch_sums = vec![0.0; batches as usize];
    let mut total = 0.0;
    let mut wait = 0.0_f64;
    for n in 0..n_packets {
        let service = (1 + attempts.sample(&mut rng)) as f64;
        let sojourn = wait + service;
        total += sojourn;
        let batch = n / batch_len;
        if batch < batches {
            batch_sums[batch as usize] += sojourn;
        }
        let gap = gaps.as_ref().map_or(f64::INFINITY, |d| d.sample(&mut rng));
        wait = (sojourn - gap).max(0.0);
    }

    let mean_delay = tau * (total / n_packets as f64);
    let std_error = if batches < 2 {
        0.0
    } else {
        let means: Vec<f64> = batch_sums.iter().map(|s| s / batch_len as f64).collect();
        let grand = means.iter().sum::<f64>() / batches as f64;
        let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
        tau * (var / batches as f64).sqrt()
    };
    Ok(Mg1Estimate {
        mean_delay,
        std_error,
        packets: n_packets,
    })
}
