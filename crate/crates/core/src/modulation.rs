//! Efficiency functions for square M-QAM, uncoded and trellis-coded.
//!
//! For `b` bits per symbol and packets of `L` bits the packet success rate is
//! `(1 - alpha_b Q(sqrt(beta_b g)))^(2L/b)` and the efficiency function
//! subtracts its zero-power value `2^-L`, so that a silent transmitter
//! delivers nothing. A trellis code with gain `G_b` evaluates the same
//! expression at `g * G_b`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::{self, BracketSearch, RootTolerance};

/// Linear symbol SIR. Conversion to dB happens only at the edges.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SirValue(f64);

impl SirValue {
    pub const ZERO: SirValue = SirValue(0.0);

    pub fn new(linear: f64) -> Result<Self> {
        if !(linear >= 0.0 && linear.is_finite()) {
            return Err(Error::domain(format!(
                "SIR must be finite and non-negative, got {linear}"
            )));
        }
        Ok(SirValue(linear))
    }

    pub fn from_db(db: f64) -> Result<Self> {
        Self::new(10f64.powf(db / 10.0))
    }

    pub fn linear(self) -> f64 {
        self.0
    }

    pub fn db(self) -> f64 {
        10.0 * self.0.log10()
    }
}

/// Constant-per-constellation coding gain table, in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct CodingGainModel {
    gains_db: BTreeMap<u32, f64>,
    info: String,
}

impl CodingGainModel {
    pub fn new(gains_db: BTreeMap<u32, f64>, info: impl Into<String>) -> Result<Self> {
        for (&b, &g) in &gains_db {
            check_bits(b)?;
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::Configuration(format!(
                    "coding gain for b = {b} must be a finite value >= 0 dB, got {g}"
                )));
            }
        }
        Ok(Self {
            gains_db,
            info: info.into(),
        })
    }

    /// Placeholder gains for an 8-state rate-2/3 trellis code. Override for
    /// quantitative coded results.
    pub fn placeholder_tcm() -> Self {
        let gains_db = BTreeMap::from([(2, 3.0), (4, 3.6), (6, 3.6), (8, 3.6), (10, 3.6)]);
        Self {
            gains_db,
            info: "8-state rate-2/3 TCM (placeholder gains)".to_owned(),
        }
    }

    pub fn gain_db(&self, b: u32) -> Result<f64> {
        self.gains_db
            .get(&b)
            .copied()
            .ok_or_else(|| Error::Configuration(format!("no coding gain configured for b = {b}")))
    }

    pub fn gains_db(&self) -> &BTreeMap<u32, f64> {
        &self.gains_db
    }

    pub fn info(&self) -> &str {
        &self.info
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coding {
    Uncoded,
    Trellis(CodingGainModel),
}

/// A square QAM constellation with packet length and coding mode.
///
/// A trellis-coded scheme resolves its gain at construction, so a missing
/// table entry is reported here rather than on every evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationScheme {
    bits_per_symbol: u32,
    packet_bits: u32,
    coding: Coding,
    gain: f64,
}

fn check_bits(b: u32) -> Result<()> {
    if b < 2 || !b.is_multiple_of(2) {
        return Err(Error::domain(format!(
            "bits per symbol must be an even integer >= 2 (square QAM), got {b}"
        )));
    }
    Ok(())
}

/// `alpha_b = 2 (1 - 2^(-b/2))`.
pub fn alpha(b: u32) -> Result<f64> {
    check_bits(b)?;
    Ok(2.0 * (1.0 - 0.5f64.powi((b / 2) as i32)))
}

/// `beta_b = 3 / (2^b - 1)`.
pub fn beta(b: u32) -> Result<f64> {
    check_bits(b)?;
    Ok(3.0 / (2f64.powi(b as i32) - 1.0))
}

impl ModulationScheme {
    pub fn uncoded(bits_per_symbol: u32, packet_bits: u32) -> Result<Self> {
        Self::new(bits_per_symbol, packet_bits, Coding::Uncoded)
    }

    pub fn new(bits_per_symbol: u32, packet_bits: u32, coding: Coding) -> Result<Self> {
        check_bits(bits_per_symbol)?;
        if packet_bits == 0 {
            return Err(Error::domain("packet length must be at least 1 bit"));
        }
        let gain = match &coding {
            Coding::Uncoded => 1.0,
            Coding::Trellis(model) => 10f64.powf(model.gain_db(bits_per_symbol)? / 10.0),
        };
        Ok(Self {
            bits_per_symbol,
            packet_bits,
            coding,
            gain,
        })
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.bits_per_symbol
    }

    pub fn packet_bits(&self) -> u32 {
        self.packet_bits
    }

    pub fn coding(&self) -> &Coding {
        &self.coding
    }

    pub fn is_coded(&self) -> bool {
        matches!(self.coding, Coding::Trellis(_))
    }

    /// Linear coding gain (1 when uncoded).
    pub fn coding_gain(&self) -> f64 {
        self.gain
    }

    fn alpha(&self) -> f64 {
        2.0 * (1.0 - 0.5f64.powi((self.bits_per_symbol / 2) as i32))
    }

    fn beta(&self) -> f64 {
        3.0 / (2f64.powi(self.bits_per_symbol as i32) - 1.0)
    }

    /// Symbols per packet, `2L/b` counted in QAM dimensions.
    fn exponent(&self) -> f64 {
        2.0 * self.packet_bits as f64 / self.bits_per_symbol as f64
    }

    /// `2^-L`; zero once it leaves the binary64 range.
    pub fn zero_power_success(&self) -> f64 {
        if self.packet_bits > 1074 {
            0.0
        } else {
            0.5f64.powi(self.packet_bits as i32)
        }
    }

    /// Supremum of the efficiency function, `1 - 2^-L`.
    pub fn max_efficiency(&self) -> f64 {
        1.0 - self.zero_power_success()
    }

    // sqrt(beta * g * G / 2), the erf/erfc argument.
    fn erf_argument(&self, sir: f64) -> f64 {
        (self.beta() * sir * self.gain * 0.5).sqrt()
    }

    fn log_packet_success(&self, z: f64) -> f64 {
        let q = 0.5 * numerics::erfc(z);
        self.exponent() * (-self.alpha() * q).ln_1p()
    }

    /// Packet success rate at SIR `sir`, including the `2^-L` floor.
    pub fn packet_success(&self, sir: SirValue) -> f64 {
        self.log_packet_success(self.erf_argument(sir.0)).exp()
    }

    /// Efficiency function: packet success rate minus its zero-power value.
    ///
    /// Near zero SIR the two terms cancel, so the difference is evaluated as
    /// `2^-L * expm1(E)` with `E = (2L/b) ln(1 + (2^(b/2) - 1) erf(z))`,
    /// which is exact algebra for `ln P_success + L ln 2`.
    pub fn efficiency(&self, sir: SirValue) -> f64 {
        let z = self.erf_argument(sir.0);
        let excess =
            self.exponent() * ((2f64.powi((self.bits_per_symbol / 2) as i32) - 1.0) * numerics::erf(z)).ln_1p();
        if excess < 1.0 {
            self.zero_power_success() * excess.exp_m1()
        } else {
            self.log_packet_success(z).exp() - self.zero_power_success()
        }
    }

    /// Analytic `d f_b / d g`.
    pub fn efficiency_derivative(&self, sir: SirValue) -> Result<f64> {
        let g = sir.0;
        if g <= 0.0 {
            return Err(Error::domain("efficiency derivative is unbounded at zero SIR"));
        }
        let beta = self.beta();
        let alpha = self.alpha();
        let n = self.exponent();
        let z = self.erf_argument(g);
        let u = z * std::f64::consts::SQRT_2;
        let q = 0.5 * numerics::erfc(z);
        // (1 - aQ)^(n-1) * phi(u) folded into one exponential
        let log_tail = (n - 1.0) * (-alpha * q).ln_1p() - z * z;
        let scale = n * alpha * beta / (2.0 * u * (2.0 * PI).sqrt());
        Ok(scale * log_tail.exp() * self.gain)
    }

    /// Smallest SIR with `efficiency(g) = eta`.
    pub fn efficiency_inverse(&self, eta: f64) -> Result<SirValue> {
        if eta.is_nan() || eta < 0.0 || eta.is_infinite() {
            return Err(Error::domain(format!("target efficiency must be >= 0, got {eta}")));
        }
        let supremum = self.max_efficiency();
        if eta >= supremum {
            return Err(Error::InfeasibleTarget { eta, supremum });
        }
        if eta == 0.0 {
            return Ok(SirValue::ZERO);
        }
        let target = |g: f64| self.efficiency(SirValue(g)) - eta;
        let (lo, hi) = numerics::expand_bracket(target, 1.0)?;
        let tol = RootTolerance::new(1e-15, 400)?;
        numerics::find_root(target, lo, hi, tol).map(SirValue)
    }

    /// `g f'(g) - f(g)`: positive below the energy-optimal SIR, negative above.
    pub fn stationarity_residual(&self, sir: SirValue) -> Result<f64> {
        Ok(sir.0 * self.efficiency_derivative(sir)? - self.efficiency(sir))
    }

    /// Energy-optimal SIR: the positive root of `g f'(g) = f(g)`.
    ///
    /// The search starts at unit SIR and only moves towards the optimum.
    /// Far below the optimum, where `f` is of order `2^-L`, the exact
    /// efficiency behaves like `sqrt(g)` and the residual turns negative
    /// again; that region is never entered.
    pub fn optimal_sir(&self) -> Result<SirValue> {
        let residual = |g: f64| self.stationarity_residual(SirValue(g)).unwrap_or(f64::NAN);
        let direction = if residual(1.0) > 0.0 {
            BracketSearch::Upward
        } else {
            BracketSearch::Downward
        };
        let (lo, hi) = numerics::expand_bracket_directed(residual, 1.0, direction)?;
        numerics::find_root(residual, lo, hi, RootTolerance::default()).map(SirValue)
    }

    /// `b f(g*) / g*`: peak utility in units of `B * h_eff`.
    pub fn peak_utility_coefficient(&self) -> Result<f64> {
        let star = self.optimal_sir()?;
        Ok(self.normalized_utility(star))
    }

    /// `b f(g) / g`, the utility normalized by bandwidth and effective gain.
    pub fn normalized_utility(&self, sir: SirValue) -> f64 {
        self.bits_per_symbol as f64 * self.efficiency(sir) / sir.0
    }
}
