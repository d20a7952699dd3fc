use std::fmt::Write as _;

use serde::Serialize;

use super::config::{ScenarioConfig, SweepSpec, SweepVariable};
use crate::delay_qos::{self, LinkOperatingPoint, Mg1Estimate};
use crate::error::{Error, Result};
use crate::game::{self, Policy, SolverOptions, UserProfile};
use crate::modulation::{self, Coding, ModulationScheme, SirValue};

/// Even constellation sizes `2, 4, ..., b_max`.
pub fn even_sizes(b_max: u32) -> Vec<u32> {
    (2..=b_max).step_by(2).collect()
}

/// Fixed-point rendering with `digits` significant digits.
pub fn fixed_sig(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{:.*}", digits.saturating_sub(1), v);
    }
    let mag = v.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - mag).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // rounding may carry into a new leading digit
    let carried: f64 = s.parse().unwrap_or(v);
    if decimals > 0 && carried.abs() >= 10f64.powi(mag as i32 + 1) {
        format!("{v:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

/// Shortest round-trip rendering, switching to exponent form outside
/// `[1e-4, 1e6)` so that tiny values stay short.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e6).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn coding_label(coding: &Coding) -> &'static str {
    match coding {
        Coding::Uncoded => "uncoded",
        Coding::Trellis(_) => "coded",
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table1Row {
    pub bits_per_symbol: u32,
    pub alpha: f64,
    pub beta: f64,
    pub gamma_star_db: f64,
    pub f_at_star: f64,
    pub b_over_gamma_db: f64,
    pub coefficient: f64,
}

pub fn table1(packet_bits: u32, sizes: &[u32], coding: &Coding) -> Result<Vec<Table1Row>> {
    sizes
        .iter()
        .map(|&b| {
            let scheme = ModulationScheme::new(b, packet_bits, coding.clone())?;
            let star = scheme.optimal_sir()?;
            let f = scheme.efficiency(star);
            Ok(Table1Row {
                bits_per_symbol: b,
                alpha: modulation::alpha(b)?,
                beta: modulation::beta(b)?,
                gamma_star_db: star.db(),
                f_at_star: f,
                b_over_gamma_db: 10.0 * (b as f64).log10() - star.db(),
                coefficient: b as f64 * f / star.linear(),
            })
        })
        .collect()
}

pub fn table1_csv(rows: &[Table1Row]) -> String {
    let mut out = String::from("b,alpha,beta,gamma_star_db,f_at_star,b_over_gamma_db,coefficient\n");
    for r in rows {
        let cols = [
            r.alpha,
            r.beta,
            r.gamma_star_db,
            r.f_at_star,
            r.b_over_gamma_db,
            r.coefficient,
        ];
        let cols: Vec<String> = cols.iter().map(|&v| fixed_sig(v, 6)).collect();
        writeln!(out, "{},{}", r.bits_per_symbol, cols.join(",")).unwrap();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirPoint {
    pub sir_db: f64,
    pub bits_per_symbol: u32,
    /// `b f_b(g) / g`, i.e. utility over `B h_eff`.
    pub utility_norm: f64,
}

pub fn sir_sweep(packet_bits: u32, sizes: &[u32], coding: &Coding, grid: &SweepSpec) -> Result<Vec<SirPoint>> {
    if grid.variable != SweepVariable::SirDb {
        return Err(Error::Configuration("SIR sweep needs an SIR grid".into()));
    }
    let schemes = sizes
        .iter()
        .map(|&b| ModulationScheme::new(b, packet_bits, coding.clone()))
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::with_capacity(grid.points * schemes.len());
    for sir_db in grid.values() {
        let sir = SirValue::from_db(sir_db)?;
        for scheme in &schemes {
            points.push(SirPoint {
                sir_db,
                bits_per_symbol: scheme.bits_per_symbol(),
                utility_norm: scheme.normalized_utility(sir),
            });
        }
    }
    Ok(points)
}

pub fn sir_sweep_csv(points: &[SirPoint]) -> String {
    let mut out = String::from("sir_db,b,utility_norm\n");
    for p in points {
        writeln!(out, "{},{},{}", num(p.sir_db), p.bits_per_symbol, num(p.utility_norm)).unwrap();
    }
    out
}

/// Single-user optimum at one delay bound, normalized by bandwidth and
/// effective channel gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingSummary {
    pub bits_per_symbol: u32,
    pub rs_over_b: f64,
    pub gamma_db: f64,
    pub power_norm: f64,
    pub throughput_norm: f64,
    pub utility_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayPoint {
    pub coded: bool,
    pub delay_norm: f64,
    /// `None` when no constellation meets the delay bound.
    pub optimum: Option<OperatingSummary>,
}

/// Best response of `user` with its delay bound replaced by `delay_norm / B`.
pub fn delay_point(
    user: &UserProfile,
    bandwidth: f64,
    policy: Policy,
    delay_norm: f64,
) -> Result<Option<OperatingSummary>> {
    let mut user = user.clone();
    user.traffic = user.traffic.with_delay_bound(delay_norm / bandwidth)?;
    let s = match game::best_response(&user, bandwidth, policy) {
        Ok(s) => s,
        Err(Error::DelayInfeasible { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let scheme = user.scheme(s.bits_per_symbol)?;
    let rs_over_b = s.symbol_rate / bandwidth;
    Ok(Some(OperatingSummary {
        bits_per_symbol: s.bits_per_symbol,
        rs_over_b,
        gamma_db: s.target_sir.db(),
        power_norm: s.target_sir.linear() * rs_over_b,
        throughput_norm: s.bits_per_symbol as f64 * rs_over_b,
        utility_norm: scheme.normalized_utility(s.target_sir),
    }))
}

/// Normalized single-user optimum over a delay grid, for every coding mode
/// of the scenario (uncoded first).
pub fn delay_sweep(config: &ScenarioConfig, grid: &SweepSpec) -> Result<Vec<DelayPoint>> {
    if grid.variable != SweepVariable::DelayNorm {
        return Err(Error::Configuration("delay sweep needs a delay grid".into()));
    }
    let user_config = config.single_user()?;
    let mut points = Vec::new();
    for coding in config.coding_modes()? {
        let user = config.user_profile(user_config, &coding)?;
        for delay_norm in grid.values() {
            points.push(DelayPoint {
                coded: matches!(coding, Coding::Trellis(_)),
                delay_norm,
                optimum: delay_point(&user, config.bandwidth_hz, config.policy(), delay_norm)?,
            });
        }
    }
    Ok(points)
}

pub fn delay_sweep_csv(points: &[DelayPoint]) -> String {
    let mut out =
        String::from("coding,delay_norm,status,b,rs_over_b,gamma_db,power_norm,throughput_norm,utility_norm\n");
    for p in points {
        let label = if p.coded { "coded" } else { "uncoded" };
        match &p.optimum {
            Some(o) => writeln!(
                out,
                "{label},{},ok,{},{},{},{},{},{}",
                num(p.delay_norm),
                o.bits_per_symbol,
                num(o.rs_over_b),
                num(o.gamma_db),
                num(o.power_norm),
                num(o.throughput_norm),
                num(o.utility_norm)
            ),
            None => writeln!(out, "{label},{},infeasible,,,,,,", num(p.delay_norm)),
        }
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NashUser {
    pub b: u32,
    pub rs_hz: f64,
    pub gamma_db: f64,
    pub achieved_gamma_db: f64,
    pub power_w: f64,
    pub utility_bits_per_joule: f64,
    pub size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NashDiagnostics {
    pub iterated_powers_w: Vec<f64>,
    pub closed_form_powers_w: Vec<f64>,
    pub max_rel_power_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NashReport {
    pub policy: &'static str,
    pub coding: &'static str,
    pub users: Vec<NashUser>,
    pub sum_size: f64,
    pub iterations: usize,
    pub converged: bool,
    pub diagnostics: NashDiagnostics,
}

pub fn nash(config: &ScenarioConfig, coded: bool, options: SolverOptions) -> Result<NashReport> {
    let coding = config.coding_for(coded)?;
    let env = config.to_env(&coding)?;
    let policy = config.policy();
    let eq = game::nash_equilibrium(&env, policy, options)?;
    let powers: Vec<f64> = eq.strategies.iter().map(|s| s.power.unwrap_or(f64::NAN)).collect();
    let users = eq
        .strategies
        .iter()
        .enumerate()
        .map(|(k, s)| NashUser {
            b: s.bits_per_symbol,
            rs_hz: s.symbol_rate,
            gamma_db: s.target_sir.db(),
            achieved_gamma_db: 10.0 * eq.achieved_sirs[k].log10(),
            power_w: powers[k],
            utility_bits_per_joule: eq.utilities[k],
            size: eq.user_sizes[k],
        })
        .collect();
    Ok(NashReport {
        policy: match policy {
            Policy::ParetoDominant => "pareto",
            Policy::MaxRate => "maxrate",
        },
        coding: coding_label(&coding),
        users,
        sum_size: eq.sum_size,
        iterations: eq.iterations,
        converged: eq.converged,
        diagnostics: NashDiagnostics {
            iterated_powers_w: powers,
            closed_form_powers_w: eq.closed_form_powers,
            max_rel_power_gap: eq.max_power_gap,
        },
    })
}

/// Operating-point overrides for the queue validation; anything left
/// empty comes from the user's best response.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mg1Overrides {
    pub bits_per_symbol: Option<u32>,
    pub symbol_rate: Option<f64>,
    pub sir_db: Option<f64>,
}

/// |z| above this fails the validation.
pub const MG1_Z_LIMIT: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Mg1Report {
    pub bits_per_symbol: u32,
    pub symbol_rate_hz: f64,
    pub gamma_db: f64,
    pub efficiency: f64,
    pub packet_time_s: f64,
    pub arrival_rate_pps: f64,
    pub analytic_delay_s: f64,
    pub simulation: Mg1Estimate,
    pub seed: u64,
    pub z: f64,
}

impl Mg1Report {
    pub fn passes(&self) -> bool {
        self.z.abs() <= MG1_Z_LIMIT
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k}={v}").unwrap();
        kv("b", self.bits_per_symbol.to_string());
        kv("symbol_rate_hz", num(self.symbol_rate_hz));
        kv("gamma_db", num(self.gamma_db));
        kv("efficiency", num(self.efficiency));
        kv("packet_time_s", num(self.packet_time_s));
        kv("arrival_rate_pps", num(self.arrival_rate_pps));
        kv("analytic_delay_s", num(self.analytic_delay_s));
        kv("simulated_delay_s", num(self.simulation.mean_delay));
        kv("std_error_s", num(self.simulation.std_error));
        kv("packets", self.simulation.packets.to_string());
        kv("seed", self.seed.to_string());
        kv("z", num(self.z));
        kv("result", if self.passes() { "pass" } else { "fail" }.to_string());
        out
    }
}

/// Standardized gap between simulation and analysis; zero when both the
/// gap and the standard error vanish.
pub fn z_score(simulated: f64, analytic: f64, std_error: f64) -> f64 {
    let diff = simulated - analytic;
    if diff == 0.0 {
        0.0
    } else if std_error == 0.0 {
        diff.signum() * f64::INFINITY
    } else {
        diff / std_error
    }
}

pub fn validate_mg1(
    config: &ScenarioConfig,
    coded: bool,
    overrides: Mg1Overrides,
    n_packets: u64,
    seed: u64,
) -> Result<Mg1Report> {
    let user_config = config.single_user()?;
    let user = config.user_profile(user_config, &config.coding_for(coded)?)?;
    let complete = overrides.bits_per_symbol.is_some() && overrides.symbol_rate.is_some() && overrides.sir_db.is_some();
    let (mut b, mut rate, mut sir) = (0, 0.0, SirValue::ZERO);
    if !complete {
        let s = game::best_response(&user, config.bandwidth_hz, config.policy())?;
        (b, rate, sir) = (s.bits_per_symbol, s.symbol_rate, s.target_sir);
    }
    let b = overrides.bits_per_symbol.unwrap_or(b);
    let rate = overrides.symbol_rate.unwrap_or(rate);
    if let Some(db) = overrides.sir_db {
        sir = SirValue::from_db(db)?;
    }

    let scheme = user.scheme(b)?;
    let op = LinkOperatingPoint::new(&scheme, rate, sir)?;
    let analytic = delay_qos::avg_delay(&op, &user.traffic)?;
    let simulation = delay_qos::simulate_mg1(&op, &user.traffic, n_packets, seed)?;
    Ok(Mg1Report {
        bits_per_symbol: b,
        symbol_rate_hz: rate,
        gamma_db: sir.db(),
        efficiency: scheme.efficiency(sir),
        packet_time_s: op.packet_time(),
        arrival_rate_pps: user.traffic.arrival_rate(),
        analytic_delay_s: analytic,
        z: z_score(simulation.mean_delay, analytic, simulation.std_error),
        simulation,
        seed,
    })
}
