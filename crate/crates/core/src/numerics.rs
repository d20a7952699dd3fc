//! Special functions and bracketed scalar root finding.
//!
//! `erf`/`erfc` are evaluated with a positive-term power series below
//! `ERFC_SERIES_LIMIT` and a continued fraction above it, so the tail
//! probability keeps full relative precision down to the subnormal range.
//! Only `exp`, `ln` and `sqrt` from the platform are used.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
const ERFC_SERIES_LIMIT: f64 = 2.0;
const MAX_SERIES_TERMS: usize = 500;
const MAX_FRACTION_TERMS: usize = 10_000;
const MAX_DOUBLINGS: usize = 200;

/// Tolerance for [`find_root`]: the returned abscissa is within
/// `rel_x * max(|x|, 1)` of the true root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootTolerance {
    rel_x: f64,
    max_iter: usize,
}

impl RootTolerance {
    pub fn new(rel_x: f64, max_iter: usize) -> Result<Self> {
        if !(rel_x > 0.0 && rel_x.is_finite()) {
            return Err(Error::domain(format!("rel_x must be positive, got {rel_x}")));
        }
        if max_iter == 0 {
            return Err(Error::domain("max_iter must be at least 1"));
        }
        Ok(Self { rel_x, max_iter })
    }

    pub fn rel_x(&self) -> f64 {
        self.rel_x
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter
    }
}

impl Default for RootTolerance {
    fn default() -> Self {
        Self {
            rel_x: 1e-12,
            max_iter: 200,
        }
    }
}

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("q_function argument must be finite, got {x}")));
    }
    Ok(q(x))
}

pub(crate) fn q(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn gaussian_pdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("gaussian_pdf argument must be finite, got {x}")));
    }
    Ok((-0.5 * x * x).exp() / (2.0 * PI).sqrt())
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let a = x.abs();
    let value = if a < ERFC_SERIES_LIMIT {
        erf_series(a)
    } else {
        1.0 - erfc_fraction(a)
    };
    value.copysign(x)
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < ERFC_SERIES_LIMIT {
        1.0 - erf_series(x)
    } else {
        erfc_fraction(x)
    }
}

// erf(x) = 2/sqrt(pi) * x * exp(-x^2) * sum_n (2x^2)^n / (1*3*...*(2n+1)); all terms positive.
fn erf_series(x: f64) -> f64 {
    let two_x2 = 2.0 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..MAX_SERIES_TERMS {
        term *= two_x2 / (2 * n + 1) as f64;
        sum += term;
        if term <= sum * f64::EPSILON * 0.25 {
            break;
        }
    }
    FRAC_2_SQRT_PI * x * exp_neg_square(x) * sum
}

// erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))), modified Lentz.
fn erfc_fraction(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 0.0;
    }
    const TINY: f64 = 1e-300;
    let mut value = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..MAX_FRACTION_TERMS {
        let a = 0.5 * n as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        d = 1.0 / d;
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        let delta = c * d;
        value *= delta;
        if (delta - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    // Multiply the small factors first so a subnormal result keeps as many bits as possible.
    (1.0 / (value * PI.sqrt())) * exp_neg_square(x)
}

// exp(-x^2) with x split into a coarse part whose square is exact.
fn exp_neg_square(x: f64) -> f64 {
    let hi = (x * 16.0).floor() / 16.0;
    let lo = x - hi;
    (-hi * hi).exp() * (-lo * (x + hi)).exp()
}

/// Which directions [`expand_bracket_directed`] may search in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BracketSearch {
    /// Alternate doubling and halving.
    Outward,
    Upward,
    Downward,
}

/// Finds `(lo, hi)` with a sign change of `f` by doubling and halving from `x0 > 0`.
pub fn expand_bracket<F>(f: F, x0: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    expand_bracket_directed(f, x0, BracketSearch::Outward)
}

/// Geometric bracket search restricted to the given directions.
///
/// Each step multiplies (or divides) by 2. The search gives up after
/// 200 steps in every allowed direction.
pub fn expand_bracket_directed<F>(mut f: F, x0: f64, search: BracketSearch) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(Error::domain(format!("bracket seed must be positive, got {x0}")));
    }
    let up = matches!(search, BracketSearch::Outward | BracketSearch::Upward);
    let down = matches!(search, BracketSearch::Outward | BracketSearch::Downward);

    let f0 = eval_checked(&mut f, x0)?;
    let (mut hi, mut f_hi) = (x0, f0);
    let (mut lo, mut f_lo) = (x0, f0);
    for _ in 0..MAX_DOUBLINGS {
        if up {
            let next = hi * 2.0;
            let f_next = eval_checked(&mut f, next)?;
            if sign_changes(f_hi, f_next) {
                return Ok((hi, next));
            }
            hi = next;
            f_hi = f_next;
        }
        if down {
            let next = lo * 0.5;
            let f_next = eval_checked(&mut f, next)?;
            if sign_changes(f_lo, f_next) {
                return Ok((next, lo));
            }
            lo = next;
            f_lo = f_next;
        }
    }
    Err(Error::Bracketing { lo, hi })
}

fn eval_checked<F: FnMut(f64) -> f64>(f: &mut F, x: f64) -> Result<f64> {
    let y = f(x);
    if y.is_nan() {
        return Err(Error::Numeric(format!("function returned NaN at {x}")));
    }
    Ok(y)
}

fn sign_changes(a: f64, b: f64) -> bool {
    a == 0.0 || b == 0.0 || (a < 0.0) != (b < 0.0)
}

/// Bisection on a bracket `[lo, hi]` where `f(lo)` and `f(hi)` differ in sign.
///
/// Deterministic: the same inputs always produce the same iterate sequence.
/// Stops early once the bracket can no longer be split in binary64.
pub fn find_root<F>(mut f: F, lo: f64, hi: f64, tol: RootTolerance) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::domain(format!("invalid bracket [{lo}, {hi}]")));
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut f_lo = eval_checked(&mut f, lo)?;
    let f_hi = eval_checked(&mut f, hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if (f_lo < 0.0) == (f_hi < 0.0) {
        return Err(Error::Bracketing { lo, hi });
    }
    for _ in 0..tol.max_iter {
        let mid = lo + 0.5 * (hi - lo);
        if hi - lo <= tol.rel_x * mid.abs().max(1.0) || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = eval_checked(&mut f, mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Convergence { max_iter: tol.max_iter })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference tail probabilities computed with 50-digit arithmetic (mpmath erfc).
    #[allow(clippy::excessive_precision)]
    const Q_REFERENCE: [(f64, f64); 19] = [
        (0.1, 0.46017216272297102),
        (0.5, 0.3085375387259869),
        (1.0, 0.15865525393145705),
        (1.5, 0.066807201268858066),
        (2.0, 0.022750131948179207),
        (2.5, 0.0062096653257761352),
        (3.0, 0.0013498980316300945),
        (4.0, 3.1671241833119921e-5),
        (5.0, 2.8665157187919391e-7),
        (6.0, 9.8658764503769814e-10),
        (8.0, 6.2209605742717841e-16),
        (10.0, 7.6198530241605261e-24),
        (12.0, 1.776482112077679e-33),
        (15.0, 3.6709661993127509e-51),
        (20.0, 2.7536241186062337e-89),
        (25.0, 3.0566967063825609e-138),
        (30.0, 4.9067139271481871e-198),
        (35.0, 1.1249107064724062e-268),
        (37.0, 5.7255712225245768e-300),
    ];

    fn rel_err(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn q_matches_high_precision_reference() {
        for &(x, expected) in &Q_REFERENCE {
            let got = q_function(x).unwrap();
            assert!(rel_err(got, expected) <= 1e-10, "Q({x}) = {got}, expected {expected}");
        }
    }

    #[test]
    fn q_at_zero_and_one() {
        assert_eq!(q_function(0.0).unwrap(), 0.5);
        assert!(rel_err(q_function(1.0).unwrap(), 0.15865525393146) < 1e-12);
    }

    #[test]
    fn q_deep_tail_is_subnormal_not_zero() {
        let q38 = q_function(38.0).unwrap();
        assert!(q38 > 0.0);
        assert!(rel_err(q38, 2.8854e-316) < 1e-3);
        // The exact Q(40) ~ 3.7e-351 is below the smallest subnormal.
        assert_eq!(q_function(40.0).unwrap(), 0.0);
    }

    #[test]
    fn q_rejects_non_finite() {
        assert!(matches!(q_function(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(q_function(f64::INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn q_symmetry_pairs() {
        for i in 0..=80 {
            let x = i as f64 * 0.1;
            let s = q_function(x).unwrap() + q_function(-x).unwrap();
            assert!((s - 1.0).abs() <= 1e-12, "x = {x}: {s}");
        }
    }

    #[test]
    fn erf_series_and_fraction_agree_at_switch() {
        let below = 1.0 - erf_series(ERFC_SERIES_LIMIT);
        let above = erfc_fraction(ERFC_SERIES_LIMIT);
        assert!(rel_err(below, above) < 1e-13, "{below} vs {above}");
    }

    #[test]
    fn erf_small_argument_is_linear() {
        let x = 1e-8;
        assert!(rel_err(erf(x), FRAC_2_SQRT_PI * x) < 1e-15);
        assert_eq!(erf(-0.5), -erf(0.5));
    }

    #[test]
    fn gaussian_pdf_values() {
        assert!(rel_err(gaussian_pdf(0.0).unwrap(), 0.3989422804014327) < 1e-15);
        assert!(rel_err(gaussian_pdf(1.0).unwrap(), 0.24197072451914337) < 1e-14);
        assert!(gaussian_pdf(f64::NAN).is_err());
    }

    #[test]
    fn q_derivative_is_minus_pdf() {
        for &x in &[-2.0, -0.3, 0.0, 0.7, 1.9, 3.5] {
            let h = 1e-5;
            let fd = (q(x + h) - q(x - h)) / (2.0 * h);
            let pdf = gaussian_pdf(x).unwrap();
            assert!((fd + pdf).abs() <= 1e-6 * pdf.max(1e-3), "x = {x}");
        }
    }

    #[test]
    fn root_tolerance_validation() {
        assert!(RootTolerance::new(0.0, 10).is_err());
        assert!(RootTolerance::new(1e-9, 0).is_err());
        let d = RootTolerance::default();
        assert_eq!((d.rel_x(), d.max_iter()), (1e-12, 200));
    }

    #[test]
    fn find_root_linear_and_sqrt2() {
        let tol = RootTolerance::default();
        let r = find_root(|x| x - 2.0, 0.0, 5.0, tol).unwrap();
        assert!((r - 2.0).abs() <= 1e-12 * 2.0);
        let r = find_root(|x| x * x - 2.0, 0.0, 2.0, tol).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() <= 2e-12);
    }

    #[test]
    fn find_root_gaussian_quartile() {
        // 0.6744897501960817 from the 50-digit tail oracle.
        let r = find_root(|x| q(x) - 0.25, 0.0, 5.0, RootTolerance::default()).unwrap();
        assert!((r - 0.6744897501960817).abs() <= 1e-12);
    }

    #[test]
    fn find_root_errors() {
        let tol = RootTolerance::default();
        assert!(matches!(
            find_root(|x| x * x + 1.0, -1.0, 1.0, tol),
            Err(Error::Bracketing { .. })
        ));
        assert!(matches!(find_root(|x| x, 1.0, -1.0, tol), Err(Error::Domain(_))));
        let tight = RootTolerance::new(1e-15, 3).unwrap();
        assert!(matches!(
            find_root(|x| x - 0.3, 0.0, 1.0, tight),
            Err(Error::Convergence { max_iter: 3 })
        ));
    }

    #[test]
    fn find_root_is_deterministic() {
        let tol = RootTolerance::default();
        let a = find_root(|x| x.powi(3) - 7.0, 0.0, 3.0, tol).unwrap();
        let b = find_root(|x| x.powi(3) - 7.0, 0.0, 3.0, tol).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn expand_bracket_examples() {
        let (lo, hi) = expand_bracket(|x| x - 10.0, 1.0).unwrap();
        assert!(lo <= 10.0 && 10.0 <= hi);

        let (lo, hi) = expand_bracket(f64::ln, 4.0).unwrap();
        assert!(lo <= 1.0 && 1.0 <= hi);

        let mut calls = 0;
        let (lo, hi) = expand_bracket_directed(
            |x| {
                calls += 1;
                x - 1e6
            },
            1.0,
            BracketSearch::Upward,
        )
        .unwrap();
        assert!(lo <= 1e6 && 1e6 <= hi);
        // one evaluation at the seed plus at most 21 doublings
        assert!(calls <= 22, "{calls} evaluations");
    }

    #[test]
    fn expand_bracket_gives_up() {
        assert!(matches!(expand_bracket(|_| 1.0, 1.0), Err(Error::Bracketing { .. })));
        assert!(expand_bracket(|x| x, -1.0).is_err());
    }

    #[test]
    fn directed_search_ignores_other_side() {
        // roots at 0.25 and 16; upward search from 1 must find 16
        let f = |x: f64| (x - 0.25) * (x - 16.0);
        let (lo, hi) = expand_bracket_directed(f, 1.0, BracketSearch::Upward).unwrap();
        assert!(lo <= 16.0 && 16.0 <= hi);
        let (lo, hi) = expand_bracket_directed(f, 1.0, BracketSearch::Downward).unwrap();
        assert!(lo <= 0.25 && 0.25 <= hi);
    }
}
