//! Closed-form asymptotics and probability bounds.
//!
//! Logarithms are natural throughout. Factorials and Gamma values are
//! handled in log space so sums over path lengths up to `n - 1` never
//! overflow.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("t = {t} must satisfy 0 < t < k^2 = {k2}")]
    TOutOfRange { t: f64, k2: f64 },
    #[error("{0}")]
    InvalidParameter(String),
}

/// Which Gamma exponent to use in the general-exponent length asymptotic.
///
/// The two published forms, `Gamma(1/g + 1)^2` and `Gamma(1/g + 1)^(2g)`,
/// agree only at `g = 1`; both are exposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Theorem2Variant {
    Gamma2,
    Gamma2Gamma,
}

impl Theorem2Variant {
    pub const ALL: [Self; 2] = [Self::Gamma2, Self::Gamma2Gamma];

    pub fn name(self) -> &'static str {
        match self {
            Self::Gamma2 => "gamma2",
            Self::Gamma2Gamma => "gamma2gamma",
        }
    }

    fn exponent(self, gamma: f64) -> f64 {
        match self {
            Self::Gamma2 => 2.0,
            Self::Gamma2Gamma => 2.0 * gamma,
        }
    }
}

impl std::str::FromStr for Theorem2Variant {
    type Err = TheoryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gamma2" => Ok(Self::Gamma2),
            "gamma2gamma" => Ok(Self::Gamma2Gamma),
            _ => Err(TheoryError::InvalidParameter(format!(
                "unknown variant {s:?} (expected gamma2 or gamma2gamma)"
            ))),
        }
    }
}

/// `ln(e^a + e^b)` without overflow.
#[inline]
fn ln_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

#[inline]
fn ln2(n: u64) -> f64 {
    let l = (n as f64).ln();
    l * l
}

/// `ln Gamma(1/g + 1)`.
#[inline]
fn ln_gamma_recip(gamma: f64) -> f64 {
    ln_gamma(1.0 / gamma + 1.0)
}

/// `L_n ~ ln^2 n / (4 c0 n)` for uniform weights.
pub fn theorem1_ln(n: u64, c0: f64) -> f64 {
    ln2(n) / (4.0 * c0 * n as f64)
}

/// `H_n ~ ln n / 2`.
pub fn theorem1_hn(n: u64) -> f64 {
    (n as f64).ln() / 2.0
}

/// `L_n ~ g ln^2 n / (4 Gamma(1/g + 1)^e c0 n^g)`, `e` chosen by `variant`.
pub fn theorem2_ln(n: u64, c0: f64, gamma: f64, variant: Theorem2Variant) -> f64 {
    let gamma_factor = (variant.exponent(gamma) * ln_gamma_recip(gamma)).exp();
    gamma * ln2(n) / (4.0 * gamma_factor * c0 * (n as f64).powf(gamma))
}

/// `H_n ~ g ln n / 2`.
pub fn theorem2_hn(n: u64, gamma: f64) -> f64 {
    gamma * (n as f64).ln() / 2.0
}

/// Budget window `[ln^2 n / (sqrt(2) n), 1 / (2 sqrt(2))]`.
pub fn c0_window(n: u64) -> (f64, f64) {
    (
        ln2(n) / (std::f64::consts::SQRT_2 * n as f64),
        1.0 / (2.0 * std::f64::consts::SQRT_2),
    )
}

/// Closed-form dual multiplier `ln^2 n / (4 c0^2 n)`.
pub fn lambda_star(n: u64, c0: f64) -> f64 {
    ln2(n) / (4.0 * c0 * c0 * n as f64)
}

/// `ln^2 n / (4 c0^2 Gamma(1/g + 1)^(2g) n^g)`.
pub fn lambda_star_gamma(n: u64, c0: f64, gamma: f64) -> f64 {
    let gamma_factor = (2.0 * gamma * ln_gamma_recip(gamma)).exp();
    ln2(n) / (4.0 * c0 * c0 * gamma_factor * (n as f64).powf(gamma))
}

fn check_t(k: u32, t: f64) -> Result<f64, TheoryError> {
    let k2 = (k as f64) * (k as f64);
    if k >= 1 && t > 0.0 && t < k2 {
        Ok(k2)
    } else {
        Err(TheoryError::TOutOfRange { t, k2 })
    }
}

/// Upper bound on `P(ST <= t)` for independent `S, T` each a sum of `k`
/// uniforms: `(t^k / k!^2) (k ln(k^2/t) + 2 k!/k^k)`.
pub fn st_product_bound(k: u32, t: f64) -> Result<f64, TheoryError> {
    let k2 = check_t(k, t)?;
    let kf = k as f64;
    let ln_fact = ln_gamma(kf + 1.0);
    let ln_bracket = ln_add_exp((kf * (k2 / t).ln()).ln(), LN_2 + ln_fact - kf * kf.ln());
    Ok((kf * t.ln() - 2.0 * ln_fact + ln_bracket).exp())
}

/// Analogue of [`st_product_bound`] for sums of `U^g`:
/// `t^(k/g) G1^(2k) / Gk^2 * ((k/g) ln(k^2/t) + 2 Gk / (k^k G1^k))` with
/// `G1 = Gamma(1/g + 1)`, `Gk = Gamma(k/g + 1)`.
pub fn st_product_bound_gamma(k: u32, t: f64, gamma: f64) -> Result<f64, TheoryError> {
    let k2 = check_t(k, t)?;
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(TheoryError::InvalidParameter(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    let kf = k as f64;
    let ln_g1 = ln_gamma_recip(gamma);
    let ln_gk = ln_gamma(kf / gamma + 1.0);
    let ln_bracket = ln_add_exp(
        ((kf / gamma) * (k2 / t).ln()).ln(),
        LN_2 + ln_gk - kf * kf.ln() - kf * ln_g1,
    );
    Ok(((kf / gamma) * t.ln() + 2.0 * kf * ln_g1 - 2.0 * ln_gk + ln_bracket).exp())
}

/// `u^(k/g) Gamma(1/g + 1)^k / Gamma(k/g + 1)`, the volume of
/// `{x >= 0 : sum x_i^g <= u}`; bounds `P(sum U_i^g <= u)`.
pub fn simplex_volume_bound(k: u32, gamma: f64, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    let kf = k as f64;
    ((kf / gamma) * u.ln() + kf * ln_gamma_recip(gamma) - ln_gamma(kf / gamma + 1.0)).exp()
}

/// `(1 - 1/sqrt(ln n))^2 / 4`, the largest product constant the
/// first-moment count can afford.
pub fn beta_of_n(n: u64) -> f64 {
    let r = 1.0 - 1.0 / (n as f64).ln().sqrt();
    0.25 * r * r
}

/// Natural log of the length-`l` term of the expected count of paths with
/// `w(P) c(P) <= beta ln^2 n / n`.
pub fn ln_first_moment_summand(n: u64, beta: f64, l: u64) -> f64 {
    let nf = n as f64;
    let lf = l as f64;
    let t = beta * ln2(n) / nf;
    let ln_fact = ln_gamma(lf + 1.0);
    let ln_bracket = ln_add_exp((lf * (lf * lf / t).ln()).ln(), LN_2 + ln_fact - lf * lf.ln());
    (lf - 1.0) * nf.ln() - 2.0 * ln_fact + lf * t.ln() + ln_bracket
}

/// `n^(l-1) (1/l!^2) (beta ln^2 n / n)^l (l ln(l^2 n/(beta ln^2 n)) + 2 l!/l^l)`.
pub fn first_moment_summand(n: u64, beta: f64, l: u64) -> f64 {
    ln_first_moment_summand(n, beta, l).exp()
}

/// Terms below this contribute nothing to any reported digit.
pub const SUMMAND_FLOOR: f64 = 1e-300;

/// Sum of [`first_moment_summand`] over `l = 1..n-1`.
///
/// The terms are unimodal in `l`; summation stops once they have passed
/// their peak and fallen below [`SUMMAND_FLOOR`].
pub fn expected_pbeta(n: u64, beta: f64) -> f64 {
    let ln_floor = SUMMAND_FLOOR.ln();
    let mut sum = 0.0;
    let mut prev = f64::NEG_INFINITY;
    for l in 1..n {
        let ln_u = ln_first_moment_summand(n, beta, l);
        if ln_u >= ln_floor {
            sum += ln_u.exp();
        } else if ln_u < prev {
            break;
        }
        prev = ln_u;
    }
    sum
}

/// `1 / Gamma(1 + 1/s)^s`, the centering constant of the shortest
/// `xi^s`-weighted path.
pub fn bh_constant(s: f64) -> f64 {
    (-s * ln_gamma(1.0 + 1.0 / s)).exp()
}

/// Every closed form for one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticPrediction {
    pub n: u64,
    pub c0: f64,
    pub gamma: f64,
    pub variant: Theorem2Variant,
    pub l_pred: f64,
    pub h_pred: f64,
    pub lambda_star: f64,
    pub c0_lo: f64,
    pub c0_hi: f64,
}

pub fn predict(n: u64, c0: f64, gamma: f64, variant: Theorem2Variant) -> AsymptoticPrediction {
    let (c0_lo, c0_hi) = c0_window(n);
    AsymptoticPrediction {
        n,
        c0,
        gamma,
        variant,
        l_pred: theorem2_ln(n, c0, gamma, variant),
        h_pred: theorem2_hn(n, gamma),
        lambda_star: lambda_star_gamma(n, c0, gamma),
        c0_lo,
        c0_hi,
    }
}
