use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `ln|Γ(x)|` together with the sign of `Γ(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogGamma {
    pub ln_abs: f64,
    /// `+1.0` or `-1.0`.
    pub sign: f64,
}

impl LogGamma {
    pub fn value(&self) -> f64 {
        self.sign * self.ln_abs.exp()
    }
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

// Bernoulli-number coefficients B_{2k} / (2k (2k-1)) of the Stirling series.
const STIRLING: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
];

const STIRLING_MIN: f64 = 15.0;

fn ln_gamma_stirling(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut corr = 0.0;
    let mut pow = inv;
    for c in STIRLING {
        corr += c * pow;
        pow *= inv2;
    }
    (x - 0.5) * x.ln() - x + LN_SQRT_2PI + corr
}

/// `ln Γ(x)` for `x > 0`.
fn ln_gamma_positive(x: f64) -> f64 {
    if x == x.floor() && x <= 21.0 {
        // exact factorial for small integers: (x-1)! fits in 2^53 up to 20!
        let mut acc = 1.0_f64;
        let mut i = 2.0;
        while i < x {
            acc *= i;
            i += 1.0;
        }
        return acc.ln();
    }
    if x >= STIRLING_MIN {
        return ln_gamma_stirling(x);
    }
    let mut shifted = x;
    let mut prod = 1.0;
    while shifted < STIRLING_MIN {
        prod *= shifted;
        shifted += 1.0;
    }
    ln_gamma_stirling(shifted) - prod.ln()
}

/// `sin(πx)` with exact argument reduction.
pub(crate) fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (0.5 * x).round();
    // r in [-1, 1]
    if r > 0.5 {
        (PI * (1.0 - r)).sin()
    } else if r < -0.5 {
        -(PI * (1.0 + r)).sin()
    } else {
        (PI * r).sin()
    }
}

/// Logarithm of the absolute value of the gamma function and its sign.
///
/// Uses the Stirling series for `x >= 15`, upward recurrence below that, and
/// the reflection formula for `x <= 0`. Non-positive integers are poles.
pub fn log_gamma(x: f64) -> Result<LogGamma> {
    if !x.is_finite() {
        return Err(Error::invalid(format!("log_gamma of non-finite {x}")));
    }
    if x > 0.0 {
        return Ok(LogGamma {
            ln_abs: ln_gamma_positive(x),
            sign: 1.0,
        });
    }
    if x == x.floor() {
        return Err(Error::GammaPole(x));
    }
    let s = sin_pi(x);
    Ok(LogGamma {
        ln_abs: PI.ln() - s.abs().ln() - ln_gamma_positive(1.0 - x),
        sign: s.signum(),
    })
}

/// `|Γ(x)|`, convenience wrapper used for normalisation constants.
pub fn gamma_abs(x: f64) -> Result<f64> {
    log_gamma(x).map(|g| g.ln_abs.exp())
}

pub(crate) fn ln_factorial(k: u32) -> f64 {
    ln_gamma_positive(k as f64 + 1.0)
}
