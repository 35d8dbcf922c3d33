//! Modified Bessel functions of the first kind, integer order.
//!
//! The scaled value `e^{-s} I_k(s)` is the primitive: the power series (all
//! terms positive, renormalised to avoid overflow) is used for
//! `s <= max(30, k^2)`, the Hankel asymptotic expansion beyond that, where it
//! converges to well below double precision before its terms start growing.

use super::gamma::ln_factorial;
use crate::error::{Error, Result};

const SERIES_MIN_CUTOFF: f64 = 30.0;
const LN_RESCALE: f64 = 575.646_273_248_511_4; // 250 ln 10

fn series_cutoff(k: u32) -> f64 {
    let kf = k as f64;
    SERIES_MIN_CUTOFF.max(kf * kf)
}

fn scaled_series(k: u32, s: f64) -> f64 {
    let kf = k as f64;
    let half = 0.5 * s;
    let q = half * half;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut log_scale = 0.0;
    let mut j = 0.0_f64;
    loop {
        j += 1.0;
        let denom = j * (kf + j);
        term *= q / denom;
        sum += term;
        if sum > 1e250 {
            sum *= 1e-250;
            term *= 1e-250;
            log_scale += LN_RESCALE;
        }
        if denom > q && term <= 1e-17 * sum {
            break;
        }
    }
    let ln_prefactor = kf * half.ln() - ln_factorial(k) - s + log_scale;
    (ln_prefactor + sum.ln()).exp()
}

fn scaled_hankel(k: u32, s: f64) -> f64 {
    let mu = 4.0 * (k as f64) * (k as f64);
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut j = 0.0_f64;
    loop {
        j += 1.0;
        let odd = 2.0 * j - 1.0;
        let next = -term * (mu - odd * odd) / (8.0 * j * s);
        if next.abs() >= term.abs() && j > 1.0 {
            // asymptotic series started to diverge
            break;
        }
        sum += next;
        term = next;
        if term.abs() <= 1e-17 * sum.abs() || term == 0.0 {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * s).sqrt()
}

/// Exponentially scaled modified Bessel function `e^{-s} I_k(s)` for `s >= 0`.
///
/// Finite for every finite `s`; never forms `e^s`.
pub fn bessel_i_scaled(k: u32, s: f64) -> f64 {
    debug_assert!(s >= 0.0, "bessel_i_scaled needs s >= 0, got {s}");
    if s == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if s <= series_cutoff(k) {
        scaled_series(k, s)
    } else {
        scaled_hankel(k, s)
    }
}

/// Modified Bessel function `I_k(s)`.
///
/// Returns [`Error::Overflow`] once `I_k(s)` leaves the f64 range; use
/// [`bessel_i_scaled`] there.
pub fn bessel_i(k: u32, s: f64) -> Result<f64> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::invalid(format!("bessel_i needs finite s >= 0, got {s}")));
    }
    let scaled = bessel_i_scaled(k, s);
    if scaled == 0.0 {
        return Ok(0.0);
    }
    let ln_value = scaled.ln() + s;
    if ln_value >= f64::MAX.ln() {
        return Err(Error::Overflow {
            what: "bessel_i",
            arg: s,
        });
    }
    Ok(ln_value.exp())
}

/// Lattice heat kernel `e^{tΔ₁}(k, 0) = e^{-2t} I_{|k|}(2t)` on `Z`.
pub fn heat_kernel_1d(k: i64, t: f64) -> f64 {
    bessel_i_scaled(k.unsigned_abs() as u32, 2.0 * t)
}

/// `ln(e^{-2t} I_0(2t))`, accurate to relative precision for small `t`.
pub(crate) fn ln_heat_kernel_origin(t: f64) -> f64 {
    if t < 0.5 {
        // ln(e^{-2t} I_0(2t)) = -2t + ln(1 + Σ_{j≥1} t^{2j}/(j!)^2)
        let q = t * t;
        let mut term = 1.0;
        let mut tail = 0.0;
        let mut j = 0.0;
        loop {
            j += 1.0;
            term *= q / (j * j);
            tail += term;
            if term <= 1e-18 * tail {
                break;
            }
        }
        -2.0 * t + tail.ln_1p()
    } else {
        heat_kernel_1d(0, t).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // e^{-s} I_k(s) = (1/π) ∫_0^π e^{s (cos θ - 1)} cos(kθ) dθ; the periodic
    // trapezoid rule converges geometrically.
    fn trapezoid_oracle(k: u32, s: f64) -> f64 {
        let n = 20_000;
        let h = std::f64::consts::PI / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let th = i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc += w * (s * (th.cos() - 1.0)).exp() * (k as f64 * th).cos();
        }
        acc * h / std::f64::consts::PI
    }

    fn power_series_oracle(k: u32, s: f64) -> f64 {
        let mut acc = 0.0;
        for j in 0..40u32 {
            let mut t = (s / 2.0).powi((k + 2 * j) as i32);
            for i in 1..=j {
                t /= i as f64;
            }
            for i in 1..=(k + j) {
                t /= i as f64;
            }
            acc += t;
        }
        acc
    }

    #[test]
    fn values_at_zero() {
        assert_eq!(bessel_i(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_i(3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn i1_at_two() {
        let v = bessel_i(1, 2.0).unwrap();
        let oracle = power_series_oracle(1, 2.0);
        assert!((oracle - 1.590_636_854_637_329).abs() < 1e-14);
        assert!((v - oracle).abs() < 1e-14 * oracle);
    }

    #[test]
    fn matches_trapezoid_oracle() {
        for &k in &[0u32, 1, 2, 5, 9, 17, 40] {
            for &s in &[0.01, 0.7, 3.0, 12.0, 29.0, 31.0, 60.0, 150.0, 200.0] {
                let v = bessel_i_scaled(k, s);
                let o = trapezoid_oracle(k, s);
                if o < 1e-280 {
                    continue;
                }
                let rel = (v - o).abs() / o;
                // the oracle loses relative accuracy when the value is tiny
                let tol = 1e-12_f64.max(2e-15 / o);
                assert!(rel < tol, "k={k} s={s}: {v:e} vs {o:e} (rel {rel:e})");
            }
        }
    }

    #[test]
    fn branch_switch_is_continuous() {
        for k in 0..12u32 {
            let c = series_cutoff(k);
            let below = scaled_series(k, c);
            let above = scaled_hankel(k, c);
            assert!((below - above).abs() < 1e-13 * below, "k = {k}");
        }
    }

    #[test]
    fn overflow_is_signalled() {
        assert!(bessel_i(0, 700.0).is_ok());
        assert!(matches!(bessel_i(0, 800.0), Err(Error::Overflow { .. })));
        assert!(bessel_i_scaled(0, 800.0).is_finite());
    }

    #[test]
    fn heat_kernel_huge_time_is_finite() {
        let v = heat_kernel_1d(3, 1e6);
        assert!(v > 0.0 && v < 1.0);
        let approx = 1.0 / (4.0 * std::f64::consts::PI * 1e6).sqrt();
        assert!((v - approx).abs() < 1e-5 * approx);
    }

    #[test]
    fn heat_kernel_is_stochastic() {
        let sum: f64 = (-40..=40).map(|k| heat_kernel_1d(k, 1.0)).sum();
        assert!((sum - 1.0).abs() < 1e-12, "sum = {sum}");
    }

    #[test]
    fn log_origin_small_t_agrees() {
        for &t in &[1e-9, 1e-4, 0.1, 0.49, 0.51, 3.0] {
            let a = ln_heat_kernel_origin(t);
            let b = heat_kernel_1d(0, t).ln();
            assert!((a - b).abs() < 1e-14 * (1.0 + b.abs()), "t = {t}");
        }
    }
}
