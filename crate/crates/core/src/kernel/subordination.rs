use std::f64::consts::PI;

use super::{check_alpha, KernelValue};
use crate::error::{Error, Result};
use crate::specialfn::{
    gamma_abs, heat_kernel_1d, integrate_with_hints, ln_factorial, ln_heat_kernel_origin, QuadHints, QuadSpec,
};

// Spacing of forced breakpoints in u = ln t.
const U_PANEL: f64 = 4.0;

/// `(-Δ)^α(z, 0)` from the heat-semigroup subordination integral
/// `(1/|Γ(-α)|) ∫_0^∞ t^{-1-α} (δ_{z,0} - e^{tΔ}(z, 0)) dt`,
/// with `e^{tΔ}(z, 0)` the product of one-dimensional Bessel heat kernels.
pub fn kernel_subordination(z: &[i64], alpha: f64, spec: &QuadSpec) -> Result<KernelValue> {
    check_alpha(alpha)?;
    if alpha >= 1.0 {
        return Err(Error::invalid("subordination needs alpha strictly below 1"));
    }
    subordinated(z, alpha, spec)
}

/// Same integral with a free exponent `β ∈ (0, 1)`; it represents `(-Δ)^β`.
pub(crate) fn subordinated(z: &[i64], beta: f64, spec: &QuadSpec) -> Result<KernelValue> {
    if z.is_empty() {
        return Err(Error::invalid("displacement must have at least one coordinate"));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid(format!(
            "subordination exponent must lie in (0,1), got {beta}"
        )));
    }
    spec.validate()?;
    let d = z.len() as f64;
    let norm = gamma_abs(-beta)?;
    let budget = spec.abs_tol * norm;
    let trunc = budget / 10.0;
    let orders: Vec<u32> = z
        .iter()
        .map(|c| u32::try_from(c.unsigned_abs()).map_err(|_| Error::invalid("displacement too large")))
        .collect::<Result<_>>()?;
    let m: f64 = orders.iter().map(|&k| k as f64).sum();
    let origin = m == 0.0;

    let product = |t: f64| orders.iter().map(|&k| heat_kernel_1d(k as i64, t)).product::<f64>();

    // Small-t cutoff: e^{-2t} I_k(2t) <= t^k / k!, and 1 - Π <= 2 d t.
    let ln_eps = if origin {
        (trunc * (1.0 - beta) / (2.0 * d)).ln() / (1.0 - beta)
    } else {
        let ln_fact: f64 = orders.iter().map(|&k| ln_factorial(k)).sum();
        ((trunc * (m - beta)).ln() + ln_fact) / (m - beta)
    }
    .min(0.0);

    // Large-t cutoff: e^{-2t} I_k(2t) <= 1.1 / sqrt(4πt) for t >= 1.
    let p = beta + 0.5 * d;
    let bound = (1.1 / (4.0 * PI).sqrt()).powf(d);
    let ln_big_t = (((trunc * p) / bound).ln() / -p).max(0.0);

    let head = |u: f64| {
        let t = u.exp();
        let w = (-beta * u).exp();
        if origin {
            w * -(d * ln_heat_kernel_origin(t)).exp_m1()
        } else {
            w * product(t)
        }
    };
    let tail = |u: f64| (-beta * u).exp() * product(u.exp());

    let q_head = integrate_panels(head, ln_eps, 0.0, spec, budget / 2.5)?;
    let q_tail = integrate_panels(tail, 0.0, ln_big_t, spec, budget / 2.5)?;
    let integral = if origin {
        q_head.0 + 1.0 / beta - q_tail.0
    } else {
        -(q_head.0 + q_tail.0)
    };
    Ok(KernelValue {
        value: integral / norm,
        error: (q_head.1 + q_tail.1 + 2.0 * trunc) / norm,
    })
}

fn integrate_panels<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadSpec, abs_tol: f64) -> Result<(f64, f64)> {
    if b <= a {
        return Ok((0.0, 0.0));
    }
    let n = ((b - a) / U_PANEL).ceil() as usize;
    let step = (b - a) / n as f64;
    let breaks: Vec<f64> = (1..n).map(|i| a + step * i as f64).collect();
    let hints = QuadHints {
        lower_exponent: None,
        breakpoints: &breaks,
        tail_bound: None,
    };
    let q = integrate_with_hints(f, a, b, &spec.with_abs_tol(abs_tol), &hints)?;
    Ok((q.value, q.error))
}
