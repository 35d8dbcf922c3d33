use std::cell::{Cell, RefCell};
use std::f64::consts::PI;

use super::{check_alpha, KernelValue};
use crate::error::{Error, Result};
use crate::specialfn::{integrate_with_hints, QuadHints, QuadSpec};

const MAX_FOURIER_DIM: usize = 3;
const MAX_PANELS_PER_AXIS: i64 = 512;

/// `(-Δ)^α(z, 0)` as the Fourier coefficient of the symbol.
///
/// The symbol is even in every coordinate, so the integral over `[-π, π]^d`
/// reduces to `π^{-d} ∫_{[0,π]^d} σ(k) Π_j cos(z_j k_j) dk`, evaluated by nested
/// adaptive quadrature one axis at a time.
pub fn kernel_fourier(z: &[i64], alpha: f64, spec: &QuadSpec) -> Result<KernelValue> {
    check_alpha(alpha)?;
    if z.is_empty() || z.len() > MAX_FOURIER_DIM {
        return Err(Error::invalid(format!(
            "direct Fourier quadrature supports 1 <= d <= {MAX_FOURIER_DIM}, got d = {}",
            z.len()
        )));
    }
    spec.validate()?;
    let (value, error) = nested(z, 0.0, alpha, spec)?;
    Ok(KernelValue { value, error })
}

fn nested(z: &[i64], offset: f64, alpha: f64, spec: &QuadSpec) -> Result<(f64, f64)> {
    let Some((&zj, rest)) = z.split_first() else {
        return Ok((offset.powf(alpha), 0.0));
    };
    let freq = zj.unsigned_abs() as f64;
    let inner_spec = spec.with_abs_tol(spec.abs_tol / (4.0 * PI));
    let inner_err = Cell::new(0.0_f64);
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let integrand = |k: f64| {
        if failure.borrow().is_some() {
            return 0.0;
        }
        let s = (0.5 * k).sin();
        let shift = offset + 4.0 * s * s;
        match nested(rest, shift, alpha, &inner_spec) {
            Ok((v, e)) => {
                if e > inner_err.get() {
                    inner_err.set(e);
                }
                (freq * k).cos() * v / PI
            }
            Err(err) => {
                *failure.borrow_mut() = Some(err);
                0.0
            }
        }
    };
    let panels = zj.unsigned_abs().min(MAX_PANELS_PER_AXIS as u64) as usize;
    let breaks: Vec<f64> = (1..panels).map(|i| PI * i as f64 / panels as f64).collect();
    let hints = QuadHints {
        // σ ~ k^{2α} at the origin of the last axis when nothing shifts it
        lower_exponent: (rest.is_empty() && offset == 0.0).then_some(2.0 * alpha),
        breakpoints: &breaks,
        tail_bound: None,
    };
    let q = integrate_with_hints(integrand, 0.0, PI, spec, &hints);
    if let Some(err) = failure.into_inner() {
        return Err(err);
    }
    let q = q?;
    Ok((q.value, q.error + inner_err.get()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuadSpec {
        QuadSpec::new(1e-13, 1e-13, 4000, 1e40).unwrap()
    }

    #[test]
    fn laplacian_diagonal() {
        let v = kernel_fourier(&[0], 1.0, &spec()).unwrap();
        assert!((v.value - 2.0).abs() < 1e-13);
        let v = kernel_fourier(&[1, 0], 1.0, &spec()).unwrap();
        assert!((v.value + 1.0).abs() < 1e-13);
        let v = kernel_fourier(&[1, 1], 1.0, &spec()).unwrap();
        assert!(v.value.abs() < 1e-13);
    }

    #[test]
    fn half_power_closed_form() {
        let expected = [4.0 / PI, -4.0 / (3.0 * PI), -4.0 / (15.0 * PI)];
        for (n, e) in expected.iter().enumerate() {
            let v = kernel_fourier(&[n as i64], 0.5, &spec()).unwrap();
            assert!((v.value - e).abs() < 1e-10 * e.abs(), "n = {n}: {} vs {e}", v.value);
        }
    }

    #[test]
    fn rejects_high_dimension() {
        assert!(kernel_fourier(&[0, 0, 0, 0], 0.5, &spec()).is_err());
        assert!(kernel_fourier(&[1], 1.5, &spec()).is_err());
    }
}
