use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Largest total grid size `M^d` attempted before giving up.
pub(crate) const MAX_GRID_POINTS: usize = 1 << 22;

/// Initial grid size: `max(64, 16 R)` rounded up to a power of two.
pub(crate) fn initial_grid(radius: usize) -> usize {
    (16 * radius).max(64).next_power_of_two()
}

/// Values of `(-Δ)^α(z, 0)` for `|z|_∞ <= radius`, row-major over `z`, from
/// the inverse DFT of the symbol sampled on an `M^d` grid. `M` is doubled
/// until the table changes by at most `abs_tol`.
///
/// Returns the table, the last observed change and the final `M`.
pub(crate) fn dft_values(dim: usize, alpha: f64, radius: usize, abs_tol: f64) -> Result<(Vec<f64>, f64, usize)> {
    let mut m = initial_grid(radius);
    let mut prev: Option<Vec<f64>> = None;
    loop {
        let points = m.checked_pow(dim as u32).filter(|&p| p <= MAX_GRID_POINTS);
        let Some(points) = points else {
            return Err(Error::AliasingNonConvergence {
                grid: m,
                change: f64::INFINITY,
            });
        };
        let current = grid_table(dim, alpha, radius, m, points);
        if let Some(p) = &prev {
            let change = p.iter().zip(&current).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if change <= abs_tol {
                return Ok((current, change, m));
            }
            let next = m * 2;
            if next.checked_pow(dim as u32).is_none_or(|p| p > MAX_GRID_POINTS) {
                return Err(Error::AliasingNonConvergence { grid: m, change });
            }
        }
        prev = Some(current);
        m *= 2;
    }
}

fn grid_table(dim: usize, alpha: f64, radius: usize, m: usize, points: usize) -> Vec<f64> {
    // 2 - 2cos(2πj/M) per grid index, computed as 4 sin^2(πj/M)
    let axis: Vec<f64> = (0..m)
        .map(|j| {
            let s = (PI * j as f64 / m as f64).sin();
            4.0 * s * s
        })
        .collect();
    let mut data: Vec<Complex<f64>> = Vec::with_capacity(points);
    let mut idx = vec![0usize; dim];
    for _ in 0..points {
        let sum: f64 = idx.iter().map(|&j| axis[j]).sum();
        data.push(Complex::new(sum.powf(alpha), 0.0));
        increment(&mut idx, m);
    }

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);
    let mut line = vec![Complex::new(0.0, 0.0); m];
    // axis `a` has stride m^(dim-1-a) in row-major order
    for a in 0..dim {
        let stride = m.pow((dim - 1 - a) as u32);
        let block = stride * m;
        for start in (0..points).step_by(block) {
            for off in 0..stride {
                let base = start + off;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + j * stride];
                }
                fft.process(&mut line);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }

    let scale = 1.0 / points as f64;
    let side = 2 * radius + 1;
    let count = side.pow(dim as u32);
    let mut out = Vec::with_capacity(count);
    let mut z = vec![0usize; dim];
    for _ in 0..count {
        let mut flat = 0usize;
        for &c in &z {
            let zi = c as i64 - radius as i64;
            flat = flat * m + zi.rem_euclid(m as i64) as usize;
        }
        out.push(data[flat].re * scale);
        increment(&mut z, side);
    }
    out
}

fn increment(idx: &mut [usize], base: usize) {
    for slot in idx.iter_mut().rev() {
        *slot += 1;
        if *slot < base {
            return;
        }
        *slot = 0;
    }
}
