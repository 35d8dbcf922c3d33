use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::fit_line;

pub const MAX_BOUNDARY_L: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundarySum {
    pub dim: usize,
    pub alpha: f64,
    #[serde(rename = "L")]
    pub l: usize,
    /// Truncated double sum.
    pub value: f64,
    /// Upper bound on the omitted pairs with `|m|_∞` beyond the outer radius.
    pub tail_bound: f64,
}

fn outer_radius(l: usize) -> usize {
    // at L = 0 the nominal 3L would leave no outer sites at all
    (3 * l).max(1)
}

/// `S(L) = Σ_{k ∈ Λ_L} Σ_{m ∉ Λ_L, |m|_∞ <= 3L} |k - m|^{-(d+2α)}`.
///
/// Pairs are grouped by displacement `z = m - k`: the number of pairs with
/// a given `z` is `A(z) - B(z)`, where `A` counts `k ∈ Λ_L` with
/// `k + z ∈ Λ_{3L}` and `B` counts `k + z ∈ Λ_L`. Both factorise over
/// coordinates.
pub fn boundary_sum(dim: usize, alpha: f64, l: usize) -> Result<BoundarySum> {
    if !(1..=2).contains(&dim) {
        return Err(Error::invalid(format!(
            "boundary sum supports d in {{1, 2}}, got {dim}"
        )));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if l > MAX_BOUNDARY_L {
        return Err(Error::invalid(format!(
            "boundary sum supports L <= {MAX_BOUNDARY_L}, got {l}"
        )));
    }
    let li = l as i64;
    let ro = outer_radius(l) as i64;
    let reach = li + ro;
    let overlap = |z: i64, r: i64| -> i64 {
        // #{k ∈ [-L, L] : k + z ∈ [-r, r]}
        let lo = (-li).max(-r - z);
        let hi = li.min(r - z);
        (hi - lo + 1).max(0)
    };
    let a: Vec<i64> = (-reach..=reach).map(|z| overlap(z, ro)).collect();
    let b: Vec<i64> = (-reach..=reach).map(|z| overlap(z, li)).collect();
    let power = -(dim as f64 + 2.0 * alpha);
    let mut value = 0.0;
    let idx = |z: i64| (z + reach) as usize;
    match dim {
        1 => {
            for z in -reach..=reach {
                let c = a[idx(z)] - b[idx(z)];
                if c > 0 {
                    value += c as f64 * (z.abs() as f64).powf(power);
                }
            }
        }
        _ => {
            for z1 in -reach..=reach {
                for z2 in -reach..=reach {
                    let c = a[idx(z1)] * a[idx(z2)] - b[idx(z1)] * b[idx(z2)];
                    if c > 0 {
                        let r2 = (z1 * z1 + z2 * z2) as f64;
                        value += c as f64 * r2.powf(0.5 * power);
                    }
                }
            }
        }
    }
    // shells |w|_∞ = r hold at most 2d (2r+1)^{d-1} <= 2d 3^{d-1} r^{d-1} points,
    // and the omitted pairs have |w|_∞ >= ro - L + 1
    let d = dim as f64;
    let sites = (2.0 * l as f64 + 1.0).powf(d);
    let gap = (ro - li) as f64;
    let tail_bound = sites * 2.0 * d * 3f64.powf(d - 1.0) * gap.powf(-2.0 * alpha) / (2.0 * alpha);
    Ok(BoundarySum {
        dim,
        alpha,
        l,
        value,
        tail_bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryScaling {
    pub sums: Vec<BoundarySum>,
    /// `S(L)/|Λ_L|` strictly decreasing along the list.
    pub per_site_decreasing: bool,
    /// Least-squares slope of `ln S` against `ln L`.
    pub slope: f64,
    /// `d - min(2α, 1/2) + 0.15`.
    pub slope_bound: f64,
    pub passed: bool,
}

pub const SLOPE_SLACK: f64 = 0.15;

/// Growth check of the boundary sum over ascending box sizes.
pub fn boundary_scaling(dim: usize, alpha: f64, ls: &[usize]) -> Result<BoundaryScaling> {
    if ls.len() < 2 || ls.windows(2).any(|w| w[0] >= w[1]) || ls[0] == 0 {
        return Err(Error::invalid(
            "boundary scaling needs at least two ascending positive L values",
        ));
    }
    let sums: Vec<BoundarySum> = ls.iter().map(|&l| boundary_sum(dim, alpha, l)).collect::<Result<_>>()?;
    let per_site: Vec<f64> = sums
        .iter()
        .map(|s| s.value / (2.0 * s.l as f64 + 1.0).powi(dim as i32))
        .collect();
    let per_site_decreasing = per_site.windows(2).all(|w| w[1] < w[0]);
    let pts: Vec<(f64, f64)> = sums.iter().map(|s| ((s.l as f64).ln(), s.value.ln())).collect();
    let slope = fit_line(&pts)?.slope;
    let slope_bound = dim as f64 - (2.0 * alpha).min(0.5) + SLOPE_SLACK;
    Ok(BoundaryScaling {
        sums,
        per_site_decreasing,
        slope,
        slope_bound,
        passed: per_site_decreasing && slope <= slope_bound,
    })
}
