//! Monte Carlo estimates of the integrated density of states.
//!
//! Every realization is an independent task; per-realization results are
//! collected in realization order and reduced sequentially, so curves are
//! bitwise independent of the thread count.

mod boundary;

pub use boundary::{boundary_scaling, boundary_sum, BoundaryScaling, BoundarySum};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::KernelTable;
use crate::lattice::{
    add_potential, centered_box, fractional_part, sample_disorder, BoundaryCondition, DisorderSpec, SiteSet, SymMatrix,
};
use crate::spectral::{eig_sym, eigenvalues_sym, EigDecomp};
use crate::stats::mean_stderr;

pub const DEFAULT_INNER_FRACTION: f64 = 0.5;

/// The box `Λ_L = [-L, L]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Geometry {
    pub dim: usize,
    #[serde(rename = "L")]
    pub l: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdsCurve {
    pub energies: Vec<f64>,
    pub n_hat: Vec<f64>,
    pub stderr: Vec<f64>,
    pub realizations: usize,
    pub geometry: Geometry,
    pub bc: BoundaryCondition,
    pub alpha: f64,
    pub coupling: f64,
    pub seed: u64,
}

impl IdsCurve {
    fn from_samples(
        energies: &[f64],
        per_realization: &[Vec<f64>],
        geometry: Geometry,
        bc: BoundaryCondition,
        alpha: f64,
        disorder: &DisorderSpec,
    ) -> Self {
        let mut n_hat = Vec::with_capacity(energies.len());
        let mut stderr = Vec::with_capacity(energies.len());
        let mut column = Vec::with_capacity(per_realization.len());
        for e in 0..energies.len() {
            column.clear();
            column.extend(per_realization.iter().map(|r| r[e]));
            let (m, s) = mean_stderr(&column);
            n_hat.push(m);
            stderr.push(s);
        }
        IdsCurve {
            energies: energies.to_vec(),
            n_hat,
            stderr,
            realizations: per_realization.len(),
            geometry,
            bc,
            alpha,
            coupling: disorder.coupling,
            seed: disorder.master_seed,
        }
    }

    /// `sup_E |self - other|` over the shared grid.
    pub fn sup_distance(&self, other: &IdsCurve) -> f64 {
        self.n_hat
            .iter()
            .zip(&other.n_hat)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn check_inputs(energies: &[f64], realizations: usize, disorder: &DisorderSpec) -> Result<()> {
    if realizations == 0 {
        return Err(Error::invalid("at least one realization is required"));
    }
    if energies.is_empty() {
        return Err(Error::invalid("energy grid is empty"));
    }
    if energies.iter().any(|e| !e.is_finite()) || energies.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("energies must be finite and strictly ascending"));
    }
    disorder.validate()
}

/// `#{j : λ_j <= E}` for ascending `eigs`.
pub fn count_below(eigs: &[f64], e: f64) -> usize {
    eigs.partition_point(|&x| x <= e)
}

struct Setup {
    set: SiteSet,
    kinetic: SymMatrix,
}

fn setup(geometry: Geometry, bc: BoundaryCondition, alpha: f64, kernel: Option<&KernelTable>) -> Result<Setup> {
    let set = centered_box(geometry.dim, geometry.l)?;
    let kinetic = fractional_part(&set, bc, alpha, kernel)?;
    Ok(Setup { set, kinetic })
}

fn hamiltonian(s: &Setup, disorder: &DisorderSpec, realization: u64) -> Result<SymMatrix> {
    let v = sample_disorder(disorder, &s.set, realization);
    add_potential(&s.kinetic, &v, disorder.coupling)
}

/// `N̂(E) = E[#{λ_j(H_L) <= E}] / |Λ_L|` with one eigensolve per realization.
pub fn ids_counting_estimate(
    geometry: Geometry,
    bc: BoundaryCondition,
    alpha: f64,
    disorder: &DisorderSpec,
    energies: &[f64],
    realizations: usize,
    kernel: Option<&KernelTable>,
) -> Result<IdsCurve> {
    check_inputs(energies, realizations, disorder)?;
    let s = setup(geometry, bc, alpha, kernel)?;
    let n = s.set.len() as f64;
    let samples: Vec<Vec<f64>> = (0..realizations as u64)
        .into_par_iter()
        .map(|r| {
            let eigs = eigenvalues_sym(&hamiltonian(&s, disorder, r)?)?;
            Ok(energies.iter().map(|&e| count_below(&eigs, e) as f64 / n).collect())
        })
        .collect::<Result<_>>()?;
    Ok(IdsCurve::from_samples(
        energies, &samples, geometry, bc, alpha, disorder,
    ))
}

fn inner_positions(set: &SiteSet, l: usize, inner_fraction: f64) -> Result<Vec<usize>> {
    if !(inner_fraction > 0.0 && inner_fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "inner fraction must lie in (0, 1], got {inner_fraction}"
        )));
    }
    let inner_l = (inner_fraction * l as f64).floor() as i64;
    Ok(set
        .sites()
        .enumerate()
        .filter(|(_, p)| p.iter().all(|c| c.abs() <= inner_l))
        .map(|(i, _)| i)
        .collect())
}

/// Average of `⟨δ_n, 1_{(-∞,E]}(H) δ_n⟩` over `n` in the inner window.
fn projection_values(e: &EigDecomp, inner: &[usize], energies: &[f64]) -> Vec<f64> {
    let n = e.eigenvalues.len();
    let mut prefix = vec![0.0; n + 1];
    for j in 0..n {
        let col = e.basis.column(j);
        let w: f64 = inner.iter().map(|&i| col[i] * col[i]).sum();
        prefix[j + 1] = prefix[j] + w;
    }
    let norm = inner.len() as f64;
    energies
        .iter()
        .map(|&en| (prefix[count_below(&e.eigenvalues, en)] / norm).clamp(0.0, 1.0))
        .collect()
}

/// Diagonal-projection estimator on the free-restricted box, averaged over
/// the sub-box `Λ_{⌊f L⌋}`.
pub fn ids_projection_estimate(
    geometry: Geometry,
    alpha: f64,
    disorder: &DisorderSpec,
    energies: &[f64],
    realizations: usize,
    kernel: Option<&KernelTable>,
    inner_fraction: f64,
) -> Result<IdsCurve> {
    check_inputs(energies, realizations, disorder)?;
    let s = setup(geometry, BoundaryCondition::Free, alpha, kernel)?;
    let inner = inner_positions(&s.set, geometry.l, inner_fraction)?;
    let samples: Vec<Vec<f64>> = (0..realizations as u64)
        .into_par_iter()
        .map(|r| {
            let e = eig_sym(&hamiltonian(&s, disorder, r)?)?;
            Ok(projection_values(&e, &inner, energies))
        })
        .collect::<Result<_>>()?;
    Ok(IdsCurve::from_samples(
        energies,
        &samples,
        geometry,
        BoundaryCondition::Free,
        alpha,
        disorder,
    ))
}

/// A realization and energy at which `count^D <= count^mid <= count^N` fails.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichViolation {
    pub realization: u64,
    pub energy: f64,
    pub dirichlet: usize,
    pub middle: usize,
    pub neumann: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sandwich {
    pub dirichlet: IdsCurve,
    pub middle: IdsCurve,
    pub neumann: IdsCurve,
    pub violations: Vec<SandwichViolation>,
}

/// Dirichlet, free and Neumann counting estimates with the same potential per
/// realization, checking the integer sandwich at every energy.
pub fn sandwich(
    geometry: Geometry,
    alpha: f64,
    disorder: &DisorderSpec,
    energies: &[f64],
    realizations: usize,
    kernel: Option<&KernelTable>,
) -> Result<Sandwich> {
    check_inputs(energies, realizations, disorder)?;
    let bcs = [
        BoundaryCondition::Dirichlet,
        BoundaryCondition::Free,
        BoundaryCondition::Neumann,
    ];
    let setups: Vec<Setup> = bcs
        .iter()
        .map(|&bc| setup(geometry, bc, alpha, kernel))
        .collect::<Result<_>>()?;
    let n = setups[0].set.len() as f64;
    type Counts = [Vec<usize>; 3];
    let counts: Vec<Counts> = (0..realizations as u64)
        .into_par_iter()
        .map(|r| {
            let v = sample_disorder(disorder, &setups[0].set, r);
            let mut out: Counts = Default::default();
            for (k, s) in setups.iter().enumerate() {
                let eigs = eigenvalues_sym(&add_potential(&s.kinetic, &v, disorder.coupling)?)?;
                out[k] = energies.iter().map(|&e| count_below(&eigs, e)).collect();
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut violations = Vec::new();
    for (r, c) in counts.iter().enumerate() {
        for (e, &energy) in energies.iter().enumerate() {
            let (d, m, nn) = (c[0][e], c[1][e], c[2][e]);
            if !(d <= m && m <= nn) {
                violations.push(SandwichViolation {
                    realization: r as u64,
                    energy,
                    dirichlet: d,
                    middle: m,
                    neumann: nn,
                });
            }
        }
    }
    let curve = |k: usize| {
        let samples: Vec<Vec<f64>> = counts
            .iter()
            .map(|c| c[k].iter().map(|&x| x as f64 / n).collect())
            .collect();
        IdsCurve::from_samples(energies, &samples, geometry, bcs[k], alpha, disorder)
    };
    Ok(Sandwich {
        dirichlet: curve(0),
        middle: curve(1),
        neumann: curve(2),
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorGap {
    pub ls: Vec<usize>,
    /// `sup_E |N̂_count - N̂_proj|` per box size.
    pub gaps: Vec<f64>,
    pub slack: f64,
    /// `gaps[i+1] <= slack · gaps[i]` for every consecutive pair.
    pub decreasing: bool,
}

pub const GAP_SLACK: f64 = 1.2;

/// Counting versus projection estimator on the free-restricted boxes `Λ_L`,
/// both taken from the same eigendecomposition of each realization.
#[allow(clippy::too_many_arguments)]
pub fn estimator_gap(
    dim: usize,
    alpha: f64,
    disorder: &DisorderSpec,
    energies: &[f64],
    realizations: usize,
    kernel: Option<&KernelTable>,
    ls: &[usize],
    inner_fraction: f64,
) -> Result<EstimatorGap> {
    if ls.len() < 2 || ls.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(
            "estimator gap needs at least two strictly ascending box sizes",
        ));
    }
    check_inputs(energies, realizations, disorder)?;
    let mut gaps = Vec::with_capacity(ls.len());
    for &l in ls {
        let geometry = Geometry { dim, l };
        let s = setup(geometry, BoundaryCondition::Free, alpha, kernel)?;
        let inner = inner_positions(&s.set, l, inner_fraction)?;
        let n = s.set.len() as f64;
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..realizations as u64)
            .into_par_iter()
            .map(|r| {
                let e = eig_sym(&hamiltonian(&s, disorder, r)?)?;
                let counting = energies
                    .iter()
                    .map(|&en| count_below(&e.eigenvalues, en) as f64 / n)
                    .collect();
                Ok((counting, projection_values(&e, &inner, energies)))
            })
            .collect::<Result<_>>()?;
        let (c, p): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let bc = BoundaryCondition::Free;
        let counting = IdsCurve::from_samples(energies, &c, geometry, bc, alpha, disorder);
        let projection = IdsCurve::from_samples(energies, &p, geometry, bc, alpha, disorder);
        gaps.push(counting.sup_distance(&projection));
    }
    let decreasing = gaps.windows(2).all(|w| w[1] <= GAP_SLACK * w[0]);
    Ok(EstimatorGap {
        ls: ls.to_vec(),
        gaps,
        slack: GAP_SLACK,
        decreasing,
    })
}

/// `(1/π) arccos(1 - E/2)`, the IDS of `-Δ` on `Z`.
pub fn free_ids_1d(e: f64) -> f64 {
    if e <= 0.0 {
        0.0
    } else if e >= 4.0 {
        1.0
    } else {
        (1.0 - 0.5 * e).acos() / std::f64::consts::PI
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{kernel_table, KernelMethod};
    use crate::lattice::DisorderFamily;
    use crate::specialfn::QuadSpec;

    fn uniform(coupling: f64, seed: u64) -> DisorderSpec {
        DisorderSpec::new(DisorderFamily::Uniform01, coupling, seed).unwrap()
    }

    #[test]
    fn free_laplacian_matches_exact_ids() {
        let energies: Vec<f64> = (1..40).map(|i| i as f64 * 0.1).collect();
        let c = ids_counting_estimate(
            Geometry { dim: 1, l: 100 },
            BoundaryCondition::Free,
            1.0,
            &uniform(0.0, 1),
            &energies,
            1,
            None,
        )
        .unwrap();
        for (e, n) in energies.iter().zip(&c.n_hat) {
            assert!((n - free_ids_1d(*e)).abs() < 0.02, "E = {e}");
        }
        let mid = energies.iter().position(|&e| (e - 2.0).abs() < 1e-12).unwrap();
        assert!((c.n_hat[mid] - 0.5).abs() < 0.02);
    }

    #[test]
    fn extremes_and_monotonicity() {
        let energies = [-1.0, 0.5, 1.0, 2.0, 100.0];
        let c = ids_counting_estimate(
            Geometry { dim: 2, l: 2 },
            BoundaryCondition::Dirichlet,
            0.5,
            &uniform(1.0, 3),
            &energies,
            4,
            None,
        )
        .unwrap();
        assert_eq!(c.n_hat[0], 0.0);
        assert_eq!(c.n_hat[4], 1.0);
        assert!(c.n_hat.windows(2).all(|w| w[0] <= w[1]));
        assert!(ids_counting_estimate(
            Geometry { dim: 1, l: 1 },
            BoundaryCondition::Free,
            1.0,
            &uniform(1.0, 3),
            &[1.0, 0.5],
            1,
            None
        )
        .is_err());
    }

    #[test]
    fn one_site_projection_is_a_step() {
        let t = kernel_table(1, 0.5, 1, KernelMethod::Fourier, &QuadSpec::default()).unwrap();
        let k0 = t.get(&[0]).unwrap();
        let c = ids_projection_estimate(
            Geometry { dim: 1, l: 0 },
            0.5,
            &uniform(0.0, 0),
            &[k0 - 1e-9, k0, 10.0],
            1,
            Some(&t),
            1.0,
        )
        .unwrap();
        assert_eq!(c.n_hat, vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn three_site_sandwich_counts() {
        let s = sandwich(
            Geometry { dim: 1, l: 1 },
            1.0,
            &uniform(0.0, 0),
            &[-1.0, 1.5, 1e9],
            1,
            None,
        )
        .unwrap();
        assert!(s.violations.is_empty());
        let counts = |c: &IdsCurve| c.n_hat.iter().map(|x| (x * 3.0).round() as usize).collect::<Vec<_>>();
        assert_eq!(counts(&s.dirichlet), vec![0, 1, 3]);
        assert_eq!(counts(&s.middle), vec![0, 1, 3]);
        assert_eq!(counts(&s.neumann), vec![0, 2, 3]);
    }

    #[test]
    fn full_window_projection_equals_counting() {
        let t = kernel_table(1, 0.5, 20, KernelMethod::Fourier, &QuadSpec::default()).unwrap();
        let energies: Vec<f64> = (0..30).map(|i| 0.1 * i as f64).collect();
        let g = estimator_gap(1, 0.5, &uniform(1.0, 5), &energies, 3, Some(&t), &[5, 10], 1.0).unwrap();
        for gap in g.gaps {
            assert!(gap < 1e-12, "gap {gap}");
        }
        assert!(estimator_gap(1, 0.5, &uniform(1.0, 5), &energies, 3, Some(&t), &[5], 1.0).is_err());
    }

    #[test]
    fn thread_count_does_not_change_curves() {
        let energies = [0.2, 0.5, 1.0, 2.0];
        let run = || {
            ids_counting_estimate(
                Geometry { dim: 2, l: 3 },
                BoundaryCondition::Neumann,
                0.5,
                &uniform(1.0, 11),
                &energies,
                16,
                None,
            )
            .unwrap()
        };
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(run);
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(run);
        assert_eq!(one, four);
    }

    #[test]
    fn coupling_never_raises_counts() {
        let energies: Vec<f64> = (0..20).map(|i| 0.15 * i as f64).collect();
        let g = Geometry { dim: 1, l: 6 };
        let lo = ids_counting_estimate(
            g,
            BoundaryCondition::Neumann,
            0.75,
            &uniform(0.5, 8),
            &energies,
            5,
            None,
        )
        .unwrap();
        let hi = ids_counting_estimate(
            g,
            BoundaryCondition::Neumann,
            0.75,
            &uniform(2.0, 8),
            &energies,
            5,
            None,
        )
        .unwrap();
        for (a, b) in lo.n_hat.iter().zip(&hi.n_hat) {
            assert!(b <= a);
        }
    }
}
