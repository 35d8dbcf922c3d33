//! Finite geometries, restricted Laplacians, disorder and Hamiltonian assembly.

mod disorder;
mod matrix;
mod sites;

pub use disorder::{sample_disorder, site_uniform, splitmix64, DisorderFamily, DisorderSpec};
pub use matrix::SymMatrix;
pub use sites::{centered_box, random_nested_pair, SiteSet, MAX_SITES};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelTable;
use crate::spectral::matrix_power;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Free,
    Neumann,
    Dirichlet,
}

impl BoundaryCondition {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryCondition::Free => "free",
            BoundaryCondition::Neumann => "neumann",
            BoundaryCondition::Dirichlet => "dirichlet",
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundaryCondition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free" => Ok(BoundaryCondition::Free),
            "neumann" => Ok(BoundaryCondition::Neumann),
            "dirichlet" => Ok(BoundaryCondition::Dirichlet),
            other => Err(Error::invalid(format!("unknown boundary condition {other:?}"))),
        }
    }
}

/// Restriction of `-Δ` to `set`.
///
/// Off-diagonal entries are `-1` between nearest neighbours inside the set.
/// With `b(n)` the number of neighbours of `n` outside the set, the diagonal
/// is `2d - b(n)` (Neumann), `2d` (Free) or `2d + b(n)` (Dirichlet).
pub fn laplacian_restricted(set: &SiteSet, bc: BoundaryCondition) -> SymMatrix {
    let d = set.dim();
    let mut m = SymMatrix::zeros(set.len());
    let mut neighbour = vec![0i64; d];
    for (i, site) in set.sites().enumerate() {
        let mut outside = 0i64;
        for axis in 0..d {
            for step in [-1, 1] {
                neighbour.copy_from_slice(site);
                neighbour[axis] += step;
                match set.index_of(&neighbour) {
                    Some(j) => m.set(i, j, -1.0),
                    None => outside += 1,
                }
            }
        }
        let base = 2 * d as i64;
        let diag = match bc {
            BoundaryCondition::Neumann => base - outside,
            BoundaryCondition::Free => base,
            BoundaryCondition::Dirichlet => base + outside,
        };
        m.set(i, i, diag as f64);
    }
    m
}

/// `1_Λ (-Δ)^α 1_Λ` read off a kernel table.
pub fn free_restriction(set: &SiteSet, kernel: &KernelTable) -> Result<SymMatrix> {
    if kernel.dim() != set.dim() {
        return Err(Error::invalid(format!(
            "kernel dimension {} does not match the site set dimension {}",
            kernel.dim(),
            set.dim()
        )));
    }
    let required = set.linf_diameter();
    if kernel.radius() < required {
        return Err(Error::InsufficientKernelRadius {
            radius: kernel.radius(),
            required,
        });
    }
    let n = set.len();
    let sites: Vec<&[i64]> = set.sites().collect();
    Ok(SymMatrix::from_fn(n, |i, j| {
        kernel
            .between(sites[i], sites[j])
            .expect("radius checked against diameter")
    }))
}

/// The fractional kinetic term on `set` under `bc`.
///
/// Free uses the kernel table (or the exact stencil at `α = 1` when no table
/// is given); Neumann and Dirichlet take the `α`-th power of the restricted
/// Laplacian.
pub fn fractional_part(
    set: &SiteSet,
    bc: BoundaryCondition,
    alpha: f64,
    kernel: Option<&KernelTable>,
) -> Result<SymMatrix> {
    crate::kernel::check_alpha(alpha)?;
    match bc {
        BoundaryCondition::Free => match kernel {
            Some(k) => {
                if k.alpha() != alpha {
                    return Err(Error::invalid(format!(
                        "kernel table is for alpha = {}, requested alpha = {alpha}",
                        k.alpha()
                    )));
                }
                free_restriction(set, k)
            }
            None if alpha == 1.0 => Ok(laplacian_restricted(set, BoundaryCondition::Free)),
            None => Err(Error::invalid(
                "free boundary condition needs a kernel table for alpha < 1",
            )),
        },
        _ => matrix_power(&laplacian_restricted(set, bc), alpha),
    }
}

/// `kinetic + λ diag(potential)`.
pub fn add_potential(kinetic: &SymMatrix, potential: &[f64], coupling: f64) -> Result<SymMatrix> {
    if potential.len() != kinetic.n() {
        return Err(Error::invalid(format!(
            "potential has {} entries for a {}-site operator",
            potential.len(),
            kinetic.n()
        )));
    }
    let mut h = kinetic.clone();
    for (i, &v) in potential.iter().enumerate() {
        h.add_to_diagonal(i, coupling * v);
    }
    Ok(h)
}

/// `H = (-Δ)^α_{Λ,bc} + λ V` on `set`.
pub fn assemble_hamiltonian(
    set: &SiteSet,
    bc: BoundaryCondition,
    alpha: f64,
    kernel: Option<&KernelTable>,
    potential: &[f64],
    coupling: f64,
) -> Result<SymMatrix> {
    let kinetic = fractional_part(set, bc, alpha, kernel)?;
    add_potential(&kinetic, potential, coupling)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::eig_sym;

    fn pair() -> SiteSet {
        SiteSet::new(1, vec![vec![0], vec![1]]).unwrap()
    }

    #[test]
    fn two_site_laplacians() {
        let cases = [
            (BoundaryCondition::Neumann, 1.0),
            (BoundaryCondition::Free, 2.0),
            (BoundaryCondition::Dirichlet, 3.0),
        ];
        for (bc, diag) in cases {
            let m = laplacian_restricted(&pair(), bc);
            assert_eq!(m.get(0, 0), diag);
            assert_eq!(m.get(1, 1), diag);
            assert_eq!(m.get(0, 1), -1.0);
            assert_eq!(m.get(1, 0), -1.0);
        }
    }

    #[test]
    fn neumann_annihilates_constants() {
        let set = centered_box(2, 3).unwrap();
        let m = laplacian_restricted(&set, BoundaryCondition::Neumann);
        for i in 0..m.n() {
            let row: f64 = (0..m.n()).map(|j| m.get(i, j)).sum();
            assert_eq!(row, 0.0);
        }
    }

    #[test]
    fn free_stencil_without_kernel() {
        let set = centered_box(1, 1).unwrap();
        let h = assemble_hamiltonian(&set, BoundaryCondition::Free, 1.0, None, &[0.0; 3], 0.0).unwrap();
        let expected = [[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]];
        for (i, row) in expected.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(h.get(i, j), v);
            }
        }
    }

    #[test]
    fn neumann_path_spectrum() {
        let set = centered_box(1, 1).unwrap();
        let h = assemble_hamiltonian(&set, BoundaryCondition::Neumann, 1.0, None, &[0.0; 3], 0.0).unwrap();
        let e = eig_sym(&h).unwrap().eigenvalues;
        for (a, b) in e.iter().zip([0.0, 1.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_potential_shifts_spectrum() {
        let set = centered_box(1, 2).unwrap();
        let k = fractional_part(&set, BoundaryCondition::Dirichlet, 0.5, None).unwrap();
        let h = add_potential(&k, &[1.0; 5], 5.0).unwrap();
        let a = eig_sym(&k).unwrap().eigenvalues;
        let b = eig_sym(&h).unwrap().eigenvalues;
        for (x, y) in a.iter().zip(&b) {
            assert!((y - x - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn free_needs_large_enough_kernel() {
        use crate::kernel::{kernel_table, KernelMethod};
        use crate::specialfn::QuadSpec;
        let t = kernel_table(1, 0.5, 2, KernelMethod::Fourier, &QuadSpec::default()).unwrap();
        let set = centered_box(1, 2).unwrap();
        let r = fractional_part(&set, BoundaryCondition::Free, 0.5, Some(&t));
        assert!(matches!(
            r,
            Err(Error::InsufficientKernelRadius { radius: 2, required: 4 })
        ));
        let small = centered_box(1, 1).unwrap();
        assert!(fractional_part(&small, BoundaryCondition::Free, 0.5, Some(&t)).is_ok());
        assert!(fractional_part(&small, BoundaryCondition::Free, 0.75, Some(&t)).is_err());
    }

    #[test]
    fn boundary_condition_parsing() {
        for bc in [
            BoundaryCondition::Free,
            BoundaryCondition::Neumann,
            BoundaryCondition::Dirichlet,
        ] {
            assert_eq!(bc.as_str().parse::<BoundaryCondition>().unwrap(), bc);
        }
        assert!("periodic".parse::<BoundaryCondition>().is_err());
    }
}
