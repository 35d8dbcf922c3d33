//! Symmetric eigendecomposition, functional calculus, Temple's bound and the
//! Dirichlet-Neumann bracketing certifier.

mod bracketing;

pub use bracketing::{check_bracketing, BracketingReport, InequalityMargin};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::lattice::SymMatrix;

/// Negative eigenvalues down to `-PSD_CLAMP` are rounding noise of a PSD matrix.
pub const PSD_CLAMP: f64 = 1e-8;
/// Eigenvalues below `ZERO_EIGENVALUE · max(1, λ_max)` are set to zero before
/// a fractional power; `(1e-16)^α` would otherwise inflate noise to `~1e-5`.
pub const ZERO_EIGENVALUE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct EigDecomp {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `j` is the eigenvector of `eigenvalues[j]`.
    pub basis: DMatrix<f64>,
    /// `max_j ‖A v_j - λ_j v_j‖₂`.
    pub residual: f64,
}

impl EigDecomp {
    /// `max |VᵀV - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.basis.transpose() * &self.basis;
        let mut worst = 0.0_f64;
        for ((i, j), v) in g.iter().enumerate().map(|(k, v)| ((k % g.nrows(), k / g.nrows()), v)) {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
        worst
    }

    /// `U f(Λ) Uᵀ`, symmetrized.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let mut scaled = self.basis.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            let fl = f(l);
            scaled.column_mut(j).scale_mut(fl);
        }
        SymMatrix::symmetrized(&(scaled * self.basis.transpose()))
    }
}

fn iteration_cap(n: usize) -> usize {
    100 * n + 1000
}

/// Full eigendecomposition with eigenvalues in ascending order.
pub fn eig_sym(a: &SymMatrix) -> Result<EigDecomp> {
    let n = a.n();
    if n == 0 {
        return Ok(EigDecomp {
            eigenvalues: Vec::new(),
            basis: DMatrix::zeros(0, 0),
            residual: 0.0,
        });
    }
    let eig = SymmetricEigen::try_new(a.as_matrix().clone(), f64::EPSILON, iteration_cap(n))
        .ok_or(Error::EigenNonConvergence { n })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let basis = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    let av = a.as_matrix() * &basis;
    let mut residual = 0.0_f64;
    for (j, &l) in eigenvalues.iter().enumerate() {
        let r = (av.column(j) - basis.column(j) * l).norm();
        residual = residual.max(r);
    }
    Ok(EigDecomp {
        eigenvalues,
        basis,
        residual,
    })
}

/// Ascending eigenvalues only.
pub fn eigenvalues_sym(a: &SymMatrix) -> Result<Vec<f64>> {
    let n = a.n();
    if n == 0 {
        return Ok(Vec::new());
    }
    // `symmetric_eigenvalues` has no iteration cap; go through try_new without
    // vectors instead.
    let eig = SymmetricEigen::try_new(a.as_matrix().clone(), f64::EPSILON, iteration_cap(n))
        .ok_or(Error::EigenNonConvergence { n })?;
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Smallest eigenvalue.
pub fn min_eigenvalue(a: &SymMatrix) -> Result<f64> {
    Ok(eigenvalues_sym(a)?.first().copied().unwrap_or(f64::INFINITY))
}

/// `A^α` for positive semidefinite `A` via the spectral theorem.
///
/// Eigenvalues in `[-1e-8, 0)` are clamped to zero; anything lower is an
/// error. Eigenvalues within `1e-12 · max(1, λ_max)` of zero are treated as
/// exact zeros. At `α = 1` the input is returned unchanged.
pub fn matrix_power(a: &SymMatrix, alpha: f64) -> Result<SymMatrix> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!(
            "matrix power needs alpha in (0, 1], got {alpha}"
        )));
    }
    if alpha == 1.0 {
        return Ok(a.clone());
    }
    let e = eig_sym(a)?;
    power_from_decomposition(&e, alpha)
}

pub fn power_from_decomposition(e: &EigDecomp, alpha: f64) -> Result<SymMatrix> {
    if let Some(&min) = e.eigenvalues.first() {
        if min < -PSD_CLAMP {
            return Err(Error::NotPositiveSemidefinite { min_eigenvalue: min });
        }
    }
    let top = e.eigenvalues.last().copied().unwrap_or(0.0).max(1.0);
    let zero = ZERO_EIGENVALUE * top;
    Ok(e.apply(|l| if l <= zero { 0.0 } else { l.powf(alpha) }))
}

/// Temple's lower bound `ρ - (‖Aψ‖² - ρ²) / (E1 - ρ)` with `ρ = ⟨ψ, Aψ⟩`.
///
/// `ψ` must be a unit vector and `E1` a certified lower bound on the second
/// eigenvalue with `ρ < E1`.
pub fn temple_bound(a: &SymMatrix, psi: &[f64], e1: f64) -> Result<f64> {
    if psi.len() != a.n() {
        return Err(Error::invalid("trial vector length does not match the matrix"));
    }
    let norm2: f64 = psi.iter().map(|x| x * x).sum();
    if (norm2 - 1.0).abs() > 1e-10 {
        return Err(Error::invalid(format!(
            "trial vector is not normalised (|psi|^2 = {norm2})"
        )));
    }
    let a_psi = a.mul_vec(psi);
    let rho: f64 = psi.iter().zip(&a_psi).map(|(x, y)| x * y).sum();
    if !(rho < e1) {
        return Err(Error::TemplePrecondition { rayleigh: rho, e1 });
    }
    // ‖(A - ρ)ψ‖² equals the variance and is non-negative by construction
    let variance: f64 = a_psi.iter().zip(psi).map(|(y, x)| (y - rho * x).powi(2)).sum();
    Ok(rho - variance / (e1 - rho))
}

/// `min eig((A + P)^α - A^α)`; non-negative up to rounding for PSD `A`, `P`.
pub fn check_operator_monotone(a: &SymMatrix, p: &SymMatrix, alpha: f64) -> Result<f64> {
    if a.n() != p.n() {
        return Err(Error::invalid("operator sizes differ"));
    }
    let upper = matrix_power(&a.add(p), alpha)?;
    let lower = matrix_power(a, alpha)?;
    min_eigenvalue(&upper.sub(&lower))
}
