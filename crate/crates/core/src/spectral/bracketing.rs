use serde::Serialize;

use super::{eigenvalues_sym, min_eigenvalue};
use crate::error::{Error, Result};
use crate::kernel::KernelTable;
use crate::lattice::{fractional_part, BoundaryCondition, SiteSet, SymMatrix};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityMargin {
    /// `"lower <= upper"` in operator notation.
    pub name: &'static str,
    /// `min eig(upper - lower)`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketingReport {
    pub inequalities: Vec<InequalityMargin>,
    /// Smallest `E_j(upper) - E_j(lower)` along
    /// `N-split <= N <= free <= D <= D-split`.
    pub eigen_ordering_margin: f64,
    pub tol: f64,
    pub passed: bool,
}

impl BracketingReport {
    pub fn worst_margin(&self) -> f64 {
        self.inequalities
            .iter()
            .map(|m| m.margin)
            .fold(self.eigen_ordering_margin, f64::min)
    }
}

/// `(-Δ^X_{Λ1})^α ⊕ (-Δ^X_{Λ2∖Λ1})^α` laid out in the site order of `Λ2`.
fn split_operator(
    inner: &SiteSet,
    outer: &SiteSet,
    ring: &SiteSet,
    bc: BoundaryCondition,
    alpha: f64,
) -> Result<SymMatrix> {
    let mut m = SymMatrix::zeros(outer.len());
    for part in [inner, ring] {
        if part.is_empty() {
            continue;
        }
        let block = fractional_part(part, bc, alpha, None)?;
        let positions: Vec<usize> = part
            .sites()
            .map(|p| outer.index_of(p).expect("part of the outer set"))
            .collect();
        m.embed(&block, &positions);
    }
    Ok(m)
}

/// Certifies the Dirichlet-Neumann bracketing chains for `Λ1 = inner ⊂ Λ2 = outer`:
///
/// `1_{Λ2}(-Δ)^α 1_{Λ2} <= (-Δ^D_{Λ2})^α <= (-Δ^D_{Λ1})^α ⊕ (-Δ^D_{Λ2∖Λ1})^α` and
/// `1_{Λ2}(-Δ)^α 1_{Λ2} >= (-Δ^N_{Λ2})^α >= (-Δ^N_{Λ1})^α ⊕ (-Δ^N_{Λ2∖Λ1})^α`.
///
/// All three ordered pairs of each chain are checked as quadratic forms, plus
/// the elementwise eigenvalue ordering along the combined five-term chain.
pub fn check_bracketing(
    inner: &SiteSet,
    outer: &SiteSet,
    alpha: f64,
    kernel: Option<&KernelTable>,
    tol: f64,
) -> Result<BracketingReport> {
    if inner.is_empty() || !inner.is_subset_of(outer) || inner.len() == outer.len() {
        return Err(Error::invalid(
            "bracketing needs a non-empty inner set strictly inside the outer set",
        ));
    }
    let ring = outer.difference(inner)?;
    let free = fractional_part(outer, BoundaryCondition::Free, alpha, kernel)?;
    let dir = fractional_part(outer, BoundaryCondition::Dirichlet, alpha, None)?;
    let neu = fractional_part(outer, BoundaryCondition::Neumann, alpha, None)?;
    let dir_split = split_operator(inner, outer, &ring, BoundaryCondition::Dirichlet, alpha)?;
    let neu_split = split_operator(inner, outer, &ring, BoundaryCondition::Neumann, alpha)?;

    let pairs: [(&'static str, &SymMatrix, &SymMatrix); 6] = [
        ("free <= D", &free, &dir),
        ("D <= D-split", &dir, &dir_split),
        ("free <= D-split", &free, &dir_split),
        ("N <= free", &neu, &free),
        ("N-split <= N", &neu_split, &neu),
        ("N-split <= free", &neu_split, &free),
    ];
    let mut inequalities = Vec::with_capacity(6);
    for (name, lower, upper) in pairs {
        inequalities.push(InequalityMargin {
            name,
            margin: min_eigenvalue(&upper.sub(lower))?,
        });
    }

    let chain = [&neu_split, &neu, &free, &dir, &dir_split];
    let spectra: Vec<Vec<f64>> = chain.iter().map(|m| eigenvalues_sym(m)).collect::<Result<_>>()?;
    let mut eigen_ordering_margin = f64::INFINITY;
    for w in spectra.windows(2) {
        for (lo, hi) in w[0].iter().zip(&w[1]) {
            eigen_ordering_margin = eigen_ordering_margin.min(hi - lo);
        }
    }
    let passed = inequalities.iter().all(|m| m.margin >= -tol) && eigen_ordering_margin >= -tol;
    Ok(BracketingReport {
        inequalities,
        eigen_ordering_margin,
        tol,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{kernel_table, KernelMethod};
    use crate::lattice::centered_box;
    use crate::specialfn::QuadSpec;

    #[test]
    fn three_site_path_spectra() {
        let outer = centered_box(1, 1).unwrap();
        let s2 = 2f64.sqrt();
        let neu = [0.0, 1.0, 3.0];
        let free = [2.0 - s2, 2.0, 2.0 + s2];
        let dir = [1.0, 3.0, 4.0];
        for alpha in [1.0, 0.5] {
            let table = kernel_table(1, alpha, 2, KernelMethod::Fourier, &QuadSpec::default()).unwrap();
            let spectra: Vec<Vec<f64>> = [
                BoundaryCondition::Neumann,
                BoundaryCondition::Free,
                BoundaryCondition::Dirichlet,
            ]
            .iter()
            .map(|&bc| eigenvalues_sym(&fractional_part(&outer, bc, alpha, Some(&table)).unwrap()).unwrap())
            .collect();
            // the restricted infinite-volume kernel is not a power of the
            // restricted Laplacian, so the middle spectrum is exact only at α = 1
            let exact_sides: Vec<(usize, &[f64; 3])> = if alpha == 1.0 {
                vec![(0, &neu), (1, &free), (2, &dir)]
            } else {
                vec![(0, &neu), (2, &dir)]
            };
            for (k, exact) in exact_sides {
                for (got, e) in spectra[k].iter().zip(exact) {
                    assert!(
                        (got - e.powf(alpha)).abs() < 1e-10,
                        "α={alpha} k={k}: {got} vs {}",
                        e.powf(alpha)
                    );
                }
            }
            for ((a, b), c) in spectra[0].iter().zip(&spectra[1]).zip(&spectra[2]) {
                assert!(a <= b && b <= c);
            }
        }
    }

    #[test]
    fn square_minus_one_site() {
        let outer = centered_box(2, 2).unwrap();
        let pts: Vec<Vec<i64>> = outer.sites().filter(|p| *p != [2, -1]).map(<[i64]>::to_vec).collect();
        let inner = SiteSet::new(2, pts).unwrap();
        let table = kernel_table(2, 0.75, 4, KernelMethod::Subordination, &QuadSpec::default()).unwrap();
        let r = check_bracketing(&inner, &outer, 0.75, Some(&table), 1e-9).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.inequalities.len(), 6);
    }

    #[test]
    fn rejects_non_nested() {
        let a = centered_box(1, 1).unwrap();
        assert!(check_bracketing(&a, &a, 1.0, None, 1e-9).is_err());
    }
}
