use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{
    add_potential, centered_box, laplacian_restricted, sample_disorder, BoundaryCondition, DisorderSpec, SiteSet,
    SymMatrix,
};
use crate::spectral::{eig_sym, eigenvalues_sym, power_from_decomposition, temple_bound};

/// `(-Δ^N_L)^α` and `τ = E_1(-Δ^N_L)^α` for one box, shared across
/// realizations.
#[derive(Debug, Clone)]
pub struct TempleContext {
    pub dim: usize,
    pub l: usize,
    pub alpha: f64,
    pub tau: f64,
    set: SiteSet,
    kinetic: SymMatrix,
}

impl TempleContext {
    pub fn new(dim: usize, l: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        if l == 0 {
            return Err(Error::invalid("the Temple chain needs L >= 1 (a second eigenvalue)"));
        }
        let set = centered_box(dim, l)?;
        let lap = laplacian_restricted(&set, BoundaryCondition::Neumann);
        let e = eig_sym(&lap)?;
        let tau = e.eigenvalues[1].max(0.0).powf(alpha);
        let kinetic = if alpha == 1.0 {
            lap
        } else {
            power_from_decomposition(&e, alpha)?
        };
        Ok(TempleContext {
            dim,
            l,
            alpha,
            tau,
            set,
            kinetic,
        })
    }

    /// Runs checks (a)-(e) for one realization. The potential is `λ ω`.
    pub fn run(&self, disorder: &DisorderSpec, realization: u64) -> Result<TempleReport> {
        let n = self.set.len();
        let omega: Vec<f64> = sample_disorder(disorder, &self.set, realization)
            .into_iter()
            .map(|w| disorder.coupling * w)
            .collect();
        let cap = self.tau / 3.0;
        let truncated: Vec<f64> = omega.iter().map(|&w| w.min(cap)).collect();
        let h_trunc = add_potential(&self.kinetic, &truncated, 1.0)?;
        let h_full = add_potential(&self.kinetic, &omega, 1.0)?;

        let psi = vec![1.0 / (n as f64).sqrt(); n];
        let h_psi = h_trunc.mul_vec(&psi);
        let rayleigh: f64 = psi.iter().zip(&h_psi).map(|(a, b)| a * b).sum();
        let mean_trunc = truncated.iter().sum::<f64>() / n as f64;

        let eig_trunc = eigenvalues_sym(&h_trunc)?;
        let e0_full = eigenvalues_sym(&h_full)?[0];
        let (e0, e1) = (eig_trunc[0], eig_trunc[1]);
        let temple = temple_bound(&h_trunc, &psi, self.tau)?;

        let scale = 1.0 + self.tau + e1.abs();
        let tol = 1e-10 * scale;
        let margins = TempleMargins {
            a: cap - rayleigh,
            b: e1 - self.tau,
            c: e0 - temple,
            d: e0 - 0.5 * mean_trunc,
            e: e0_full - e0,
        };
        let passed = margins.all().iter().all(|&m| m >= -tol);
        Ok(TempleReport {
            dim: self.dim,
            l: self.l,
            alpha: self.alpha,
            realization,
            tau: self.tau,
            rayleigh,
            mean_truncated: mean_trunc,
            e0_truncated: e0,
            e1_truncated: e1,
            e0_full,
            temple_bound: temple,
            margins,
            tol,
            passed,
        })
    }
}

/// Each margin is `rhs - lhs` of the corresponding inequality; all must be
/// non-negative up to `tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TempleMargins {
    /// `⟨ψ, H̃ψ⟩ <= τ/3`.
    pub a: f64,
    /// `E_1(H̃) >= τ`.
    pub b: f64,
    /// `E_0(H̃) >=` Temple bound.
    pub c: f64,
    /// `E_0(H̃) >= mean(ω̃)/2`.
    pub d: f64,
    /// `E_0(H^N) >= E_0(H̃)`.
    pub e: f64,
}

impl TempleMargins {
    pub fn all(&self) -> [f64; 5] {
        [self.a, self.b, self.c, self.d, self.e]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TempleReport {
    pub dim: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub alpha: f64,
    pub realization: u64,
    pub tau: f64,
    pub rayleigh: f64,
    pub mean_truncated: f64,
    pub e0_truncated: f64,
    pub e1_truncated: f64,
    pub e0_full: f64,
    pub temple_bound: f64,
    pub margins: TempleMargins,
    pub tol: f64,
    pub passed: bool,
}

/// One-shot form of [`TempleContext::run`].
pub fn temple_experiment(
    dim: usize,
    l: usize,
    alpha: f64,
    disorder: &DisorderSpec,
    realization: u64,
) -> Result<TempleReport> {
    TempleContext::new(dim, l, alpha)?.run(disorder, realization)
}
