//! Lifshitz-tail exponent estimation and the Temple lower-bound chain.

mod temple;

pub use temple::{temple_experiment, TempleContext, TempleReport};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ids::{ids_counting_estimate, Geometry};
use crate::kernel::KernelTable;
use crate::lattice::{BoundaryCondition, DisorderSpec};
use crate::stats::{fit_line, LineFit};

pub const L_MIN: usize = 4;
/// Largest box handed to the dense eigensolver by default.
pub const MAX_EIGEN_SITES: usize = 2000;
pub const MIN_FIT_POINTS: usize = 4;
pub const DEFAULT_N_MIN: f64 = 1e-6;
pub const N_MAX: f64 = 0.5;

/// Largest `L` with `(2L+1)^d <= MAX_EIGEN_SITES`.
pub fn default_l_max(dim: usize) -> usize {
    let side = (MAX_EIGEN_SITES as f64).powf(1.0 / dim as f64).floor() as usize;
    side.saturating_sub(1) / 2
}

/// `(slope, intercept, slope_stderr)` of an ordinary least-squares line.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<LineFit> {
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            usable: points.len(),
            values: points.to_vec(),
        });
    }
    fit_line(points)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    pub energy: f64,
    #[serde(rename = "L")]
    pub l: usize,
    pub n_hat: f64,
    pub stderr: f64,
    /// `L(E)` hit `L_max`.
    pub saturated: bool,
    pub used: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifshitzFit {
    /// `(ln E, ln|ln N̂(E)|)` for the points used in the fit.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// `exp(intercept)`, so that `N̂(E) ≈ exp(-gamma_hat E^{slope})`.
    pub gamma_hat: f64,
    /// `-d/(2α)`.
    pub target: f64,
    pub beta: f64,
    pub scan: Vec<ScanPoint>,
    pub excluded_points: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct TailScan<'a> {
    pub dim: usize,
    pub alpha: f64,
    pub disorder: DisorderSpec,
    /// Descending.
    pub energies: Vec<f64>,
    pub beta: f64,
    pub realizations: usize,
    pub bc: BoundaryCondition,
    pub kernel: Option<&'a KernelTable>,
    pub l_min: usize,
    pub l_max: usize,
    /// Lower end of the admissible `N̂` window; the upper end is 1/2.
    pub n_min: f64,
    pub include_saturated: bool,
}

impl<'a> TailScan<'a> {
    pub fn new(
        dim: usize,
        alpha: f64,
        disorder: DisorderSpec,
        energies: Vec<f64>,
        beta: f64,
        realizations: usize,
    ) -> Self {
        TailScan {
            dim,
            alpha,
            disorder,
            energies,
            beta,
            realizations,
            bc: BoundaryCondition::Neumann,
            kernel: None,
            l_min: L_MIN,
            l_max: default_l_max(dim),
            n_min: DEFAULT_N_MIN,
            include_saturated: false,
        }
    }

    /// `max(L_min, ⌊β E^{-1/(2α)}⌋)`, capped at `L_max`; the flag reports the cap.
    pub fn length_scale(&self, e: f64) -> (usize, bool) {
        let raw = (self.beta * e.powf(-0.5 / self.alpha)).floor();
        let l = if raw.is_finite() {
            raw.max(self.l_min as f64)
        } else {
            f64::INFINITY
        };
        if l > self.l_max as f64 {
            (self.l_max, true)
        } else {
            (l as usize, false)
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid("beta must be positive"));
        }
        if self.energies.is_empty() || self.energies.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::invalid("tail energies must be positive and finite"));
        }
        if self.energies.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::invalid("tail energies must be strictly descending"));
        }
        if self.l_min > self.l_max {
            return Err(Error::invalid("L_min exceeds L_max"));
        }
        if !(self.n_min > 0.0 && self.n_min < N_MAX) {
            return Err(Error::invalid("n_min must lie in (0, 1/2)"));
        }
        Ok(())
    }

    fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !self.disorder.satisfies_regularity() {
            w.push("disorder lacks the P([0,e)) >= C e regularity; the fitted slope bounds the exponent from one side only".into());
        }
        w.push("tolerances on the fitted slope are empirical calibration, not finite-E error bars".into());
        w
    }

    /// Runs the counting estimator at `L(E)` for every energy and fits the
    /// double-log slope.
    pub fn run(&self) -> Result<LifshitzFit> {
        self.validate()?;
        let mut scan: Vec<ScanPoint> = self
            .energies
            .iter()
            .map(|&e| {
                let (l, saturated) = self.length_scale(e);
                ScanPoint {
                    energy: e,
                    l,
                    n_hat: f64::NAN,
                    stderr: f64::NAN,
                    saturated,
                    used: false,
                }
            })
            .collect();
        let mut ls: Vec<usize> = scan.iter().map(|p| p.l).collect();
        ls.sort_unstable();
        ls.dedup();
        for l in ls {
            let idx: Vec<usize> = (0..scan.len()).rev().filter(|&i| scan[i].l == l).collect();
            let energies: Vec<f64> = idx.iter().map(|&i| scan[i].energy).collect();
            let curve = ids_counting_estimate(
                Geometry { dim: self.dim, l },
                self.bc,
                self.alpha,
                &self.disorder,
                &energies,
                self.realizations,
                self.kernel,
            )?;
            for (k, &i) in idx.iter().enumerate() {
                scan[i].n_hat = curve.n_hat[k];
                scan[i].stderr = curve.stderr[k];
            }
        }
        finish(
            scan,
            self.n_min,
            self.include_saturated,
            -(self.dim as f64) / (2.0 * self.alpha),
            self.beta,
            self.warnings(),
        )
    }
}

fn finish(
    mut scan: Vec<ScanPoint>,
    n_min: f64,
    include_saturated: bool,
    target: f64,
    beta: f64,
    warnings: Vec<String>,
) -> Result<LifshitzFit> {
    let mut points = Vec::new();
    for p in scan.iter_mut() {
        p.used = p.n_hat > n_min && p.n_hat < N_MAX && (include_saturated || !p.saturated);
        if p.used {
            points.push((p.energy.ln(), p.n_hat.ln().abs().ln()));
        }
    }
    let excluded_points = scan.len() - points.len();
    let fit = fit_exponent(&points).map_err(|e| match e {
        Error::TooFewPoints { usable, .. } => Error::TooFewPoints {
            usable,
            values: scan.iter().map(|p| (p.energy, p.n_hat)).collect(),
        },
        other => other,
    })?;
    Ok(LifshitzFit {
        points,
        slope: fit.slope,
        intercept: fit.intercept,
        slope_stderr: fit.slope_stderr,
        gamma_hat: fit.intercept.exp(),
        target,
        beta,
        scan,
        excluded_points,
        warnings,
    })
}

/// Fits a closed-form `N(E)` in place of the simulation.
pub fn fit_synthetic(
    energies: &[f64],
    n: impl Fn(f64) -> f64,
    n_min: f64,
    target: f64,
    beta: f64,
) -> Result<LifshitzFit> {
    let scan = energies
        .iter()
        .map(|&e| ScanPoint {
            energy: e,
            l: 0,
            n_hat: n(e),
            stderr: 0.0,
            saturated: false,
            used: false,
        })
        .collect();
    finish(
        scan,
        n_min,
        false,
        target,
        beta,
        vec!["synthetic N(E); no simulation".into()],
    )
}

/// Geometric grid from `from` to `to` (either order) with `points` entries.
pub fn geometric_grid(from: f64, to: f64, points: usize) -> Result<Vec<f64>> {
    if !(from > 0.0 && to > 0.0 && from.is_finite() && to.is_finite()) || points < 2 {
        return Err(Error::invalid(
            "geometric grid needs positive finite ends and at least two points",
        ));
    }
    let (a, b) = (from.ln(), to.ln());
    Ok((0..points)
        .map(|i| {
            if i == points - 1 {
                to
            } else if i == 0 {
                from
            } else {
                (a + (b - a) * i as f64 / (points - 1) as f64).exp()
            }
        })
        .collect())
}
