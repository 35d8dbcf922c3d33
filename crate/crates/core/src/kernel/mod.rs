//! Matrix elements of the discrete fractional Laplacian `(-Δ)^α` on `Z^d`.
//!
//! Three independent evaluation routes are provided (Fourier quadrature,
//! heat-kernel subordination and an oversampled inverse DFT), plus memoized
//! tables, the off-diagonal decay profile and a plain-text cache format.

mod cache;
mod dft;
mod fourier;
mod subordination;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specialfn::{log_gamma, QuadSpec};

pub use cache::{cache_file_name, read_cache, write_cache, CACHE_MAGIC};
pub use fourier::kernel_fourier;
pub use subordination::kernel_subordination;

/// A quadrature-backed kernel value with its reported error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    pub error: f64,
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")))
    }
}

/// `(Σ_j (2 - 2cos k_j))^α`.
pub fn symbol(k: &[f64], alpha: f64) -> f64 {
    let sum: f64 = k
        .iter()
        .map(|&kj| {
            let s = (0.5 * kj).sin();
            4.0 * s * s
        })
        .sum();
    if alpha == 1.0 {
        sum
    } else {
        sum.powf(alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelMethod {
    Fourier,
    Subordination,
    #[serde(rename = "dft")]
    DftGrid,
}

impl KernelMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelMethod::Fourier => "fourier",
            KernelMethod::Subordination => "subordination",
            KernelMethod::DftGrid => "dft",
        }
    }

    /// Subordination is the cheapest route once `d >= 2`; Fourier otherwise.
    /// At `α = 1` every method takes the exact stencil path.
    pub fn default_for(dim: usize, alpha: f64) -> Self {
        if dim >= 2 && alpha < 1.0 {
            KernelMethod::Subordination
        } else {
            KernelMethod::Fourier
        }
    }
}

impl fmt::Display for KernelMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fourier" => Ok(KernelMethod::Fourier),
            "subordination" => Ok(KernelMethod::Subordination),
            "dft" => Ok(KernelMethod::DftGrid),
            other => Err(Error::invalid(format!("unknown kernel method {other:?}"))),
        }
    }
}

/// Immutable table of `(-Δ)^α(z, 0)` over `|z|_∞ <= radius`.
///
/// Values are stored densely in lexicographic order of `z`, first coordinate
/// slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    dim: usize,
    alpha: f64,
    radius: usize,
    method: KernelMethod,
    accuracy: f64,
    values: Vec<f64>,
}

/// Upper bound on stored entries, shared with the cache reader.
pub const MAX_TABLE_ENTRIES: usize = 10_000_000;

fn table_len(dim: usize, radius: usize) -> Option<usize> {
    let side = radius.checked_mul(2)?.checked_add(1)?;
    side.checked_pow(u32::try_from(dim).ok()?)
        .filter(|&n| n <= MAX_TABLE_ENTRIES)
}

/// First displacement whose value has the wrong sign.
#[derive(Debug, Clone, PartialEq)]
pub struct SignViolation {
    pub displacement: Vec<i64>,
    pub value: f64,
}

impl KernelTable {
    /// Assembles a table from raw values in lexicographic order.
    ///
    /// Only shape and finiteness are validated; sign and symmetry are left to
    /// [`KernelTable::check_signs`] and [`KernelTable::symmetry_defect`].
    pub fn from_values(
        dim: usize,
        alpha: f64,
        radius: usize,
        method: KernelMethod,
        accuracy: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if radius == 0 {
            return Err(Error::invalid("radius must be at least 1"));
        }
        check_alpha(alpha)?;
        let n = table_len(dim, radius).ok_or_else(|| Error::invalid("kernel table too large"))?;
        if values.len() != n {
            return Err(Error::invalid(format!(
                "expected {n} kernel values, got {}",
                values.len()
            )));
        }
        if !(accuracy >= 0.0 && accuracy.is_finite()) {
            return Err(Error::invalid(format!(
                "accuracy must be finite and >= 0, got {accuracy}"
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite kernel value {v}")));
        }
        Ok(KernelTable {
            dim,
            alpha,
            radius,
            method,
            accuracy,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn radius(&self) -> usize {
        self.radius
    }
    pub fn method(&self) -> KernelMethod {
        self.method
    }
    /// Claimed maximum absolute error of any entry.
    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn flat_index(&self, z: &[i64]) -> Option<usize> {
        if z.len() != self.dim {
            return None;
        }
        let r = self.radius as i64;
        let side = 2 * self.radius + 1;
        let mut flat = 0usize;
        for &c in z {
            if c < -r || c > r {
                return None;
            }
            flat = flat * side + (c + r) as usize;
        }
        Some(flat)
    }

    /// `(-Δ)^α(z, 0)`, or `None` outside the table.
    pub fn get(&self, z: &[i64]) -> Option<f64> {
        self.flat_index(z).map(|i| self.values[i])
    }

    /// All displacements in storage order.
    pub fn displacements(&self) -> Displacements {
        Displacements::new(self.dim, self.radius)
    }

    /// Kernel value between two lattice points.
    pub fn between(&self, n: &[i64], m: &[i64]) -> Option<f64> {
        let z: Vec<i64> = n.iter().zip(m).map(|(a, b)| a - b).collect();
        self.get(&z)
    }

    /// `values(0) > 0` and `values(z) < 0` off the origin (`<= 0` at `α = 1`,
    /// where the stencil has compact support).
    pub fn check_signs(&self) -> std::result::Result<(), SignViolation> {
        let strict = self.alpha < 1.0;
        for (z, &v) in self.displacements().zip(&self.values) {
            let origin = z.iter().all(|&c| c == 0);
            let ok = if origin {
                v > 0.0
            } else if strict {
                v < 0.0
            } else {
                v <= 0.0
            };
            if !ok {
                return Err(SignViolation {
                    displacement: z,
                    value: v,
                });
            }
        }
        Ok(())
    }

    /// Largest deviation between an entry and its orbit representative under
    /// coordinate permutations and sign flips, with the offending displacement.
    pub fn symmetry_defect(&self) -> (f64, Vec<i64>) {
        let mut worst = (0.0, vec![0; self.dim]);
        for (z, &v) in self.displacements().zip(&self.values) {
            let rep = orbit_representative(&z);
            let r = self.get(&rep).unwrap_or(v);
            let dev = (v - r).abs();
            if dev > worst.0 {
                worst = (dev, z);
            }
        }
        worst
    }

    /// `S(R) = Σ_{|z|_∞ <= R} values(z)` for `R <= radius`.
    pub fn row_sum(&self, r: usize) -> Option<f64> {
        if r > self.radius {
            return None;
        }
        let r = r as i64;
        Some(
            self.displacements()
                .zip(&self.values)
                .filter(|(z, _)| z.iter().all(|c| c.abs() <= r))
                .map(|(_, v)| v)
                .sum(),
        )
    }
}

/// Iterator over `{-R..R}^d` in lexicographic order.
#[derive(Debug, Clone)]
pub struct Displacements {
    radius: i64,
    next: Option<Vec<i64>>,
}

impl Displacements {
    pub fn new(dim: usize, radius: usize) -> Self {
        let r = radius as i64;
        Displacements {
            radius: r,
            next: Some(vec![-r; dim]),
        }
    }
}

impl Iterator for Displacements {
    type Item = Vec<i64>;
    fn next(&mut self) -> Option<Vec<i64>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut carried = true;
        for slot in succ.iter_mut().rev() {
            if *slot < self.radius {
                *slot += 1;
                carried = false;
                break;
            }
            *slot = -self.radius;
        }
        if !carried {
            self.next = Some(succ);
        }
        Some(current)
    }
}

/// Canonical member of the orbit of `z`: absolute values, sorted descending.
pub fn orbit_representative(z: &[i64]) -> Vec<i64> {
    let mut r: Vec<i64> = z.iter().map(|c| c.abs()).collect();
    r.sort_unstable_by(|a, b| b.cmp(a));
    r
}

fn representatives(dim: usize, radius: usize) -> Vec<Vec<i64>> {
    // non-increasing sequences in [0, R]^d, lexicographic
    fn rec(prefix: &mut Vec<i64>, dim: usize, cap: i64, out: &mut Vec<Vec<i64>>) {
        if prefix.len() == dim {
            out.push(prefix.clone());
            return;
        }
        for c in 0..=cap {
            prefix.push(c);
            rec(prefix, dim, c, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(dim), dim, radius as i64, &mut out);
    out
}

fn stencil_value(z: &[i64]) -> f64 {
    let l1: i64 = z.iter().map(|c| c.abs()).sum();
    match l1 {
        0 => 2.0 * z.len() as f64,
        1 => -1.0,
        _ => 0.0,
    }
}

/// Builds the kernel table over `|z|_∞ <= radius`.
///
/// Each symmetry orbit is evaluated once (in parallel, in a fixed order) and
/// replicated. At `α = 1` the exact nearest-neighbour stencil is used for
/// every method. For [`KernelMethod::DftGrid`] the whole table comes from one
/// transform and its symmetry is verified against `accuracy`.
pub fn kernel_table(
    dim: usize,
    alpha: f64,
    radius: usize,
    method: KernelMethod,
    spec: &QuadSpec,
) -> Result<KernelTable> {
    check_alpha(alpha)?;
    if dim == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if radius == 0 {
        return Err(Error::invalid("kernel radius must be at least 1"));
    }
    let n = table_len(dim, radius).ok_or_else(|| Error::invalid("kernel table too large"))?;
    spec.validate()?;

    if alpha == 1.0 {
        let values = Displacements::new(dim, radius).map(|z| stencil_value(&z)).collect();
        return KernelTable::from_values(dim, alpha, radius, method, 0.0, values);
    }

    if method == KernelMethod::DftGrid {
        let (values, change, _) = dft::dft_values(dim, alpha, radius, spec.abs_tol)?;
        let table = KernelTable::from_values(dim, alpha, radius, method, change, values)?;
        let (dev, z) = table.symmetry_defect();
        if dev > change.max(1e-12) * 10.0 {
            return Err(Error::SymmetryViolation {
                displacement: z,
                deviation: dev,
            });
        }
        // replicate representatives so stored symmetry is exact
        let values: Vec<f64> = table
            .displacements()
            .map(|z| table.get(&orbit_representative(&z)).unwrap_or(0.0))
            .collect();
        return KernelTable::from_values(dim, alpha, radius, method, change.max(dev), values);
    }

    let reps = representatives(dim, radius);
    let computed: Vec<KernelValue> = reps
        .par_iter()
        .map(|z| match method {
            KernelMethod::Fourier => kernel_fourier(z, alpha, spec),
            KernelMethod::Subordination => kernel_subordination(z, alpha, spec),
            KernelMethod::DftGrid => unreachable!("handled above"),
        })
        .collect::<Result<_>>()?;
    let accuracy = computed.iter().map(|v| v.error).fold(0.0, f64::max);
    let lookup: HashMap<&[i64], f64> = reps
        .iter()
        .map(Vec::as_slice)
        .zip(computed.iter().map(|v| v.value))
        .collect();
    let mut values = Vec::with_capacity(n);
    for z in Displacements::new(dim, radius) {
        values.push(lookup[orbit_representative(&z).as_slice()]);
    }
    KernelTable::from_values(dim, alpha, radius, method, accuracy, values)
}

/// `K_{d,α} = 4^α Γ(d/2 + α) / (π^{d/2} |Γ(-α)|)`, the limit of
/// `|z|^{d+2α} (-(-Δ)^α(z, 0))`.
pub fn lifshitz_constant(dim: usize, alpha: f64) -> Result<f64> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "the decay constant needs alpha in (0, 1), got {alpha}"
        )));
    }
    let d = dim as f64;
    let num = log_gamma(0.5 * d + alpha)?;
    let den = log_gamma(-alpha)?;
    let ln = alpha * 4f64.ln() + num.ln_abs - 0.5 * d * std::f64::consts::PI.ln() - den.ln_abs;
    Ok(ln.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Axis,
    Diagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayEntry {
    pub direction: Direction,
    /// Euclidean length of the displacement.
    pub distance: f64,
    /// `|z|^{d+2α} · (-values(z))`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayProfile {
    pub entries: Vec<DecayEntry>,
    pub k_limit: f64,
    pub fitted_c: f64,
    pub fitted_big_c: f64,
}

impl DecayProfile {
    pub fn axis(&self) -> impl Iterator<Item = &DecayEntry> {
        self.entries.iter().filter(|e| e.direction == Direction::Axis)
    }
}

pub const MIN_DECAY_RADIUS: usize = 8;

/// Ratios `|z|^{d+2α} (-(-Δ)^α(z, 0))` along the first axis and the main
/// diagonal, with their extremes and the limiting constant.
pub fn decay_profile(table: &KernelTable) -> Result<DecayProfile> {
    if table.radius < MIN_DECAY_RADIUS {
        return Err(Error::invalid(format!(
            "decay profile needs radius >= {MIN_DECAY_RADIUS}, got {}",
            table.radius
        )));
    }
    if table.alpha >= 1.0 {
        return Err(Error::invalid(
            "decay profile is undefined at alpha = 1 (finite-range stencil)",
        ));
    }
    let k_limit = lifshitz_constant(table.dim, table.alpha)?;
    let power = table.dim as f64 + 2.0 * table.alpha;
    let mut entries = Vec::new();
    let mut push = |direction, z: Vec<i64>| {
        let dist = z.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
        let v = table.get(&z).expect("displacement inside table");
        entries.push(DecayEntry {
            direction,
            distance: dist,
            ratio: dist.powf(power) * -v,
        });
    };
    for n in 1..=table.radius as i64 {
        let mut z = vec![0; table.dim];
        z[0] = n;
        push(Direction::Axis, z);
    }
    if table.dim > 1 {
        for n in 1..=table.radius as i64 {
            push(Direction::Diagonal, vec![n; table.dim]);
        }
    }
    let fitted_c = entries.iter().map(|e| e.ratio).fold(f64::INFINITY, f64::min);
    let fitted_big_c = entries.iter().map(|e| e.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(DecayProfile {
        entries,
        k_limit,
        fitted_c,
        fitted_big_c,
    })
}

/// Outputs of the two subordination exponent conventions for one displacement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConventionDiagnostic {
    pub displacement: Vec<i64>,
    pub alpha: f64,
    pub fourier: f64,
    /// Exponent `-1-α` with `|Γ(-α)|`.
    pub exponent_alpha: f64,
    /// Exponent `-1-α/2` with `|Γ(-α/2)|`; this represents `(-Δ)^{α/2}`.
    pub exponent_half_alpha: f64,
}

pub fn convention_diagnostic(z: &[i64], alpha: f64, spec: &QuadSpec) -> Result<ConventionDiagnostic> {
    Ok(ConventionDiagnostic {
        displacement: z.to_vec(),
        alpha,
        fourier: kernel_fourier(z, alpha, spec)?.value,
        exponent_alpha: kernel_subordination(z, alpha, spec)?.value,
        exponent_half_alpha: subordination::subordinated(z, 0.5 * alpha, spec)?.value,
    })
}
