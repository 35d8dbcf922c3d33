use std::collections::BTreeMap;

use serde::Serialize;

use crate::continuum::{tail_limit_check, TestFunction};
use crate::error::Result;
use crate::ids::{boundary_scaling, sandwich, Geometry};
use crate::kernel::{
    decay_profile, kernel_fourier, kernel_subordination, kernel_table, lifshitz_constant, orbit_representative,
    KernelMethod, KernelTable,
};
use crate::lattice::{
    laplacian_restricted, random_nested_pair, site_uniform, splitmix64, BoundaryCondition, DisorderFamily,
    DisorderSpec, SymMatrix,
};
use crate::lifshitz::TempleContext;
use crate::specialfn::QuadSpec;
use crate::spectral::{check_bracketing, check_operator_monotone};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

/// One property instance; `margin >= 0` means the property holds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub module: &'static str,
    pub name: String,
    pub instance_seed: Option<u64>,
    pub margin: f64,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub level: Level,
    pub seed: u64,
    pub passed: bool,
    pub checks_run: usize,
    pub failures: Vec<Check>,
    /// Smallest margin per `module/name`.
    pub worst_margins: BTreeMap<String, f64>,
}

pub const MARGIN_TOL: f64 = 1e-9;
const DECAY_TOL: f64 = 0.05;

/// Derived seed for instance `i` of the property tagged `tag`.
pub fn instance_seed(seed: u64, tag: u64, i: u64) -> u64 {
    splitmix64(splitmix64(seed ^ tag) ^ i)
}

struct Suite {
    checks: Vec<Check>,
}

impl Suite {
    fn push(
        &mut self,
        module: &'static str,
        name: impl Into<String>,
        instance_seed: Option<u64>,
        margin: f64,
        detail: String,
    ) {
        self.checks.push(Check {
            module,
            name: name.into(),
            instance_seed,
            margin,
            passed: margin >= 0.0,
            detail,
        });
    }
}

/// Runs the property suite. A supplied kernel table is checked for the sign
/// and symmetry invariants and spot-checked against fresh quadrature.
pub fn run_verify(level: Level, seed: u64, supplied: Option<&KernelTable>) -> Result<VerifyReport> {
    let full = level == Level::Full;
    let spec = QuadSpec::default();
    let mut s = Suite { checks: Vec::new() };

    if let Some(table) = supplied {
        supplied_kernel(&mut s, table)?;
    }

    // exact stencil at α = 1
    for dim in 1..=3 {
        let t = kernel_table(dim, 1.0, 2, KernelMethod::Fourier, &spec)?;
        let dev = t
            .displacements()
            .map(|z| {
                let l1: i64 = z.iter().map(|c| c.abs()).sum();
                let exact = match l1 {
                    0 => 2.0 * dim as f64,
                    1 => -1.0,
                    _ => 0.0,
                };
                (t.get(&z).unwrap() - exact).abs()
            })
            .fold(0.0, f64::max);
        s.push(
            "kernel",
            format!("stencil_d{dim}"),
            None,
            1e-10 - dev,
            format!("max deviation {dev:e}"),
        );
    }

    // signs and decay
    let decay_alphas: &[f64] = if full { &[0.25, 0.5, 0.75] } else { &[0.5] };
    let decay_radius = if full { 64 } else { 16 };
    for &alpha in decay_alphas {
        let t = kernel_table(1, alpha, decay_radius, KernelMethod::Fourier, &spec)?;
        sign_check(&mut s, &t, "own");
        let p = decay_profile(&t)?;
        let k = lifshitz_constant(1, alpha)?;
        let last = p.axis().last().expect("axis entries");
        let rel = (last.ratio - k).abs() / k;
        s.push(
            "kernel",
            format!("decay_d1_a{alpha}_r{decay_radius}"),
            None,
            DECAY_TOL - rel,
            format!("ratio {} vs K {k} (relative {rel:e})", last.ratio),
        );
    }
    let t2 = kernel_table(2, 0.5, 6, KernelMethod::Subordination, &spec)?;
    sign_check(&mut s, &t2, "own");

    bracketing_checks(&mut s, seed, if full { 200 } else { 40 }, if full { 150 } else { 60 })?;
    monotone_checks(&mut s, seed, if full { 100 } else { 20 })?;
    temple_checks(&mut s, seed, full)?;

    for dim in 1..=2 {
        for &alpha in &[0.25, 0.75] {
            let b = boundary_scaling(dim, alpha, &[8, 16, 32, 64])?;
            let margin = if b.per_site_decreasing {
                b.slope_bound - b.slope
            } else {
                -1.0
            };
            s.push(
                "ids",
                format!("boundary_sum_d{dim}_a{alpha}"),
                None,
                margin,
                format!(
                    "slope {} bound {} per-site decreasing {}",
                    b.slope, b.slope_bound, b.per_site_decreasing
                ),
            );
        }
    }

    sandwich_checks(&mut s, seed, full)?;

    let tail_alphas: &[f64] = if full { &[0.25, 0.5, 0.75] } else { &[0.5] };
    let phi = TestFunction::gaussian_half(1)?;
    for &alpha in tail_alphas {
        let t = tail_limit_check(&phi, alpha, &[5.0, 10.0, 20.0, 40.0], &spec)?;
        let last = t.points.last().unwrap();
        let margin = if t.scaled_increasing && t.approaching {
            0.1 - (last.ratio - 1.0).abs()
        } else {
            -1.0
        };
        let ratios: Vec<f64> = t.points.iter().map(|p| p.ratio).collect();
        s.push(
            "continuum",
            format!("tail_limit_a{alpha}"),
            None,
            margin,
            format!("ratios {ratios:?}"),
        );
    }

    let mut worst: BTreeMap<String, f64> = BTreeMap::new();
    for c in &s.checks {
        let key = format!("{}/{}", c.module, c.name.split('#').next().unwrap_or(""));
        let e = worst.entry(key).or_insert(f64::INFINITY);
        *e = e.min(c.margin);
    }
    let failures: Vec<Check> = s.checks.iter().filter(|c| !c.passed).cloned().collect();
    Ok(VerifyReport {
        level,
        seed,
        passed: failures.is_empty(),
        checks_run: s.checks.len(),
        failures,
        worst_margins: worst,
    })
}

fn sign_check(s: &mut Suite, t: &KernelTable, origin: &str) {
    let name = format!("sign_invariant_{origin}_d{}_a{}", t.dim(), t.alpha());
    match t.check_signs() {
        Ok(()) => {
            let margin = t
                .displacements()
                .filter(|z| z.iter().any(|&c| c != 0))
                .map(|z| -t.get(&z).unwrap())
                .fold(f64::INFINITY, f64::min);
            // α = 1 allows zeros off the stencil
            let margin = if t.alpha() == 1.0 { margin.max(0.0) } else { margin };
            s.push(
                "kernel",
                name,
                None,
                margin,
                "all off-diagonal entries have the required sign".into(),
            );
        }
        Err(v) => s.push(
            "kernel",
            name,
            None,
            -v.value.abs().max(f64::MIN_POSITIVE),
            format!(
                "sign violated at displacement {:?}: value {:e}",
                v.displacement, v.value
            ),
        ),
    }
}

fn supplied_kernel(s: &mut Suite, t: &KernelTable) -> Result<()> {
    sign_check(s, t, "supplied");
    let (defect, at) = t.symmetry_defect();
    let scale = t.values().iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    s.push(
        "kernel",
        "symmetry_supplied",
        None,
        1e-10 * scale - defect,
        format!("largest symmetry defect {defect:e} at displacement {at:?}"),
    );
    let spec = QuadSpec::default().with_abs_tol(1e-10);
    let mut reps: Vec<Vec<i64>> = t.displacements().map(|z| orbit_representative(&z)).collect();
    reps.sort();
    reps.dedup();
    let mut worst = f64::INFINITY;
    let mut worst_at = Vec::new();
    for z in reps.iter().take(16) {
        let fresh = if t.alpha() == 1.0 {
            let l1: i64 = z.iter().sum();
            match l1 {
                0 => 2.0 * t.dim() as f64,
                1 => -1.0,
                _ => 0.0,
            }
        } else if t.dim() <= 3 {
            kernel_fourier(z, t.alpha(), &spec)?.value
        } else {
            kernel_subordination(z, t.alpha(), &spec)?.value
        };
        let stored = t.get(z).unwrap();
        let m = 1e-6 * fresh.abs().max(1.0) - (stored - fresh).abs();
        if m < worst {
            worst = m;
            worst_at = z.clone();
        }
    }
    s.push(
        "kernel",
        "supplied_matches_quadrature",
        None,
        worst,
        format!("tightest agreement margin at displacement {worst_at:?}"),
    );
    Ok(())
}

pub const BRACKET_ALPHAS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// Kernel tables wide enough for every random pair (side <= 60 in d = 1, 12 in d = 2).
fn bracketing_tables() -> Result<Vec<((usize, usize), KernelTable)>> {
    let spec = QuadSpec::default();
    let mut out = Vec::new();
    for dim in 1..=2 {
        let radius = if dim == 1 { 60 } else { 12 };
        for (ai, &alpha) in BRACKET_ALPHAS.iter().enumerate() {
            let t = kernel_table(dim, alpha, radius, KernelMethod::default_for(dim, alpha), &spec)?;
            out.push(((dim, ai), t));
        }
    }
    Ok(out)
}

/// `(dim, index into BRACKET_ALPHAS, pair seed)` for instance `i`.
pub fn bracketing_instance(i: u64, seed: u64) -> (usize, usize, u64) {
    let dim = 1 + (i % 2) as usize;
    let ai = ((i / 2) % 4) as usize;
    (dim, ai, instance_seed(seed, 0xB4AC, i))
}

fn bracketing_checks(s: &mut Suite, seed: u64, count: u64, max_outer: usize) -> Result<()> {
    let tables = bracketing_tables()?;
    for i in 0..count {
        let (dim, ai, inst) = bracketing_instance(i, seed);
        let alpha = BRACKET_ALPHAS[ai];
        let (inner, outer) = random_nested_pair(dim, max_outer, inst)?;
        let table = &tables.iter().find(|(k, _)| *k == (dim, ai)).unwrap().1;
        let r = check_bracketing(&inner, &outer, alpha, Some(table), MARGIN_TOL)?;
        let worst = r
            .inequalities
            .iter()
            .min_by(|a, b| a.margin.total_cmp(&b.margin))
            .map(|m| (m.name, m.margin))
            .unwrap();
        s.push(
            "spectral",
            format!("bracketing#{i}"),
            Some(inst),
            r.worst_margin() + MARGIN_TOL,
            format!(
                "d={dim} alpha={alpha} |inner|={} |outer|={}; tightest inequality {} ({:e}), eigen ordering {:e}",
                inner.len(),
                outer.len(),
                worst.0,
                worst.1,
                r.eigen_ordering_margin
            ),
        );
    }
    Ok(())
}

fn monotone_checks(s: &mut Suite, seed: u64, count: u64) -> Result<()> {
    for i in 0..count {
        let inst = instance_seed(seed, 0x303E, i);
        let dim = 1 + (i % 2) as usize;
        let alpha = BRACKET_ALPHAS[((i / 2) % 3) as usize];
        let (_, outer) = random_nested_pair(dim, 40, inst)?;
        let a = laplacian_restricted(&outer, BoundaryCondition::Neumann);
        let diag: Vec<f64> = (0..outer.len() as u64)
            .map(|k| 2.0 * site_uniform(inst, 1, k))
            .collect();
        let p = SymMatrix::diagonal(&diag);
        let m = check_operator_monotone(&a, &p, alpha)?;
        s.push(
            "spectral",
            format!("operator_monotone#{i}"),
            Some(inst),
            m + MARGIN_TOL,
            format!(
                "d={dim} alpha={alpha} n={}: min eig((A+P)^a - A^a) = {m:e}",
                outer.len()
            ),
        );
    }
    Ok(())
}

fn temple_checks(s: &mut Suite, seed: u64, full: bool) -> Result<()> {
    let disorder = DisorderSpec::new(DisorderFamily::Uniform01, 1.0, seed)?;
    let boxes: Vec<(usize, usize)> = if full {
        (1..=12).map(|l| (1, l)).chain((1..=12).map(|l| (2, l))).collect()
    } else {
        vec![(1, 2), (1, 5), (1, 8), (2, 2), (2, 3)]
    };
    let reps = if full { 10 } else { 3 };
    for (dim, l) in boxes {
        for &alpha in &[0.3, 0.5, 0.8, 1.0] {
            let ctx = TempleContext::new(dim, l, alpha)?;
            for r in 0..reps {
                let rep = ctx.run(&disorder, r)?;
                let worst = rep.margins.all().iter().copied().fold(f64::INFINITY, f64::min);
                s.push(
                    "lifshitz",
                    format!("temple#d{dim}_L{l}_a{alpha}_r{r}"),
                    Some(r),
                    worst + rep.tol,
                    format!("margins {:?}", rep.margins),
                );
            }
        }
    }
    Ok(())
}

fn sandwich_checks(s: &mut Suite, seed: u64, full: bool) -> Result<()> {
    let spec = QuadSpec::default();
    let disorder = DisorderSpec::new(DisorderFamily::Uniform01, 1.0, seed)?;
    let energies: Vec<f64> = (0..=40).map(|k| 0.125 * k as f64).collect();
    let cases: &[(usize, usize, f64)] = if full {
        &[(1, 20, 0.5), (1, 20, 1.0), (2, 4, 0.75), (2, 4, 0.25)]
    } else {
        &[(1, 10, 0.5), (2, 2, 0.75)]
    };
    for &(dim, l, alpha) in cases {
        let table = kernel_table(dim, alpha, 2 * l, KernelMethod::default_for(dim, alpha), &spec)?;
        let realizations = if full { 20 } else { 4 };
        let sw = sandwich(
            Geometry { dim, l },
            alpha,
            &disorder,
            &energies,
            realizations,
            Some(&table),
        )?;
        let detail = match sw.violations.first() {
            None => format!("d={dim} L={l} alpha={alpha}: ordering holds for {realizations} realizations"),
            Some(v) => format!(
                "d={dim} L={l} alpha={alpha}: realization {} at E={}: D={} mid={} N={}",
                v.realization, v.energy, v.dirichlet, v.middle, v.neumann
            ),
        };
        let margin = if sw.violations.is_empty() {
            0.0
        } else {
            -(sw.violations.len() as f64)
        };
        s.push(
            "ids",
            format!("sandwich_d{dim}_L{l}_a{alpha}"),
            Some(seed),
            margin,
            detail,
        );
    }
    Ok(())
}
