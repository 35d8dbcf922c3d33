//! Continuous fractional Laplacian of rapidly decaying test functions.

use std::cell::{Cell, RefCell};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::lifshitz_constant;
use crate::specialfn::{integrate_with_hints, QuadHints, QuadSpec};

type Field = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// `|φ(y)| <= amplitude · exp(-rate |y|²)` for all `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayCertificate {
    pub amplitude: f64,
    pub rate: f64,
}

impl DecayCertificate {
    /// Bound on `∫_{|y| > ρ} |φ(y)| dy`. Uses `erfc(t) <= e^{-t²}` in one
    /// dimension; exact for the envelope in two.
    pub fn mass_beyond(&self, dim: usize, rho: f64) -> f64 {
        let rho = rho.max(0.0);
        self.amplitude * (PI / self.rate).powf(0.5 * dim as f64) * (-self.rate * rho * rho).exp()
    }

    /// Smallest radius with `mass_beyond(radius) <= budget`.
    pub fn radius_for(&self, dim: usize, budget: f64) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        let total = self.mass_beyond(dim, 0.0);
        if total <= budget {
            return 0.0;
        }
        ((total / budget).ln() / self.rate).sqrt()
    }
}

#[derive(Clone)]
pub struct TestFunction {
    name: String,
    dim: usize,
    value: Field,
    laplacian: Field,
    integral: f64,
    decay: DecayCertificate,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("integral", &self.integral)
            .field("decay", &self.decay)
            .finish()
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

impl TestFunction {
    /// Caller-supplied function. `laplacian` must be the exact `Δφ`, `integral`
    /// the exact `∫φ`, and `decay` a valid envelope; none of this is checked.
    pub fn custom(
        name: impl Into<String>,
        dim: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        laplacian: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        integral: f64,
        decay: DecayCertificate,
    ) -> Result<Self> {
        check_dim(dim)?;
        if !(decay.amplitude >= 0.0 && decay.rate > 0.0) || !integral.is_finite() {
            return Err(Error::invalid("decay certificate needs amplitude >= 0 and rate > 0"));
        }
        Ok(TestFunction {
            name: name.into(),
            dim,
            value: Arc::new(value),
            laplacian: Arc::new(laplacian),
            integral,
            decay,
        })
    }

    /// `e^{-|x|²/2}`.
    pub fn gaussian_half(dim: usize) -> Result<Self> {
        let d = dim as f64;
        Self::custom(
            "gaussian_half",
            dim,
            |x| (-0.5 * norm2(x)).exp(),
            move |x| {
                let r2 = norm2(x);
                (r2 - d) * (-0.5 * r2).exp()
            },
            (2.0 * PI).powf(0.5 * d),
            DecayCertificate {
                amplitude: 1.0,
                rate: 0.5,
            },
        )
    }

    /// `e^{-|x|²}`.
    pub fn gaussian(dim: usize) -> Result<Self> {
        let d = dim as f64;
        Self::custom(
            "gaussian",
            dim,
            |x| (-norm2(x)).exp(),
            move |x| {
                let r2 = norm2(x);
                (4.0 * r2 - 2.0 * d) * (-r2).exp()
            },
            PI.powf(0.5 * d),
            DecayCertificate {
                amplitude: 1.0,
                rate: 1.0,
            },
        )
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::custom(
            "zero",
            dim,
            |_| 0.0,
            |_| 0.0,
            0.0,
            DecayCertificate {
                amplitude: 0.0,
                rate: 1.0,
            },
        )
    }

    /// `x ↦ φ(x/s)`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::invalid(format!("scale must be positive, got {s}")));
        }
        let (v, l) = (self.value.clone(), self.laplacian.clone());
        let inv = 1.0 / s;
        Ok(TestFunction {
            name: format!("{}(x/{s})", self.name),
            dim: self.dim,
            value: Arc::new(move |x| {
                let y: Vec<f64> = x.iter().map(|c| c * inv).collect();
                v(&y)
            }),
            laplacian: Arc::new(move |x| {
                let y: Vec<f64> = x.iter().map(|c| c * inv).collect();
                inv * inv * l(&y)
            }),
            integral: self.integral * s.powi(self.dim as i32),
            decay: DecayCertificate {
                amplitude: self.decay.amplitude,
                rate: self.decay.rate * inv * inv,
            },
        })
    }

    /// `a φ + b ψ`.
    pub fn combine(a: f64, phi: &TestFunction, b: f64, psi: &TestFunction) -> Result<Self> {
        if phi.dim != psi.dim {
            return Err(Error::invalid("combined test functions must share a dimension"));
        }
        let (v1, v2) = (phi.value.clone(), psi.value.clone());
        let (l1, l2) = (phi.laplacian.clone(), psi.laplacian.clone());
        Ok(TestFunction {
            name: format!("{a}*{}+{b}*{}", phi.name, psi.name),
            dim: phi.dim,
            value: Arc::new(move |x| a * v1(x) + b * v2(x)),
            laplacian: Arc::new(move |x| a * l1(x) + b * l2(x)),
            integral: a * phi.integral + b * psi.integral,
            decay: DecayCertificate {
                amplitude: a.abs() * phi.decay.amplitude + b.abs() * psi.decay.amplitude,
                rate: phi.decay.rate.min(psi.decay.rate),
            },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn integral(&self) -> f64 {
        self.integral
    }
    pub fn decay(&self) -> DecayCertificate {
        self.decay
    }
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    pub fn laplacian(&self, x: &[f64]) -> f64 {
        (self.laplacian)(x)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if !(1..=2).contains(&dim) {
        return Err(Error::invalid(format!(
            "continuum quadrature supports d in {{1, 2}}, got {dim}"
        )));
    }
    Ok(())
}

/// Below this radius the second difference is replaced by its Taylor term;
/// balances the dropped fourth-order term against rounding in `2φ(x) - φ(x+h) - φ(x-h)`.
fn taylor_radius() -> f64 {
    f64::EPSILON.powf(0.25)
}

/// Sphere area `ω_{d-1}`.
fn sphere_area(dim: usize) -> f64 {
    if dim == 1 {
        2.0
    } else {
        2.0 * PI
    }
}

pub const DEFAULT_SPLIT: f64 = 1.0;

/// `(-Δ)^α φ(x)` from the singular-integral form, split at `|h| = 1`.
pub fn frac_lap_continuum(phi: &TestFunction, x: &[f64], alpha: f64, spec: &QuadSpec) -> Result<f64> {
    frac_lap_split(phi, x, alpha, DEFAULT_SPLIT, spec)
}

/// Same value with the inner ball of radius `r`; the result does not depend
/// on `r` beyond quadrature error.
pub fn frac_lap_split(phi: &TestFunction, x: &[f64], alpha: f64, r: f64, spec: &QuadSpec) -> Result<f64> {
    let d = phi.dim;
    check_dim(d)?;
    if x.len() != d {
        return Err(Error::invalid(format!(
            "point has {} coordinates, test function has d = {d}",
            x.len()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("split radius must be positive, got {r}")));
    }
    spec.validate()?;
    let k = lifshitz_constant(d, alpha)?;
    let part_spec = spec.with_abs_tol(spec.abs_tol / (4.0 * k));
    let p = d as f64 + 2.0 * alpha;
    let phi_x = phi.eval(x);
    let rho0 = taylor_radius().min(r);

    // ball of radius rho0: 2φ(x) - φ(x+h) - φ(x-h) ≈ -(h·∇)²φ, angular mean -|h|²Δφ/d
    let core =
        -phi.laplacian(x) * sphere_area(d) * rho0.powf(2.0 - 2.0 * alpha) / (2.0 * d as f64 * (2.0 - 2.0 * alpha));

    let second_diff = |h: &[f64]| {
        let plus: Vec<f64> = x.iter().zip(h).map(|(a, b)| a + b).collect();
        let minus: Vec<f64> = x.iter().zip(h).map(|(a, b)| a - b).collect();
        2.0 * phi_x - phi.eval(&plus) - phi.eval(&minus)
    };
    // the symmetrised integrand is even in h, so half the directions suffice
    let shell = if d == 1 {
        integrate_with_hints(
            |t| second_diff(&[t]) * t.powf(-1.0 - 2.0 * alpha),
            rho0,
            r,
            &part_spec,
            &QuadHints::default(),
        )?
        .value
    } else {
        nested_2d(
            (0.0, PI),
            &[],
            |_| (rho0, r, Vec::new()),
            |theta, rho| second_diff(&[rho * theta.cos(), rho * theta.sin()]) * rho.powf(-1.0 - 2.0 * alpha),
            &part_spec,
        )?
    };

    let far_constant = phi_x * sphere_area(d) * r.powf(-2.0 * alpha) / (2.0 * alpha);

    // ∫_{|y - x| > r} φ(y) |y - x|^{-p} dy over the box where the envelope is
    // still above the budget
    let budget = part_spec.abs_tol / 10.0 * r.powf(p);
    let big_y = phi.decay.radius_for(d, budget);
    let far = if big_y == 0.0 {
        0.0
    } else if d == 1 {
        let f = |y: f64| phi.eval(&[y]) * (y - x[0]).abs().powf(-p);
        let mut acc = 0.0;
        for (a, b) in [(-big_y, (x[0] - r).min(big_y)), ((x[0] + r).max(-big_y), big_y)] {
            if b > a {
                acc += integrate_with_hints(f, a, b, &part_spec, &QuadHints::default())?.value;
            }
        }
        acc
    } else {
        let (x1, x2) = (x[0], x[1]);
        let outer_breaks = [x1 - r, x1 + r];
        nested_2d(
            (-big_y, big_y),
            &outer_breaks,
            |y1| {
                let dy = y1 - x1;
                let mut breaks = Vec::new();
                if dy.abs() < r {
                    let w = (r * r - dy * dy).sqrt();
                    breaks.push(x2 - w);
                    breaks.push(x2 + w);
                }
                (-big_y, big_y, breaks)
            },
            |y1, y2| {
                let dist2 = (y1 - x1).powi(2) + (y2 - x2).powi(2);
                if dist2 <= r * r {
                    0.0
                } else {
                    phi.eval(&[y1, y2]) * dist2.powf(-0.5 * p)
                }
            },
            &part_spec,
        )?
    };

    Ok(k * (core + shell + far_constant - far))
}

/// `∫_{a0}^{a1} ∫_{lo(s)}^{hi(s)} f(s, t) dt ds` with breakpoints on both axes.
fn nested_2d<R, F>(outer: (f64, f64), outer_breaks: &[f64], inner: R, f: F, spec: &QuadSpec) -> Result<f64>
where
    R: Fn(f64) -> (f64, f64, Vec<f64>),
    F: Fn(f64, f64) -> f64,
{
    let width = (outer.1 - outer.0).abs().max(1.0);
    let inner_spec = spec.with_abs_tol(spec.abs_tol / (4.0 * width));
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let inner_err = Cell::new(0.0_f64);
    let g = |s: f64| {
        if failure.borrow().is_some() {
            return 0.0;
        }
        let (lo, hi, breaks) = inner(s);
        if hi <= lo {
            return 0.0;
        }
        let hints = QuadHints {
            breakpoints: &breaks,
            ..QuadHints::default()
        };
        match integrate_with_hints(|t| f(s, t), lo, hi, &inner_spec, &hints) {
            Ok(q) => {
                inner_err.set(inner_err.get().max(q.error));
                q.value
            }
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                0.0
            }
        }
    };
    let hints = QuadHints {
        breakpoints: outer_breaks,
        ..QuadHints::default()
    };
    let q = integrate_with_hints(g, outer.0, outer.1, spec, &hints);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(q?.value)
}

/// `frac_lap_continuum` at several points, in parallel, results in input order.
pub fn frac_lap_many(phi: &TestFunction, xs: &[Vec<f64>], alpha: f64, spec: &QuadSpec) -> Result<Vec<f64>> {
    xs.par_iter().map(|x| frac_lap_continuum(phi, x, alpha, spec)).collect()
}

pub const MAX_TAIL_X: f64 = 100.0;
pub const TAIL_TOLERANCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailPoint {
    pub x: f64,
    pub value: f64,
    /// `|x|^{d+2α} (-Δ)^α φ(x e_1)`.
    pub scaled: f64,
    /// `scaled / limit`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailLimit {
    pub dim: usize,
    pub alpha: f64,
    pub function: String,
    /// `-K_{d,α} ∫φ`.
    pub limit: f64,
    pub points: Vec<TailPoint>,
    /// Last ratio within [`TAIL_TOLERANCE`] of 1.
    pub last_within: bool,
    /// Last ratio closer to 1 than the first.
    pub approaching: bool,
    /// `scaled` strictly increasing along the list.
    pub scaled_increasing: bool,
    /// `|ratio - 1|` strictly decreasing along the list.
    pub monotone_approach: bool,
}

/// Far-field behaviour `|x|^{d+2α} (-Δ)^α φ(x) → -K_{d,α} ∫φ` along the first axis.
pub fn tail_limit_check(phi: &TestFunction, alpha: f64, xs: &[f64], spec: &QuadSpec) -> Result<TailLimit> {
    if xs.is_empty() {
        return Err(Error::invalid("tail check needs at least one |x| value"));
    }
    if xs.iter().any(|&v| !(v > 0.0 && v <= MAX_TAIL_X)) || xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!(
            "|x| values must be ascending and lie in (0, {MAX_TAIL_X}]"
        )));
    }
    let d = phi.dim;
    let limit = -lifshitz_constant(d, alpha)? * phi.integral;
    if limit == 0.0 {
        return Err(Error::invalid("tail check needs a test function with nonzero integral"));
    }
    let pts: Vec<Vec<f64>> = xs
        .iter()
        .map(|&v| {
            let mut p = vec![0.0; d];
            p[0] = v;
            p
        })
        .collect();
    let values = frac_lap_many(phi, &pts, alpha, spec)?;
    let p = d as f64 + 2.0 * alpha;
    let points: Vec<TailPoint> = xs
        .iter()
        .zip(&values)
        .map(|(&x, &value)| {
            let scaled = x.powf(p) * value;
            TailPoint {
                x,
                value,
                scaled,
                ratio: scaled / limit,
            }
        })
        .collect();
    let dev = |t: &TailPoint| (t.ratio - 1.0).abs();
    let last = points.last().unwrap();
    Ok(TailLimit {
        dim: d,
        alpha,
        function: phi.name.clone(),
        limit,
        last_within: dev(last) <= TAIL_TOLERANCE,
        approaching: dev(last) < dev(&points[0]),
        scaled_increasing: points.windows(2).all(|w| w[1].scaled > w[0].scaled),
        monotone_approach: points.windows(2).all(|w| dev(&w[1]) < dev(&w[0])),
        points,
    })
}
