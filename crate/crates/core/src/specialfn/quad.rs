//! Globally adaptive Gauss–Kronrod (10/21) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Controls every integral evaluated by the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Truncation point for improper upper limits.
    pub tail_cutoff: f64,
}

impl QuadSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize, tail_cutoff: f64) -> Result<Self> {
        let spec = QuadSpec {
            abs_tol,
            rel_tol,
            max_subdivisions,
            tail_cutoff,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::invalid("quadrature tolerances must be positive"));
        }
        if self.max_subdivisions < 16 {
            return Err(Error::invalid("max_subdivisions must be at least 16"));
        }
        if !(self.tail_cutoff > 0.0) {
            return Err(Error::invalid("tail_cutoff must be positive"));
        }
        Ok(())
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_subdivisions: 4000,
            tail_cutoff: 1e40,
        }
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Optional knowledge about the integrand.
#[derive(Default, Clone, Copy)]
pub struct QuadHints<'a> {
    /// `f(t) ~ (t - a)^β` near the lower limit; the first panel is regularised
    /// by `t = a + h v^{1/(1+β)}`.
    pub lower_exponent: Option<f64>,
    /// Interior points where the integrand is not smooth (finite ranges only).
    pub breakpoints: &'a [f64],
    /// Bound on `∫_T^∞ |f|` for an improper upper limit truncated at `T`.
    pub tail_bound: Option<&'a dyn Fn(f64) -> f64>,
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_278_966,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// One 21-point Kronrod panel: (value, error estimate, roundoff floor).
fn gk21(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * res_abs;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(floor);
    }
    (value, err, floor)
}

/// An integrand with its initial panels.
type Piece<'a> = (&'a dyn Fn(f64) -> f64, Vec<(f64, f64)>);

struct Panel {
    piece: usize,
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    floor: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Global adaptive integration over several pieces, each with its own
/// (possibly transformed) integrand and initial panels.
fn adaptive_pieces(pieces: &[Piece<'_>], spec: &QuadSpec, extra_error: f64) -> Result<Quadrature> {
    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Panel> = Vec::new();
    let mut evaluations = 0;
    for (idx, (f, panels)) in pieces.iter().enumerate() {
        for &(a, b) in panels {
            if b <= a {
                continue;
            }
            let (value, error, floor) = gk21(*f, a, b);
            evaluations += 21;
            heap.push(Panel {
                piece: idx,
                a,
                b,
                value,
                error,
                floor,
            });
        }
    }
    let totals = |heap: &BinaryHeap<Panel>, frozen: &[Panel]| {
        let mut v = 0.0;
        let mut e = extra_error;
        let mut fl = 0.0;
        for p in heap.iter().chain(frozen.iter()) {
            v += p.value;
            e += p.error;
            fl += p.floor;
        }
        (v, e, fl)
    };
    let mut subdivisions = 0;
    loop {
        let (value, error, floor) = totals(&heap, &frozen);
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::QuadratureNonConvergence {
                estimate: value,
                error,
                subdivisions,
            });
        }
        // a tolerance below the summed roundoff floor cannot be met; stop once
        // the estimate is roundoff dominated and report that error
        let tol = spec.abs_tol.max(spec.rel_tol * value.abs()).max(2.0 * floor);
        if error <= tol {
            return Ok(Quadrature {
                value,
                error,
                evaluations,
            });
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => {
                return Err(Error::QuadratureNonConvergence {
                    estimate: value,
                    error,
                    subdivisions,
                })
            }
        };
        if subdivisions >= spec.max_subdivisions {
            heap.push(worst);
            let (value, error, _) = totals(&heap, &frozen);
            return Err(Error::QuadratureNonConvergence {
                estimate: value,
                error,
                subdivisions,
            });
        }
        let mid = 0.5 * (worst.a + worst.b);
        let scale = worst.a.abs().max(worst.b.abs()).max(f64::MIN_POSITIVE);
        if (worst.b - worst.a) <= 64.0 * f64::EPSILON * scale || mid <= worst.a || mid >= worst.b {
            frozen.push(worst);
            continue;
        }
        let f = pieces[worst.piece].0;
        let (v1, e1, f1) = gk21(f, worst.a, mid);
        let (v2, e2, f2) = gk21(f, mid, worst.b);
        evaluations += 42;
        subdivisions += 1;
        heap.push(Panel {
            piece: worst.piece,
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
            floor: f1,
        });
        heap.push(Panel {
            piece: worst.piece,
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
            floor: f2,
        });
    }
}

/// Integrate `f` over `[a, b]`; `b` may be `f64::INFINITY`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadSpec) -> Result<Quadrature> {
    integrate_with_hints(f, a, b, spec, &QuadHints::default())
}

/// Integrate `f` over `[a, b]` using endpoint, breakpoint and tail hints.
///
/// Infinite upper limits are handled by integrating the first unit panel
/// directly and mapping `[c, tail_cutoff]` through `t = e^u`; the hinted
/// `tail_bound(tail_cutoff)` is added to the reported error.
pub fn integrate_with_hints<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    spec: &QuadSpec,
    hints: &QuadHints<'_>,
) -> Result<Quadrature> {
    spec.validate()?;
    if !a.is_finite() || b.is_nan() || b < a {
        return Err(Error::invalid(format!("bad integration range [{a}, {b}]")));
    }
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let (first_end, mapped) = if b.is_infinite() {
        let c = (a + 1.0).max(1.0);
        if spec.tail_cutoff > c {
            (c, Some((c.ln(), spec.tail_cutoff.ln())))
        } else {
            (c, None)
        }
    } else {
        (b, None)
    };

    let mut cuts: Vec<f64> = hints
        .breakpoints
        .iter()
        .copied()
        .filter(|&p| p > a && p < first_end)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = vec![a];
    edges.extend(cuts);
    edges.push(first_end);

    let f = &f;
    let head_end = edges[1];
    let width = head_end - a;
    let regular = |t: f64| f(t);
    let singular_head = hints.lower_exponent.map(|beta| {
        let p = 1.0 / (1.0 + beta);
        move |v: f64| {
            if v <= 0.0 {
                return 0.0;
            }
            let t = a + width * v.powf(p);
            f(t) * width * p * v.powf(p - 1.0)
        }
    });
    let log_mapped = |u: f64| {
        let t = u.exp();
        f(t) * t
    };

    let mut pieces: Vec<Piece<'_>> = Vec::new();
    let rest: Vec<(f64, f64)>;
    if let Some(head) = singular_head.as_ref() {
        pieces.push((head, vec![(0.0, 1.0)]));
        rest = edges[1..].windows(2).map(|w| (w[0], w[1])).collect();
    } else {
        rest = edges.windows(2).map(|w| (w[0], w[1])).collect();
    }
    if !rest.is_empty() {
        pieces.push((&regular, rest));
    }
    if let Some((u0, u1)) = mapped {
        let n = ((u1 - u0) / 4.0).ceil().max(1.0) as usize;
        let h = (u1 - u0) / n as f64;
        let panels = (0..n).map(|i| (u0 + i as f64 * h, u0 + (i + 1) as f64 * h)).collect();
        pieces.push((&log_mapped, panels));
    }
    let tail = match (b.is_infinite(), hints.tail_bound) {
        (true, Some(bound)) => bound(spec.tail_cutoff.max(first_end)),
        _ => 0.0,
    };
    adaptive_pieces(&pieces, spec, tail)
}
