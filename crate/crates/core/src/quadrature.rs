//! Integration on homogeneous groups.
//!
//! Three paths share one result type. `Grid` is a composite Gauss–Legendre
//! tensor rule on a coordinate box. `Polar` writes the integral as
//! ∫ r^{Q-1} S(r) dr with S(r) the sphere integral of f(δ_r ·), where S is
//! evaluated through a fixed angular rule: the sphere measure is never
//! parametrised, the rule comes from a full-dimensional integral of a
//! smooth radial bump against the degree-zero extension of f. `MonteCarlo`
//! samples the bounding box uniformly.

use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::group::QuasiNorm;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Grid,
    Polar,
    Mc,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Grid => "grid",
            Method::Polar => "polar",
            Method::Mc => "mc",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegralEstimate {
    pub value: f64,
    pub abs_error: f64,
    pub method: Method,
    pub nodes: usize,
    pub divergent: bool,
}

impl IntegralEstimate {
    pub fn exact(value: f64, method: Method) -> Self {
        Self {
            value,
            abs_error: 0.0,
            method,
            nodes: 0,
            divergent: false,
        }
    }

    pub fn divergent(method: Method, nodes: usize) -> Self {
        Self {
            value: f64::INFINITY,
            abs_error: f64::INFINITY,
            method,
            nodes,
            divergent: true,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            value: self.value * c,
            abs_error: self.abs_error * c.abs(),
            ..self.clone()
        }
    }

    /// `value^{1/p}` with the first-order error rule.
    pub fn root(&self, p: f64) -> Self {
        if self.divergent {
            return self.clone();
        }
        let v = self.value.max(0.0);
        let value = v.powf(1.0 / p);
        let abs_error = if v > 0.0 {
            value / (p * v) * self.abs_error
        } else {
            self.abs_error.powf(1.0 / p)
        };
        Self {
            value,
            abs_error,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    /// The whole group, truncated exactly to B(0, radius); the radius is the
    /// integrand's declared support or decay radius.
    Whole {
        radius: f64,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Annulus {
        r_in: f64,
        r_out: f64,
    },
    Box {
        center: Vec<f64>,
        half_widths: Vec<f64>,
    },
}

impl Domain {
    pub fn whole(radius: f64) -> Self {
        Domain::Whole { radius }
    }

    pub fn unit_ball(norm: &QuasiNorm) -> Self {
        Domain::Ball {
            center: norm.group().identity(),
            radius: 1.0,
        }
    }

    fn validate(&self, norm: &QuasiNorm) -> Result<()> {
        let d = norm.group().dim();
        match self {
            Domain::Whole { radius } if !(*radius > 0.0) => {
                Err(invalid("whole-group integrals need a positive support radius"))
            }
            Domain::Ball { center, radius } => {
                if !(*radius > 0.0) {
                    Err(invalid("ball radius must be positive"))
                } else if center.len() != d {
                    Err(invalid("ball center has the wrong dimension"))
                } else {
                    Ok(())
                }
            }
            Domain::Annulus { r_in, r_out } if !(*r_in >= 0.0 && r_in < r_out) => {
                Err(invalid("annulus needs 0 <= r_in < r_out"))
            }
            Domain::Box { center, half_widths } => {
                if center.len() != d || half_widths.len() != d {
                    Err(invalid("box has the wrong dimension"))
                } else if half_widths.iter().any(|h| !(*h > 0.0)) {
                    Err(invalid("box half-widths must be positive"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Radial range when the domain is a centred ball, annulus or truncated
    /// whole group.
    fn radial_range(&self) -> Option<(f64, f64)> {
        match self {
            Domain::Whole { radius } => Some((0.0, *radius)),
            Domain::Ball { center, radius } if center.iter().all(|c| *c == 0.0) => Some((0.0, *radius)),
            Domain::Annulus { r_in, r_out } => Some((*r_in, *r_out)),
            _ => None,
        }
    }

    fn bounding_box(&self, norm: &QuasiNorm) -> (Vec<f64>, Vec<f64>) {
        let g = norm.group();
        match self {
            Domain::Whole { radius } => (g.identity(), norm.box_half_widths(*radius)),
            Domain::Annulus { r_out, .. } => (g.identity(), norm.box_half_widths(*r_out)),
            Domain::Ball { center, radius } => {
                // B(c, R) = c·B(0, R); bound the twisted coordinates through
                // the group law applied to the corners of the centred box.
                let hw = norm.box_half_widths(*radius);
                if g.is_abelian() {
                    return (center.clone(), hw);
                }
                let d = g.dim();
                let mut lo = vec![f64::INFINITY; d];
                let mut hi = vec![f64::NEG_INFINITY; d];
                for mask in 0..(1usize << d) {
                    let corner: Vec<f64> = (0..d)
                        .map(|i| if mask >> i & 1 == 1 { hw[i] } else { -hw[i] })
                        .collect();
                    let p = g.law(center, &corner);
                    for i in 0..d {
                        lo[i] = lo[i].min(p[i]);
                        hi[i] = hi[i].max(p[i]);
                    }
                }
                let c = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
                let h = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (b - a)).collect();
                (c, h)
            }
            Domain::Box { center, half_widths } => (center.clone(), half_widths.clone()),
        }
    }

    fn contains(&self, norm: &QuasiNorm, x: &[f64], scratch: &mut Vec<f64>) -> bool {
        match self {
            Domain::Whole { radius } => norm.eval(x) < *radius,
            Domain::Annulus { r_in, r_out } => {
                let r = norm.eval(x);
                r >= *r_in && r < *r_out
            }
            Domain::Ball { center, radius } => {
                let g = norm.group();
                let ci = g.inv(center);
                scratch.resize(x.len(), 0.0);
                g.law_into(&ci, x, scratch);
                norm.eval(scratch) < *radius
            }
            Domain::Box { .. } => true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct QuadOptions {
    pub method: Option<Method>,
    /// Relative tolerance.
    pub tolerance: f64,
    /// Absolute floor below which an error estimate is always accepted.
    pub abs_tolerance: f64,
    /// Maximum integrand evaluations (MC: number of samples).
    pub budget: usize,
    pub seed: u64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            method: None,
            tolerance: 1e-8,
            abs_tolerance: 1e-300,
            budget: 200_000_000,
            seed: 0,
        }
    }
}

impl QuadOptions {
    pub fn with_method(mut self, m: Method) -> Self {
        self.method = Some(m);
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn accepts(&self, value: f64, err: f64) -> bool {
        err <= self.tolerance * value.abs() || err <= self.abs_tolerance
    }
}

// ---------------------------------------------------------------------------
// One-dimensional rules

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                z
            } else {
                p1
            };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

type Rule = Arc<(Vec<f64>, Vec<f64>)>;

fn cached_gl(n: usize) -> Rule {
    static CACHE: OnceLock<Mutex<Vec<(usize, Rule)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    let mut guard = cache.lock().expect("gauss-legendre cache");
    if let Some((_, r)) = guard.iter().find(|(k, _)| *k == n) {
        return r.clone();
    }
    let r = Arc::new(gauss_legendre(n));
    guard.push((n, r.clone()));
    r
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

/// Result of a one-dimensional integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line {
    pub value: f64,
    pub abs_error: f64,
    pub evals: usize,
    pub converged: bool,
    pub divergent: bool,
}

/// Globally adaptive Gauss–Kronrod 7/15 on a finite interval.
pub fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, abs_tol: f64, max_evals: usize) -> Line {
    if a == b {
        return Line {
            value: 0.0,
            abs_error: 0.0,
            evals: 0,
            converged: true,
            divergent: false,
        };
    }
    let mut parts: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = gk15(f, a, b);
    parts.push((a, b, v, e));
    let mut evals = 15;
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if !total.is_finite() {
            return Line {
                value: total,
                abs_error: f64::INFINITY,
                evals,
                converged: false,
                divergent: total.is_infinite(),
            };
        }
        if err <= rel_tol * total.abs() || err <= abs_tol {
            return Line {
                value: total,
                abs_error: err,
                evals,
                converged: true,
                divergent: false,
            };
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, _, _) = parts[idx];
        let mid = 0.5 * (lo + hi);
        if evals + 30 > max_evals || mid <= lo || mid >= hi || (hi - lo) < 1e-15 * lo.abs().max(hi.abs()) {
            return Line {
                value: total,
                abs_error: err,
                evals,
                converged: false,
                divergent: false,
            };
        }
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        evals += 30;
        parts[idx] = (lo, mid, v1, e1);
        parts.push((mid, hi, v2, e2));
    }
}

#[derive(Clone, Debug)]
pub struct RadialOptions {
    pub tolerance: f64,
    pub abs_tolerance: f64,
    /// Declares that a blow-up at r = 0 is expected; without it a growing
    /// integrand at the origin is reported as an accuracy failure.
    pub singular_origin: bool,
    /// Kinks or jumps of the integrand; pieces are split there.
    pub breakpoints: Vec<f64>,
    pub max_evals: usize,
}

impl Default for RadialOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            abs_tolerance: 1e-300,
            singular_origin: false,
            breakpoints: Vec::new(),
            max_evals: 5_000_000,
        }
    }
}

impl RadialOptions {
    pub fn singular(mut self) -> Self {
        self.singular_origin = true;
        self
    }

    pub fn with_breakpoints(mut self, b: Vec<f64>) -> Self {
        self.breakpoints = b;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }
}

struct PieceSum {
    total: f64,
    err: f64,
    evals: usize,
    history: Vec<f64>,
}

impl PieceSum {
    fn new() -> Self {
        Self {
            total: 0.0,
            err: 0.0,
            evals: 0,
            history: Vec::new(),
        }
    }
}

/// Integral of h over [lo, hi] split at the breakpoints inside it.
fn piece(h: &dyn Fn(f64) -> f64, lo: f64, hi: f64, opts: &RadialOptions, budget: usize) -> Line {
    let mut cuts = vec![lo];
    for &b in &opts.breakpoints {
        if b > lo && b < hi {
            cuts.push(b);
        }
    }
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    let mut out = Line {
        value: 0.0,
        abs_error: 0.0,
        evals: 0,
        converged: true,
        divergent: false,
    };
    for w in cuts.windows(2) {
        let l = adaptive(h, w[0], w[1], opts.tolerance * 0.1, opts.abs_tolerance, budget);
        out.value += l.value;
        out.abs_error += l.abs_error;
        out.evals += l.evals;
        out.converged &= l.converged;
        out.divergent |= l.divergent;
    }
    out
}

enum Graded {
    Done,
    Divergent,
    Stalled,
}

/// Sums dyadic pieces produced by `bounds(k)` until the geometric tail
/// estimate falls below tolerance.
fn graded_sum(
    h: &dyn Fn(f64) -> f64,
    bounds: &dyn Fn(usize) -> Option<(f64, f64)>,
    opts: &RadialOptions,
    acc: &mut PieceSum,
    scale_hint: f64,
) -> Result<Graded> {
    let mut k = 0;
    let mut zeros = 0;
    while let Some((lo, hi)) = bounds(k) {
        let l = piece(h, lo, hi, opts, opts.max_evals.saturating_sub(acc.evals).max(60));
        acc.evals += l.evals;
        if l.divergent || l.value.is_infinite() {
            return Ok(Graded::Divergent);
        }
        if l.value.is_nan() {
            return Err(Error::Evaluation { point: vec![lo, hi] });
        }
        acc.total += l.value;
        acc.err += l.abs_error;
        let c = l.value.abs();
        acc.history.push(c);
        k += 1;
        if c == 0.0 {
            zeros += 1;
            if zeros >= 3 {
                return Ok(Graded::Done);
            }
            continue;
        }
        zeros = 0;
        let n = acc.history.len();
        if n >= 4 {
            let r1 = acc.history[n - 1] / acc.history[n - 2].max(f64::MIN_POSITIVE);
            let r2 = acc.history[n - 2] / acc.history[n - 3].max(f64::MIN_POSITIVE);
            let rho = r1.max(r2);
            let target = (opts.tolerance * 0.1 * acc.total.abs().max(scale_hint)).max(opts.abs_tolerance);
            if rho < 0.97 {
                let tail = c * rho / (1.0 - rho);
                if tail <= target {
                    acc.err += tail;
                    return Ok(Graded::Done);
                }
            }
            if n >= 48 {
                let window = &acc.history[n - 24..];
                let mean_ratio = (window[23] / window[0]).powf(1.0 / 23.0);
                if mean_ratio >= 0.999 {
                    return Ok(Graded::Divergent);
                }
            }
        }
        if acc.evals >= opts.max_evals {
            return Ok(Graded::Stalled);
        }
    }
    // ran out of representable range
    let n = acc.history.len();
    if n >= 8 {
        let ratio = acc.history[n - 1] / acc.history[n - 8].max(f64::MIN_POSITIVE);
        if ratio >= 0.5 {
            return Ok(Graded::Divergent);
        }
    }
    Ok(Graded::Stalled)
}

/// ∫_a^b h(r) dr for 0 ≤ a < b ≤ ∞ with dyadic grading toward r = 0 (when
/// a = 0) and toward infinity (when b = ∞).
pub fn line_integral(h: &dyn Fn(f64) -> f64, a: f64, b: f64, opts: &RadialOptions) -> Result<Line> {
    if !(a >= 0.0) || !(b > a) {
        return Err(invalid(format!("radial range ({a}, {b}) is empty or negative")));
    }
    let mut acc = PieceSum::new();
    let mut status_parts = Vec::new();
    let lower_anchor = if b.is_finite() { b.min(1.0) } else { 1.0 };
    let upper_anchor = if a > 0.0 { a.max(1.0) } else { 1.0 };
    let mid_lo = if a == 0.0 { lower_anchor } else { a };
    let mid_hi = if b.is_infinite() { upper_anchor.max(mid_lo) } else { b };

    if mid_hi > mid_lo {
        let l = piece(h, mid_lo, mid_hi, opts, opts.max_evals);
        if l.value.is_nan() {
            return Err(Error::Evaluation {
                point: vec![mid_lo, mid_hi],
            });
        }
        if l.divergent {
            return Ok(Line {
                value: f64::INFINITY,
                abs_error: f64::INFINITY,
                evals: l.evals,
                converged: false,
                divergent: true,
            });
        }
        acc.total += l.value;
        acc.err += l.abs_error;
        acc.evals += l.evals;
        if !l.converged {
            status_parts.push(Graded::Stalled);
        }
    }
    let scale_hint = acc.total.abs();

    if a == 0.0 {
        if !opts.singular_origin {
            let near = h(lower_anchor * 2f64.powi(-30)).abs();
            let far = h(lower_anchor * 2f64.powi(-10)).abs();
            if near.is_nan() || near > 8.0 * far + 1e-300 && near > 1e3 * f64::EPSILON {
                return Err(Error::Accuracy {
                    message: "integrand grows at r = 0 and no integrable singularity was declared".into(),
                    partial: acc.total,
                    abs_error: f64::INFINITY,
                });
            }
        }
        let anchor = lower_anchor;
        let bounds = move |k: usize| {
            let hi = anchor * 0.5f64.powi(k as i32);
            let lo = hi * 0.5;
            (lo > 1e-300).then_some((lo, hi))
        };
        let mut sub = PieceSum::new();
        let st = graded_sum(h, &bounds, opts, &mut sub, scale_hint)?;
        acc.total += sub.total;
        acc.err += sub.err;
        acc.evals += sub.evals;
        status_parts.push(st);
    }
    if b.is_infinite() {
        let anchor = mid_hi;
        let bounds = move |k: usize| {
            let lo = anchor * 2f64.powi(k as i32);
            let hi = lo * 2.0;
            (hi < 1e300).then_some((lo, hi))
        };
        let mut sub = PieceSum::new();
        let st = graded_sum(h, &bounds, opts, &mut sub, scale_hint)?;
        acc.total += sub.total;
        acc.err += sub.err;
        acc.evals += sub.evals;
        status_parts.push(st);
    }
    if status_parts.iter().any(|s| matches!(s, Graded::Divergent)) {
        return Ok(Line {
            value: f64::INFINITY,
            abs_error: f64::INFINITY,
            evals: acc.evals,
            converged: false,
            divergent: true,
        });
    }
    let converged = !status_parts.iter().any(|s| matches!(s, Graded::Stalled))
        && (acc.err <= opts.tolerance * acc.total.abs() * 10.0 || acc.err <= opts.abs_tolerance.max(1e-300));
    Ok(Line {
        value: acc.total,
        abs_error: acc.err,
        evals: acc.evals,
        converged,
        divergent: false,
    })
}

/// ∫_{r_in<|x|<r_out} g(|x|) dx = |℘| ∫ g(r) r^{Q-1} dr.
pub fn radial_integral(
    g: &dyn Fn(f64) -> f64,
    r_in: f64,
    r_out: f64,
    norm: &QuasiNorm,
    opts: &RadialOptions,
) -> Result<IntegralEstimate> {
    let q = norm.homogeneous_dim();
    let sphere = norm.sphere_measure()?;
    let h = |r: f64| {
        let v = g(r);
        if v == 0.0 {
            0.0
        } else {
            v * r.powf(q - 1.0)
        }
    };
    let l = line_integral(&h, r_in, r_out, opts)?;
    if l.divergent {
        return Ok(IntegralEstimate::divergent(Method::Polar, l.evals));
    }
    if !l.converged {
        return Err(Error::Accuracy {
            message: format!("radial integral on ({r_in}, {r_out}) did not converge"),
            partial: sphere.value * l.value,
            abs_error: sphere.value * l.abs_error,
        });
    }
    Ok(IntegralEstimate {
        value: sphere.value * l.value,
        abs_error: sphere.value * l.abs_error + sphere.abs_error * l.value.abs(),
        method: Method::Polar,
        nodes: l.evals,
        divergent: false,
    })
}

/// A fixed one-dimensional rule on (a, b), composite Gauss–Legendre on a
/// dyadically graded mesh. Used when several functionals must be evaluated
/// on the same discrete measure so that pointwise inequalities between them
/// survive discretisation exactly.
#[derive(Clone, Debug)]
pub struct LineRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LineRule {
    /// Graded toward 0 over `levels` dyadic shells below min(b, 1), uniform
    /// panels above, all split at `breakpoints`.
    pub fn graded(b: f64, breakpoints: &[f64], levels: usize, order: usize) -> Self {
        let (gx, gw) = gauss_legendre(order);
        let anchor = b.min(1.0);
        let mut cuts: Vec<f64> = (0..=levels).map(|k| anchor * 0.5f64.powi(k as i32)).collect();
        if b > 1.0 {
            let panels = (b.log2().ceil() as usize * 4).max(4);
            let ratio = (b / anchor).powf(1.0 / panels as f64);
            for i in 1..=panels {
                cuts.push(anchor * ratio.powi(i as i32));
            }
        }
        cuts.extend(breakpoints.iter().copied().filter(|x| *x > 0.0 && *x < b));
        cuts.push(b);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * y.abs());
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let c = 0.5 * (lo + hi);
            let h = 0.5 * (hi - lo);
            for (x, wt) in gx.iter().zip(&gw) {
                nodes.push(c + h * x);
                weights.push(h * wt);
            }
        }
        Self { nodes, weights }
    }

    pub fn sum(&self, h: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(r, w)| w * h(*r)).sum()
    }
}

// ---------------------------------------------------------------------------
// Tensor grids

fn tensor_sum(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    center: &[f64],
    half_widths: &[f64],
    panels: usize,
    order: usize,
) -> Result<(f64, usize)> {
    let d = center.len();
    let gl = cached_gl(order);
    let per_axis = panels * order;
    let axis: Vec<Vec<(f64, f64)>> = (0..d)
        .map(|i| {
            let h = 2.0 * half_widths[i] / panels as f64;
            let mut v = Vec::with_capacity(per_axis);
            for p in 0..panels {
                let lo = center[i] - half_widths[i] + p as f64 * h;
                for (x, w) in gl.0.iter().zip(&gl.1) {
                    v.push((lo + 0.5 * h * (x + 1.0), 0.5 * h * w));
                }
            }
            v
        })
        .collect();
    let total_nodes = per_axis.pow(d as u32);
    let slab = |i0: usize| -> Result<f64> {
        let mut idx = vec![0usize; d];
        idx[0] = i0;
        let mut x = vec![0.0; d];
        let mut acc = 0.0;
        let inner = per_axis.pow(d as u32 - 1);
        for _ in 0..inner {
            let mut w = 1.0;
            for k in 0..d {
                x[k] = axis[k][idx[k]].0;
                w *= axis[k][idx[k]].1;
            }
            let v = f(&x);
            if v.is_nan() {
                return Err(Error::Evaluation { point: x });
            }
            acc += w * v;
            for k in (1..d).rev() {
                idx[k] += 1;
                if idx[k] < per_axis {
                    break;
                }
                idx[k] = 0;
            }
        }
        Ok(acc)
    };
    let parts: Vec<Result<f64>> = {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..per_axis).into_par_iter().map(slab).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..per_axis).map(slab).collect()
        }
    };
    let mut total = 0.0;
    for p in parts {
        total += p?;
    }
    Ok((total, total_nodes))
}

/// Composite Gauss–Legendre over a box, doubling panels until two levels
/// agree to tolerance.
pub fn grid_integrate(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    center: &[f64],
    half_widths: &[f64],
    opts: &QuadOptions,
) -> Result<IntegralEstimate> {
    let d = center.len();
    let order = 8;
    let mut panels = match d {
        1 => 8,
        2 => 4,
        _ => 2,
    };
    let (mut prev, mut nodes) = tensor_sum(f, center, half_widths, panels, order)?;
    let mut used = nodes;
    loop {
        let next_nodes = (2 * panels * order).pow(d as u32);
        if used + next_nodes > opts.budget {
            return Err(Error::Accuracy {
                message: "grid budget exhausted".into(),
                partial: prev,
                abs_error: f64::INFINITY,
            });
        }
        panels *= 2;
        let (cur, n) = tensor_sum(f, center, half_widths, panels, order)?;
        used += n;
        nodes = n;
        let err = (cur - prev).abs();
        if opts.accepts(cur, err) {
            return Ok(IntegralEstimate {
                value: cur,
                abs_error: err,
                method: Method::Grid,
                nodes,
                divergent: false,
            });
        }
        prev = cur;
    }
}

// ---------------------------------------------------------------------------
// Angular rule

/// Discrete measure on the unit quasi-sphere: directions with |y| = 1 and
/// weights summing to |℘|.
#[derive(Clone, Debug)]
pub struct AngularRule {
    pub dim: usize,
    pub dirs: Vec<f64>,
    pub weights: Vec<f64>,
    /// Relative discrepancy of the total weight against a coarser rule.
    pub rel_error: f64,
}

impl AngularRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn dir(&self, j: usize) -> &[f64] {
        &self.dirs[j * self.dim..(j + 1) * self.dim]
    }

    /// S(r) = ∫_℘ f(δ_r y) dσ(y).
    pub fn sphere_integral(&self, norm: &QuasiNorm, f: &dyn Fn(&[f64]) -> f64, r: f64) -> f64 {
        let g = norm.group();
        let mut x = vec![0.0; self.dim];
        let mut acc = 0.0;
        for j in 0..self.len() {
            g.dilate_into(r, self.dir(j), &mut x);
            acc += self.weights[j] * f(&x);
        }
        acc
    }
}

/// Radial weight of the angular rule. For the Euclidean and Kaplan norms
/// s⁸ and s⁴ are polynomials in the coordinates, so the weighted integrand
/// is smooth apart from a high-order zero at the identity.
pub fn shell_weight(s: f64) -> f64 {
    let s4 = s * s * s * s;
    s4 * s4 * (-s4).exp()
}

const SHELL_REACH: f64 = 2.65;

fn build_angular_rule(norm: &QuasiNorm, panels: usize) -> Result<AngularRule> {
    let g = norm.group();
    let d = g.dim();
    let q = norm.homogeneous_dim();
    // ∫₀^∞ s^{8+Q-1} e^{-s⁴} ds
    let k_chi = crate::special::gamma((8.0 + q) / 4.0) / 4.0;
    let hw = norm.box_half_widths(SHELL_REACH);
    let order = 8;
    let gl = cached_gl(order);
    let per_axis = panels * order;
    let axis: Vec<Vec<(f64, f64)>> = (0..d)
        .map(|i| {
            let h = 2.0 * hw[i] / panels as f64;
            (0..panels)
                .flat_map(|p| {
                    let lo = -hw[i] + p as f64 * h;
                    gl.0.iter()
                        .zip(&gl.1)
                        .map(move |(x, w)| (lo + 0.5 * h * (x + 1.0), 0.5 * h * w))
                        .collect::<Vec<_>>()
                })
                .collect()
        })
        .collect();
    let mut dirs = Vec::new();
    let mut weights = Vec::new();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut y = vec![0.0; d];
    for _ in 0..per_axis.pow(d as u32) {
        let mut w = 1.0;
        for k in 0..d {
            x[k] = axis[k][idx[k]].0;
            w *= axis[k][idx[k]].1;
        }
        let r = norm.eval(&x);
        let chi = shell_weight(r);
        if chi * w > 1e-18 {
            g.dilate_into(1.0 / r, &x, &mut y);
            dirs.extend_from_slice(&y);
            weights.push(w * chi / k_chi);
        }
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(AngularRule {
        dim: d,
        dirs,
        weights,
        rel_error: 0.0,
    })
}

fn default_panels(d: usize) -> usize {
    match d {
        1 => 16,
        2 => 16,
        3 => 8,
        _ => 4,
    }
}

/// Angular rule for `norm`, cached per (norm id, resolution).
pub fn angular_rule(norm: &QuasiNorm) -> Result<Arc<AngularRule>> {
    let d = norm.group().dim();
    // the max gauge has kinks on the sphere; refine where it is cheap
    let panels = match (norm.kind(), d) {
        (crate::group::NormKind::Max, 1 | 2) => 4 * default_panels(d),
        (crate::group::NormKind::Max, _) => default_panels(d) + 4,
        _ => default_panels(d),
    };
    angular_rule_with(norm, panels)
}

pub fn angular_rule_with(norm: &QuasiNorm, panels: usize) -> Result<Arc<AngularRule>> {
    type Cache = Mutex<Vec<(String, usize, Arc<AngularRule>)>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let key = norm.id();
    let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    if let Some((_, _, r)) = cache
        .lock()
        .expect("angular cache")
        .iter()
        .find(|(k, p, _)| *k == key && *p == panels)
    {
        return Ok(r.clone());
    }
    let mut fine = build_angular_rule(norm, panels)?;
    let coarse = build_angular_rule(norm, panels.saturating_sub(2).max(1))?;
    fine.rel_error = ((fine.total() - coarse.total()) / fine.total()).abs();
    let rule = Arc::new(fine);
    cache.lock().expect("angular cache").push((key, panels, rule.clone()));
    Ok(rule)
}

/// |℘| = Q·|B(0,1)|. The default path sums the angular rule; `Mc` estimates
/// |B(0,1)| by uniform sampling of the bounding box.
pub fn sphere_measure(norm: &QuasiNorm, opts: &QuadOptions) -> Result<IntegralEstimate> {
    let q = norm.homogeneous_dim();
    match opts.method {
        Some(Method::Mc) => {
            let ball = Domain::unit_ball(norm);
            let est = monte_carlo(&|_| 1.0, norm, &ball, opts)?;
            Ok(est.scaled(q))
        }
        Some(Method::Grid) => {
            let hw = norm.box_half_widths(1.0);
            let f = |x: &[f64]| if norm.eval(x) < 1.0 { 1.0 } else { 0.0 };
            let est = grid_integrate(&f, &norm.group().identity(), &hw, opts)?;
            Ok(est.scaled(q))
        }
        _ => {
            let rule = angular_rule(norm)?;
            let total = rule.total();
            let err = (rule.rel_error * total).max(total * 1e-13);
            if err > opts.tolerance.max(1e-6) * total {
                return Err(Error::Accuracy {
                    message: "angular rule not resolved".into(),
                    partial: total,
                    abs_error: err,
                });
            }
            Ok(IntegralEstimate {
                value: total,
                abs_error: err,
                method: Method::Polar,
                nodes: rule.len(),
                divergent: false,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Monte Carlo

pub fn monte_carlo(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    norm: &QuasiNorm,
    domain: &Domain,
    opts: &QuadOptions,
) -> Result<IntegralEstimate> {
    domain.validate(norm)?;
    let (center, hw) = domain.bounding_box(norm);
    let d = center.len();
    let volume: f64 = hw.iter().map(|h| 2.0 * h).product();
    let n = opts.budget.max(2);
    let batches = 64usize.min(n);
    let per = n / batches;
    let run = |b: usize| -> Result<(f64, f64, usize)> {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(b as u64 + 1);
        let mut x = vec![0.0; d];
        let mut scratch = Vec::new();
        let (mut s, mut s2) = (0.0, 0.0);
        let count = if b + 1 == batches { n - per * (batches - 1) } else { per };
        for _ in 0..count {
            for i in 0..d {
                x[i] = center[i] + hw[i] * rng.gen_range(-1.0..1.0);
            }
            let v = if domain.contains(norm, &x, &mut scratch) {
                let v = f(&x);
                if v.is_nan() {
                    return Err(Error::Evaluation { point: x });
                }
                v
            } else {
                0.0
            };
            s += v;
            s2 += v * v;
        }
        Ok((s, s2, count))
    };
    let parts: Vec<Result<(f64, f64, usize)>> = {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..batches).into_par_iter().map(run).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..batches).map(run).collect()
        }
    };
    let (mut s, mut s2, mut m) = (0.0, 0.0, 0usize);
    for p in parts {
        let (a, b, c) = p?;
        s += a;
        s2 += b;
        m += c;
    }
    let mean = s / m as f64;
    let var = (s2 / m as f64 - mean * mean).max(0.0);
    Ok(IntegralEstimate {
        value: volume * mean,
        abs_error: 2.58 * volume * (var / m as f64).sqrt(),
        method: Method::Mc,
        nodes: m,
        divergent: false,
    })
}

// ---------------------------------------------------------------------------
// Front door

fn polar_integrate(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    norm: &QuasiNorm,
    r_in: f64,
    r_out: f64,
    opts: &QuadOptions,
) -> Result<IntegralEstimate> {
    let rule = angular_rule(norm)?;
    let q = norm.homogeneous_dim();
    let bad: Mutex<Option<Vec<f64>>> = Mutex::new(None);
    let h = |r: f64| {
        let s = rule.sphere_integral(
            norm,
            &|x: &[f64]| {
                let v = f(x);
                if v.is_nan() {
                    *bad.lock().expect("nan slot") = Some(x.to_vec());
                    0.0
                } else {
                    v
                }
            },
            r,
        );
        s * r.powf(q - 1.0)
    };
    let ropts = RadialOptions {
        tolerance: opts.tolerance,
        abs_tolerance: opts.abs_tolerance,
        singular_origin: true,
        breakpoints: Vec::new(),
        max_evals: (opts.budget / rule.len().max(1)).max(100),
    };
    let l = line_integral(&h, r_in, r_out, &ropts)?;
    if let Some(p) = bad.into_inner().expect("nan slot") {
        return Err(Error::Evaluation { point: p });
    }
    let nodes = l.evals * rule.len();
    if l.divergent {
        return Ok(IntegralEstimate::divergent(Method::Polar, nodes));
    }
    let err = l.abs_error + rule.rel_error * l.value.abs();
    if !l.converged {
        return Err(Error::Accuracy {
            message: "polar integration did not converge".into(),
            partial: l.value,
            abs_error: err,
        });
    }
    Ok(IntegralEstimate {
        value: l.value,
        abs_error: err,
        method: Method::Polar,
        nodes,
        divergent: false,
    })
}

pub fn integrate(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    norm: &QuasiNorm,
    domain: &Domain,
    opts: &QuadOptions,
) -> Result<IntegralEstimate> {
    domain.validate(norm)?;
    if !(opts.tolerance > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    if opts.budget < 1 {
        return Err(invalid("budget must be at least 1"));
    }
    let method = opts.method.unwrap_or(if domain.radial_range().is_some() {
        Method::Polar
    } else {
        Method::Grid
    });
    match method {
        Method::Mc => monte_carlo(f, norm, domain, opts),
        Method::Polar => {
            let (a, b) = domain
                .radial_range()
                .ok_or_else(|| invalid("polar path needs a domain centred at the identity"))?;
            polar_integrate(f, norm, a, b, opts)
        }
        Method::Grid => {
            let (c, hw) = domain.bounding_box(norm);
            if matches!(domain, Domain::Box { .. }) {
                grid_integrate(f, &c, &hw, opts)
            } else {
                let g = |x: &[f64]| {
                    let mut scratch = Vec::new();
                    if domain.contains(norm, x, &mut scratch) {
                        f(x)
                    } else {
                        0.0
                    }
                };
                grid_integrate(&g, &c, &hw, opts)
            }
        }
    }
}

/// (∫|f|^p)^{1/p}; p = ∞ is the maximum over the grid or rule nodes.
pub fn lp_norm(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    p: f64,
    norm: &QuasiNorm,
    domain: &Domain,
    opts: &QuadOptions,
) -> Result<IntegralEstimate> {
    if p.is_infinite() {
        return sup_norm(f, norm, domain);
    }
    if !(p >= 1.0) {
        return Err(invalid(format!("Lp exponent {p} must be >= 1")));
    }
    let g = |x: &[f64]| {
        let v = f(x).abs();
        if v == 0.0 {
            0.0
        } else {
            v.powf(p)
        }
    };
    Ok(integrate(&g, norm, domain, opts)?.root(p))
}

fn sup_norm(f: &(dyn Fn(&[f64]) -> f64 + Sync), norm: &QuasiNorm, domain: &Domain) -> Result<IntegralEstimate> {
    domain.validate(norm)?;
    let (c, hw) = domain.bounding_box(norm);
    let d = c.len();
    let per_axis: usize = match d {
        1 => 4001,
        2 => 201,
        _ => 41,
    };
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut scratch = Vec::new();
    let mut best = 0.0f64;
    for _ in 0..per_axis.pow(d as u32) {
        for k in 0..d {
            x[k] = c[k] - hw[k] + 2.0 * hw[k] * idx[k] as f64 / (per_axis - 1) as f64;
        }
        if domain.contains(norm, &x, &mut scratch) {
            let v = f(&x);
            if v.is_nan() {
                return Err(Error::Evaluation { point: x });
            }
            best = best.max(v.abs());
        }
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(IntegralEstimate {
        value: best,
        abs_error: 0.0,
        method: Method::Grid,
        nodes: per_axis.pow(d as u32),
        divergent: false,
    })
}

// ---------------------------------------------------------------------------
// Continuous Minkowski inequality

#[derive(Clone, Debug, Serialize)]
pub struct MinkowskiReport {
    pub theta: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// ∫₀^∞ f₁(x)(∫₀ˣ f₂)^θ dx against (∫₀^∞ f₂(z)(∫_z^∞ f₁)^{1/θ} dz)^θ for
/// functions vanishing beyond `support`; `breakpoints` lists their jumps.
pub fn minkowski_check(
    f1: &dyn Fn(f64) -> f64,
    f2: &dyn Fn(f64) -> f64,
    theta: f64,
    support: f64,
    breakpoints: &[f64],
) -> Result<MinkowskiReport> {
    if !(theta >= 1.0) {
        return Err(invalid(format!("theta = {theta} must be >= 1")));
    }
    if !(support > 0.0) || !support.is_finite() {
        return Err(invalid("support must be positive and finite"));
    }
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|b| *b > 0.0 && *b < support)
        .collect();
    cuts.push(0.0);
    cuts.push(support);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let check_nonneg = |f: &dyn Fn(f64) -> f64| -> Result<()> {
        for w in cuts.windows(2) {
            for t in [0.1, 0.5, 0.9] {
                let x = w[0] + t * (w[1] - w[0]);
                if f(x) < 0.0 {
                    return Err(invalid(format!("function negative at {x}")));
                }
            }
        }
        Ok(())
    };
    check_nonneg(f1)?;
    check_nonneg(f2)?;
    let integral = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut s = 0.0;
        let mut lo = a;
        for &c in cuts.iter().filter(|c| **c > a && **c < b) {
            s += adaptive(f, lo, c, 1e-14, 1e-300, 200_000).value;
            lo = c;
        }
        s + adaptive(f, lo, b, 1e-14, 1e-300, 200_000).value
    };
    let lhs_inner = |x: f64| {
        let v = f1(x);
        if v == 0.0 {
            0.0
        } else {
            v * integral(f2, 0.0, x).powf(theta)
        }
    };
    let rhs_inner = |z: f64| {
        let v = f2(z);
        if v == 0.0 {
            0.0
        } else {
            v * integral(f1, z, support).powf(1.0 / theta)
        }
    };
    let lhs = integral(&lhs_inner, 0.0, support);
    let rhs = integral(&rhs_inner, 0.0, support).powf(theta);
    Ok(MinkowskiReport {
        theta,
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + 1e-8),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_on_polynomials() {
        let (x, w) = gauss_legendre(8);
        for k in 0..16 {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((s - exact).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn adaptive_smooth_and_kinked() {
        let l = adaptive(&|x: f64| x.exp(), 0.0, 1.0, 1e-13, 0.0, 100_000);
        assert!((l.value - (1f64.exp() - 1.0)).abs() < 1e-13);
        let l = adaptive(&|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-12, 0.0, 100_000);
        assert!((l.value - (0.045 + 0.245)).abs() < 1e-11);
    }

    #[test]
    fn line_integral_tails_and_origin() {
        let o = RadialOptions::default().singular();
        let l = line_integral(&|r: f64| (-r).exp(), 0.0, f64::INFINITY, &o).unwrap();
        assert!((l.value - 1.0).abs() < 1e-10, "{l:?}");
        let l = line_integral(&|r: f64| r.powf(-0.5), 0.0, 1.0, &o).unwrap();
        assert!((l.value - 2.0).abs() < 1e-9, "{l:?}");
        let l = line_integral(&|r: f64| r.powi(-2), 1.0, f64::INFINITY, &o).unwrap();
        assert!((l.value - 1.0).abs() < 1e-9, "{l:?}");
        let l = line_integral(&|r: f64| 1.0 / r, 0.0, 1.0, &o).unwrap();
        assert!(l.divergent);
        let l = line_integral(&|r: f64| 1.0 / r, 1.0, f64::INFINITY, &o).unwrap();
        assert!(l.divergent);
    }

    #[test]
    fn undeclared_singularity_is_an_error() {
        let e = line_integral(&|r: f64| r.powf(-0.5), 0.0, 1.0, &RadialOptions::default());
        assert!(matches!(e, Err(Error::Accuracy { .. })));
    }

    #[test]
    fn radial_examples() {
        let n = QuasiNorm::euclidean(2);
        let o = RadialOptions::default().singular();
        let r = 50.0f64;
        let est = radial_integral(&|s: f64| s.powi(-2), 1.0, r, &n, &o).unwrap();
        assert!((est.value - 2.0 * PI * r.ln()).abs() < 1e-8);
        let est = radial_integral(&|_| 1.0, 0.0, 1.0, &n, &o).unwrap();
        assert!((est.value - PI).abs() < 1e-8);
        let est = radial_integral(&|s: f64| s.powi(-2), 0.0, 1.0, &n, &o).unwrap();
        assert!(est.divergent);
    }

    #[test]
    fn sphere_measures() {
        let e2 = sphere_measure(&QuasiNorm::euclidean(2), &QuadOptions::default()).unwrap();
        assert!((e2.value - 2.0 * PI).abs() < 1e-8, "{e2:?}");
        let e1 = sphere_measure(&QuasiNorm::euclidean(1), &QuadOptions::default()).unwrap();
        assert!((e1.value - 2.0).abs() < 1e-10, "{e1:?}");
        let e3 = sphere_measure(&QuasiNorm::euclidean(3), &QuadOptions::default()).unwrap();
        assert!((e3.value - 4.0 * PI).abs() < 1e-6, "{e3:?}");
    }

    #[test]
    fn kaplan_sphere_measure_against_monte_carlo() {
        // |B| = ∫_{-1}^{1} π (1 - t²)^{1/2} dt = π²/2 for the Kaplan ball
        let n = QuasiNorm::kaplan(1).unwrap();
        let exact = 4.0 * PI * PI / 2.0;
        let rule = sphere_measure(&n, &QuadOptions::default()).unwrap();
        assert!((rule.value - exact).abs() < 1e-5 * exact, "{rule:?}");
        let mc = sphere_measure(
            &n,
            &QuadOptions::default()
                .with_method(Method::Mc)
                .with_budget(10_000_000)
                .with_seed(5),
        )
        .unwrap();
        assert!((mc.value - exact).abs() < 0.005 * exact, "{mc:?}");
        assert!((mc.value - rule.value).abs() < mc.abs_error + rule.abs_error);
    }

    #[test]
    fn max_norm_sphere_measure() {
        // unit ball of max_i |x_i|^{1/ν_i} is the box [-1,1]^n
        let n = QuasiNorm::parse("R:2:1,2", Some("max")).unwrap();
        let est = sphere_measure(&n, &QuadOptions::default().with_tolerance(1e-4)).unwrap();
        assert!((est.value - 12.0).abs() < 1e-3 * 12.0, "{est:?}");
    }

    #[test]
    fn gaussian_integral_all_paths() {
        let n = QuasiNorm::euclidean(2);
        let f = |x: &[f64]| (-(x[0] * x[0] + x[1] * x[1])).exp();
        let dom = Domain::whole(7.0);
        let polar = integrate(&f, &n, &dom, &QuadOptions::default()).unwrap();
        assert!((polar.value - PI).abs() < 1e-6, "{polar:?}");
        let grid = integrate(
            &f,
            &n,
            &Domain::Box {
                center: vec![0.0; 2],
                half_widths: vec![7.0; 2],
            },
            &QuadOptions::default().with_method(Method::Grid),
        )
        .unwrap();
        assert!((grid.value - PI).abs() < 1e-6, "{grid:?}");
        let mc = integrate(
            &f,
            &n,
            &dom,
            &QuadOptions::default().with_method(Method::Mc).with_budget(400_000),
        )
        .unwrap();
        assert!((mc.value - PI).abs() < mc.abs_error, "{mc:?}");
    }

    #[test]
    fn disk_area_and_zero_function() {
        let n = QuasiNorm::euclidean(2);
        let one = integrate(&|_| 1.0, &n, &Domain::unit_ball(&n), &QuadOptions::default()).unwrap();
        assert!((one.value - PI).abs() < 1e-6);
        let zero = integrate(&|_| 0.0, &n, &Domain::whole(3.0), &QuadOptions::default()).unwrap();
        assert_eq!(zero.value, 0.0);
        let l1 = lp_norm(&|_| 1.0, 1.0, &n, &Domain::unit_ball(&n), &QuadOptions::default()).unwrap();
        assert!((l1.value - PI).abs() < 1e-6);
    }

    #[test]
    fn nan_is_reported() {
        let n = QuasiNorm::euclidean(2);
        let e = integrate(
            &|x: &[f64]| if x[0] > 0.5 { f64::NAN } else { 1.0 },
            &n,
            &Domain::Box {
                center: vec![0.0; 2],
                half_widths: vec![1.0; 2],
            },
            &QuadOptions::default(),
        );
        assert!(matches!(e, Err(Error::Evaluation { .. })));
    }

    #[test]
    fn off_centre_ball_on_heisenberg() {
        // Haar measure is left invariant: |B(c, 1)| = |B(0, 1)|
        let n = QuasiNorm::kaplan(1).unwrap();
        let dom = Domain::Ball {
            center: vec![0.7, -0.4, 0.3],
            radius: 1.0,
        };
        let est = integrate(
            &|_| 1.0,
            &n,
            &dom,
            &QuadOptions::default()
                .with_method(Method::Mc)
                .with_budget(2_000_000)
                .with_seed(1),
        )
        .unwrap();
        let exact = PI * PI / 2.0;
        assert!((est.value - exact).abs() < est.abs_error.max(0.01 * exact), "{est:?}");
    }

    #[test]
    fn minkowski_examples() {
        let chi = |x: f64| if x < 1.0 { 1.0 } else { 0.0 };
        let r = minkowski_check(&chi, &chi, 2.0, 2.0, &[1.0]).unwrap();
        assert!((r.lhs - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.rhs - 4.0 / 9.0).abs() < 1e-10);
        assert!(r.holds);
        let r = minkowski_check(&chi, &chi, 1.0, 2.0, &[1.0]).unwrap();
        assert!((r.lhs - r.rhs).abs() < 1e-12);
        let r = minkowski_check(&chi, &|_| 0.0, 1.5, 2.0, &[1.0]).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        assert!(minkowski_check(&chi, &chi, 0.5, 2.0, &[]).is_err());
    }
}
