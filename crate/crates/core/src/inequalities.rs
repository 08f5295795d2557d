//! Admissibility predicates and ratio evaluators for the integral Hardy,
//! logarithmic Hardy, Hardy–Littlewood–Sobolev, Hardy–Sobolev,
//! Caffarelli–Kohn–Nirenberg and uncertainty inequalities.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::group::{NormKind, QuasiNorm};
use crate::kernels::{self, PeriodicBox};
use crate::quadrature::{self, IntegralEstimate, LineRule, Method, QuadOptions, RadialOptions};
use crate::special::euclidean_sphere_area;
use crate::trial::{make_family, TrialFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremId {
    IntHardy,
    LogHardy,
    Hls,
    HlsGraded,
    HardySobolev,
    Ckn,
    Uncertainty,
}

impl TheoremId {
    pub const ALL: [TheoremId; 7] = [
        TheoremId::IntHardy,
        TheoremId::LogHardy,
        TheoremId::Hls,
        TheoremId::HlsGraded,
        TheoremId::HardySobolev,
        TheoremId::Ckn,
        TheoremId::Uncertainty,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TheoremId::IntHardy => "int-hardy",
            TheoremId::LogHardy => "log-hardy",
            TheoremId::Hls => "hls",
            TheoremId::HlsGraded => "hls-graded",
            TheoremId::HardySobolev => "hardy-sobolev",
            TheoremId::Ckn => "ckn",
            TheoremId::Uncertainty => "uncertainty",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s.trim())
            .ok_or_else(|| invalid(format!("unknown theorem id '{s}'")))
    }

    fn required(self) -> &'static [&'static str] {
        match self {
            TheoremId::IntHardy | TheoremId::HardySobolev | TheoremId::Uncertainty => &["p", "q", "a", "b"],
            TheoremId::LogHardy => &["p", "q", "r"],
            TheoremId::Hls => &["p", "q", "lambda", "alpha"],
            TheoremId::HlsGraded => &["p", "q", "a", "b", "alpha", "beta", "lambda"],
            TheoremId::Ckn => &["p", "q", "r", "a", "beta", "gamma", "delta"],
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Named real parameters. Greek names are accepted and stored in ASCII.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Params(pub BTreeMap<String, f64>);

fn canonical(name: &str) -> &str {
    match name {
        "β" => "beta",
        "λ" => "lambda",
        "α" => "alpha",
        "γ" => "gamma",
        "δ" => "delta",
        "μ" => "mu",
        other => other,
    }
}

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: &[(&str, f64)]) -> Self {
        let mut p = Self::new();
        for (k, v) in pairs {
            p.set(k, *v);
        }
        p
    }

    pub fn set(&mut self, name: &str, v: f64) -> &mut Self {
        self.0.insert(canonical(name).to_string(), v);
        self
    }

    pub fn with(mut self, name: &str, v: f64) -> Self {
        self.set(name, v);
        self
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        self.0
            .get(canonical(name))
            .copied()
            .ok_or_else(|| invalid(format!("missing parameter '{name}'")))
    }
}

/// Convolution kernel for the integral Hardy inequalities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    /// |x|^{a−Q}
    Power,
    /// min(|x|^{a−Q}, |x|^{−Q}): the power near the identity, integrable tail.
    Clipped,
    /// Riesz potential of −Δ on ℝⁿ.
    Riesz,
    /// Bessel potential of −Δ on ℝⁿ.
    Bessel,
}

impl Kernel {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "power" => Ok(Kernel::Power),
            "clipped" => Ok(Kernel::Clipped),
            "riesz" => Ok(Kernel::Riesz),
            "bessel" => Ok(Kernel::Bessel),
            other => Err(invalid(format!("unknown kernel '{other}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct InequalitySpec {
    pub theorem: TheoremId,
    pub params: Params,
    pub norm: QuasiNorm,
    pub kernel: Option<Kernel>,
}

impl InequalitySpec {
    pub fn new(theorem: TheoremId, params: Params, norm: &QuasiNorm) -> Self {
        Self {
            theorem,
            params,
            norm: norm.clone(),
            kernel: None,
        }
    }

    pub fn with_kernel(mut self, k: Kernel) -> Self {
        self.kernel = Some(k);
        self
    }

    fn p(&self, name: &str) -> Result<f64> {
        self.params.get(name)
    }

    fn kernel(&self) -> Kernel {
        self.kernel.unwrap_or(match self.theorem {
            TheoremId::LogHardy => {
                if self.norm.kind() == NormKind::Euclidean && self.norm.group().is_abelian() {
                    Kernel::Bessel
                } else {
                    Kernel::Clipped
                }
            }
            _ => Kernel::Power,
        })
    }
}

/// Positivity conditions of the classical Euclidean CKN inequality for the
/// gradient case a = 1.
#[derive(Clone, Debug, Serialize)]
pub struct ClassicalCkn {
    pub positivity_holds: bool,
    pub violations: Vec<String>,
    /// Admissible here but outside the classical range.
    pub extension: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Admissibility {
    pub admissible: bool,
    pub violations: Vec<String>,
    pub classical: Option<ClassicalCkn>,
}

const EQ_TOL: f64 = 1e-10;

struct Checker {
    violations: Vec<String>,
}

impl Checker {
    fn need(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.violations.push(what.into());
        }
    }

    fn equal(&mut self, lhs: f64, rhs: f64, what: &str) {
        self.need(
            (lhs - rhs).abs() <= EQ_TOL * (1.0 + rhs.abs()),
            format!("{what} ({lhs} vs {rhs})"),
        );
    }
}

/// Checks the parameter constraints of the theorem instance.
pub fn admissible(spec: &InequalitySpec) -> Result<Admissibility> {
    for name in spec.theorem.required() {
        spec.p(name)?;
    }
    let q_dim = spec.norm.homogeneous_dim();
    let mut c = Checker { violations: Vec::new() };
    let mut classical = None;
    match spec.theorem {
        TheoremId::IntHardy | TheoremId::HardySobolev | TheoremId::Uncertainty => {
            let (p, q, a, b) = (spec.p("p")?, spec.p("q")?, spec.p("a")?, spec.p("b")?);
            c.need(p > 1.0, "1 < p");
            c.need(p <= q && q.is_finite(), "p <= q < inf");
            c.need(a > 0.0 && a < q_dim / p, "0 < a < Q/p");
            c.need((0.0..q_dim).contains(&b), "0 <= b < Q");
            c.equal(
                a / q_dim,
                1.0 / p - 1.0 / q + b / (q * q_dim),
                "a/Q = 1/p - 1/q + b/(qQ)",
            );
        }
        TheoremId::LogHardy => {
            let (p, q, r) = (spec.p("p")?, spec.p("q")?, spec.p("r")?);
            let pc = p / (p - 1.0);
            c.need(p > 1.0 && p < r && r.is_finite(), "1 < p < r < inf");
            c.need(p < q && q < (r - 1.0) * pc, "p < q < (r-1)p'");
        }
        TheoremId::Hls => {
            let (p, q, l, al) = (spec.p("p")?, spec.p("q")?, spec.p("lambda")?, spec.p("alpha")?);
            let pc = p / (p - 1.0);
            c.need(l > 0.0 && l < q_dim, "0 < lambda < Q");
            c.need(p > 1.0 && q > 1.0 && p.is_finite() && q.is_finite(), "1 < p, q < inf");
            c.equal(
                1.0 / p + 1.0 / q + (al + l) / q_dim,
                2.0,
                "1/p + 1/q + (alpha+lambda)/Q = 2",
            );
            c.need(al >= 0.0 && al < q_dim / pc, "0 <= alpha < Q/p'");
            c.need(al + l <= q_dim + EQ_TOL, "alpha + lambda <= Q");
        }
        TheoremId::HlsGraded => {
            let (p, q) = (spec.p("p")?, spec.p("q")?);
            let (a, b) = (spec.p("a")?, spec.p("b")?);
            let (al, be, l) = (spec.p("alpha")?, spec.p("beta")?, spec.p("lambda")?);
            let pc = p / (p - 1.0);
            c.need(p > 1.0 && q > 1.0 && p.is_finite() && q.is_finite(), "1 < p, q < inf");
            c.need(a >= 0.0 && a < q_dim / p, "0 <= a < Q/p");
            c.need(b >= 0.0 && b < q_dim / q, "0 <= b < Q/q");
            c.need(l > 0.0 && l < q_dim, "0 < lambda < Q");
            c.need(al >= 0.0 && al < a + q_dim / pc, "0 <= alpha < a + Q/p'");
            c.need(be >= 0.0 && be <= b, "0 <= beta <= b");
            c.equal(
                (q_dim - a * p) / (p * q_dim) + (q_dim - q * (b - be)) / (q * q_dim) + (al + l) / q_dim,
                2.0,
                "(Q-ap)/(pQ) + (Q-q(b-beta))/(qQ) + (alpha+lambda)/Q = 2",
            );
            c.need(al + l <= q_dim + EQ_TOL, "alpha + lambda <= Q");
        }
        TheoremId::Ckn => {
            let (p, q, r) = (spec.p("p")?, spec.p("q")?, spec.p("r")?);
            let (a, be, ga, de) = (spec.p("a")?, spec.p("beta")?, spec.p("gamma")?, spec.p("delta")?);
            c.need(p > 1.0 && q > 1.0 && p.is_finite() && q.is_finite(), "1 < p, q < inf");
            c.need(de > 0.0 && de <= 1.0, "delta in (0, 1]");
            c.need(r > 0.0 && r.is_finite(), "0 < r < inf");
            if de < 1.0 {
                c.need(r <= q / (1.0 - de) + EQ_TOL, "r <= q/(1-delta)");
            }
            c.need(a > 0.0 && a < q_dim / p, "0 < a < Q/p");
            c.need(
                de * r * (q_dim - a * p - be * p) <= p * (q_dim + r * ga - r * be) + EQ_TOL,
                "delta r (Q - ap - beta p) <= p(Q + r gamma - r beta)",
            );
            c.need(
                be * (1.0 - de) - de * a <= ga + EQ_TOL,
                "beta(1-delta) - delta a <= gamma",
            );
            c.need(ga <= be * (1.0 - de) + EQ_TOL, "gamma <= beta(1-delta)");
            c.equal(
                r * (de * q_dim + p * (be * (1.0 - de) - ga - a * de)) / (p * q_dim) + (1.0 - de) * r / q,
                1.0,
                "r(delta Q + p(beta(1-delta) - gamma - a delta))/(pQ) + (1-delta)r/q = 1",
            );
            let g = spec.norm.group();
            if a == 1.0 && g.is_abelian() && g.is_isotropic() {
                // classical form: weights |x|^0 on the gradient, |x|^β, |x|^γ
                let n = q_dim;
                let mut v = Vec::new();
                if !(1.0 / p > 0.0) {
                    v.push("1/p + a/n > 0".to_string());
                }
                if !(1.0 / q + be / n > 0.0) {
                    v.push("1/q + b/n > 0".to_string());
                }
                if !(1.0 / r + ga / n > 0.0) {
                    v.push("1/r + c/n > 0".to_string());
                }
                classical = Some(v);
            }
        }
    }
    let admissible = c.violations.is_empty();
    Ok(Admissibility {
        admissible,
        classical: classical.map(|v: Vec<String>| ClassicalCkn {
            positivity_holds: v.is_empty(),
            extension: admissible && !v.is_empty(),
            violations: v,
        }),
        violations: c.violations,
    })
}

// ---------------------------------------------------------------------------
// Evaluation helpers

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HlsMethod {
    /// Inner potential by a radial convolution; radial functions on ℝⁿ.
    Convolution,
    /// Importance-sampled Monte Carlo over the product domain.
    MonteCarlo,
}

#[derive(Clone, Debug)]
pub struct RatioOptions {
    pub quad: QuadOptions,
    /// Spectral box for fractional norms; defaults to the function's box.
    pub grid: Option<PeriodicBox>,
    pub hls: Option<HlsMethod>,
    pub pairs: usize,
    pub seed: u64,
}

impl Default for RatioOptions {
    fn default() -> Self {
        Self {
            quad: QuadOptions::default(),
            grid: None,
            hls: None,
            pairs: 1_000_000,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioReport {
    pub theorem: TheoremId,
    pub lhs: IntegralEstimate,
    pub rhs: IntegralEstimate,
    pub ratio: f64,
    pub ratio_error: f64,
    pub f_label: String,
    pub f_params: Vec<(String, f64)>,
    pub g_label: Option<String>,
    pub params: Params,
}

fn est(value: f64, abs_error: f64, method: Method) -> IntegralEstimate {
    IntegralEstimate {
        value,
        abs_error,
        method,
        nodes: 0,
        divergent: false,
    }
}

/// (∫ |f|^s |x|^w dx)^{1/s}.
fn weighted_norm(f: &TrialFunction, s: f64, w: f64, opts: &QuadOptions) -> Result<IntegralEstimate> {
    let e = if w == 0.0 {
        f.weighted_power_integral(s, None, opts)?
    } else {
        let weight = move |r: f64| r.powf(w);
        f.weighted_power_integral(s, Some(&weight), opts)?
    };
    if e.divergent {
        return Err(Error::Divergent(format!(
            "weighted integral of |{}|^{s}·|x|^{w} diverges",
            f.label()
        )));
    }
    Ok(e.root(s))
}

/// ‖(−Δ)^{a/2} f‖_p with a resolution-halving error estimate.
fn spectral_norm(f: &TrialFunction, a: f64, p: f64, grid: Option<PeriodicBox>) -> Result<IntegralEstimate> {
    if a == 0.0 {
        return f.lp_norm(p, &QuadOptions::default());
    }
    let g = f.norm().group();
    let fine = match grid {
        Some(b) => b,
        None => PeriodicBox::for_radius(g.dim(), f.decay_radius())?,
    };
    let v = kernels::trial_homogeneous_norm(f, a, p, Some(fine))?;
    let coarse = PeriodicBox::new(fine.n, (fine.m / 2).max(4) & !1, fine.side)?;
    let c = kernels::trial_homogeneous_norm(f, a, p, Some(coarse))?;
    Ok(IntegralEstimate {
        value: v,
        abs_error: (v - c).abs(),
        method: Method::Grid,
        nodes: fine.len(),
        divergent: false,
    })
}

fn is_euclidean_radial(f: &TrialFunction) -> bool {
    let n = f.norm();
    f.is_radial() && n.kind() == NormKind::Euclidean && n.group().is_abelian()
}

fn failure_slot() -> Mutex<Option<Error>> {
    Mutex::new(None)
}

fn keep(slot: &Mutex<Option<Error>>, e: Error) -> f64 {
    let mut s = slot.lock().expect("error slot");
    if s.is_none() {
        *s = Some(e);
    }
    0.0
}

fn take(slot: Mutex<Option<Error>>) -> Result<()> {
    match slot.into_inner().expect("error slot") {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn line(h: &dyn Fn(f64) -> f64, a: f64, b: f64, bps: Vec<f64>, tol: f64) -> Result<f64> {
    let opts = RadialOptions::default()
        .singular()
        .with_tolerance(tol)
        .with_breakpoints(bps);
    let l = quadrature::line_integral(h, a, b, &opts)?;
    if l.divergent {
        return Err(Error::Divergent(format!("integral over ({a}, {b}) diverges")));
    }
    if !l.converged {
        return Err(Error::Accuracy {
            message: format!("integral over ({a}, {b}) did not converge"),
            partial: l.value,
            abs_error: l.abs_error,
        });
    }
    Ok(l.value)
}

/// Radial kernel k(ρ) on ℝⁿ for a given order.
fn kernel_profile(kind: Kernel, n: usize, a: f64) -> Result<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
    let q = n as f64;
    Ok(match kind {
        Kernel::Power => Box::new(move |r: f64| r.powf(a - q)),
        Kernel::Clipped => Box::new(move |r: f64| if r < 1.0 { r.powf(a - q) } else { r.powf(-q) }),
        Kernel::Riesz => {
            let c = kernels::riesz_profile(n, a, 1.0)?;
            Box::new(move |r: f64| c * r.powf(a - q))
        }
        Kernel::Bessel => {
            let t = bessel_table(n, a)?;
            Box::new(move |r: f64| t.eval(r))
        }
    })
}

/// Bessel kernel tabulated as h(r) = G_a(r)/r^{a−n} on a logarithmic grid
/// and interpolated by four-point Lagrange in log r.
struct BesselTable {
    a: f64,
    n: usize,
    lo: f64,
    step: f64,
    logs: Vec<f64>,
}

const BESSEL_RMIN: f64 = 1e-8;
const BESSEL_RMAX: f64 = 80.0;

impl BesselTable {
    fn eval(&self, r: f64) -> f64 {
        if r >= BESSEL_RMAX {
            return 0.0;
        }
        let pw = r.powf(self.a - self.n as f64);
        let t = ((r.max(BESSEL_RMIN)).ln() - self.lo) / self.step;
        let i = (t.floor() as isize).clamp(1, self.logs.len() as isize - 3) as usize;
        let u = t - i as f64;
        let (y0, y1, y2, y3) = (self.logs[i - 1], self.logs[i], self.logs[i + 1], self.logs[i + 2]);
        let v = -u * (u - 1.0) * (u - 2.0) / 6.0 * y0 + (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0 * y1
            - (u + 1.0) * u * (u - 2.0) / 2.0 * y2
            + (u + 1.0) * u * (u - 1.0) / 6.0 * y3;
        pw * v.exp()
    }
}

fn bessel_table(n: usize, a: f64) -> Result<std::sync::Arc<BesselTable>> {
    type Cache = Mutex<Vec<(usize, u64, std::sync::Arc<BesselTable>)>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    if let Some(t) = cache
        .lock()
        .expect("bessel cache")
        .iter()
        .find(|(m, b, _)| *m == n && *b == a.to_bits())
    {
        return Ok(t.2.clone());
    }
    let points = 1600;
    let (lo, hi) = (BESSEL_RMIN.ln(), BESSEL_RMAX.ln());
    let step = (hi - lo) / (points - 1) as f64;
    let mut logs = Vec::with_capacity(points);
    for i in 0..points {
        let r = (lo + step * i as f64).exp();
        let v = kernels::bessel_profile(n, a, r)? / r.powf(a - n as f64);
        logs.push(v.max(1e-300).ln());
    }
    let t = std::sync::Arc::new(BesselTable { a, n, lo, step, logs });
    cache.lock().expect("bessel cache").push((n, a.to_bits(), t.clone()));
    Ok(t)
}

/// ∫_{ℝⁿ} g(|x − z|) k(|z|) dz at |x| = r, for a radial g supported in
/// |y| ≤ `reach` with the listed kinks.
pub fn euclidean_convolution(
    n: usize,
    g: &(dyn Fn(f64) -> f64 + Sync),
    kinks: &[f64],
    reach: f64,
    k: &(dyn Fn(f64) -> f64 + Sync),
    r: f64,
) -> Result<f64> {
    if n == 0 || !(reach > 0.0) || !reach.is_finite() {
        return Err(invalid("convolution needs n >= 1 and a finite reach"));
    }
    let dn = n as f64;
    let inner_tol = 1e-11;
    let slot = failure_slot();
    // angular average A(ρ) = ∫_{S^{n−1}} g(|r e₁ − ρω|) dσ(ω)
    let angular = |rho: f64| -> f64 {
        if r == 0.0 || rho == 0.0 {
            return euclidean_sphere_area(n) * g(r.max(rho));
        }
        match n {
            1 => g((r - rho).abs()) + g(r + rho),
            3 => {
                let (lo, hi) = ((r - rho).abs(), r + rho);
                if lo >= reach {
                    return 0.0;
                }
                let hi = hi.min(reach);
                let h = |s: f64| g(s) * s;
                let mut cuts = vec![lo];
                cuts.extend(kinks.iter().copied().filter(|c| *c > lo && *c < hi));
                cuts.push(hi);
                let mut acc = 0.0;
                for w in cuts.windows(2) {
                    let l = quadrature::adaptive(&h, w[0], w[1], inner_tol, 1e-300, 200_000);
                    acc += l.value;
                }
                2.0 * PI / (r * rho) * acc
            }
            _ => {
                let c = euclidean_sphere_area(n - 1);
                let h = |t: f64| {
                    let d2 = r * r + rho * rho - 2.0 * r * rho * t.cos();
                    g(d2.max(0.0).sqrt()) * t.sin().powi(n as i32 - 2)
                };
                let mut cuts = vec![0.0];
                for &kk in kinks.iter().chain(std::iter::once(&reach)) {
                    let cs = (r * r + rho * rho - kk * kk) / (2.0 * r * rho);
                    if cs.abs() < 1.0 {
                        cuts.push(cs.acos());
                    }
                }
                cuts.push(PI);
                cuts.sort_by(f64::total_cmp);
                let mut acc = 0.0;
                for w in cuts.windows(2) {
                    if w[1] > w[0] {
                        acc += quadrature::adaptive(&h, w[0], w[1], inner_tol, 1e-300, 200_000).value;
                    }
                }
                c * acc
            }
        }
    };
    let h = |rho: f64| {
        let a = angular(rho);
        if a == 0.0 {
            return 0.0;
        }
        let kv = k(rho);
        if !kv.is_finite() {
            return keep(&slot, Error::Evaluation { point: vec![rho] });
        }
        rho.powf(dn - 1.0) * kv * a
    };
    let mut bps: Vec<f64> = Vec::new();
    for &kk in kinks.iter().chain(std::iter::once(&reach)) {
        for c in [r - kk, kk - r, r + kk] {
            if c > 0.0 {
                bps.push(c);
            }
        }
    }
    if r > 0.0 {
        bps.push(r);
    }
    let v = line(&h, 0.0, r + reach, bps, 1e-9)?;
    take(slot)?;
    Ok(v)
}

fn reach_of(f: &TrialFunction) -> f64 {
    if f.is_compact() {
        f.support_radius()
    } else {
        f.decay_radius()
    }
}

fn profile_fn(f: &TrialFunction) -> impl Fn(f64) -> f64 + Sync + '_ {
    move |r: f64| f.profile(r).unwrap_or(0.0)
}

/// (∫ |f ∗ k|^q w(|x|) dx)^{1/q} over ℝⁿ for radial f. The weight enters
/// through `wt(t) = w(e^{−t})·e^{−nt}`, its product with the polar Jacobian
/// in the variable t = −ln r, so logarithmic weights stay finite near the
/// identity.
fn convolution_norm(
    f: &TrialFunction,
    kernel: &(dyn Fn(f64) -> f64 + Sync),
    q: f64,
    wt: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<IntegralEstimate> {
    if !is_euclidean_radial(f) {
        return Err(Error::Unsupported(
            "convolution ratios are evaluated for radial functions on ℝⁿ with the Euclidean norm".into(),
        ));
    }
    let norm = f.norm();
    let n = norm.group().dim();
    let dq = n as f64;
    let g = profile_fn(f);
    let kinks = f.kinks();
    let reach = reach_of(f);
    let slot = failure_slot();
    let conv_q = |r: f64| match euclidean_convolution(n, &g, &kinks, reach, kernel, r) {
        Ok(v) => v.abs().powf(q),
        Err(e) => keep(&slot, e),
    };
    let h = |r: f64| {
        let w = wt(-r.ln());
        if w == 0.0 {
            return 0.0;
        }
        conv_q(r) * w / r
    };
    // near the identity, integrate in t = −ln r ≥ t0
    let r0 = kinks.iter().copied().filter(|k| *k > 0.0).fold(reach, f64::min) / 16.0;
    let t0 = -r0.ln();
    let ht = |s: f64| {
        let t = s + t0;
        let w = wt(t);
        if w == 0.0 {
            return 0.0;
        }
        conv_q((-t).exp()) * w
    };
    let core = line(&ht, 0.0, f64::INFINITY, Vec::new(), 1e-8)?;
    // beyond `far` the convolution is replaced by its monopole term
    // M·k(r); the deviation measured at `far` bounds the tail error
    let far = 64.0 * reach;
    let near = core + line(&h, r0, far, kinks.clone(), 1e-7)?;
    take(slot)?;
    let area = euclidean_sphere_area(n);
    let moment = |r: f64| g(r) * r.powf(dq - 1.0);
    let mass = area * line(&moment, 0.0, reach, kinks.clone(), 1e-12)?;
    let exact_far = euclidean_convolution(n, &g, &kinks, reach, kernel, far)?;
    let mono_far = mass * kernel(far);
    let deviation = if mono_far == exact_far {
        0.0
    } else if exact_far == 0.0 {
        1.0
    } else {
        ((mono_far - exact_far) / exact_far).abs()
    };
    let mono = |r: f64| {
        let w = wt(-r.ln());
        if w == 0.0 {
            return 0.0;
        }
        (mass * kernel(r)).abs().powf(q) * w / r
    };
    let tail = line(&mono, far, f64::INFINITY, Vec::new(), 1e-9)?;
    let v = near + tail;
    let err = 1e-7 * v.abs() + q * deviation * tail.abs();
    let sphere = norm.sphere_measure()?;
    Ok(est(sphere.value * v, sphere.value * err, Method::Polar).root(q))
}

/// ln(e + e^t) without overflow.
fn ln_e_plus_exp(t: f64) -> f64 {
    if t > 1.0 {
        t + (1.0 - t).exp().ln_1p()
    } else {
        1.0 + (t - 1.0).exp().ln_1p()
    }
}

/// ∫∫ f(x)g(y) / (|x|^α |y⁻¹x|^λ |y|^β) dx dy.
#[allow(clippy::too_many_arguments)]
pub fn hls_form(
    f: &TrialFunction,
    g: &TrialFunction,
    alpha: f64,
    lambda: f64,
    beta: f64,
    method: HlsMethod,
    pairs: usize,
    seed: u64,
) -> Result<IntegralEstimate> {
    let norm = f.norm();
    if g.norm().id() != norm.id() {
        return Err(invalid("f and g live on different groups"));
    }
    let q = norm.homogeneous_dim();
    if !(lambda > 0.0 && lambda < q) || !(alpha >= 0.0 && alpha < q) || !(beta >= 0.0 && beta < q) {
        return Err(invalid("need 0 < lambda < Q and 0 <= alpha, beta < Q"));
    }
    match method {
        HlsMethod::Convolution => {
            if !is_euclidean_radial(f) || !is_euclidean_radial(g) {
                return Err(Error::Unsupported(
                    "the convolution route needs radial functions on ℝⁿ with the Euclidean norm".into(),
                ));
            }
            let n = norm.group().dim();
            let gb = |r: f64| {
                let v = g.profile(r).unwrap_or(0.0);
                if v == 0.0 || beta == 0.0 {
                    v
                } else {
                    v * r.powf(-beta)
                }
            };
            let kinks = g.kinks();
            let reach = reach_of(g);
            let k = move |r: f64| r.powf(-lambda);
            let slot = failure_slot();
            let h = |r: f64| {
                let fv = f.profile(r).unwrap_or(0.0);
                if fv == 0.0 {
                    return 0.0;
                }
                match euclidean_convolution(n, &gb, &kinks, reach, &k, r) {
                    Ok(v) => fv * r.powf(-alpha) * v * r.powf(q - 1.0),
                    Err(e) => keep(&slot, e),
                }
            };
            let mut bps = f.kinks();
            bps.extend(g.kinks());
            let v = line(&h, f.inner_radius(), reach_of(f), bps, 1e-8)?;
            take(slot)?;
            let sphere = norm.sphere_measure()?.value;
            Ok(est(sphere * v, 1e-8 * (sphere * v).abs(), Method::Polar))
        }
        HlsMethod::MonteCarlo => hls_monte_carlo(f, g, alpha, lambda, beta, pairs, seed),
    }
}

/// A point of the unit quasi-sphere distributed as dσ/|℘|.
fn sphere_point(norm: &QuasiNorm, hw: &[f64], rng: &mut ChaCha8Rng, u: &mut [f64], out: &mut [f64]) {
    let g = norm.group();
    loop {
        for (ui, h) in u.iter_mut().zip(hw) {
            *ui = rng.gen_range(-*h..*h);
        }
        let r = norm.eval(u);
        if r > 1e-12 && r < 1.0 {
            g.dilate_into(1.0 / r, u, out);
            return;
        }
    }
}

fn hls_monte_carlo(
    f: &TrialFunction,
    g: &TrialFunction,
    alpha: f64,
    lambda: f64,
    beta: f64,
    pairs: usize,
    seed: u64,
) -> Result<IntegralEstimate> {
    let norm = f.norm();
    let grp = norm.group();
    let d = grp.dim();
    let q = norm.homogeneous_dim();
    let (rf, rg) = (reach_of(f), reach_of(g));
    if !rf.is_finite() || !rg.is_finite() {
        return Err(invalid("Monte Carlo needs finite support or decay radii"));
    }
    let c0 = if norm.is_norm() { 1.0 } else { 2.0 };
    let rz = c0 * (rf + rg) * (1.0 + 1e-9);
    let sphere = norm.sphere_measure()?.value;
    // densities s^{Q−1−α} on (0, R_f] and t^{Q−1−λ} on (0, R_z] cancel the singular factors
    let kx = sphere * rf.powf(q - alpha) / (q - alpha);
    let kz = sphere * rz.powf(q - lambda) / (q - lambda);
    let hw = norm.box_half_widths(1.0);
    let chunk = 1 << 15;
    let chunks = pairs.div_ceil(chunk).max(1);
    let run = |c: usize| -> (f64, f64, usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let n = chunk
            .min(pairs.saturating_sub(c * chunk))
            .max(if pairs == 0 { 0 } else { 1 });
        let (mut u, mut w) = (vec![0.0; d], vec![0.0; d]);
        let (mut x, mut z, mut zi, mut y) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            sphere_point(norm, &hw, &mut rng, &mut u, &mut w);
            let s = rf * rng.gen::<f64>().powf(1.0 / (q - alpha));
            grp.dilate_into(s, &w, &mut x);
            sphere_point(norm, &hw, &mut rng, &mut u, &mut w);
            let t = rz * rng.gen::<f64>().powf(1.0 / (q - lambda));
            grp.dilate_into(t, &w, &mut z);
            let fx = f.eval(&x);
            if fx == 0.0 {
                continue;
            }
            zi.copy_from_slice(&grp.inv(&z));
            grp.law_into(&x, &zi, &mut y);
            let gy = g.eval(&y);
            if gy == 0.0 {
                continue;
            }
            let wy = if beta == 0.0 { 1.0 } else { norm.eval(&y).powf(-beta) };
            let v = fx * gy * wy;
            s1 += v;
            s2 += v * v;
        }
        (s1, s2, n)
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<(f64, f64, usize)> = {
        use rayon::prelude::*;
        (0..chunks).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<(f64, f64, usize)> = (0..chunks).map(run).collect();
    let (mut s1, mut s2, mut n) = (0.0, 0.0, 0usize);
    for (a, b, m) in parts {
        s1 += a;
        s2 += b;
        n += m;
    }
    let nf = n.max(1) as f64;
    let mean = s1 / nf;
    let var = (s2 / nf - mean * mean).max(0.0);
    Ok(IntegralEstimate {
        value: kx * kz * mean,
        abs_error: kx * kz * (var / nf).sqrt(),
        method: Method::Mc,
        nodes: n,
        divergent: false,
    })
}

fn finish(
    spec: &InequalitySpec,
    f: &TrialFunction,
    g: Option<&TrialFunction>,
    lhs: IntegralEstimate,
    rhs: IntegralEstimate,
) -> Result<RatioReport> {
    if !(rhs.value.abs() >= 1e-14) {
        return Err(Error::Degenerate(format!(
            "right-hand side {} of {} is below 1e-14 for '{}'",
            rhs.value,
            spec.theorem,
            f.label()
        )));
    }
    let ratio = lhs.value / rhs.value;
    let rel = |e: &IntegralEstimate| {
        if e.value == 0.0 {
            0.0
        } else {
            (e.abs_error / e.value).abs()
        }
    };
    Ok(RatioReport {
        theorem: spec.theorem,
        ratio_error: ratio.abs() * (rel(&lhs) + rel(&rhs)),
        lhs,
        rhs,
        ratio,
        f_label: f.label().to_string(),
        f_params: f.params().to_vec(),
        g_label: g.map(|g| g.label().to_string()),
        params: spec.params.clone(),
    })
}

fn mul(a: &IntegralEstimate, b: &IntegralEstimate) -> IntegralEstimate {
    IntegralEstimate {
        value: a.value * b.value,
        abs_error: a.abs_error * b.value.abs() + b.abs_error * a.value.abs(),
        method: a.method,
        nodes: a.nodes + b.nodes,
        divergent: a.divergent || b.divergent,
    }
}

fn powe(a: &IntegralEstimate, t: f64) -> IntegralEstimate {
    if t == 1.0 {
        return a.clone();
    }
    let v = a.value.powf(t);
    IntegralEstimate {
        value: v,
        abs_error: if a.value == 0.0 {
            0.0
        } else {
            (t * v * a.abs_error / a.value).abs()
        },
        method: a.method,
        nodes: a.nodes,
        divergent: a.divergent,
    }
}

/// LHS/RHS of the inequality for f (and g for the bilinear forms; g = f
/// when omitted).
pub fn ratio(
    spec: &InequalitySpec,
    f: &TrialFunction,
    g: Option<&TrialFunction>,
    opts: &RatioOptions,
) -> Result<RatioReport> {
    let adm = admissible(spec)?;
    if !adm.admissible {
        return Err(Error::Precondition(format!(
            "{} parameters are not admissible: {}",
            spec.theorem,
            adm.violations.join("; ")
        )));
    }
    if f.norm().id() != spec.norm.id() {
        return Err(invalid("trial function and inequality live on different groups"));
    }
    let q_dim = spec.norm.homogeneous_dim();
    let quad = &opts.quad;
    match spec.theorem {
        TheoremId::IntHardy => {
            let (p, q, a, b) = (spec.p("p")?, spec.p("q")?, spec.p("a")?, spec.p("b")?);
            let n = spec.norm.group().dim();
            let k = kernel_profile(spec.kernel(), n, a)?;
            // w(r) = r^{−b}
            let wt = move |t: f64| (t * (b - n as f64)).exp();
            let lhs = convolution_norm(f, &*k, q, &wt)?;
            let rhs = f.lp_norm(p, quad)?;
            finish(spec, f, None, lhs, rhs)
        }
        TheoremId::LogHardy => {
            let (p, q, r) = (spec.p("p")?, spec.p("q")?, spec.p("r")?);
            let n = spec.norm.group().dim();
            let k = kernel_profile(spec.kernel(), n, q_dim / p)?;
            // w(x) = ln(e + 1/x)^{−r} x^{−Q}
            let wt = move |t: f64| ln_e_plus_exp(t).powf(-r) * (t * (q_dim - n as f64)).exp();
            let lhs = convolution_norm(f, &*k, q, &wt)?;
            let rhs = f.lp_norm(p, quad)?;
            finish(spec, f, None, lhs, rhs)
        }
        TheoremId::Hls | TheoremId::HlsGraded => {
            let g = g.unwrap_or(f);
            let (p, q) = (spec.p("p")?, spec.p("q")?);
            let (al, l) = (spec.p("alpha")?, spec.p("lambda")?);
            let be = if spec.theorem == TheoremId::HlsGraded {
                spec.p("beta")?
            } else {
                0.0
            };
            let method = opts.hls.unwrap_or(if is_euclidean_radial(f) && is_euclidean_radial(g) {
                HlsMethod::Convolution
            } else {
                HlsMethod::MonteCarlo
            });
            let mut lhs = hls_form(f, g, al, l, be, method, opts.pairs, opts.seed)?;
            lhs.value = lhs.value.abs();
            let rhs = if spec.theorem == TheoremId::Hls {
                mul(&f.lp_norm(p, quad)?, &g.lp_norm(q, quad)?)
            } else {
                let (a, b) = (spec.p("a")?, spec.p("b")?);
                mul(&spectral_norm(f, a, p, opts.grid)?, &spectral_norm(g, b, q, opts.grid)?)
            };
            finish(spec, f, Some(g), lhs, rhs)
        }
        TheoremId::HardySobolev => {
            let (p, q, a, b) = (spec.p("p")?, spec.p("q")?, spec.p("a")?, spec.p("b")?);
            let lhs = weighted_norm(f, q, -b, quad)?;
            let rhs = spectral_norm(f, a, p, opts.grid)?;
            finish(spec, f, None, lhs, rhs)
        }
        TheoremId::Ckn => {
            let (p, q, r) = (spec.p("p")?, spec.p("q")?, spec.p("r")?);
            let (a, be, ga, de) = (spec.p("a")?, spec.p("beta")?, spec.p("gamma")?, spec.p("delta")?);
            let lhs = weighted_norm(f, r, ga * r, quad)?;
            let grad = powe(&spectral_norm(f, a, p, opts.grid)?, de);
            let rhs = if de == 1.0 {
                grad
            } else {
                mul(&grad, &powe(&weighted_norm(f, q, be * q, quad)?, 1.0 - de))
            };
            finish(spec, f, None, lhs, rhs)
        }
        TheoremId::Uncertainty => {
            let (p, q, a, b) = (spec.p("p")?, spec.p("q")?, spec.p("a")?, spec.p("b")?);
            let qc = q / (q - 1.0);
            let mass = powe(&weighted_norm(f, 2.0, 0.0, quad)?, 2.0);
            let rhs = mul(
                &spectral_norm(f, a, p, opts.grid)?,
                &weighted_norm(f, qc, b / q * qc, quad)?,
            );
            finish(spec, f, None, mass, rhs)
        }
    }
}

/// ‖f‖_q / ‖(−Δ)^{a/2} f‖_p, evaluated independently of the weighted path.
pub fn sobolev_ratio(f: &TrialFunction, p: f64, q: f64, a: f64, opts: &RatioOptions) -> Result<f64> {
    let lhs = f.lp_norm(q, &opts.quad)?;
    let rhs = spectral_norm(f, a, p, opts.grid)?;
    Ok(lhs.value / rhs.value)
}

/// The Hölder step of the uncertainty principle on one discrete measure:
/// ‖f/|x|^{b/q}‖_q·‖|x|^{b/q}f‖_{q′} ≥ ∫|f|².
#[derive(Clone, Debug, Serialize)]
pub struct UncertaintyChain {
    pub hardy_side: f64,
    pub weight_side: f64,
    pub product: f64,
    pub mass: f64,
    /// product − mass, nonnegative up to rounding.
    pub defect: f64,
    pub holds: bool,
}

pub fn uncertainty_chain(f: &TrialFunction, q: f64, b: f64) -> Result<UncertaintyChain> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(invalid("need 1 < q < inf"));
    }
    let norm = f.norm();
    let qd = norm.homogeneous_dim();
    let qc = q / (q - 1.0);
    let s = b / q;
    let outer = reach_of(f);
    if !outer.is_finite() {
        return Err(invalid("the chain needs a finite support or decay radius"));
    }
    let rule = LineRule::graded(outer, &f.kinks(), 60, 12);
    // one discrete measure carries every functional, so Hölder holds exactly
    let split: Vec<(f64, f64, f64)> = if f.is_radial() {
        let sphere = norm.sphere_measure()?.value;
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .map(|(r, w)| (*r, w * sphere * r.powf(qd - 1.0), f.profile(*r).unwrap_or(0.0).abs()))
            .collect()
    } else {
        let ang = quadrature::angular_rule_with(norm, 8)?;
        let grp = norm.group();
        let mut x = vec![0.0; grp.dim()];
        let mut out = Vec::with_capacity(rule.nodes.len() * ang.len());
        for (r, w) in rule.nodes.iter().zip(&rule.weights) {
            for j in 0..ang.len() {
                grp.dilate_into(*r, ang.dir(j), &mut x);
                out.push((*r, w * ang.weights[j] * r.powf(qd - 1.0), f.eval(&x).abs()));
            }
        }
        out
    };
    let integ = |h: &dyn Fn(f64, f64) -> f64| -> f64 {
        split
            .iter()
            .map(|(r, mu, v)| if *v == 0.0 { 0.0 } else { mu * h(*r, *v) })
            .sum()
    };
    let hardy_side = integ(&|r, v| (v * r.powf(-s)).powf(q)).powf(1.0 / q);
    let weight_side = integ(&|r, v| (v * r.powf(s)).powf(qc)).powf(1.0 / qc);
    let mass = integ(&|_, v| v * v);
    let product = hardy_side * weight_side;
    let defect = product - mass;
    Ok(UncertaintyChain {
        hardy_side,
        weight_side,
        product,
        mass,
        defect,
        holds: defect >= -1e-10 * mass.abs().max(1e-300),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ReversedHlsRow {
    pub r: f64,
    pub numeric: f64,
    pub closed_form: f64,
    pub rel_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReversedHlsTable {
    pub lambda: f64,
    pub p: f64,
    pub rows: Vec<ReversedHlsRow>,
    pub agrees: bool,
    pub decreasing: bool,
}

/// The ratio 2∫|x|^λ f_R / (∫ f_R^p)^{1/p} with p = Q/(Q+λ) and
/// f_R = |x|^{−(Q+λ)} on 1 < |x| < R, against 2(|℘| ln R)^{−λ/Q}.
pub fn reversed_hls_demo(norm: &QuasiNorm, lambda: f64, radii: &[f64]) -> Result<ReversedHlsTable> {
    let q = norm.homogeneous_dim();
    if !norm.group().is_abelian() {
        return Err(Error::Unsupported(
            "the reversed-HLS table is built on abelian groups".into(),
        ));
    }
    if !(lambda > 0.0 && lambda < q) {
        return Err(invalid(format!("lambda = {lambda} must lie in (0, Q)")));
    }
    let p = q / (q + lambda);
    let fam = make_family("reversed-hls", norm)?;
    let sphere = norm.sphere_measure()?.value;
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(r > 1.0) {
            return Err(invalid(format!("R = {r} must exceed 1")));
        }
        let f = fam.member(&[lambda, r])?;
        let ropts = RadialOptions::default()
            .with_tolerance(1e-12)
            .with_breakpoints(f.kinks());
        let g1 = |t: f64| t.powf(lambda) * f.profile(t).unwrap_or(0.0);
        let num = quadrature::radial_integral(&g1, 1.0, r, norm, &ropts)?;
        let gp = |t: f64| f.profile(t).unwrap_or(0.0).powf(p);
        let den = quadrature::radial_integral(&gp, 1.0, r, norm, &ropts)?;
        let numeric = 2.0 * num.value / den.value.powf(1.0 / p);
        let closed_form = 2.0 * (sphere * r.ln()).powf(-lambda / q);
        rows.push(ReversedHlsRow {
            r,
            numeric,
            closed_form,
            rel_error: (numeric - closed_form).abs() / closed_form,
        });
    }
    let agrees = rows.iter().all(|w| w.rel_error <= 0.05);
    let decreasing = rows.windows(2).all(|w| w[1].r <= w[0].r || w[1].numeric < w[0].numeric);
    Ok(ReversedHlsTable {
        lambda,
        p,
        rows,
        agrees,
        decreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn gaussian(n: &QuasiNorm, s: f64) -> TrialFunction {
        make_family("gaussian", n).unwrap().member(&[s]).unwrap()
    }

    #[test]
    fn admissibility_examples() {
        let r2 = QuasiNorm::euclidean(2);
        let s = InequalitySpec::new(
            TheoremId::IntHardy,
            Params::from_pairs(&[("p", 2.0), ("q", 2.0), ("a", 0.5), ("b", 1.0)]),
            &r2,
        );
        assert!(admissible(&s).unwrap().admissible);
        let s = InequalitySpec::new(
            TheoremId::Hls,
            Params::from_pairs(&[("p", 4.0 / 3.0), ("q", 4.0 / 3.0), ("lambda", 1.0), ("alpha", 0.0)]),
            &r2,
        );
        assert!(admissible(&s).unwrap().admissible);
        let s = InequalitySpec::new(
            TheoremId::Ckn,
            Params::from_pairs(&[
                ("p", 2.0),
                ("q", 2.0),
                ("r", 2.0),
                ("a", 1.0),
                ("β", 0.0),
                ("γ", 0.1),
                ("δ", 1.0),
            ]),
            &r2,
        );
        let v = admissible(&s).unwrap();
        assert!(!v.admissible);
        assert!(v.violations.iter().any(|m| m.starts_with("gamma <= beta(1-delta)")));
        let missing = InequalitySpec::new(TheoremId::Hls, Params::from_pairs(&[("p", 2.0)]), &r2);
        assert!(matches!(admissible(&missing), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn ckn_extension_flag() {
        // p = q = r = 2 < n = 3, a = 1, β = −2 ≤ −n/p, γ = β(1−δ) − δ
        let r3 = QuasiNorm::euclidean(3);
        let (de, be) = (0.5, -2.0);
        let s = InequalitySpec::new(
            TheoremId::Ckn,
            Params::from_pairs(&[
                ("p", 2.0),
                ("q", 2.0),
                ("r", 2.0),
                ("a", 1.0),
                ("beta", be),
                ("gamma", be * (1.0 - de) - de),
                ("delta", de),
            ]),
            &r3,
        );
        let v = admissible(&s).unwrap();
        assert!(v.admissible, "{v:?}");
        assert!(v.classical.unwrap().extension);
    }

    #[test]
    fn hardy_sobolev_gaussian() {
        let r3 = QuasiNorm::euclidean(3);
        let s = InequalitySpec::new(
            TheoremId::HardySobolev,
            Params::from_pairs(&[("p", 2.0), ("q", 2.0), ("a", 1.0), ("b", 2.0)]),
            &r3,
        );
        let f = gaussian(&r3, 1.0);
        let rep = ratio(&s, &f, None, &RatioOptions::default()).unwrap();
        assert!((rep.ratio - (4.0f64 / 3.0).sqrt()).abs() < 1e-3, "{rep:?}");
        // δ = 1 CKN is the same inequality
        let c = InequalitySpec::new(
            TheoremId::Ckn,
            Params::from_pairs(&[
                ("p", 2.0),
                ("q", 2.0),
                ("r", 2.0),
                ("a", 1.0),
                ("beta", 0.0),
                ("gamma", -1.0),
                ("delta", 1.0),
            ]),
            &r3,
        );
        let rc = ratio(&c, &f, None, &RatioOptions::default()).unwrap();
        assert!((rc.ratio - rep.ratio).abs() < 1e-10);
        let scaled = ratio(&s, &f.scaled(-3.5), None, &RatioOptions::default()).unwrap();
        assert!((scaled.ratio - rep.ratio).abs() < 1e-12 * rep.ratio);
    }

    #[test]
    fn euclidean_convolution_of_indicator() {
        // χ_{|y|<1} ∗ 1 = |B| in every dimension
        for n in 1..=4 {
            let g = |r: f64| if r < 1.0 { 1.0 } else { 0.0 };
            let one = |_r: f64| 1.0;
            let v = euclidean_convolution(n, &g, &[], 1.0, &one, 0.3).unwrap();
            let vol = euclidean_sphere_area(n) / n as f64;
            assert!((v - vol).abs() < 1e-7 * vol, "n={n} {v} {vol}");
        }
    }

    #[test]
    fn hls_routes_agree() {
        let r2 = QuasiNorm::euclidean(2);
        let f = make_family("bump", &r2).unwrap().member(&[1.0]).unwrap();
        let g = make_family("bump", &r2).unwrap().member(&[0.7]).unwrap();
        let c = hls_form(&f, &g, 0.3, 1.0, 0.0, HlsMethod::Convolution, 0, 0).unwrap();
        let m = hls_form(&f, &g, 0.3, 1.0, 0.0, HlsMethod::MonteCarlo, 400_000, 7).unwrap();
        assert!(
            (c.value - m.value).abs() < 5.0 * m.abs_error + 1e-3 * c.value,
            "{c:?} {m:?}"
        );
    }

    #[test]
    fn uncertainty_chain_holds() {
        let r3 = QuasiNorm::euclidean(3);
        for s in [0.5, 1.0, 2.0] {
            let c = uncertainty_chain(&gaussian(&r3, s), 2.0, 1.0).unwrap();
            assert!(c.holds, "{c:?}");
        }
    }

    #[test]
    fn reversed_table() {
        let r2 = QuasiNorm::euclidean(2);
        let t = reversed_hls_demo(&r2, 1.0, &[E, 100.0, 1e4]).unwrap();
        assert!(t.agrees && t.decreasing, "{t:?}");
        assert!((t.rows[0].closed_form - 0.79788).abs() < 1e-5);
        assert!((t.rows[1].closed_form - 0.371806).abs() < 1e-6);
        assert!(reversed_hls_demo(&r2, 1.0, &[1.0]).is_err());
    }
}
