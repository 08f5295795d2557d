//! Truncated exponentials, Trudinger–Moser functionals and their constants.

use std::f64::consts::{E, PI};
use std::sync::{Arc, Mutex, OnceLock};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::group::QuasiNorm;
use crate::kernels::{self, PeriodicBox};
use crate::quadrature::{self, Domain, IntegralEstimate, LineRule, Method, QuadOptions, RadialOptions};
use crate::special::{self, ln_factorial};
use crate::trial::{grad_q_norm, horizontal_gradient_norm, TrialFunction};

/// c_Q = ∫_℘ |∇_H N|^Q dσ for the attached norm N, on the angular rule with
/// the horizontal gradient taken by central differences.
pub fn c_q(norm: &QuasiNorm) -> Result<IntegralEstimate> {
    type Cache = Mutex<Vec<(String, IntegralEstimate)>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    let key = norm.id();
    if let Some((_, v)) = cache.lock().expect("c_Q cache").iter().find(|(k, _)| *k == key) {
        return Ok(v.clone());
    }
    crate::trial::horizontal_layer(norm)?;
    let rule: Arc<quadrature::AngularRule> = quadrature::angular_rule(norm)?;
    let q = norm.homogeneous_dim();
    let n = |x: &[f64]| norm.eval(x);
    let mut total = 0.0;
    for j in 0..rule.len() {
        let g = horizontal_gradient_norm(norm, &n, rule.dir(j))?;
        total += rule.weights[j] * g.powf(q);
    }
    let est = IntegralEstimate {
        value: total,
        abs_error: total * rule.rel_error.max(1e-12),
        method: Method::Polar,
        nodes: rule.len(),
        divergent: false,
    };
    cache.lock().expect("c_Q cache").push((key, est.clone()));
    Ok(est)
}

// ---------------------------------------------------------------------------
// Truncated exponential

fn conj(p: f64) -> f64 {
    p / (p - 1.0)
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(invalid(format!("p = {p} must lie in (1, inf)")));
    }
    Ok(())
}

/// Smallest integer k with k ≥ p − 1; the terms 0 ≤ k < p − 1 are dropped.
pub fn first_kept(p: f64) -> usize {
    let m = p - 1.0;
    let r = m.round();
    if (m - r).abs() <= 1e-12 * m.abs().max(1.0) {
        r as usize
    } else {
        m.ceil() as usize
    }
}

/// Neumaier-compensated accumulator.
#[derive(Default)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

fn exponent_arg(p: f64, alpha: f64, t: f64) -> Result<f64> {
    check_p(p)?;
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(invalid(format!("alpha = {alpha} must be finite and >= 0")));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid(format!("t = {t} must be finite and >= 0")));
    }
    let u = alpha * t.powf(conj(p));
    if u > 700.0 {
        return Err(Error::Range(format!(
            "alpha·t^p' = {u:.6e} exceeds 700; exp would overflow (alpha = {alpha}, t = {t}, p = {p})"
        )));
    }
    Ok(u)
}

/// Σ_{k ≥ k₀} u^k/k! summed term by term.
fn tail_series(u: f64, k0: usize) -> f64 {
    if u == 0.0 {
        return if k0 == 0 { 1.0 } else { 0.0 };
    }
    // u^{k₀}/k₀! in logs to stay finite for large k₀
    let mut term = (k0 as f64 * u.ln() - ln_factorial(k0 as u64)).exp();
    let mut acc = Compensated::default();
    let mut k = k0;
    loop {
        acc.add(term);
        k += 1;
        term *= u / k as f64;
        if term <= 1e-17 * acc.value() && k as f64 > u {
            break;
        }
    }
    acc.value()
}

/// exp(u) minus the dropped head, with expm1 absorbing the k = 0 term.
fn tail_direct(u: f64, k0: usize) -> f64 {
    if k0 == 0 {
        return u.exp();
    }
    let mut acc = Compensated::default();
    acc.add(u.exp_m1());
    let mut term = 1.0;
    for k in 1..k0 {
        term *= u / k as f64;
        acc.add(-term);
    }
    acc.value().max(0.0)
}

/// Φ_p(α, t) = exp(αt^{p′}) − Σ_{0 ≤ k < p−1} (αt^{p′})^k/k!.
pub fn phi_truncated(p: f64, alpha: f64, t: f64) -> Result<f64> {
    let u = exponent_arg(p, alpha, t)?;
    let k0 = first_kept(p);
    // the head cancels badly against exp when u is small next to k₀
    Ok(if u < (k0 as f64).max(1.0) {
        tail_series(u, k0)
    } else {
        tail_direct(u, k0)
    })
}

/// Series path of [`phi_truncated`], exposed for cross-checks.
pub fn phi_truncated_series(p: f64, alpha: f64, t: f64) -> Result<f64> {
    Ok(tail_series(exponent_arg(p, alpha, t)?, first_kept(p)))
}

/// Exponential-minus-head path of [`phi_truncated`].
pub fn phi_truncated_direct(p: f64, alpha: f64, t: f64) -> Result<f64> {
    Ok(tail_direct(exponent_arg(p, alpha, t)?, first_kept(p)))
}

// ---------------------------------------------------------------------------
// Trudinger–Moser functionals

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TmDomain {
    Ball { center: Vec<f64>, radius: f64 },
    Whole,
}

/// Which norm of f must not exceed 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TmNormalization {
    /// (‖(−Δ)^{Q/(2p)} f‖_p^p + ‖f‖_p^p)^{1/p}
    Sobolev,
    /// ‖(−Δ)^{Q/(2p)} f‖_p
    Homogeneous,
    /// ‖∇_H f‖_{L^Q}, for p = Q on stratified groups.
    Gradient,
}

#[derive(Clone, Debug, Serialize)]
pub struct TmSpec {
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub domain: TmDomain,
    pub normalization: TmNormalization,
    #[serde(skip)]
    pub norm: QuasiNorm,
}

impl TmSpec {
    /// Local functional on B(identity, r), Sobolev normalisation, μ = 2Q/(Q−β).
    pub fn local(norm: &QuasiNorm, p: f64, alpha: f64, beta: f64, radius: f64) -> Result<Self> {
        Self::build(
            norm,
            p,
            alpha,
            beta,
            TmDomain::Ball {
                center: norm.group().identity(),
                radius,
            },
            TmNormalization::Sobolev,
        )
    }

    /// Whole-group functional with homogeneous normalisation.
    pub fn global(norm: &QuasiNorm, p: f64, alpha: f64, beta: f64) -> Result<Self> {
        Self::build(norm, p, alpha, beta, TmDomain::Whole, TmNormalization::Homogeneous)
    }

    fn build(
        norm: &QuasiNorm,
        p: f64,
        alpha: f64,
        beta: f64,
        domain: TmDomain,
        normalization: TmNormalization,
    ) -> Result<Self> {
        check_p(p)?;
        let q = norm.homogeneous_dim();
        if !(0.0..q).contains(&beta) {
            return Err(invalid(format!("beta = {beta} must lie in [0, Q) = [0, {q})")));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(invalid(format!("alpha = {alpha} must be finite and >= 0")));
        }
        if let TmDomain::Ball { center, radius } = &domain {
            if center.len() != norm.group().dim() || !(*radius > 0.0) {
                return Err(invalid(
                    "ball needs a centre of the group dimension and a positive radius",
                ));
            }
        }
        Ok(Self {
            p,
            alpha,
            beta,
            mu: default_mu(q, beta),
            domain,
            normalization,
            norm: norm.clone(),
        })
    }

    pub fn with_mu(mut self, mu: f64) -> Result<Self> {
        let q = self.norm.homogeneous_dim();
        if !(mu > q / (q - self.beta)) || !mu.is_finite() {
            return Err(invalid(format!(
                "mu = {mu} must exceed Q/(Q-beta) = {}",
                q / (q - self.beta)
            )));
        }
        self.mu = mu;
        Ok(self)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_normalization(mut self, n: TmNormalization) -> Self {
        self.normalization = n;
        self
    }

    fn centred_ball(&self) -> Option<f64> {
        match &self.domain {
            TmDomain::Ball { center, radius } if center.iter().all(|c| *c == 0.0) => Some(*radius),
            TmDomain::Whole => Some(f64::INFINITY),
            _ => None,
        }
    }
}

/// μ = 2Q/(Q − β), the default choice above the threshold Q/(Q − β).
pub fn default_mu(q: f64, beta: f64) -> f64 {
    2.0 * q / (q - beta)
}

fn reach(f: &TrialFunction) -> f64 {
    if f.is_compact() {
        f.support_radius()
    } else {
        f.decay_radius()
    }
}

/// Norm of f named by the normalisation.
pub fn normalization_value(
    norm_kind: TmNormalization,
    f: &TrialFunction,
    p: f64,
    grid: Option<PeriodicBox>,
) -> Result<f64> {
    let a = f.norm().homogeneous_dim() / p;
    match norm_kind {
        TmNormalization::Sobolev => kernels::trial_sobolev_norm(f, a, p, grid),
        TmNormalization::Homogeneous => kernels::trial_homogeneous_norm(f, a, p, grid),
        TmNormalization::Gradient => Ok(grad_q_norm(f, &QuadOptions::default())?.value),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TmValue {
    pub functional: IntegralEstimate,
    pub normalization: f64,
    pub lp_norm: f64,
}

/// ∫_D |x|^{−β} Φ_p(α, |f(x)|) dx after checking the normalisation.
pub fn tm_functional(spec: &TmSpec, f: &TrialFunction, grid: Option<PeriodicBox>) -> Result<TmValue> {
    if f.norm().id() != spec.norm.id() {
        return Err(invalid("trial function and functional live on different groups"));
    }
    if spec.normalization == TmNormalization::Gradient && (spec.p - spec.norm.homogeneous_dim()).abs() > 1e-12 {
        return Err(invalid("gradient normalisation needs p = Q"));
    }
    let nv = normalization_value(spec.normalization, f, spec.p, grid)?;
    if nv > 1.0 + 1e-9 {
        return Err(Error::Precondition(format!(
            "normalisation violated: {:?} norm of '{}' is {nv} > 1",
            spec.normalization,
            f.label()
        )));
    }
    let functional = tm_integral(spec, f)?;
    let lp = f.lp_norm(spec.p, &QuadOptions::default())?.value;
    Ok(TmValue {
        functional,
        normalization: nv,
        lp_norm: lp,
    })
}

/// The weighted functional alone, without the normalisation check.
pub fn tm_integral(spec: &TmSpec, f: &TrialFunction) -> Result<IntegralEstimate> {
    let (p, alpha, beta) = (spec.p, spec.alpha, spec.beta);
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let phi = |v: f64| match phi_truncated(p, alpha, v.abs()) {
        Ok(x) => x,
        Err(e) => {
            failure.lock().expect("failure slot").get_or_insert(e);
            0.0
        }
    };
    let est = match (f.is_radial(), spec.centred_ball()) {
        (true, Some(r)) => {
            let outer = r.min(reach(f));
            if !(outer > f.inner_radius()) {
                return Ok(IntegralEstimate::exact(0.0, Method::Polar));
            }
            let g = |t: f64| {
                let v = f.profile(t).unwrap_or(0.0);
                if v == 0.0 {
                    return 0.0;
                }
                let w = if beta == 0.0 { 1.0 } else { t.powf(-beta) };
                w * phi(v)
            };
            let mut opts = RadialOptions::default()
                .with_tolerance(1e-11)
                .with_breakpoints(f.kinks());
            if beta > 0.0 {
                opts = opts.singular();
            }
            quadrature::radial_integral(&g, f.inner_radius(), outer, &spec.norm, &opts)?
        }
        _ => {
            let norm = &spec.norm;
            let h = |x: &[f64]| {
                let v = f.eval(x);
                if v == 0.0 {
                    return 0.0;
                }
                let w = if beta == 0.0 { 1.0 } else { norm.eval(x).powf(-beta) };
                w * phi(v)
            };
            let domain = match &spec.domain {
                TmDomain::Ball { center, radius } => Domain::Ball {
                    center: center.clone(),
                    radius: *radius,
                },
                TmDomain::Whole => Domain::whole(reach(f)),
            };
            quadrature::integrate(&h, norm, &domain, &QuadOptions::default())?
        }
    };
    if let Some(e) = failure.into_inner().expect("failure slot") {
        return Err(e);
    }
    Ok(est)
}

#[derive(Clone, Debug, Serialize)]
pub struct TermCheck {
    pub k: usize,
    /// α^k/k!·‖f/|x|^{β/(p′k)}‖_{p′k}^{p′k}
    pub term: f64,
    pub functional: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Each series term of the functional against the whole functional on one
/// discrete measure, for k₀ ≤ k ≤ k_max.
pub fn term_vs_sum(spec: &TmSpec, f: &TrialFunction, k_max: usize) -> Result<Vec<TermCheck>> {
    let r = spec
        .centred_ball()
        .ok_or_else(|| Error::Unsupported("term checks use balls centred at the identity".into()))?;
    let outer = r.min(reach(f));
    if !outer.is_finite() {
        return Err(invalid("term checks need a finite support or decay radius"));
    }
    let norm = &spec.norm;
    let q = norm.homogeneous_dim();
    let rule = LineRule::graded(outer, &f.kinks(), 60, 12);
    // (dμ, |f|) pairs; the weight |x|^{−β} is folded into dμ
    let mut nodes: Vec<(f64, f64)> = Vec::new();
    let shell = |t: f64, w: f64| w * t.powf(q - 1.0 - spec.beta);
    if f.is_radial() {
        let sphere = norm.sphere_measure()?.value;
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            if *t > f.inner_radius() {
                nodes.push((sphere * shell(*t, *w), f.profile(*t).unwrap_or(0.0).abs()));
            }
        }
    } else {
        let ang = quadrature::angular_rule_with(norm, 8)?;
        let grp = norm.group();
        let mut x = vec![0.0; grp.dim()];
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            for j in 0..ang.len() {
                grp.dilate_into(*t, ang.dir(j), &mut x);
                nodes.push((ang.weights[j] * shell(*t, *w), f.eval(&x).abs()));
            }
        }
    }
    let mut total = Compensated::default();
    for (m, v) in &nodes {
        if *v > 0.0 {
            total.add(m * phi_truncated(spec.p, spec.alpha, *v)?);
        }
    }
    let functional = total.value();
    let pc = conj(spec.p);
    let k0 = first_kept(spec.p);
    let mut out = Vec::new();
    for k in k0.max(1)..=k_max {
        let mut s = Compensated::default();
        for (m, v) in &nodes {
            if *v > 0.0 {
                s.add(m * v.powf(pc * k as f64));
            }
        }
        let term = (k as f64 * spec.alpha.ln() - ln_factorial(k as u64)).exp() * s.value();
        let term = if spec.alpha == 0.0 { 0.0 } else { term };
        let slack = functional - term;
        out.push(TermCheck {
            k,
            term,
            functional,
            slack,
            holds: slack >= -1e-10 * functional.abs().max(1e-300),
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Constants

/// Σ_{k ≥ k₀} k^k/k!·y^k with a ratio-test tail bound; converges iff ey < 1.
pub fn kk_series(y: f64, k0: usize) -> Result<f64> {
    if !(y >= 0.0) || !y.is_finite() {
        return Err(invalid(format!("series argument {y} must be finite and >= 0")));
    }
    if y * E >= 1.0 {
        return Err(Error::Divergent(format!(
            "Σ k^k/k!·y^k diverges: e·y = {} >= 1 (need y < 1/e = {})",
            y * E,
            1.0 / E
        )));
    }
    if y == 0.0 {
        return Ok(if k0 == 0 { 1.0 } else { 0.0 });
    }
    let ln_term = |k: usize| {
        let kf = k as f64;
        let head = if k == 0 { 0.0 } else { kf * kf.ln() };
        head - ln_factorial(k as u64) + kf * y.ln()
    };
    // successive ratios y(1+1/k)^k increase to ey, so ey bounds the tail
    let rho = y * E;
    let mut acc = Compensated::default();
    let mut k = k0;
    loop {
        let t = ln_term(k).exp();
        acc.add(t);
        let tail = t * rho / (1.0 - rho);
        if tail <= 1e-13 * acc.value() {
            break;
        }
        k += 1;
        if k > k0 + 50_000_000 {
            return Err(Error::Accuracy {
                message: format!("series at e·y = {rho} needs more than 5e7 terms"),
                partial: acc.value(),
                abs_error: tail,
            });
        }
    }
    Ok(acc.value())
}

/// Limit of the term ratio y(1+1/k)^k in the ratio test, by Richardson
/// extrapolation at large k; equals e.
pub fn ratio_test_limit() -> f64 {
    let at = |k: f64| (k * (1.0 / k).ln_1p()).exp();
    let k = 1e6;
    let (a, b, c) = (at(k), at(2.0 * k), at(4.0 * k));
    // remove the 1/k and 1/k² terms
    let r1 = 2.0 * b - a;
    let r2 = 2.0 * c - b;
    (4.0 * r2 - r1) / 3.0
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantInputs {
    pub p: f64,
    pub q_dim: f64,
    pub beta: f64,
    pub mu: f64,
    pub alpha: f64,
    /// Empirical value of the critical Gagliardo–Nirenberg constant.
    pub c1_tilde: f64,
    pub sphere: f64,
    pub c0: f64,
    pub radius: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NamedConstant {
    pub name: &'static str,
    pub formula: &'static str,
    pub value: Option<f64>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantBundle {
    pub inputs: ConstantInputs,
    pub c2: f64,
    pub c2_tilde_radius: f64,
    pub c2_tilde: Option<f64>,
    pub c3_tilde: Option<f64>,
    pub c3: Option<f64>,
    pub c1: Option<f64>,
    /// True because C̃₁ is a family supremum, a lower bound on the constant.
    pub empirical: bool,
    pub entries: Vec<NamedConstant>,
}

/// (e·C̃₁^{p′}·μ·p′)^{−1}
pub fn c2(p: f64, mu: f64, c1_tilde: f64) -> f64 {
    let pc = conj(p);
    1.0 / (E * c1_tilde.powf(pc) * mu * pc)
}

/// (e·p′·C̃₁^{p′})^{−1}, the radius of the C̃₂ series.
pub fn c2_tilde_radius(p: f64, c1_tilde: f64) -> f64 {
    let pc = conj(p);
    1.0 / (E * pc * c1_tilde.powf(pc))
}

/// Σ_{k ≥ p−1} k^k/k!·(p′C̃₁^{p′}α)^k
pub fn c2_tilde(p: f64, alpha: f64, c1_tilde: f64) -> Result<f64> {
    check_p(p)?;
    let pc = conj(p);
    kk_series(pc * c1_tilde.powf(pc) * alpha, first_kept(p))
}

/// Σ_{0 ≤ k < p−1} α^k/k!·C̃₁^{kp′}(kp′)^{kp′−k/(p−1)} + C̃₂(α)
pub fn c3_tilde(p: f64, alpha: f64, c1_tilde: f64) -> Result<f64> {
    let pc = conj(p);
    let mut s = 1.0;
    for k in 1..first_kept(p) {
        let kf = k as f64;
        s += alpha.powf(kf) / special::gamma(kf + 1.0)
            * c1_tilde.powf(kf * pc)
            * (kf * pc).powf(kf * pc - kf / (p - 1.0));
    }
    Ok(s + c2_tilde(p, alpha, c1_tilde)?)
}

/// Global constant: max(|℘|^{1/μ′}(Q−βμ′)^{−1/μ′}·Σ_{k≥p−1} α^k/k!(C̃₁^{p′}kp′μ)^k, C̃₂).
pub fn c3(inp: &ConstantInputs) -> Result<f64> {
    let (p, mu) = (inp.p, inp.mu);
    let pc = conj(p);
    let mc = mu / (mu - 1.0);
    let base = inp.q_dim - inp.beta * mc;
    if !(base > 0.0) {
        return Err(invalid(format!(
            "Q - beta·mu' = {base} must be positive (mu > Q/(Q-beta))"
        )));
    }
    let series = kk_series(inp.alpha * inp.c1_tilde.powf(pc) * pc * mu, first_kept(p))?;
    let a = (inp.sphere / base).powf(1.0 / mc) * series;
    Ok(a.max(c2_tilde(p, inp.alpha, inp.c1_tilde)?))
}

/// Local constant from the two cases of the ball proof. C̃₃ is evaluated at
/// αμ, the exponent that appears after Hölder.
pub fn c1_local(inp: &ConstantInputs) -> Result<f64> {
    let (mu, beta, q, r) = (inp.mu, inp.beta, inp.q_dim, inp.radius);
    let mc = mu / (mu - 1.0);
    let base = q - beta * mc;
    if !(base > 0.0) {
        return Err(invalid(format!(
            "Q - beta·mu' = {base} must be positive (mu > Q/(Q-beta))"
        )));
    }
    let c3t = c3_tilde(inp.p, inp.alpha * mu, inp.c1_tilde)?;
    let e = q / mc - beta;
    let far = c3t * r.powf(-beta);
    let near = c3t.powf(1.0 / mu) * inp.sphere.powf(1.0 / mc) * (inp.c0 * (2.0 * inp.c0 + 1.0)).powf(e)
        / base.powf(1.0 / mc)
        * r.powf(e);
    Ok(far.max(near))
}

/// All constants whose series converge; the others carry a note.
pub fn constants(inp: &ConstantInputs) -> Result<ConstantBundle> {
    check_p(inp.p)?;
    if !(inp.c1_tilde > 0.0) || !(inp.mu > inp.q_dim / (inp.q_dim - inp.beta)) {
        return Err(invalid("need C̃₁ > 0 and mu > Q/(Q-beta)"));
    }
    let keep = |r: Result<f64>| -> (Option<f64>, Option<String>) {
        match r {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };
    let c2v = c2(inp.p, inp.mu, inp.c1_tilde);
    let rad = c2_tilde_radius(inp.p, inp.c1_tilde);
    let (c2t, n2) = keep(c2_tilde(inp.p, inp.alpha, inp.c1_tilde));
    let (c3t, n3t) = keep(c3_tilde(inp.p, inp.alpha, inp.c1_tilde));
    let (c3v, n3) = keep(c3(inp));
    let (c1v, n1) = keep(c1_local(inp));
    let entries = vec![
        NamedConstant {
            name: "C2",
            formula: "(e*C1t^p'*mu*p')^-1",
            value: Some(c2v),
            note: None,
        },
        NamedConstant {
            name: "C2t_radius",
            formula: "(e*p'*C1t^p')^-1",
            value: Some(rad),
            note: None,
        },
        NamedConstant {
            name: "C2t",
            formula: "sum_{k>=p-1} k^k/k! (p'*C1t^p'*alpha)^k",
            value: c2t,
            note: n2,
        },
        NamedConstant {
            name: "C3t",
            formula: "sum_{k<p-1} alpha^k/k! C1t^(kp') (kp')^(kp'-k/(p-1)) + C2t",
            value: c3t,
            note: n3t,
        },
        NamedConstant {
            name: "C3",
            formula: "max(|S|^(1/mu')/(Q-beta*mu')^(1/mu') sum_{k>=p-1} alpha^k/k! (C1t^p' k p' mu)^k, C2t)",
            value: c3v,
            note: n3,
        },
        NamedConstant {
            name: "C1",
            formula: "max(C3t(alpha*mu) r^-beta, C3t(alpha*mu)^(1/mu) |S|^(1/mu') (C0(2C0+1))^(Q/mu'-beta) r^(Q/mu'-beta)/(Q-beta*mu')^(1/mu'))",
            value: c1v,
            note: n1,
        },
    ];
    Ok(ConstantBundle {
        inputs: inp.clone(),
        c2: c2v,
        c2_tilde_radius: rad,
        c2_tilde: c2t,
        c3_tilde: c3t,
        c3: c3v,
        c1: c1v,
        empirical: true,
        entries,
    })
}

// ---------------------------------------------------------------------------
// Sharp exponents

#[derive(Clone, Debug, Serialize)]
pub struct AlphaQ {
    pub c_q: IntegralEstimate,
    pub alpha_q: f64,
}

/// α_Q = Q·c_Q^{1/(Q−1)} for a stratified group and its attached norm.
pub fn alpha_q(norm: &QuasiNorm) -> Result<AlphaQ> {
    if !norm.group().is_stratified() {
        return Err(Error::Unsupported(format!("{} is not stratified", norm.group().id())));
    }
    let c = c_q(norm)?;
    let q = norm.homogeneous_dim();
    Ok(AlphaQ {
        alpha_q: q * c.value.powf(1.0 / (q - 1.0)),
        c_q: c,
    })
}

/// α_Q for an H-type group with horizontal dimension k and centre
/// dimension ℓ, Q = k + 2ℓ.
pub fn alpha_htype(k: usize, l: usize) -> Result<f64> {
    if k == 0 || l == 0 {
        return Err(invalid("H-type groups need k >= 1 and l >= 1"));
    }
    let (kf, lf) = (k as f64, l as f64);
    let q = kf + 2.0 * lf;
    let inner = 2.0 * PI.powf((kf + lf) / 2.0) * special::gamma((q - lf) / 2.0)
        / (4f64.powf(lf) * special::gamma(kf / 2.0) * special::gamma(q / 2.0));
    Ok(q * inner.powf(1.0 / (q - 1.0)))
}

/// Q·σ_Q^{1/(Q−1)} with σ_Q = Γ(1/2)Γ(n+1/2)ω_{2n−1}/n! on ℍⁿ (Kaplan
/// normalisation of the earlier literature), reported next to the H-type
/// value without reconciling the two.
pub fn alpha_heisenberg_kaplan(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n must be >= 1"));
    }
    let nf = n as f64;
    let q = 2.0 * nf + 2.0;
    let sigma = special::gamma(0.5) * special::gamma(nf + 0.5) * special::euclidean_sphere_area(2 * n)
        / special::gamma(nf + 1.0);
    Ok(q * sigma.powf(1.0 / (q - 1.0)))
}

/// α_β = α_Q(1 − β/Q)
pub fn alpha_beta(alpha_q: f64, beta: f64, q: f64) -> Result<f64> {
    if !(0.0..=q).contains(&beta) {
        return Err(invalid(format!("beta = {beta} must lie in [0, Q]")));
    }
    Ok(alpha_q * (1.0 - beta / q))
}

// ---------------------------------------------------------------------------
// Critical ratios

fn positive(v: f64, what: &str, f: &TrialFunction) -> Result<f64> {
    if !(v > 1e-300) || !v.is_finite() {
        return Err(Error::Degenerate(format!("{what} of '{}' is {v}", f.label())));
    }
    Ok(v)
}

/// ‖f/|x|^{β/q}‖_q restricted to |x| < r.
fn weighted_lq(f: &TrialFunction, q: f64, beta: f64, r: f64) -> Result<f64> {
    if reach(f) > r * (1.0 + 1e-12) && r.is_finite() {
        return Err(Error::Precondition(format!(
            "'{}' reaches {} beyond the ball of radius {r}",
            f.label(),
            reach(f)
        )));
    }
    let e = if beta == 0.0 {
        f.weighted_power_integral(q, None, &QuadOptions::default())?
    } else {
        let w = move |t: f64| t.powf(-beta);
        f.weighted_power_integral(q, Some(&w), &QuadOptions::default())?
    };
    if e.divergent {
        return Err(Error::Divergent(format!("‖f/|x|^(beta/q)‖_q of '{}'", f.label())));
    }
    Ok(e.value.powf(1.0 / q))
}

/// Norms entering the critical Gagliardo–Nirenberg quotients; computed once
/// per function so that q-scans only recompute ‖f‖_q.
#[derive(Clone, Debug, Serialize)]
pub struct CriticalNorms {
    pub p: f64,
    /// ‖(−Δ)^{Q/(2p)} f‖_p
    pub homogeneous: f64,
    pub lp: f64,
    /// (homogeneous^p + lp^p)^{1/p}
    pub sobolev: f64,
}

pub fn critical_norms(f: &TrialFunction, p: f64, grid: Option<PeriodicBox>) -> Result<CriticalNorms> {
    check_p(p)?;
    let a = f.norm().homogeneous_dim() / p;
    let homogeneous = kernels::trial_homogeneous_norm(f, a, p, grid)?;
    let lp = f.lp_norm(p, &QuadOptions::default())?.value;
    Ok(CriticalNorms {
        p,
        homogeneous,
        lp,
        sobolev: (homogeneous.powf(p) + lp.powf(p)).powf(1.0 / p),
    })
}

/// ‖f‖_q / (q^{1−1/p}‖(−Δ)^{Q/(2p)}f‖_p^{1−p/q}‖f‖_p^{p/q})
pub fn crit_gn_ratio(f: &TrialFunction, p: f64, q: f64, grid: Option<PeriodicBox>) -> Result<f64> {
    crit_gn_ratio_with(f, &critical_norms(f, p, grid)?, q)
}

pub fn crit_gn_ratio_with(f: &TrialFunction, n: &CriticalNorms, q: f64) -> Result<f64> {
    let p = n.p;
    if !(q >= p) || !q.is_finite() {
        return Err(invalid(format!("q = {q} must satisfy p <= q < inf")));
    }
    let lq = f.lp_norm(q, &QuadOptions::default())?.value;
    let h = positive(n.homogeneous, "‖(−Δ)^{Q/(2p)} f‖_p", f)?;
    let l = positive(n.lp, "‖f‖_p", f)?;
    Ok(lq / (q.powf(1.0 - 1.0 / p) * h.powf(1.0 - p / q) * l.powf(p / q)))
}

/// ‖f/|x|^{β/q}‖_{L^q(B_r)} / (q^{1−1/p}‖f‖_{L^p_{Q/p}})
pub fn critical_hardy_ratio(
    f: &TrialFunction,
    p: f64,
    q: f64,
    beta: f64,
    radius: f64,
    grid: Option<PeriodicBox>,
) -> Result<f64> {
    critical_hardy_ratio_with(f, &critical_norms(f, p, grid)?, q, beta, radius)
}

pub fn critical_hardy_ratio_with(f: &TrialFunction, n: &CriticalNorms, q: f64, beta: f64, radius: f64) -> Result<f64> {
    let p = n.p;
    let qd = f.norm().homogeneous_dim();
    if !(q >= p) || !q.is_finite() {
        return Err(invalid(format!("q = {q} must satisfy p <= q < inf")));
    }
    if !(0.0..qd).contains(&beta) {
        return Err(invalid(format!("beta = {beta} must lie in [0, Q)")));
    }
    let lhs = weighted_lq(f, q, beta, radius)?;
    let s = positive(n.sobolev, "Sobolev norm", f)?;
    Ok(lhs / (q.powf(1.0 - 1.0 / p) * s))
}

/// The p = Q variant on stratified groups: denominator q^{1−1/Q}‖∇_H f‖_Q.
pub fn critical_hardy_ratio_gradient(f: &TrialFunction, q: f64, beta: f64, radius: f64) -> Result<f64> {
    let qd = f.norm().homogeneous_dim();
    if !(q >= qd) || !q.is_finite() {
        return Err(invalid(format!("q = {q} must satisfy Q <= q < inf")));
    }
    if !(0.0..qd).contains(&beta) {
        return Err(invalid(format!("beta = {beta} must lie in [0, Q)")));
    }
    let lhs = weighted_lq(f, q, beta, radius)?;
    let g = positive(grad_q_norm(f, &QuadOptions::default())?.value, "‖∇_H f‖_Q", f)?;
    Ok(lhs / (q.powf(1.0 - 1.0 / qd) * g))
}

/// ‖f/|x|^{β/q}‖_q over q^{1−1/p}(H^{1−p/q}L^{p/q} + H^{1−p/(qμ)}L^{p/(qμ)}).
pub fn weighted_gn_ratio(
    f: &TrialFunction,
    p: f64,
    q: f64,
    beta: f64,
    mu: f64,
    grid: Option<PeriodicBox>,
) -> Result<f64> {
    weighted_gn_ratio_with(f, &critical_norms(f, p, grid)?, q, beta, mu)
}

pub fn weighted_gn_ratio_with(f: &TrialFunction, n: &CriticalNorms, q: f64, beta: f64, mu: f64) -> Result<f64> {
    let p = n.p;
    let qd = f.norm().homogeneous_dim();
    if !(q >= p) || !q.is_finite() {
        return Err(invalid(format!("q = {q} must satisfy p <= q < inf")));
    }
    if !(0.0..qd).contains(&beta) || !(mu > qd / (qd - beta)) {
        return Err(invalid("need beta in [0, Q) and mu > Q/(Q-beta)"));
    }
    let lhs = weighted_lq(f, q, beta, f64::INFINITY)?;
    let h = positive(n.homogeneous, "‖(−Δ)^{Q/(2p)} f‖_p", f)?;
    let l = positive(n.lp, "‖f‖_p", f)?;
    let rhs = h.powf(1.0 - p / q) * l.powf(p / q) + h.powf(1.0 - p / (q * mu)) * l.powf(p / (q * mu));
    Ok(lhs / (q.powf(1.0 - 1.0 / p) * rhs))
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaRow {
    pub q: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaTable {
    pub p: f64,
    pub rows: Vec<GammaRow>,
    pub decreasing: bool,
    pub above_one: bool,
}

/// Γ(q/p′+2)^{1/q} / (q/(ep′))^{1/p′} along the given q.
pub fn gamma_asymptotic_check(p: f64, qs: &[f64]) -> Result<GammaTable> {
    check_p(p)?;
    let pc = conj(p);
    let mut rows = Vec::with_capacity(qs.len());
    for &q in qs {
        if !(q >= p) || !q.is_finite() {
            return Err(invalid(format!("q = {q} must satisfy p <= q < inf")));
        }
        let ln = special::ln_gamma(q / pc + 2.0) / q - (q / (E * pc)).ln() / pc;
        rows.push(GammaRow { q, ratio: ln.exp() });
    }
    Ok(GammaTable {
        p,
        decreasing: rows.windows(2).all(|w| w[1].q <= w[0].q || w[1].ratio < w[0].ratio),
        above_one: rows.iter().all(|r| r.ratio > 1.0),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trial::make_family;

    #[test]
    fn truncated_exponential_examples() {
        assert!((phi_truncated(2.0, 1.0, 1.0).unwrap() - (E - 1.0)).abs() < 1e-14);
        assert!((phi_truncated(3.0, 1.0, 1.0).unwrap() - (E - 2.0)).abs() < 1e-14);
        assert_eq!(phi_truncated(2.5, 3.0, 0.0).unwrap(), 0.0);
        assert!(matches!(phi_truncated(2.0, 1.0, 30.0), Err(Error::Range(_))));
        assert_eq!(first_kept(2.0), 1);
        assert_eq!(first_kept(3.0), 2);
        assert_eq!(first_kept(2.5), 2);
        assert_eq!(first_kept(1.2), 1);
    }

    #[test]
    fn truncated_paths_agree() {
        for i in 0..=100 {
            let u = 1e-8 * 1e10f64.powf(i as f64 / 100.0);
            let s = phi_truncated_series(2.0, u, 1.0).unwrap();
            let d = phi_truncated_direct(2.0, u, 1.0).unwrap();
            assert!((s - d).abs() <= 1e-12 * s, "u={u} {s} {d}");
            assert!((phi_truncated(2.0, u, 1.0).unwrap() - u.exp_m1()).abs() <= 1e-12 * s);
        }
        for p in [1.5, 2.5, 3.0] {
            for i in 0..=60 {
                let u = 0.1 * 1e3f64.powf(i as f64 / 60.0);
                let s = phi_truncated_series(p, u, 1.0).unwrap();
                let d = phi_truncated_direct(p, u, 1.0).unwrap();
                assert!((s - d).abs() <= 1e-12 * s, "p={p} u={u} {s} {d}");
            }
        }
    }

    #[test]
    fn constants_arithmetic() {
        assert!((c2(2.0, 2.0, 1.0) - 1.0 / (4.0 * E)).abs() < 1e-15);
        assert!(c2_tilde(2.0, 1e-12, 1.0).unwrap() < 1e-11);
        let rad = c2_tilde_radius(2.0, 1.0);
        assert!(c2_tilde(2.0, rad * 0.999, 1.0).is_ok());
        assert!(matches!(c2_tilde(2.0, rad * 1.001, 1.0), Err(Error::Divergent(_))));
        assert!((ratio_test_limit() - E).abs() < 1e-12);
        // Σ_{k≥1} k^k/k! y^k = 1/(1 − T(y)) − 1 with T the tree function; at y = 1/(2e),
        // T solves T e^{−T} = 1/(2e)
        let y = 1.0 / (2.0 * E);
        let mut t: f64 = 0.2;
        for _ in 0..100 {
            t = y * t.exp();
        }
        let closed = 1.0 / (1.0 - t) - 1.0;
        assert!((kk_series(y, 1).unwrap() - closed).abs() < 1e-12 * closed);
        let inp = ConstantInputs {
            p: 2.0,
            q_dim: 2.0,
            beta: 1.0,
            mu: 4.0,
            alpha: 0.01,
            c1_tilde: 1.0,
            sphere: 2.0 * PI,
            c0: 1.0,
            radius: 1.0,
        };
        let b = constants(&inp).unwrap();
        assert!(b.c3.unwrap() > 0.0 && b.c1.unwrap() > 0.0 && b.c3_tilde.unwrap() > 1.0);
        let too_big = ConstantInputs { alpha: 0.2, ..inp };
        let b = constants(&too_big).unwrap();
        assert!(b.c3.is_none() && b.entries.iter().any(|e| e.note.is_some()));
    }

    #[test]
    fn sharp_exponents() {
        let a = alpha_q(&QuasiNorm::euclidean(2)).unwrap();
        assert!((a.alpha_q - 4.0 * PI).abs() < 1e-6, "{a:?}");
        let h = alpha_htype(2, 1).unwrap();
        assert!((h - 4.0 * (PI * PI / 4.0).powf(1.0 / 3.0)).abs() < 1e-9);
        let k = alpha_heisenberg_kaplan(1).unwrap();
        assert!((k - 4.0 * (PI * PI).powf(1.0 / 3.0)).abs() < 1e-9);
        assert_eq!(alpha_beta(h, 0.0, 4.0).unwrap(), h);
        assert_eq!(alpha_beta(h, 4.0, 4.0).unwrap(), 0.0);
        let g = crate::group::HomogeneousGroup::abelian(vec![1.0, 2.0]).unwrap();
        let n = QuasiNorm::new(g, crate::group::NormKind::Max).unwrap();
        assert!(matches!(alpha_q(&n), Err(Error::Unsupported(_))));
    }

    #[test]
    fn gaussian_gn_ratio() {
        let r2 = QuasiNorm::euclidean(2);
        let f = make_family("gaussian", &r2).unwrap().member(&[1.0]).unwrap();
        let oracle = (PI / 2.0).powf(0.25) / (2.0 * PI.sqrt());
        let v = crit_gn_ratio(&f, 2.0, 4.0, None).unwrap();
        assert!((v - oracle).abs() < 1e-3, "{v} {oracle}");
        let w = crit_gn_ratio(&f, 2.0, 2.0, None).unwrap();
        assert!((w - 0.5f64.sqrt()).abs() < 1e-9);
        // both terms equal when the homogeneous norm equals the Lp norm
        let n = CriticalNorms {
            p: 2.0,
            homogeneous: 1.3,
            lp: 1.3,
            sobolev: 1.3 * 2f64.sqrt(),
        };
        let g = f.scaled(1.0);
        let lhs = g.lp_norm(4.0, &QuadOptions::default()).unwrap().value;
        let r = weighted_gn_ratio_with(&g, &n, 4.0, 0.0, 2.0).unwrap();
        assert!((r - lhs / (2.0 * 2.0 * 1.3)).abs() < 1e-12);
    }

    #[test]
    fn gamma_table() {
        let t = gamma_asymptotic_check(2.0, &[8.0, 32.0, 128.0, 400.0]).unwrap();
        assert!((t.rows[0].ratio - 120f64.powf(0.125) / (4.0 / E).sqrt()).abs() < 1e-12);
        assert!((t.rows[0].ratio - 1.5007).abs() < 1e-3);
        assert!((t.rows[3].ratio - 1.022).abs() < 2e-3);
        assert!(t.decreasing && t.above_one);
    }

    #[test]
    fn functional_and_terms() {
        let r2 = QuasiNorm::euclidean(2);
        let f = make_family("moser-spike", &r2).unwrap().member(&[0.1]).unwrap();
        let s = kernels::trial_sobolev_norm(&f, 1.0, 2.0, None).unwrap();
        let f = f.scaled(1.0 / s);
        let spec0 = TmSpec::local(&r2, 2.0, 4.0, 0.0, 1.0).unwrap();
        let spec1 = TmSpec::local(&r2, 2.0, 4.0, 1.0, 1.0).unwrap();
        let v0 = tm_functional(&spec0, &f, None).unwrap();
        let v1 = tm_functional(&spec1, &f, None).unwrap();
        assert!(v1.functional.value > v0.functional.value);
        assert!(tm_functional(&spec0, &f.scaled(1.5), None).is_err());
        for c in term_vs_sum(&spec1, &f, 6).unwrap() {
            assert!(c.holds, "{c:?}");
        }
        let mut last = 0.0;
        for a in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let v = tm_integral(&spec0.clone().with_alpha(a), &f).unwrap().value;
            assert!(v > last);
            last = v;
        }
    }
}
