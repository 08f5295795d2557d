//! Trial functions: radial profiles in a quasi-norm or arbitrary fields,
//! with support metadata that the integrators rely on.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::group::{NormKind, QuasiNorm, Structure};
use crate::quadrature::{self, Domain, IntegralEstimate, QuadOptions, RadialOptions};

pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Field = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Smoothness {
    Bump,
    Lipschitz,
    Piecewise,
}

/// Value below which a decaying family is treated as zero, relative to its
/// peak.
pub const DECAY_LEVEL: f64 = 1e-20;

#[derive(Clone)]
enum Shape {
    /// f(x) = profile(|x|) in the attached quasi-norm.
    Radial {
        profile: Profile,
        derivative: Option<Profile>,
    },
    General(Field),
}

/// An evaluable function on a homogeneous group.
///
/// Stored as `scale · base(δ_dilation x)`; the support data of `base` is
/// kept in base coordinates and converted on access.
#[derive(Clone)]
pub struct TrialFunction {
    norm: QuasiNorm,
    shape: Shape,
    scale: f64,
    dilation: f64,
    inner: f64,
    support: f64,
    decay: f64,
    kinks: Vec<f64>,
    smoothness: Smoothness,
    label: String,
    params: Vec<(String, f64)>,
}

impl fmt::Debug for TrialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TrialFunction")
            .field("label", &self.label)
            .field("params", &self.params)
            .field("norm", &self.norm.id())
            .field("scale", &self.scale)
            .field("dilation", &self.dilation)
            .field("support", &self.support_radius())
            .finish()
    }
}

impl TrialFunction {
    /// A radial function g(|x|). `support` is the radius beyond which g
    /// vanishes (may be ∞), `decay` the radius beyond which it is below
    /// [`DECAY_LEVEL`] times its peak.
    pub fn radial(
        norm: &QuasiNorm,
        label: impl Into<String>,
        profile: Profile,
        support: f64,
        decay: f64,
        smoothness: Smoothness,
    ) -> Self {
        Self {
            norm: norm.clone(),
            shape: Shape::Radial {
                profile,
                derivative: None,
            },
            scale: 1.0,
            dilation: 1.0,
            inner: 0.0,
            support,
            decay: decay.min(support),
            kinks: Vec::new(),
            smoothness,
            label: label.into(),
            params: Vec::new(),
        }
    }

    /// An arbitrary function of the point. `decay` plays the same role as for
    /// radial functions and must be finite.
    pub fn general(
        norm: &QuasiNorm,
        label: impl Into<String>,
        field: Field,
        support: f64,
        decay: f64,
        smoothness: Smoothness,
    ) -> Self {
        Self {
            norm: norm.clone(),
            shape: Shape::General(field),
            scale: 1.0,
            dilation: 1.0,
            inner: 0.0,
            support,
            decay: decay.min(support),
            kinks: Vec::new(),
            smoothness,
            label: label.into(),
            params: Vec::new(),
        }
    }

    pub fn with_derivative(mut self, d: Profile) -> Self {
        if let Shape::Radial { derivative, .. } = &mut self.shape {
            *derivative = Some(d);
        }
        self
    }

    pub fn with_kinks(mut self, kinks: Vec<f64>) -> Self {
        self.kinks = kinks;
        self
    }

    pub fn with_inner_radius(mut self, r: f64) -> Self {
        self.inner = r;
        self
    }

    pub fn with_params(mut self, params: Vec<(String, f64)>) -> Self {
        self.params = params;
        self
    }

    pub fn norm(&self) -> &QuasiNorm {
        &self.norm
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.shape, Shape::Radial { .. })
    }

    pub fn support_radius(&self) -> f64 {
        self.support / self.dilation
    }

    /// Radius of the ball outside which the function is negligible.
    pub fn decay_radius(&self) -> f64 {
        self.decay / self.dilation
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner / self.dilation
    }

    pub fn is_compact(&self) -> bool {
        self.support.is_finite()
    }

    /// Radii where the radial profile is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self.kinks.iter().map(|r| r / self.dilation).collect();
        if self.inner > 0.0 {
            k.push(self.inner_radius());
        }
        if self.support.is_finite() {
            k.push(self.support_radius());
        }
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Radial { profile, .. } => {
                let r = self.norm.eval(x) * self.dilation;
                if r < self.inner || r >= self.support {
                    0.0
                } else {
                    self.scale * profile(r)
                }
            }
            Shape::General(field) => {
                if self.dilation == 1.0 {
                    self.scale * field(x)
                } else {
                    let mut y = vec![0.0; x.len()];
                    self.norm.group().dilate_into(self.dilation, x, &mut y);
                    self.scale * field(&y)
                }
            }
        }
    }

    /// g(r) for radial functions.
    pub fn profile(&self, r: f64) -> Option<f64> {
        match &self.shape {
            Shape::Radial { profile, .. } => {
                let s = r * self.dilation;
                Some(if s < self.inner || s >= self.support {
                    0.0
                } else {
                    self.scale * profile(s)
                })
            }
            Shape::General(_) => None,
        }
    }

    /// g′(r) for radial functions, analytic when the family provides it and
    /// a one-sided difference away from the nearest kink otherwise.
    pub fn radial_derivative(&self, r: f64) -> Option<f64> {
        let Shape::Radial { profile, derivative } = &self.shape else {
            return None;
        };
        let s = r * self.dilation;
        if s < self.inner || s >= self.support {
            return Some(0.0);
        }
        if let Some(d) = derivative {
            return Some(self.scale * self.dilation * d(s));
        }
        let h = 1e-6 * s.max(1e-3);
        let mut ks = self.kinks.clone();
        ks.push(self.inner);
        ks.push(self.support);
        let near_left = ks.iter().any(|k| *k <= s && s - k < h);
        let near_right = ks.iter().any(|k| *k > s && k - s < h);
        let v = match (near_left, near_right) {
            (false, false) => (profile(s + h) - profile(s - h)) / (2.0 * h),
            (true, false) => (profile(s + h) - profile(s)) / h,
            _ => (profile(s) - profile(s - h)) / h,
        };
        Some(self.scale * self.dilation * v)
    }

    /// c·f.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.scale *= c;
        out
    }

    /// f ∘ δ_λ.
    pub fn dilated(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(invalid(format!("dilation factor {lambda} must be positive")));
        }
        let mut out = self.clone();
        out.dilation *= lambda;
        Ok(out)
    }

    /// Integration domain covering the function: the ball of the decay
    /// radius centred at the identity.
    pub fn domain(&self) -> Result<Domain> {
        let r = self.decay_radius();
        if !r.is_finite() {
            return Err(invalid(format!("'{}' declares no support or decay radius", self.label)));
        }
        Ok(Domain::whole(r))
    }

    /// ∫ w(|x|)·|f|^p dx by the radial fast path, or by full quadrature for
    /// general functions when `w` is absent.
    pub fn weighted_power_integral(
        &self,
        p: f64,
        weight: Option<&(dyn Fn(f64) -> f64 + Sync)>,
        opts: &QuadOptions,
    ) -> Result<IntegralEstimate> {
        let inner = self.inner_radius();
        let outer = if self.support.is_finite() {
            self.support_radius()
        } else {
            self.decay_radius()
        };
        match &self.shape {
            Shape::Radial { .. } => {
                let g = |r: f64| {
                    let v = self.profile(r).unwrap_or(0.0).abs();
                    if v == 0.0 {
                        return 0.0;
                    }
                    let w = weight.map_or(1.0, |w| w(r));
                    w * v.powf(p)
                };
                let ropts = RadialOptions::default()
                    .singular()
                    .with_tolerance(opts.tolerance.max(1e-13))
                    .with_breakpoints(self.kinks());
                quadrature::radial_integral(&g, inner, outer, &self.norm, &ropts)
            }
            Shape::General(_) => {
                let f = |x: &[f64]| {
                    let v = self.eval(x).abs();
                    if v == 0.0 {
                        return 0.0;
                    }
                    let w = weight.map_or(1.0, |w| w(self.norm.eval(x)));
                    w * v.powf(p)
                };
                quadrature::integrate(&f, &self.norm, &Domain::whole(outer), opts)
            }
        }
    }

    /// ‖f‖_{L^p(G)}.
    pub fn lp_norm(&self, p: f64, opts: &QuadOptions) -> Result<IntegralEstimate> {
        if !(p >= 1.0) {
            return Err(invalid(format!("Lp exponent {p} must be >= 1")));
        }
        Ok(self.weighted_power_integral(p, None, opts)?.root(p))
    }
}

// ---------------------------------------------------------------------------
// Families

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamBound {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

type Generator = Arc<dyn Fn(&[f64]) -> Result<TrialFunction> + Send + Sync>;

#[derive(Clone)]
pub struct Family {
    pub name: String,
    pub params: Vec<ParamBound>,
    generator: Generator,
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Family")
            .field("name", &self.name)
            .field("params", &self.params)
            .finish()
    }
}

impl Family {
    pub fn member(&self, theta: &[f64]) -> Result<TrialFunction> {
        if theta.len() != self.params.len() {
            return Err(invalid(format!(
                "family '{}' takes {} parameters, got {}",
                self.name,
                self.params.len(),
                theta.len()
            )));
        }
        for (v, b) in theta.iter().zip(&self.params) {
            if !(*v >= b.lo && *v <= b.hi) {
                return Err(invalid(format!("{} = {v} outside [{}, {}]", b.name, b.lo, b.hi)));
            }
        }
        (self.generator)(theta)
    }
}

pub const FAMILIES: [&str; 5] = ["gaussian", "bump", "moser-spike", "power-cutoff", "reversed-hls"];

/// Radius in `norm` of a point whose Euclidean coordinate length is at most
/// `r_e`.
fn norm_radius_of_euclidean_ball(norm: &QuasiNorm, r_e: f64) -> f64 {
    match norm.kind() {
        NormKind::Euclidean => r_e,
        NormKind::Max => norm
            .group()
            .weights()
            .iter()
            .map(|w| r_e.powf(1.0 / w))
            .fold(0.0, f64::max),
        NormKind::Kaplan => (r_e.powi(4) + r_e * r_e).sqrt().sqrt(),
    }
}

fn euclid2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn named(names: &[&str], theta: &[f64]) -> Vec<(String, f64)> {
    names.iter().map(|n| n.to_string()).zip(theta.iter().copied()).collect()
}

pub fn make_family(name: &str, norm: &QuasiNorm) -> Result<Family> {
    let norm = norm.clone();
    let q = norm.homogeneous_dim();
    let euclid = norm.kind() == NormKind::Euclidean;
    let bound = |n: &str, lo: f64, hi: f64| ParamBound { name: n.into(), lo, hi };
    let (params, generator): (Vec<ParamBound>, Generator) = match name {
        "gaussian" => (
            vec![bound("s", 1e-6, 1e6)],
            Arc::new(move |t: &[f64]| {
                let s = t[0];
                let reach = s * (2.0 * (1.0 / DECAY_LEVEL).ln()).sqrt();
                let f = if euclid {
                    let c = 1.0 / (2.0 * s * s);
                    TrialFunction::radial(
                        &norm,
                        "gaussian",
                        Arc::new(move |r| (-c * r * r).exp()),
                        f64::INFINITY,
                        reach,
                        Smoothness::Bump,
                    )
                    .with_derivative(Arc::new(move |r| -2.0 * c * r * (-c * r * r).exp()))
                } else {
                    let c = 1.0 / (2.0 * s * s);
                    TrialFunction::general(
                        &norm,
                        "gaussian",
                        Arc::new(move |x: &[f64]| (-c * euclid2(x)).exp()),
                        f64::INFINITY,
                        norm_radius_of_euclidean_ball(&norm, reach),
                        Smoothness::Bump,
                    )
                };
                Ok(f.with_params(named(&["s"], t)))
            }),
        ),
        "bump" => (
            vec![bound("s", 1e-6, 1e6)],
            Arc::new(move |t: &[f64]| {
                let s = t[0];
                let g = move |r: f64| {
                    let u = r / s;
                    if u >= 1.0 {
                        0.0
                    } else {
                        (-1.0 / (1.0 - u * u)).exp()
                    }
                };
                let f = if euclid {
                    TrialFunction::radial(&norm, "bump", Arc::new(g), s, s, Smoothness::Bump).with_derivative(Arc::new(
                        move |r| {
                            let u = r / s;
                            if u >= 1.0 {
                                0.0
                            } else {
                                let d = 1.0 - u * u;
                                -2.0 * u / (s * d * d) * (-1.0 / d).exp()
                            }
                        },
                    ))
                } else {
                    let rad = norm_radius_of_euclidean_ball(&norm, s);
                    TrialFunction::general(
                        &norm,
                        "bump",
                        Arc::new(move |x: &[f64]| g(euclid2(x).sqrt())),
                        rad,
                        rad,
                        Smoothness::Bump,
                    )
                };
                Ok(f.with_params(named(&["s"], t)))
            }),
        ),
        "moser-spike" => (
            vec![bound("delta", 1e-300, 1.0 - 1e-9)],
            Arc::new(move |t: &[f64]| {
                let delta = t[0];
                let l = (1.0 / delta).ln();
                Ok(TrialFunction::radial(
                    &norm,
                    "moser-spike",
                    Arc::new(move |r| if r <= delta { 1.0 } else { (1.0 / r).ln() / l }),
                    1.0,
                    1.0,
                    Smoothness::Lipschitz,
                )
                .with_derivative(Arc::new(move |r| if r <= delta { 0.0 } else { -1.0 / (r * l) }))
                .with_kinks(vec![delta])
                .with_params(named(&["delta"], t)))
            }),
        ),
        "power-cutoff" => (
            vec![bound("R", 1e-12, 1e12), bound("exponent", -1e3, 1e3)],
            Arc::new(move |t: &[f64]| {
                let (rr, e) = (t[0], t[1]);
                Ok(TrialFunction::radial(
                    &norm,
                    "power-cutoff",
                    Arc::new(move |r| r.powf(e)),
                    rr,
                    rr,
                    Smoothness::Piecewise,
                )
                .with_derivative(Arc::new(move |r| e * r.powf(e - 1.0)))
                .with_params(named(&["R", "exponent"], t)))
            }),
        ),
        "reversed-hls" => (
            vec![bound("lambda", 1e-12, q - 1e-12), bound("R", 1.0, 1e300)],
            Arc::new(move |t: &[f64]| {
                let (lambda, rr) = (t[0], t[1]);
                if !(rr > 1.0) {
                    return Err(invalid(format!("reversed-HLS family needs R > 1, got {rr}")));
                }
                let e = -(q + lambda);
                Ok(TrialFunction::radial(
                    &norm,
                    "reversed-hls",
                    Arc::new(move |r| r.powf(e)),
                    rr,
                    rr,
                    Smoothness::Piecewise,
                )
                .with_derivative(Arc::new(move |r| e * r.powf(e - 1.0)))
                .with_inner_radius(1.0)
                .with_params(named(&["lambda", "R"], t)))
            }),
        ),
        other => {
            return Err(invalid(format!(
                "unknown family '{other}' (known: {})",
                FAMILIES.join(", ")
            )))
        }
    };
    Ok(Family {
        name: name.to_string(),
        params,
        generator,
    })
}

// ---------------------------------------------------------------------------
// Horizontal gradient

/// Default difference step h = 1e-4·(1 + |x|_E).
pub fn default_step(x: &[f64]) -> f64 {
    1e-4 * (1.0 + euclid2(x).sqrt())
}

/// Central differences of f along the first-layer left-invariant fields:
/// (f(x·(h e_j)) − f(x·(−h e_j)))/2h for the 2n horizontal directions of ℍⁿ,
/// or the ordinary gradient on ℝⁿ with unit weights.
pub fn horizontal_gradient(norm: &QuasiNorm, f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: Option<f64>) -> Result<Vec<f64>> {
    let g = norm.group();
    let layer = horizontal_layer(norm)?;
    if x.len() != g.dim() {
        return Err(invalid("point has the wrong dimension"));
    }
    let h = h.unwrap_or_else(|| default_step(x));
    if !(h > 0.0) {
        return Err(invalid("difference step must be positive"));
    }
    let mut e = vec![0.0; g.dim()];
    let mut plus = vec![0.0; g.dim()];
    let mut minus = vec![0.0; g.dim()];
    let mut out = Vec::with_capacity(layer);
    for j in 0..layer {
        e[j] = h;
        g.law_into(x, &e, &mut plus);
        e[j] = -h;
        g.law_into(x, &e, &mut minus);
        e[j] = 0.0;
        out.push((f(&plus) - f(&minus)) / (2.0 * h));
    }
    Ok(out)
}

/// Number of first-layer coordinates.
pub fn horizontal_layer(norm: &QuasiNorm) -> Result<usize> {
    let g = norm.group();
    match g.structure() {
        Structure::Heisenberg { n } => Ok(2 * n),
        Structure::Abelian if g.is_isotropic() => Ok(g.dim()),
        Structure::Abelian => Err(Error::Unsupported(
            "horizontal gradient needs ℍⁿ or ℝⁿ with unit weights".into(),
        )),
    }
}

/// |∇_H f(x)|.
pub fn horizontal_gradient_norm(norm: &QuasiNorm, f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Result<f64> {
    Ok(euclid2(&horizontal_gradient(norm, f, x, None)?).sqrt())
}

// ---------------------------------------------------------------------------
// Normalisation

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NormTarget {
    Lp {
        p: f64,
    },
    /// (‖(−Δ)^{a/2} f‖_p^p + ‖f‖_p^p)^{1/p} on a periodic grid.
    Sobolev {
        a: f64,
        p: f64,
    },
    /// ‖∇_H f‖_{L^Q}.
    GradQ,
}

/// ‖∇_H f‖_{L^Q(G)}. Radial functions use the degree-zero factorisation
/// |∇_H g(|x|)| = |g′(|x|)|·|∇_H |·||(x), which splits the integral into
/// c_Q(norm) times a one-dimensional integral.
pub fn grad_q_norm(f: &TrialFunction, opts: &QuadOptions) -> Result<IntegralEstimate> {
    let norm = f.norm();
    let q = norm.homogeneous_dim();
    if f.is_radial() {
        let c = crate::trudinger::c_q(norm)?;
        let h = |r: f64| {
            let d = f.radial_derivative(r).unwrap_or(0.0).abs();
            if d == 0.0 {
                0.0
            } else {
                d.powf(q) * r.powf(q - 1.0)
            }
        };
        let outer = if f.is_compact() {
            f.support_radius()
        } else {
            f.decay_radius()
        };
        let ropts = RadialOptions::default()
            .singular()
            .with_tolerance(opts.tolerance.max(1e-13))
            .with_breakpoints(f.kinks());
        let l = quadrature::line_integral(&h, f.inner_radius(), outer, &ropts)?;
        if l.divergent {
            return Ok(IntegralEstimate::divergent(quadrature::Method::Polar, l.evals));
        }
        let est = IntegralEstimate {
            value: c.value * l.value,
            abs_error: c.value * l.abs_error + c.abs_error * l.value,
            method: quadrature::Method::Polar,
            nodes: l.evals,
            divergent: false,
        };
        return Ok(est.root(q));
    }
    let field = |x: &[f64]| -> f64 {
        horizontal_gradient_norm(norm, &|y| f.eval(y), x)
            .map(|v| v.powf(q))
            .unwrap_or(f64::NAN)
    };
    horizontal_layer(norm)?;
    Ok(quadrature::integrate(&field, norm, &f.domain()?, opts)?.root(q))
}

/// Value of the requested norm of f.
pub fn measure(f: &TrialFunction, target: NormTarget, opts: &QuadOptions) -> Result<IntegralEstimate> {
    match target {
        NormTarget::Lp { p } => f.lp_norm(p, opts),
        NormTarget::Sobolev { a, p } => {
            let v = crate::kernels::trial_sobolev_norm(f, a, p, None)?;
            Ok(IntegralEstimate::exact(v, quadrature::Method::Grid))
        }
        NormTarget::GradQ => grad_q_norm(f, opts),
    }
}

/// c·f with the requested norm equal to `target`.
pub fn normalize(f: &TrialFunction, target_norm: NormTarget, target: f64, opts: &QuadOptions) -> Result<TrialFunction> {
    if !(target > 0.0) {
        return Err(invalid("normalisation target must be positive"));
    }
    let v = measure(f, target_norm, opts)?.value;
    if !(v > 0.0) || !v.is_finite() {
        return Err(invalid(format!("cannot normalise '{}': norm is {v}", f.label())));
    }
    Ok(f.scaled(target / v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn family_examples() {
        let n2 = QuasiNorm::euclidean(2);
        let rev = make_family("reversed-hls", &n2).unwrap().member(&[1.0, 100.0]).unwrap();
        assert_eq!(rev.eval(&[2.0, 0.0]), 2f64.powi(-3));
        assert_eq!(rev.eval(&[0.5, 0.0]), 0.0);
        assert_eq!(rev.eval(&[101.0, 0.0]), 0.0);
        let spike = make_family("moser-spike", &n2).unwrap().member(&[0.1]).unwrap();
        assert_eq!(spike.eval(&[0.05, 0.05]), 1.0);
        assert_eq!(spike.eval(&[1.0, 0.5]), 0.0);
        let g = make_family("gaussian", &n2).unwrap().member(&[1.0]).unwrap();
        assert_eq!(g.eval(&[0.0, 0.0]), 1.0);
        assert!(make_family("nope", &n2).is_err());
        assert!(make_family("gaussian", &n2).unwrap().member(&[-1.0]).is_err());
    }

    #[test]
    fn gaussian_dilation_coherence() {
        let n = QuasiNorm::euclidean(3);
        let fam = make_family("gaussian", &n).unwrap();
        let a = fam.member(&[1.5]).unwrap().dilated(2.0).unwrap();
        let b = fam.member(&[0.75]).unwrap();
        for x in [[0.1, 0.2, 0.3], [1.0, -2.0, 0.5]] {
            assert!((a.eval(&x) - b.eval(&x)).abs() < 1e-15);
        }
    }

    #[test]
    fn heisenberg_gradient_of_t() {
        let n = QuasiNorm::kaplan(1).unwrap();
        let g = horizontal_gradient(&n, &|x| x[2], &[1.0, 0.0, 0.0], None).unwrap();
        assert!(g[0].abs() < 1e-10 && (g[1] - 0.5).abs() < 1e-10, "{g:?}");
        let c = horizontal_gradient(&n, &|_| 3.0, &[0.3, 0.2, 0.1], None).unwrap();
        assert!(c.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn heisenberg_gradient_planar() {
        let n = QuasiNorm::kaplan(1).unwrap();
        let f = |x: &[f64]| (x[0] * x[0] + x[1] * x[1]).sin();
        let p = [0.4, -0.7, 2.0];
        let g = horizontal_gradient(&n, &f, &p, Some(1e-5)).unwrap();
        let s = (p[0] * p[0] + p[1] * p[1]).cos();
        assert!((g[0] - 2.0 * p[0] * s).abs() < 1e-8);
        assert!((g[1] - 2.0 * p[1] * s).abs() < 1e-8);
    }

    #[test]
    fn gradient_second_order() {
        // f = t·x has X f = t − x y/2 and Y f = x²/2
        let n = QuasiNorm::kaplan(1).unwrap();
        let f = |x: &[f64]| x[2] * x[0] * x[0] * x[1];
        let p = [0.7, 0.9, -0.4];
        let exact = |p: &[f64]| {
            let (x, y, t) = (p[0], p[1], p[2]);
            // X = ∂x − y/2 ∂t, Y = ∂y + x/2 ∂t
            let fx = 2.0 * t * x * y;
            let fy = t * x * x;
            let ft = x * x * y;
            [fx - 0.5 * y * ft, fy + 0.5 * x * ft]
        };
        let e = exact(&p);
        let err = |h: f64| {
            let g = horizontal_gradient(&n, &f, &p, Some(h)).unwrap();
            ((g[0] - e[0]).powi(2) + (g[1] - e[1]).powi(2)).sqrt()
        };
        let ratio = err(1e-2) / err(5e-3);
        assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn weighted_abelian_gradient_unsupported() {
        let n = QuasiNorm::parse("R:2:1,2", None).unwrap();
        assert!(matches!(
            horizontal_gradient(&n, &|_| 0.0, &[0.0, 0.0], None),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn gaussian_l2_normalisation() {
        let n = QuasiNorm::euclidean(2);
        let g = make_family("gaussian", &n).unwrap().member(&[1.0]).unwrap();
        // ‖e^{-|x|²/2}‖₂² = π
        let v = g.lp_norm(2.0, &QuadOptions::default()).unwrap();
        assert!((v.value - PI.sqrt()).abs() < 1e-9, "{v:?}");
        let u = normalize(&g, NormTarget::Lp { p: 2.0 }, 1.0, &QuadOptions::default()).unwrap();
        assert!((u.scale() - PI.powf(-0.5)).abs() < 1e-9);
        let again = normalize(&u, NormTarget::Lp { p: 2.0 }, 1.0, &QuadOptions::default()).unwrap();
        assert!((again.scale() / u.scale() - 1.0).abs() < 1e-8);
        assert!(normalize(&g.scaled(0.0), NormTarget::Lp { p: 2.0 }, 1.0, &QuadOptions::default()).is_err());
    }

    #[test]
    fn spike_gradient_norm() {
        // ‖∇m_δ‖₂² = 2π / ln(1/δ) on ℝ²
        let n = QuasiNorm::euclidean(2);
        let m = make_family("moser-spike", &n).unwrap().member(&[0.01]).unwrap();
        let v = grad_q_norm(&m, &QuadOptions::default()).unwrap();
        let exact = (2.0 * PI / (100f64).ln()).sqrt();
        assert!((v.value - exact).abs() < 1e-6 * exact, "{v:?} vs {exact}");
    }
}
