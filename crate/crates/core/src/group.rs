//! Homogeneous groups in exponential coordinates, their dilations and
//! homogeneous quasi-norms.

use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{self, IntegralEstimate};

#[derive(Clone, Debug, PartialEq)]
pub enum Structure {
    Abelian,
    /// ℍⁿ with coordinates (x₁..xₙ, y₁..yₙ, t).
    Heisenberg {
        n: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousGroup {
    structure: Structure,
    nu: Vec<f64>,
}

impl HomogeneousGroup {
    pub fn abelian(nu: Vec<f64>) -> Result<Self> {
        if nu.is_empty() {
            return Err(invalid("abelian group needs at least one coordinate"));
        }
        if let Some(w) = nu.iter().find(|w| !(**w >= 1.0) || !w.is_finite()) {
            return Err(invalid(format!("dilation weight {w} must be >= 1")));
        }
        Ok(Self {
            structure: Structure::Abelian,
            nu,
        })
    }

    pub fn euclidean(n: usize) -> Self {
        Self {
            structure: Structure::Abelian,
            nu: vec![1.0; n.max(1)],
        }
    }

    pub fn heisenberg(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("Heisenberg group needs n >= 1"));
        }
        let mut nu = vec![1.0; 2 * n];
        nu.push(2.0);
        Ok(Self {
            structure: Structure::Heisenberg { n },
            nu,
        })
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn dim(&self) -> usize {
        self.nu.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.nu
    }

    pub fn homogeneous_dim(&self) -> f64 {
        self.nu.iter().sum()
    }

    pub fn is_abelian(&self) -> bool {
        self.structure == Structure::Abelian
    }

    pub fn is_isotropic(&self) -> bool {
        self.nu.iter().all(|w| *w == 1.0)
    }

    /// First layer generates the Lie algebra: ℝⁿ with unit weights or ℍⁿ.
    pub fn is_stratified(&self) -> bool {
        match self.structure {
            Structure::Abelian => self.is_isotropic(),
            Structure::Heisenberg { .. } => true,
        }
    }

    pub fn identity(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    pub fn law(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.law_into(x, y, &mut out);
        out
    }

    pub fn law_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        for i in 0..out.len() {
            out[i] = x[i] + y[i];
        }
        if let Structure::Heisenberg { n } = self.structure {
            let mut twist = 0.0;
            for j in 0..n {
                twist += x[j] * y[n + j] - x[n + j] * y[j];
            }
            out[2 * n] += 0.5 * twist;
        }
    }

    /// Inverse is coordinate negation in exponential coordinates.
    pub fn inv(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| -v).collect()
    }

    pub fn dilate(&self, r: f64, x: &[f64]) -> Result<Vec<f64>> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(invalid(format!("dilation factor {r} must be positive")));
        }
        let mut out = vec![0.0; self.dim()];
        self.dilate_into(r, x, &mut out);
        Ok(out)
    }

    /// Dilation without the positivity check, for inner loops.
    pub fn dilate_into(&self, r: f64, x: &[f64], out: &mut [f64]) {
        for ((o, xi), w) in out.iter_mut().zip(x).zip(&self.nu) {
            *o = if *w == 1.0 {
                r * xi
            } else if *w == 2.0 {
                r * r * xi
            } else {
                r.powf(*w) * xi
            };
        }
    }

    pub fn id(&self) -> String {
        match self.structure {
            Structure::Heisenberg { n } => format!("H:{n}"),
            Structure::Abelian => {
                let w: Vec<String> = self.nu.iter().map(|v| format!("{v}")).collect();
                format!("R:{}:{}", self.dim(), w.join(","))
            }
        }
    }
}

impl fmt::Display for HomogeneousGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    /// Euclidean length, only for unit weights.
    Euclidean,
    /// max_i |x_i|^{1/ν_i}
    Max,
    /// (|z|⁴ + t²)^{1/4} on ℍⁿ.
    Kaplan,
}

impl NormKind {
    pub fn name(self) -> &'static str {
        match self {
            NormKind::Euclidean => "euclidean",
            NormKind::Max => "max",
            NormKind::Kaplan => "kaplan",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "euclidean" => Ok(NormKind::Euclidean),
            "max" => Ok(NormKind::Max),
            "kaplan" => Ok(NormKind::Kaplan),
            other => Err(invalid(format!("unknown norm '{other}'"))),
        }
    }
}

/// A homogeneous quasi-norm attached to its group.
#[derive(Clone, Debug)]
pub struct QuasiNorm {
    group: HomogeneousGroup,
    kind: NormKind,
    sphere: Arc<OnceLock<IntegralEstimate>>,
}

impl PartialEq for QuasiNorm {
    fn eq(&self, other: &Self) -> bool {
        self.group == other.group && self.kind == other.kind
    }
}

impl QuasiNorm {
    pub fn new(group: HomogeneousGroup, kind: NormKind) -> Result<Self> {
        match (&group.structure, kind) {
            (Structure::Abelian, NormKind::Euclidean) if !group.is_isotropic() => {
                return Err(invalid(
                    "Euclidean norm is not homogeneous for non-unit weights; use max",
                ))
            }
            (Structure::Abelian, NormKind::Kaplan) => return Err(invalid("Kaplan norm needs a Heisenberg group")),
            (Structure::Heisenberg { .. }, NormKind::Euclidean | NormKind::Max) => {
                return Err(Error::Unsupported(
                    "only the Kaplan norm is built in for Heisenberg groups".into(),
                ))
            }
            _ => {}
        }
        Ok(Self {
            group,
            kind,
            sphere: Arc::new(OnceLock::new()),
        })
    }

    pub fn euclidean(n: usize) -> Self {
        Self::new(HomogeneousGroup::euclidean(n), NormKind::Euclidean).expect("unit weights")
    }

    pub fn kaplan(n: usize) -> Result<Self> {
        Self::new(HomogeneousGroup::heisenberg(n)?, NormKind::Kaplan)
    }

    pub fn group(&self) -> &HomogeneousGroup {
        &self.group
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn homogeneous_dim(&self) -> f64 {
        self.group.homogeneous_dim()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self.kind {
            NormKind::Euclidean => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            NormKind::Max => x
                .iter()
                .zip(self.group.weights())
                .map(|(v, w)| if *w == 1.0 { v.abs() } else { v.abs().powf(1.0 / w) })
                .fold(0.0, f64::max),
            NormKind::Kaplan => {
                let m = x.len() - 1;
                let z2: f64 = x[..m].iter().map(|v| v * v).sum();
                let t = x[m];
                (z2 * z2 + t * t).sqrt().sqrt()
            }
        }
    }

    /// Whether the plain triangle inequality holds (C₀ = 1).
    pub fn is_norm(&self) -> bool {
        match self.kind {
            NormKind::Euclidean => true,
            NormKind::Max => self.group.is_isotropic(),
            NormKind::Kaplan => false,
        }
    }

    /// Half-widths of a coordinate box containing B(0, r).
    pub fn box_half_widths(&self, r: f64) -> Vec<f64> {
        self.group.weights().iter().map(|w| r.powf(*w)).collect()
    }

    pub fn polar(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let r = self.eval(x);
        if r == 0.0 {
            return Err(invalid("polar coordinates undefined at the identity"));
        }
        let y = self.group.dilate(1.0 / r, x)?;
        Ok((r, y))
    }

    /// |℘| = Q·|B(0,1)|, computed once with the default angular rule.
    pub fn sphere_measure(&self) -> Result<IntegralEstimate> {
        if let Some(v) = self.sphere.get() {
            return Ok(v.clone());
        }
        let est = quadrature::sphere_measure(self, &quadrature::QuadOptions::default())?;
        let _ = self.sphere.set(est.clone());
        Ok(est)
    }

    /// Cached sphere measure as a plain number; panics only if the default
    /// angular rule failed, which the unit tests rule out for built-ins.
    pub fn sphere_value(&self) -> f64 {
        self.sphere_measure().expect("sphere measure for a built-in norm").value
    }

    pub fn id(&self) -> String {
        match self.group.structure {
            Structure::Heisenberg { n } => format!("H:{n}:{}", self.kind.name()),
            Structure::Abelian => format!("{}:{}", self.group.id(), self.kind.name()),
        }
    }

    /// Parses "R:n[:ν1,…,νn][:norm]" or "H:n[:kaplan]". A separate norm id
    /// may be supplied and must agree with any suffix.
    pub fn parse(group_id: &str, norm_id: Option<&str>) -> Result<Self> {
        let parts: Vec<&str> = group_id.trim().split(':').map(str::trim).collect();
        let bad = || invalid(format!("malformed group id '{group_id}'"));
        if parts.len() < 2 {
            return Err(bad());
        }
        let n: usize = parts[1].parse().map_err(|_| bad())?;
        let mut suffix: Option<&str> = None;
        let group = match parts[0] {
            "R" | "r" => {
                let mut nu = vec![1.0; n];
                match parts.len() {
                    2 => {}
                    3 => {
                        if parts[2].chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
                            suffix = Some(parts[2]);
                        } else {
                            nu = parse_weights(parts[2], n).ok_or_else(bad)?;
                        }
                    }
                    4 => {
                        nu = parse_weights(parts[2], n).ok_or_else(bad)?;
                        suffix = Some(parts[3]);
                    }
                    _ => return Err(bad()),
                }
                HomogeneousGroup::abelian(nu)?
            }
            "H" | "h" => {
                match parts.len() {
                    2 => {}
                    3 => suffix = Some(parts[2]),
                    _ => return Err(bad()),
                }
                HomogeneousGroup::heisenberg(n)?
            }
            _ => return Err(bad()),
        };
        let kind = match (suffix, norm_id) {
            (Some(a), Some(b)) => {
                let (ka, kb) = (NormKind::parse(a)?, NormKind::parse(b)?);
                if ka != kb {
                    return Err(invalid(format!("norm '{b}' contradicts group id '{group_id}'")));
                }
                ka
            }
            (Some(a), None) | (None, Some(a)) => NormKind::parse(a)?,
            (None, None) => match group.structure {
                Structure::Heisenberg { .. } => NormKind::Kaplan,
                Structure::Abelian if group.is_isotropic() => NormKind::Euclidean,
                Structure::Abelian => NormKind::Max,
            },
        };
        Self::new(group, kind)
    }
}

fn parse_weights(s: &str, n: usize) -> Option<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|w| w.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .ok()?;
    (v.len() == n).then_some(v)
}

/// Largest sampled |xy|/(|x|+|y|) with the pair that attains it.
#[derive(Clone, Debug, Serialize)]
pub struct TriangleEstimate {
    pub c0: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub samples: usize,
}

/// Samples pairs uniformly in the unit coordinate box, the second point
/// dilated by a log-uniform factor in [1e-2, 1e2]. The estimate starts from
/// the pair (e₁, identity), whose ratio is exactly 1.
pub fn triangle_constant(norm: &QuasiNorm, rng: &mut ChaCha8Rng, samples: usize) -> TriangleEstimate {
    let g = norm.group();
    let d = g.dim();
    let mut e1 = g.identity();
    e1[0] = 1.0;
    let mut best = TriangleEstimate {
        c0: 1.0,
        x: e1,
        y: g.identity(),
        samples: 0,
    };
    let mut y = vec![0.0; d];
    let mut xy = vec![0.0; d];
    for _ in 0..samples {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y0: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = 10f64.powf(rng.gen_range(-2.0..2.0));
        g.dilate_into(s, &y0, &mut y);
        let denom = norm.eval(&x) + norm.eval(&y);
        best.samples += 1;
        if denom == 0.0 {
            continue;
        }
        g.law_into(&x, &y, &mut xy);
        let ratio = norm.eval(&xy) / denom;
        if ratio > best.c0 {
            best.c0 = ratio;
            best.x = x;
            best.y = y.clone();
        }
    }
    best
}
