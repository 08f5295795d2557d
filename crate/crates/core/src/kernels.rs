//! Heat, Riesz and Bessel kernels of −Δ on ℝⁿ, group convolution, and a
//! periodic spectral grid for fractional powers of −Δ.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::group::{NormKind, QuasiNorm};
use crate::quadrature::{self, Domain, IntegralEstimate, QuadOptions, RadialOptions};
use crate::special::gamma;
use crate::trial::TrialFunction;

/// −Δ on ℝⁿ: homogeneous degree 2, heat kernel (4πt)^{-n/2} e^{-|x|²/4t}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HeatKernel {
    pub n: usize,
}

impl HeatKernel {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("dimension must be positive"));
        }
        Ok(Self { n })
    }

    pub fn for_norm(norm: &QuasiNorm) -> Result<Self> {
        let g = norm.group();
        if !g.is_abelian() || !g.is_isotropic() {
            return Err(Error::Unsupported(
                "the heat kernel is only available for ℝⁿ with unit weights".into(),
            ));
        }
        Self::new(g.dim())
    }

    pub fn name(&self) -> &'static str {
        "minus-laplacian"
    }

    pub fn degree(&self) -> f64 {
        2.0
    }

    pub fn homogeneous_dim(&self) -> f64 {
        self.n as f64
    }

    pub fn eval_radial(&self, t: f64, r: f64) -> f64 {
        (4.0 * PI * t).powf(-(self.n as f64) / 2.0) * (-r * r / (4.0 * t)).exp()
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (4.0 * PI * t).powf(-(self.n as f64) / 2.0) * (-r2 / (4.0 * t)).exp()
    }

    /// ∫ h_t by the radial path.
    pub fn mass(&self, t: f64) -> Result<IntegralEstimate> {
        if !(t > 0.0) {
            return Err(invalid("heat time must be positive"));
        }
        let norm = QuasiNorm::euclidean(self.n);
        let reach = (4.0 * t * 800.0).sqrt();
        let g = |r: f64| self.eval_radial(t, r);
        quadrature::radial_integral(&g, 0.0, reach, &norm, &RadialOptions::default().with_tolerance(1e-12))
    }
}

fn check_order(n: usize, a: f64) -> Result<()> {
    if !(a > 0.0 && a < n as f64) {
        return Err(invalid(format!("order a = {a} must lie in (0, {n})")));
    }
    Ok(())
}

/// ∫₀^∞ v^{(n−a)/2−1} e^{−v/4} e^{−ρ²/v} dv, the common time integral after
/// t = |x|²/v.
fn time_integral(n: usize, a: f64, rho: f64) -> Result<f64> {
    let e = (n as f64 - a) / 2.0 - 1.0;
    let r2 = rho * rho;
    let h = move |v: f64| {
        if v == 0.0 {
            return 0.0;
        }
        let damp = if r2 == 0.0 { 0.0 } else { r2 / v };
        (e * v.ln() - v / 4.0 - damp).exp()
    };
    let mut opts = RadialOptions::default().singular().with_tolerance(1e-12);
    if r2 > 0.0 {
        // peak of the damped integrand sits near v = 2ρ
        opts.breakpoints = vec![rho, 2.0 * rho, 4.0 * rho];
    }
    let l = quadrature::line_integral(&h, 0.0, f64::INFINITY, &opts)?;
    if !l.converged || l.divergent {
        return Err(Error::Accuracy {
            message: "kernel time integral did not converge".into(),
            partial: l.value,
            abs_error: l.abs_error,
        });
    }
    Ok(l.value)
}

/// Riesz kernel 𝓘_a(x) = Γ(a/2)^{-1} ∫₀^∞ t^{a/2−1} h_t(x) dt on ℝⁿ as a
/// function of r = |x|.
pub fn riesz_profile(n: usize, a: f64, r: f64) -> Result<f64> {
    check_order(n, a)?;
    if !(r > 0.0) {
        return Err(invalid("the Riesz kernel is singular at the identity"));
    }
    let j = time_integral(n, a, 0.0)?;
    Ok(r.powf(a - n as f64) * (4.0 * PI).powf(-(n as f64) / 2.0) * j / gamma(a / 2.0))
}

pub fn riesz_kernel(norm: &QuasiNorm, a: f64, x: &[f64]) -> Result<f64> {
    let hk = HeatKernel::for_norm(norm)?;
    riesz_profile(hk.n, a, euclidean_length(x))
}

/// Bessel kernel 𝓑_a(x) = Γ(a/2)^{-1} ∫₀^∞ t^{a/2−1} e^{−t} h_t(x) dt.
pub fn bessel_profile(n: usize, a: f64, r: f64) -> Result<f64> {
    check_order(n, a)?;
    if !(r > 0.0) {
        return Err(invalid("the Bessel kernel is singular at the identity"));
    }
    let j = time_integral(n, a, r)?;
    Ok(r.powf(a - n as f64) * (4.0 * PI).powf(-(n as f64) / 2.0) * j / gamma(a / 2.0))
}

pub fn bessel_kernel(norm: &QuasiNorm, a: f64, x: &[f64]) -> Result<f64> {
    let hk = HeatKernel::for_norm(norm)?;
    bessel_profile(hk.n, a, euclidean_length(x))
}

fn euclidean_length(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    /// (|x|, kernel / comparison power)
    pub samples: Vec<(f64, f64)>,
    /// Supremum of the ratios: the reported constant C.
    pub constant: f64,
    pub finite: bool,
}

impl BoundReport {
    fn from(samples: Vec<(f64, f64)>) -> Self {
        let constant = samples.iter().map(|s| s.1.abs()).fold(0.0, f64::max);
        Self {
            finite: constant.is_finite(),
            samples,
            constant,
        }
    }
}

/// |𝓘_a(x)| / |x|^{a−Q} over the given radii.
pub fn riesz_bound(n: usize, a: f64, radii: &[f64]) -> Result<BoundReport> {
    let mut s = Vec::with_capacity(radii.len());
    for &r in radii {
        s.push((r, riesz_profile(n, a, r)? / r.powf(a - n as f64)));
    }
    Ok(BoundReport::from(s))
}

/// The two regimes: |𝓑_a(x)|/|x|^{a−Q} for |x| ≤ 1 and |𝓑_a(x)|/|x|^{−Q}
/// for |x| ≥ 1.
pub fn bessel_bound(n: usize, a: f64, radii: &[f64]) -> Result<(BoundReport, BoundReport)> {
    let q = n as f64;
    let (mut near, mut far) = (Vec::new(), Vec::new());
    for &r in radii {
        let b = bessel_profile(n, a, r)?;
        if r <= 1.0 {
            near.push((r, b / r.powf(a - q)));
        }
        if r >= 1.0 {
            far.push((r, b / r.powf(-q)));
        }
    }
    Ok((BoundReport::from(near), BoundReport::from(far)))
}

/// (f ∗ g)(x) = ∫ f(y) g(y⁻¹x) dy with f supported in `f_domain`.
pub fn convolve(
    norm: &QuasiNorm,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    f_domain: &Domain,
    g: &(dyn Fn(&[f64]) -> f64 + Sync),
    x: &[f64],
    opts: &QuadOptions,
) -> Result<IntegralEstimate> {
    let grp = norm.group();
    if x.len() != grp.dim() {
        return Err(invalid("point has the wrong dimension"));
    }
    let integrand = |y: &[f64]| {
        let fy = f(y);
        if fy == 0.0 {
            return 0.0;
        }
        let z = grp.law(&grp.inv(y), x);
        fy * g(&z)
    };
    let est = quadrature::integrate(&integrand, norm, f_domain, opts)?;
    if est.divergent {
        return Err(Error::Accuracy {
            message: "convolution integral diverges".into(),
            partial: est.value,
            abs_error: est.abs_error,
        });
    }
    Ok(est)
}

// ---------------------------------------------------------------------------
// Periodic spectral grids

/// The cube [−L/2, L/2)ⁿ sampled with M points per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PeriodicBox {
    pub n: usize,
    pub m: usize,
    pub side: f64,
}

impl PeriodicBox {
    pub fn new(n: usize, m: usize, side: f64) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(invalid("periodic boxes support dimensions 1 to 3"));
        }
        if m < 4 || !m.is_multiple_of(2) {
            return Err(invalid("resolution must be even and at least 4"));
        }
        if !(side > 0.0) || !side.is_finite() {
            return Err(invalid("box side must be positive"));
        }
        Ok(Self { n, m, side })
    }

    /// Default box for a function of support or decay radius R: side 4R,
    /// M = 1024, 256, 128 in dimensions 1, 2, 3.
    pub fn for_radius(n: usize, radius: f64) -> Result<Self> {
        let m = match n {
            1 => 1024,
            2 => 256,
            _ => 128,
        };
        Self::new(n, m, 4.0 * radius)
    }

    pub fn spacing(&self) -> f64 {
        self.side / self.m as f64
    }

    pub fn len(&self) -> usize {
        self.m.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.n as i32)
    }

    fn coord(&self, j: usize) -> f64 {
        -0.5 * self.side + j as f64 * self.spacing()
    }

    fn point(&self, mut idx: usize, out: &mut [f64]) {
        for k in (0..self.n).rev() {
            out[k] = self.coord(idx % self.m);
            idx /= self.m;
        }
    }

    /// Angular frequency of FFT bin j.
    fn freq(&self, j: usize) -> f64 {
        let k = if j < self.m / 2 {
            j as f64
        } else {
            j as f64 - self.m as f64
        };
        2.0 * PI * k / self.side
    }
}

/// Row-major samples on a periodic box.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: PeriodicBox,
    pub data: Vec<f64>,
}

const MAGIC: &[u8; 4] = b"HIQG";

impl GridFunction {
    pub fn sample(grid: PeriodicBox, f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Result<Self> {
        let mut data = vec![0.0; grid.len()];
        let fill = |(i, v): (usize, &mut f64)| -> Result<()> {
            let mut x = [0.0; 3];
            grid.point(i, &mut x[..grid.n]);
            let y = f(&x[..grid.n]);
            if y.is_nan() {
                return Err(Error::Evaluation {
                    point: x[..grid.n].to_vec(),
                });
            }
            *v = y;
            Ok(())
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            data.par_iter_mut().enumerate().try_for_each(fill)?;
        }
        #[cfg(not(feature = "parallel"))]
        {
            data.iter_mut().enumerate().try_for_each(fill)?;
        }
        Ok(Self { grid, data })
    }

    pub fn sample_trial(grid: PeriodicBox, f: &TrialFunction) -> Result<Self> {
        Self::sample(grid, &|x: &[f64]| f.eval(x))
    }

    /// Fraction of ∫|f| lying outside the guard cube |x|_∞ ≤ L/4.
    pub fn mass_outside_guard(&self) -> f64 {
        let g = self.grid;
        let mut x = [0.0; 3];
        let (mut out, mut total) = (0.0, 0.0);
        for (i, v) in self.data.iter().enumerate() {
            let a = v.abs();
            total += a;
            g.point(i, &mut x[..g.n]);
            if x[..g.n].iter().any(|c| c.abs() > 0.25 * g.side) {
                out += a;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            out / total
        }
    }

    fn check_guard(&self) -> Result<()> {
        let m = self.mass_outside_guard();
        if m > 1e-8 {
            return Err(Error::Precondition(format!(
                "{m:.3e} of the mass lies outside |x|_∞ ≤ L/4; enlarge the box"
            )));
        }
        Ok(())
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        let dv = self.grid.cell_volume();
        if p.is_infinite() {
            return self.data.iter().map(|v| v.abs()).fold(0.0, f64::max);
        }
        (self.data.iter().map(|v| v.abs().powf(p)).sum::<f64>() * dv).powf(1.0 / p)
    }

    /// Applies the Fourier multiplier m(|ξ|²) with the zero mode mapped to
    /// m's value there.
    pub fn apply_multiplier(&self, m: &dyn Fn(f64) -> f64) -> Self {
        let g = self.grid;
        let mut buf: Vec<Complex64> = self.data.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(g.m);
        let inv = planner.plan_fft_inverse(g.m);
        transform(&mut buf, g, &fwd);
        let mut idx = [0usize; 3];
        for (i, c) in buf.iter_mut().enumerate() {
            let mut rem = i;
            for k in (0..g.n).rev() {
                idx[k] = rem % g.m;
                rem /= g.m;
            }
            let xi2: f64 = idx[..g.n].iter().map(|j| g.freq(*j).powi(2)).sum();
            *c *= m(xi2);
        }
        transform(&mut buf, g, &inv);
        let scale = 1.0 / g.len() as f64;
        Self {
            grid: g,
            data: buf.iter().map(|c| c.re * scale).collect(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + 8 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.grid.n as u32).to_le_bytes());
        out.extend_from_slice(&(self.grid.m as u32).to_le_bytes());
        out.extend_from_slice(&self.grid.side.to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 20 || &bytes[..4] != MAGIC {
            return Err(invalid("not a grid function record"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
        let n = u32_at(4);
        let m = u32_at(8);
        let side = f64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
        let grid = PeriodicBox::new(n, m, side)?;
        let body = &bytes[20..];
        if body.len() != 8 * grid.len() {
            return Err(invalid("grid function record has the wrong length"));
        }
        let data = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(Self { grid, data })
    }
}

/// In-place n-dimensional FFT by passes along each axis.
fn transform(buf: &mut [Complex64], g: PeriodicBox, fft: &Arc<dyn Fft<f64>>) {
    let m = g.m;
    let mut line = vec![Complex64::new(0.0, 0.0); m];
    for axis in 0..g.n {
        let stride = m.pow((g.n - 1 - axis) as u32);
        for start in 0..g.len() {
            // visit each line once: its first element has axis index 0
            if !(start / stride).is_multiple_of(m) {
                continue;
            }
            for j in 0..m {
                line[j] = buf[start + j * stride];
            }
            fft.process(&mut line);
            for j in 0..m {
                buf[start + j * stride] = line[j];
            }
        }
    }
}

/// (−Δ)^s: multiplier |ξ|^{2s}, zero mode sent to 0 for s > 0.
pub fn frac_laplacian(f: &GridFunction, s: f64) -> Result<GridFunction> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(invalid(format!("order s = {s} must be nonnegative")));
    }
    f.check_guard()?;
    if s == 0.0 {
        return Ok(f.clone());
    }
    Ok(f.apply_multiplier(&|xi2: f64| if xi2 == 0.0 { 0.0 } else { xi2.powf(s) }))
}

/// (‖(−Δ)^{a/2} f‖_p^p + ‖f‖_p^p)^{1/p}.
pub fn sobolev_norm(f: &GridFunction, a: f64, p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(invalid(format!("exponent p = {p} must be finite and >= 1")));
    }
    let d = frac_laplacian(f, a / 2.0)?;
    Ok((d.lp_norm(p).powf(p) + f.lp_norm(p).powf(p)).powf(1.0 / p))
}

/// ‖(−Δ)^{a/2} f‖_p on the grid.
pub fn homogeneous_norm(f: &GridFunction, a: f64, p: f64) -> Result<f64> {
    Ok(frac_laplacian(f, a / 2.0)?.lp_norm(p))
}

fn trial_grid(f: &TrialFunction, grid: Option<PeriodicBox>) -> Result<GridFunction> {
    let norm = f.norm();
    let g = norm.group();
    if !g.is_abelian() || !g.is_isotropic() || norm.kind() == NormKind::Kaplan {
        return Err(Error::Unsupported("spectral norms need ℝⁿ with unit weights".into()));
    }
    let grid = match grid {
        Some(b) => b,
        None => PeriodicBox::for_radius(g.dim(), f.decay_radius())?,
    };
    if grid.n != g.dim() {
        return Err(invalid("box dimension differs from the group dimension"));
    }
    GridFunction::sample_trial(grid, f)
}

/// Inhomogeneous Sobolev norm of a trial function on its default box.
pub fn trial_sobolev_norm(f: &TrialFunction, a: f64, p: f64, grid: Option<PeriodicBox>) -> Result<f64> {
    sobolev_norm(&trial_grid(f, grid)?, a, p)
}

/// ‖(−Δ)^{a/2} f‖_p of a trial function.
pub fn trial_homogeneous_norm(f: &TrialFunction, a: f64, p: f64, grid: Option<PeriodicBox>) -> Result<f64> {
    homogeneous_norm(&trial_grid(f, grid)?, a, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trial::make_family;

    #[test]
    fn heat_mass_and_homogeneity() {
        for n in [1, 2, 3] {
            let h = HeatKernel::new(n).unwrap();
            for t in [0.1, 1.0, 10.0] {
                let m = h.mass(t).unwrap();
                assert!((m.value - 1.0).abs() < 1e-6, "n={n} t={t} {m:?}");
            }
            let x = [0.3, -0.2, 0.7];
            let (t, r) = (0.4, 1.7);
            let lhs = h.eval(r * r * t, &x[..n].iter().map(|v| r * v).collect::<Vec<_>>());
            let rhs = r.powi(-(n as i32)) * h.eval(t, &x[..n]);
            assert!((lhs / rhs - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn riesz_newtonian() {
        for r in [0.5, 1.0, 2.0] {
            let v = riesz_profile(3, 2.0, r).unwrap();
            assert!((v * 4.0 * PI * r - 1.0).abs() < 1e-6, "{v}");
        }
        let x = [0.3, 0.4, 0.5];
        let n3 = QuasiNorm::euclidean(3);
        let a = 1.3;
        let v1 = riesz_kernel(&n3, a, &x).unwrap();
        let v2 = riesz_kernel(&n3, a, &x.map(|c| 2.0 * c)).unwrap();
        assert!((v2 / v1 - 2f64.powf(a - 3.0)).abs() < 1e-12);
        assert!(riesz_profile(3, 3.0, 1.0).is_err());
    }

    #[test]
    fn bessel_below_riesz_and_bounded() {
        let radii: Vec<f64> = (0..25).map(|k| 10f64.powf(-3.0 + 0.25 * k as f64)).collect();
        for &r in &radii {
            assert!(bessel_profile(2, 1.0, r).unwrap() <= riesz_profile(2, 1.0, r).unwrap());
        }
        let (near, far) = bessel_bound(2, 1.0, &radii).unwrap();
        assert!(near.finite && far.finite && near.constant > 0.0);
    }

    #[test]
    fn bessel_one_dimensional_oracle() {
        // direct trapezoid in log t of the defining time integral
        let (a, r) = (0.5, 1.0);
        let mut s = 0.0;
        let h = 1e-3;
        let mut u = -30.0;
        while u < 8.0 {
            let t = f64::exp(u);
            s += t.powf(a / 2.0) * (-t).exp() * (4.0 * PI * t).powf(-0.5) * (-r * r / (4.0 * t)).exp() * h;
            u += h;
        }
        let oracle = s / gamma(a / 2.0);
        let v = bessel_profile(1, a, r).unwrap();
        assert!((v / oracle - 1.0).abs() < 1e-4, "{v} {oracle}");
    }

    #[test]
    fn indicator_convolution_peak() {
        let n = QuasiNorm::euclidean(1);
        let chi = |x: &[f64]| if (0.0..=1.0).contains(&x[0]) { 1.0 } else { 0.0 };
        let dom = Domain::Box {
            center: vec![0.5],
            half_widths: vec![0.5],
        };
        let v = convolve(&n, &chi, &dom, &chi, &[1.0], &QuadOptions::default()).unwrap();
        assert!((v.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn heat_semigroup_by_quadrature() {
        let n = QuasiNorm::euclidean(2);
        let h = HeatKernel::new(2).unwrap();
        let (t, s) = (0.3, 0.5);
        let x = [0.4, -0.3];
        let dom = Domain::Box {
            center: vec![0.0, 0.0],
            half_widths: vec![8.0, 8.0],
        };
        let v = convolve(
            &n,
            &|y| h.eval(t, y),
            &dom,
            &|z| h.eval(s, z),
            &x,
            &QuadOptions::default(),
        )
        .unwrap();
        assert!((v.value - h.eval(t + s, &x)).abs() < 1e-8, "{v:?}");
    }

    #[test]
    fn laplacian_of_gaussian() {
        let b = PeriodicBox::new(2, 256, 40.0).unwrap();
        let f = GridFunction::sample(b, &|x| (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp()).unwrap();
        let d = frac_laplacian(&f, 1.0).unwrap();
        let exact = GridFunction::sample(b, &|x| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            (2.0 - r2) * (-r2 / 2.0).exp()
        })
        .unwrap();
        let err: f64 = d
            .data
            .iter()
            .zip(&exact.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3 * 2.0, "{err}");
        // ‖(−Δ)^{1/2} f‖₂² = ∫|∇f|² = π
        let half = frac_laplacian(&f, 0.5).unwrap();
        assert!((half.lp_norm(2.0) - PI.sqrt()).abs() < 1e-4);
        assert_eq!(frac_laplacian(&f, 0.0).unwrap(), f);
    }

    #[test]
    fn multiplier_composition_and_guard() {
        let b = PeriodicBox::new(1, 256, 30.0).unwrap();
        let f = GridFunction::sample(b, &|x| (-x[0] * x[0]).exp()).unwrap();
        // the guard applies to inputs; (−Δ)^{0.3} f has algebraic tails
        let pow = |s: f64| move |xi2: f64| if xi2 == 0.0 { 0.0 } else { xi2.powf(s) };
        let ab = f.apply_multiplier(&pow(0.3)).apply_multiplier(&pow(0.45));
        let direct = frac_laplacian(&f, 0.75).unwrap();
        let err: f64 = ab
            .data
            .iter()
            .zip(&direct.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
        let wide = GridFunction::sample(b, &|x| (-x[0] * x[0] / 50.0).exp()).unwrap();
        assert!(matches!(frac_laplacian(&wide, 0.5), Err(Error::Precondition(_))));
    }

    #[test]
    fn sobolev_norm_examples() {
        let n = QuasiNorm::euclidean(2);
        let g = make_family("gaussian", &n).unwrap().member(&[1.0]).unwrap();
        // ‖f‖₂² = π and ‖(−Δ)^{1/2}f‖₂² = π
        let v = trial_sobolev_norm(&g, 1.0, 2.0, None).unwrap();
        assert!((v / (2.0 * PI).sqrt() - 1.0).abs() < 1e-3, "{v}");
        let l2 = g.lp_norm(2.0, &QuadOptions::default()).unwrap().value;
        let v0 = trial_sobolev_norm(&g, 0.0, 2.0, None).unwrap();
        assert!((v0 - 2f64.sqrt() * l2).abs() < 1e-4);
        assert_eq!(trial_sobolev_norm(&g.scaled(0.0), 1.0, 2.0, None).unwrap(), 0.0);
    }

    #[test]
    fn grid_bytes_round_trip() {
        let b = PeriodicBox::new(2, 8, 3.0).unwrap();
        let f = GridFunction::sample(b, &|x| x[0] - 2.0 * x[1]).unwrap();
        let back = GridFunction::from_bytes(&f.to_bytes()).unwrap();
        assert_eq!(back, f);
        assert!(GridFunction::from_bytes(b"nope").is_err());
    }
}
