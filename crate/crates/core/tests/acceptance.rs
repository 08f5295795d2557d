//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::f64::consts::{E, PI};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

use hypoineq::group::QuasiNorm;
use hypoineq::hardy::{weight_condition, Condition, HardyParams, RGrid, Weight, WeightPair};
use hypoineq::inequalities::{
    self as ineq, reversed_hls_demo, uncertainty_chain, InequalitySpec, Params, RatioOptions, TheoremId,
};
use hypoineq::kernels::{self, HeatKernel};
use hypoineq::quadrature::minkowski_check;
use hypoineq::report::{run, Entry, Report, RunOptions, SuiteConfig};
use hypoineq::trial::make_family;
use hypoineq::trudinger::{self as tm, TmSpec};
use hypoineq::Result;

type Outcome = Result<(bool, String)>;
/// Name, check, time budget in seconds.
type Criterion = (&'static str, fn() -> Outcome, f64);

fn member(family: &str, norm: &QuasiNorm, theta: &[f64]) -> Result<hypoineq::trial::TrialFunction> {
    make_family(family, norm)?.member(theta)
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn suite(name: &str, seed: u64) -> Report {
    let cfg = SuiteConfig::parse(&format!("suites = [\"{name}\"]\nseed = {seed}")).expect("config");
    run(&cfg, RunOptions::default()).expect("run")
}

fn entry<'a>(r: &'a Report, id: &str) -> &'a Entry {
    r.suites
        .iter()
        .flat_map(|s| &s.entries)
        .find(|e| e.id == id)
        .unwrap_or_else(|| panic!("missing entry {id}"))
}

const SEED: u64 = 20240917;

/// Ball-volume weight on the plane: every section equals one, so A₁ = (p−1)^{−1/p} = 1.
fn c01() -> Outcome {
    let n = QuasiNorm::euclidean(2);
    let pair = WeightPair::new(Weight::ball_volume_power(&n, -2.0)?, Weight::constant(1.0));
    let r = weight_condition(
        Condition::A1,
        &pair,
        &HardyParams::new(2.0, 2.0)?,
        &n,
        &RGrid::default(),
    )?;
    let p: f64 = 2.0;
    let oracle = (p - 1.0).powf(-1.0 / p);
    Ok((
        (r.value - oracle).abs() <= 1e-3,
        format!("A1 = {:.6} (oracle {oracle})", r.value),
    ))
}

fn c02() -> Outcome {
    let r = suite("weights", SEED);
    let mut ok = true;
    let mut worst = f64::INFINITY;
    for id in ["sandwich-ball-volume-r2", "sandwich-power-r1", "sandwich-power-r2-q3"] {
        let e = entry(&r, id);
        ok &= e.pass;
        let frac = e.details["min_extremal_fraction"].as_f64().unwrap_or(f64::NAN);
        let radii = e.details["extremals"].as_array().map_or(0, Vec::len);
        ok &= frac >= 0.98 && radii == 8;
        worst = worst.min(frac);
    }
    Ok((
        ok,
        format!("3 instances within envelope, min extremal fraction {worst:.4}"),
    ))
}

fn c03() -> Outcome {
    let n = QuasiNorm::euclidean(3);
    let mut newton: f64 = 0.0;
    for r in [0.5, 1.0, 2.0] {
        newton = newton.max((kernels::riesz_kernel(&n, 2.0, &[0.0, r, 0.0])? * 4.0 * PI * r - 1.0).abs());
    }
    let x = [0.2, 0.5, -0.1];
    let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
    let hom = (kernels::riesz_kernel(&n, 2.0, &x2)? / kernels::riesz_kernel(&n, 2.0, &x)? - 0.5).abs();
    let b = kernels::riesz_bound(3, 2.0, &log_grid(1e-3, 1e3, 31))?;
    let ok = newton <= 1e-3 && hom <= 1e-6 && b.finite;
    Ok((
        ok,
        format!(
            "newtonian dev {newton:.2e}, homogeneity dev {hom:.2e}, C = {:.5}",
            b.constant
        ),
    ))
}

fn c04() -> Outcome {
    let (near, far) = kernels::bessel_bound(2, 1.0, &log_grid(1e-3, 30.0, 41))?;
    let ok = near.finite && far.finite && near.constant > 0.0 && far.constant > 0.0;
    Ok((
        ok,
        format!("near sup {:.5}, far sup {:.5}", near.constant, far.constant),
    ))
}

fn c05() -> Outcome {
    let h = HeatKernel::new(2)?;
    let mut mass: f64 = 0.0;
    for t in [0.1, 1.0, 10.0] {
        mass = mass.max((h.mass(t)?.value - 1.0).abs());
    }
    // Completing the square in y for h_t(x−y)h_s(y) leaves
    // h_t(0)h_s(0)(4πts/(t+s))^{n/2}e^{−|x|²/4(t+s)} after integration.
    let mut semigroup: f64 = 0.0;
    for (t, s) in [(0.1, 0.3), (1.0, 1.0), (0.5, 4.0)] {
        for x in [[0.0, 0.0], [0.3, -0.2], [1.5, 0.7]] {
            let r2 = x[0] * x[0] + x[1] * x[1];
            let closed = h.eval(t, &[0.0, 0.0]) * h.eval(s, &[0.0, 0.0]) * 4.0 * PI * t * s / (t + s)
                * (-r2 / (4.0 * (t + s))).exp();
            semigroup = semigroup.max((closed / h.eval(t + s, &x) - 1.0).abs());
        }
    }
    // Independent of the closed form: ∫h_t h_s over the plane by the
    // midpoint rule in r, which is h_{t+s}(0).
    let (t, s) = (0.4, 1.1);
    let (k, lim) = (4000usize, 12.0);
    let dr = lim / k as f64;
    let direct: f64 = (0..k)
        .map(|i| {
            let r = (i as f64 + 0.5) * dr;
            h.eval_radial(t, r) * h.eval_radial(s, r) * 2.0 * PI * r * dr
        })
        .sum();
    let midpoint = (direct * 4.0 * PI * (t + s) - 1.0).abs();
    let x = [0.3, -0.8];
    let mut hom: f64 = 0.0;
    for r in [0.5, 2.0] {
        let rx = [r * x[0], r * x[1]];
        hom = hom.max((h.eval(r * r, &rx) * r * r / h.eval(1.0, &x) - 1.0).abs());
    }
    let ok = mass <= 1e-6 && semigroup <= 1e-12 && midpoint <= 1e-6 && hom <= 1e-10;
    Ok((
        ok,
        format!("mass dev {mass:.1e}, semigroup dev {semigroup:.1e}, homogeneity dev {hom:.1e}"),
    ))
}

fn c06() -> Outcome {
    let n = QuasiNorm::euclidean(3);
    let s = InequalitySpec::new(
        TheoremId::HardySobolev,
        Params::from_pairs(&[("p", 2.0), ("q", 2.0), ("a", 1.0), ("b", 2.0)]),
        &n,
    );
    let f = member("gaussian", &n, &[1.0])?;
    let o = RatioOptions::default();
    let base = ineq::ratio(&s, &f, None, &o)?.ratio;
    // ∫|x|^{-2}e^{-r²} over ℝ³ is 2π^{3/2}, ∫|∇e^{-r²/2}|² is 3π^{3/2}/2.
    let oracle = (2.0f64 / 1.5).sqrt();
    let mut dil: f64 = 0.0;
    for l in [0.5, 2.0] {
        dil = dil.max((ineq::ratio(&s, &f.dilated(l)?, None, &o)?.ratio - base).abs());
    }
    let ok = (base - oracle).abs() <= 1e-3 && dil <= 1e-2;
    Ok((
        ok,
        format!("ratio {base:.6} (oracle {oracle:.6}), dilation dev {dil:.1e}"),
    ))
}

fn c07() -> Outcome {
    let a = tm::alpha_q(&QuasiNorm::euclidean(2))?.alpha_q;
    let h = tm::alpha_htype(2, 1)?;
    let oracle = 4.0 * (PI * PI / 4.0).powf(1.0 / 3.0);
    let ok = (a - 4.0 * PI).abs() <= 1e-6 && (h - oracle).abs() <= 1e-9;
    Ok((ok, format!("alpha_Q = {a:.9}, H-type alpha_4 = {h:.9}")))
}

fn c08() -> Outcome {
    let qs = [8.0, 32.0, 128.0, 400.0];
    let t = tm::gamma_asymptotic_check(2.0, &qs)?;
    let oracle: Vec<f64> = qs
        .iter()
        .map(|&q| (ln_gamma(q / 2.0 + 2.0) / q - 0.5 * (q / (2.0 * E)).ln()).exp())
        .collect();
    let agree = t
        .rows
        .iter()
        .zip(&oracle)
        .all(|(r, o)| (r.ratio - o).abs() <= 1e-10 * o);
    let dec = oracle.windows(2).all(|w| w[1] < w[0]) && t.decreasing;
    let last = t.rows.last().map_or(f64::NAN, |r| r.ratio);
    let ok = agree && dec && (last - 1.0).abs() <= 0.03;
    Ok((ok, format!("ratio at q=400 {last:.5}, decreasing {dec}")))
}

fn c09() -> Outcome {
    let radii = [E, 1e2, 1e4];
    let t = reversed_hls_demo(&QuasiNorm::euclidean(2), 1.0, &radii)?;
    let mut worst: f64 = 0.0;
    for (row, r) in t.rows.iter().zip(radii) {
        let oracle = 2.0 / (2.0 * PI * r.ln()).sqrt();
        worst = worst.max((row.numeric - oracle).abs() / oracle);
    }
    let dec = t.rows.windows(2).all(|w| w[1].numeric < w[0].numeric);
    Ok((
        worst <= 0.05 && dec,
        format!("worst rel dev {worst:.4}, strictly decreasing {dec}"),
    ))
}

fn c10() -> Outcome {
    let mut phi: f64 = 0.0;
    for i in 0..=400 {
        let u = 1e-8 * 1e10f64.powf(f64::from(i) / 400.0);
        let t = 1.3;
        let alpha = u / (t * t);
        phi = phi.max((tm::phi_truncated(2.0, alpha, t)? - u.exp_m1()).abs() / u.exp_m1());
    }
    let n = QuasiNorm::euclidean(2);
    let spec = TmSpec::local(&n, 2.0, 4.0, 1.0, 1.0)?;
    let mut all = true;
    let mut count = 0;
    for (fam, th) in [
        ("moser-spike", 0.1),
        ("moser-spike", 0.3),
        ("bump", 0.5),
        ("bump", 0.9),
        ("gaussian", 0.15),
    ] {
        let f = member(fam, &n, &[th])?;
        let f = f.scaled(1.0 / kernels::trial_sobolev_norm(&f, 1.0, 2.0, None)?);
        for c in tm::term_vs_sum(&spec, &f, 6)?.into_iter().filter(|c| c.k >= 2) {
            all &= c.term <= c.functional * (1.0 + 1e-10);
            count += 1;
        }
    }
    let ok = phi <= 1e-12 && all && count == 25;
    Ok((
        ok,
        format!("phi rel dev {phi:.1e}, {count} term-vs-sum checks hold {all}"),
    ))
}

fn c11() -> Outcome {
    let c2 = tm::c2(2.0, 2.0, 1.0);
    let lim = tm::ratio_test_limit();
    let rad = tm::c2_tilde_radius(2.0, 1.0);
    // k^k/k! grows like e^k, so Σ k^k/k!(p′α)^k converges for α < 1/(2e).
    let oracle = 1.0 / (2.0 * E);
    let inside =
        tm::c2_tilde(2.0, rad * (1.0 - 1e-3), 1.0).is_ok() && tm::c3_tilde(2.0, rad * (1.0 - 1e-3), 1.0).is_ok();
    let outside = tm::c2_tilde(2.0, rad * (1.0 + 1e-3), 1.0).is_err();
    let ok = (c2 - 1.0 / (4.0 * E)).abs() <= 1e-15
        && (lim - E).abs() <= 1e-12
        && (rad - oracle).abs() <= 1e-12
        && inside
        && outside;
    Ok((ok, format!("C2 = {c2:.15}, ratio limit {lim:.13}, radius {rad:.13}")))
}

fn c12() -> Outcome {
    let r = suite("gn", SEED);
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in ["crit-gn", "crit-hardy"] {
        for fam in ["moser-spike", "gaussian"] {
            let stable = entry(&r, &format!("{kind}-{fam}-stable"));
            let spread = entry(&r, &format!("{kind}-{fam}-spread"));
            ok &= stable.pass && spread.pass;
            parts.push(format!(
                "{kind}/{fam} refine {:.3} regress {:.3} spread {:.2}",
                stable.details["refinement_change"].as_f64().unwrap_or(f64::NAN),
                stable.details["regression_change"].as_f64().unwrap_or(f64::NAN),
                spread.value.unwrap_or(f64::NAN)
            ));
        }
    }
    Ok((ok, parts.join("; ")))
}

fn c13() -> Outcome {
    let n = QuasiNorm::euclidean(3);
    let fams: [(&str, &[f64]); 10] = [
        ("gaussian", &[0.4]),
        ("gaussian", &[1.0]),
        ("gaussian", &[2.5]),
        ("bump", &[0.5]),
        ("bump", &[1.2]),
        ("bump", &[3.0]),
        ("moser-spike", &[0.15]),
        ("moser-spike", &[0.45]),
        ("power-cutoff", &[1.0, -0.3]),
        ("power-cutoff", &[2.0, 0.5]),
    ];
    let mut ok = true;
    for (fam, th) in fams {
        let c = uncertainty_chain(&member(fam, &n, th)?, 2.0, 1.0)?;
        ok &= c.holds
            && c.product >= c.mass * (1.0 - 1e-10)
            && (c.product - c.hardy_side * c.weight_side).abs() <= 1e-12 * c.product;
    }
    Ok((ok, "Hölder step on 10 trial functions".into()))
}

fn c14() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce);
    let mut holds = true;
    let mut gap: f64 = 0.0;
    for _ in 0..20 {
        let mut pieces = || {
            let k = rng.gen_range(2..=6);
            let mut cuts: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..3.0)).collect();
            cuts.sort_by(f64::total_cmp);
            let vals: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..2.0)).collect();
            (cuts, vals)
        };
        let (c1, v1) = pieces();
        let (c2, v2) = pieces();
        let at = |c: &[f64], v: &[f64], x: f64| c.iter().position(|&b| x < b).map_or(0.0, |i| v[i]);
        let f1 = |x: f64| at(&c1, &v1, x);
        let f2 = |x: f64| at(&c2, &v2, x);
        let mut bps: Vec<f64> = c1.iter().chain(&c2).copied().collect();
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        let support = *bps.last().unwrap();
        // θ = 1: both sides equal ∫∫_{z<x} f₁(x)f₂(z); f₁ is constant and ∫₀ˣf₂
        // linear between breakpoints, so the midpoint rule is exact.
        let mut exact = 0.0;
        let (mut prev, mut cum) = (0.0, 0.0);
        for &b in &bps {
            let mid = 0.5 * (prev + b);
            exact += f1(mid) * (cum + f2(mid) * (mid - prev)) * (b - prev);
            cum += f2(mid) * (b - prev);
            prev = b;
        }
        for theta in [1.0, 1.5, 3.0] {
            let r = minkowski_check(&f1, &f2, theta, support, &bps)?;
            holds &= r.holds && r.lhs <= r.rhs * (1.0 + 1e-12);
            if theta == 1.0 {
                gap = gap.max((r.lhs - exact).abs().max((r.rhs - exact).abs()) / exact.max(1.0));
            }
        }
    }
    Ok((
        holds && gap <= 1e-8,
        format!("20 pairs hold {holds}, equality gap {gap:.1e}"),
    ))
}

fn c15() -> Outcome {
    let a = suite("all", SEED);
    let b = suite("all", SEED);
    let c = suite("all", 7);
    let same = a.deterministic_json() == b.deterministic_json();
    let verdicts = a.verdicts() == c.verdicts();
    Ok((
        same && verdicts,
        format!("bit-identical {same}, verdicts identical across seeds {verdicts}"),
    ))
}

fn main() {
    let criteria: [Criterion; 15] = [
        ("Euclidean A1 value", c01, 5.0),
        ("sandwich envelope and quasi-extremals", c02, 60.0),
        ("Riesz kernel", c03, 10.0),
        ("Bessel two-regime bound", c04, 10.0),
        ("heat kernel properties", c05, 5.0),
        ("Hardy ratio oracle", c06, 30.0),
        ("Moser constant recovery", c07, 1.0),
        ("gamma asymptotics", c08, 1.0),
        ("reversed HLS failure", c09, 5.0),
        ("truncated exponential", c10, 10.0),
        ("constants arithmetic", c11, 1.0),
        ("critical Hardy / crit-GN boundedness", c12, 120.0),
        ("uncertainty chain", c13, 5.0),
        ("Minkowski check", c14, 5.0),
        ("determinism", c15, 900.0),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = check();
        let secs = t.elapsed().as_secs_f64();
        let (ok, detail) = match out {
            Ok((ok, d)) => (ok && secs < *budget, d),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {name}: {detail} [{secs:.1}s / {budget}s]",
            i + 1,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
