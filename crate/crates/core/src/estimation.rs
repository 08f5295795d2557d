//! Derivative-free maximisation of ratios over family parameters, q-scans
//! and bisection on a boundedness indicator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::kernels::PeriodicBox;
use crate::trial::{Family, TrialFunction};
use crate::trudinger::{self, TmNormalization, TmSpec};

/// Maps an evaluation result to an objective value; failures become −∞ and
/// are excluded from the arg-max.
pub fn score(r: Result<f64>) -> f64 {
    match r {
        Ok(v) if v.is_finite() => v,
        _ => f64::NEG_INFINITY,
    }
}

pub struct OptimizationTask<'a> {
    pub objective: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    pub bounds: Vec<(f64, f64)>,
    pub budget: usize,
    pub seed: u64,
    /// Simplex diameter, relative to the box, at which a restart stops.
    pub tolerance: f64,
}

impl<'a> OptimizationTask<'a> {
    pub fn new(objective: &'a (dyn Fn(&[f64]) -> f64 + Sync), bounds: Vec<(f64, f64)>) -> Self {
        Self {
            objective,
            bounds,
            budget: 200,
            seed: 0,
            tolerance: 1e-4,
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TracePoint {
    pub theta: Vec<f64>,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizationResult {
    pub theta: Vec<f64>,
    pub value: f64,
    pub trace: Vec<TracePoint>,
    pub evaluations: usize,
    /// The budget ran out before the last restart converged.
    pub truncated: bool,
}

struct Evaluator<'a> {
    f: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    bounds: &'a [(f64, f64)],
    budget: usize,
    trace: Vec<TracePoint>,
}

impl Evaluator<'_> {
    fn exhausted(&self) -> bool {
        self.trace.len() >= self.budget
    }

    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.exhausted() {
            return None;
        }
        let theta: Vec<f64> = x
            .iter()
            .zip(self.bounds)
            .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
            .collect();
        let v = (self.f)(&theta);
        let v = if v.is_nan() { f64::NEG_INFINITY } else { v };
        self.trace.push(TracePoint { theta, value: v });
        Some(v)
    }
}

/// Nelder–Mead on the box, restarted from three corners pulled 10% inward
/// and from the centre. Restarts run in a fixed order against one global
/// budget, so a larger budget extends the same evaluation sequence.
pub fn maximize(task: &OptimizationTask) -> Result<OptimizationResult> {
    let d = task.bounds.len();
    if d == 0
        || task
            .bounds
            .iter()
            .any(|(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite())
    {
        return Err(invalid("the parameter box must be nonempty and finite"));
    }
    if task.budget == 0 {
        return Err(invalid("budget must be at least 1"));
    }
    let width: Vec<f64> = task.bounds.iter().map(|(lo, hi)| hi - lo).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(task.seed);
    let inset = |frac: &[f64]| -> Vec<f64> {
        task.bounds
            .iter()
            .zip(frac)
            .map(|((lo, hi), t)| lo + (hi - lo) * t)
            .collect()
    };
    let corner = |pick: &dyn Fn(usize) -> bool| -> Vec<f64> {
        let frac: Vec<f64> = (0..d).map(|i| if pick(i) { 0.9 } else { 0.1 }).collect();
        inset(&frac)
    };
    let mut starts = vec![
        inset(&vec![0.5; d]),
        corner(&|_| false),
        corner(&|_| true),
        corner(&|i| i % 2 == 0),
    ];
    for s in starts.iter_mut().skip(1) {
        for (v, w) in s.iter_mut().zip(&width) {
            *v += w * rng.gen_range(-0.05..0.05);
        }
    }
    let mut ev = Evaluator {
        f: task.objective,
        bounds: &task.bounds,
        budget: task.budget,
        trace: Vec::new(),
    };
    let mut converged_last = true;
    for s in &starts {
        if ev.exhausted() {
            converged_last = false;
            break;
        }
        converged_last = nelder_mead(&mut ev, s, &width, task.tolerance);
    }
    let truncated = !converged_last;
    let best = ev
        .trace
        .iter()
        .filter(|t| t.value > f64::NEG_INFINITY)
        .fold(None::<&TracePoint>, |b, t| match b {
            Some(b) if b.value >= t.value => Some(b),
            _ => Some(t),
        })
        .cloned();
    match best {
        None => Err(Error::NoFeasiblePoint(format!(
            "all {} evaluations were degenerate",
            ev.trace.len()
        ))),
        Some(b) => Ok(OptimizationResult {
            theta: b.theta,
            value: b.value,
            evaluations: ev.trace.len(),
            truncated,
            trace: ev.trace,
        }),
    }
}

/// One Nelder–Mead run (maximising); returns whether it converged.
fn nelder_mead(ev: &mut Evaluator, start: &[f64], width: &[f64], tol: f64) -> bool {
    let d = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let clamp = |x: &mut Vec<f64>| {
        for (v, (lo, hi)) in x.iter_mut().zip(ev.bounds.iter()) {
            *v = v.clamp(*lo, *hi);
        }
    };
    for i in 0..=d {
        let mut x = start.to_vec();
        if i > 0 {
            let step = 0.25 * width[i - 1];
            x[i - 1] += if x[i - 1] + step <= ev.bounds[i - 1].1 {
                step
            } else {
                -step
            };
        }
        clamp(&mut x);
        match ev.eval(&x) {
            Some(v) => simplex.push((x, v)),
            None => return false,
        }
    }
    let scale: f64 = width.iter().map(|w| w * w).sum::<f64>().sqrt().max(1e-300);
    for _ in 0..10_000 {
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let diam = simplex
            .iter()
            .skip(1)
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        if diam <= tol * scale {
            return true;
        }
        let worst = simplex[d].clone();
        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|(x, _)| x[j]).sum::<f64>() / d as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            let mut x: Vec<f64> = centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect();
            clamp(&mut x);
            x
        };
        let xr = along(1.0);
        let Some(fr) = ev.eval(&xr) else { return false };
        if fr > simplex[0].1 {
            let xe = along(2.0);
            let Some(fe) = ev.eval(&xe) else { return false };
            simplex[d] = if fe > fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr > simplex[d - 1].1 {
            simplex[d] = (xr, fr);
            continue;
        }
        let outside = fr > worst.1;
        let xc = along(if outside { 0.5 } else { -0.5 });
        let Some(fc) = ev.eval(&xc) else { return false };
        if (outside && fc >= fr) || (!outside && fc > worst.1) {
            simplex[d] = (xc, fc);
            continue;
        }
        // shrink toward the best vertex
        let best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            let mut x: Vec<f64> = best.iter().zip(&v.0).map(|(b, y)| b + 0.5 * (y - b)).collect();
            clamp(&mut x);
            let Some(fx) = ev.eval(&x) else { return false };
            *v = (x, fx);
        }
    }
    false
}

#[derive(Clone, Debug, Serialize)]
pub struct QRow {
    pub q: f64,
    pub sup: f64,
    pub theta: Vec<f64>,
    pub truncated: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct QScan {
    pub rows: Vec<QRow>,
    /// Maximum of the last two family suprema.
    pub tail: f64,
    pub median: f64,
    /// Last value above twice the median.
    pub unbounded: bool,
}

/// Family supremum of `ratio(q, θ)` at each q of an ascending grid.
pub fn q_scan(
    ratio: &(dyn Fn(f64, &[f64]) -> f64 + Sync),
    q_grid: &[f64],
    bounds: &[(f64, f64)],
    budget: usize,
    seed: u64,
) -> Result<QScan> {
    if q_grid.len() < 4 || q_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("the q grid must be strictly ascending with at least 4 points"));
    }
    let mut rows = Vec::with_capacity(q_grid.len());
    for &q in q_grid {
        let obj = |t: &[f64]| ratio(q, t);
        let task = OptimizationTask::new(&obj, bounds.to_vec())
            .with_budget(budget)
            .with_seed(seed);
        let r = maximize(&task)?;
        rows.push(QRow {
            q,
            sup: r.value,
            theta: r.theta,
            truncated: r.truncated,
        });
    }
    let mut sorted: Vec<f64> = rows.iter().map(|r| r.sup).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let last = rows[n - 1].sup;
    Ok(QScan {
        tail: rows[n - 2].sup.max(last),
        unbounded: last > 2.0 * median,
        median,
        rows,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Bisection {
    pub alpha: f64,
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
}

/// Largest α with `bounded(α)`, for an indicator that is true below a
/// threshold and false above it.
pub fn alpha_bisect(bounded: &dyn Fn(f64) -> bool, lo: f64, hi: f64) -> Result<Bisection> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Range(format!("bracket [{lo}, {hi}] is empty")));
    }
    if !bounded(lo) || bounded(hi) {
        return Err(Error::Range(format!(
            "bracket [{lo}, {hi}] does not straddle the threshold"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    let mut it = 0;
    while it < 20 && b - a > 1e-3 * b.abs().max(1e-300) {
        let m = 0.5 * (a + b);
        if bounded(m) {
            a = m;
        } else {
            b = m;
        }
        it += 1;
    }
    Ok(Bisection {
        alpha: 0.5 * (a + b),
        lo: a,
        hi: b,
        iterations: it,
    })
}

// ---------------------------------------------------------------------------
// Equivalence probes

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    TmToHardy,
    HardyToTm,
}

#[derive(Clone, Debug)]
pub struct ProbeConfig {
    pub direction: Direction,
    pub p: f64,
    pub beta: f64,
    /// Ball radius for the local probe; `None` for the whole group.
    pub radius: Option<f64>,
    pub bounds: Vec<(f64, f64)>,
    pub q_grid: Vec<f64>,
    /// Exponent used for the term-versus-sum checks.
    pub alpha: f64,
    pub k_max: usize,
    /// Members checked term by term.
    pub members: Vec<Vec<f64>>,
    pub cap: f64,
    pub bracket: (f64, f64),
    pub budget: usize,
    pub seed: u64,
    pub grid: Option<PeriodicBox>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MemberTerms {
    pub theta: Vec<f64>,
    pub checks: Vec<trudinger::TermCheck>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub direction: Direction,
    pub terms: Vec<MemberTerms>,
    pub all_terms_hold: bool,
    pub scan: QScan,
    /// Limsup proxy of the Hardy (local) or Gagliardo–Nirenberg (global)
    /// quotient.
    pub b_hat: f64,
    pub alpha_hat: Option<Bisection>,
    pub alpha_hat_note: Option<String>,
    /// α̂·p′·e·B̂^{p′}; exploratory, equal to 1 for exact suprema.
    pub product: Option<f64>,
    /// α predicted from B̂ by the identity, 1/(p′eB̂^{p′}).
    pub alpha_from_b: f64,
}

fn normalise(f: &TrialFunction, kind: TmNormalization, p: f64, grid: Option<PeriodicBox>) -> Result<TrialFunction> {
    let v = trudinger::normalization_value(kind, f, p, grid)?;
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Degenerate(format!("normalising norm of '{}' is {v}", f.label())));
    }
    Ok(f.scaled(1.0 / v))
}

/// Checks the term-versus-sum chain on the listed members and measures the
/// two sides of the constant identity on the family.
pub fn equivalence_probe(
    family: &Family,
    norm: &crate::group::QuasiNorm,
    cfg: &ProbeConfig,
) -> Result<EquivalenceReport> {
    let p = cfg.p;
    let pc = p / (p - 1.0);
    let (spec, kind) = match cfg.radius {
        Some(r) => (
            TmSpec::local(norm, p, cfg.alpha, cfg.beta, r)?,
            TmNormalization::Sobolev,
        ),
        None => (
            TmSpec::global(norm, p, cfg.alpha, cfg.beta)?,
            TmNormalization::Homogeneous,
        ),
    };
    let mut terms = Vec::new();
    for theta in &cfg.members {
        let f = normalise(&family.member(theta)?, kind, p, cfg.grid)?;
        terms.push(MemberTerms {
            theta: theta.clone(),
            checks: trudinger::term_vs_sum(&spec, &f, cfg.k_max)?,
        });
    }
    let all_terms_hold = terms.iter().all(|m| m.checks.iter().all(|c| c.holds));

    let mu = spec.mu;
    let beta = cfg.beta;
    let grid = cfg.grid;
    let radius = cfg.radius;
    let ratio = |q: f64, theta: &[f64]| -> f64 {
        score((|| {
            let f = family.member(theta)?;
            let n = trudinger::critical_norms(&f, p, grid)?;
            match radius {
                Some(r) => trudinger::critical_hardy_ratio_with(&f, &n, q, beta, r),
                None => trudinger::weighted_gn_ratio_with(&f, &n, q, beta, mu),
            }
        })())
    };
    let scan = q_scan(&ratio, &cfg.q_grid, &cfg.bounds, cfg.budget, cfg.seed)?;
    let b_hat = scan.tail;

    let functional_sup = |alpha: f64| -> f64 {
        let s = spec.clone().with_alpha(alpha);
        let obj = |theta: &[f64]| -> f64 {
            score((|| {
                let f = normalise(&family.member(theta)?, kind, p, grid)?;
                Ok(trudinger::tm_integral(&s, &f)?.value)
            })())
        };
        let task = OptimizationTask::new(&obj, cfg.bounds.clone())
            .with_budget(cfg.budget)
            .with_seed(cfg.seed);
        maximize(&task).map(|r| r.value).unwrap_or(f64::INFINITY)
    };
    let bounded = |alpha: f64| functional_sup(alpha) < cfg.cap;
    let (alpha_hat, alpha_hat_note) = match alpha_bisect(&bounded, cfg.bracket.0, cfg.bracket.1) {
        Ok(b) => (Some(b), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(EquivalenceReport {
        direction: cfg.direction,
        terms,
        all_terms_hold,
        product: alpha_hat
            .as_ref()
            .map(|a| a.alpha * pc * std::f64::consts::E * b_hat.powf(pc)),
        alpha_from_b: 1.0 / (pc * std::f64::consts::E * b_hat.powf(pc)),
        scan,
        b_hat,
        alpha_hat,
        alpha_hat_note,
    })
}
