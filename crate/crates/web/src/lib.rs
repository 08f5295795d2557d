//! wasm-bindgen exports for the static demo page in `www/`. Each export
//! returns a JSON string; the plain functions underneath are what the
//! native tests exercise.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use hypoineq::group::QuasiNorm;
use hypoineq::hardy::{weight_condition, Condition, HardyParams, RGrid, Weight, WeightPair};
use hypoineq::kernels::PeriodicBox;
use hypoineq::trial::make_family;
use hypoineq::trudinger as tm;

fn to_js(r: hypoineq::Result<Value>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

/// Closed-form α_Q of the H-type group with horizontal dimension k and centre dimension l.
pub fn htype(k: usize, l: usize) -> hypoineq::Result<Value> {
    let a = tm::alpha_htype(k, l)?;
    Ok(json!({ "k": k, "l": l, "Q": k + 2 * l, "alpha_q": a }))
}

/// A₁ for φ = |x|^alpha, ψ ≡ 1 on ℝⁿ.
pub fn power_a1(n: usize, p: f64, q: f64, alpha: f64) -> hypoineq::Result<Value> {
    let norm = QuasiNorm::euclidean(n);
    let prm = HardyParams::new(p, q)?;
    let pair = WeightPair::new(Weight::power(1.0, alpha), Weight::constant(1.0));
    let r = weight_condition(Condition::A1, &pair, &prm, &norm, &RGrid::default())?;
    let envelope = (p / (p - 1.0)).powf((p - 1.0) / p) * p.powf(1.0 / q) * r.value;
    Ok(json!({
        "a1": r.value,
        "verdict": format!("{:?}", r.verdict),
        "argmax": r.argmax,
        "upper_envelope": envelope,
    }))
}

/// Critical Gagliardo–Nirenberg ratio of a planar Moser spike across q.
pub fn spike_gn(delta: f64, m: usize) -> hypoineq::Result<Value> {
    let norm = QuasiNorm::euclidean(2);
    let f = make_family("moser-spike", &norm)?.member(&[delta])?;
    let grid = PeriodicBox::new(2, m, 4.0 * f.decay_radius())?;
    let norms = tm::critical_norms(&f, 2.0, Some(grid))?;
    let mut rows = Vec::new();
    for q in [2.0, 4.0, 8.0, 16.0, 32.0, 64.0] {
        rows.push(json!({ "q": q, "ratio": tm::crit_gn_ratio_with(&f, &norms, q)? }));
    }
    Ok(json!({ "delta": delta, "grid": m, "rows": rows }))
}

#[wasm_bindgen]
pub fn alpha_htype_json(k: usize, l: usize) -> String {
    to_js(htype(k, l))
}

#[wasm_bindgen]
pub fn power_a1_json(n: usize, p: f64, q: f64, alpha: f64) -> String {
    to_js(power_a1(n, p, q, alpha))
}

#[wasm_bindgen]
pub fn spike_gn_json(delta: f64, m: usize) -> String {
    to_js(spike_gn(delta, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn htype_heisenberg() {
        let v = htype(2, 1).unwrap();
        let want = 4.0 * (std::f64::consts::PI.powi(2) / 4.0).powf(1.0 / 3.0);
        assert!((v["alpha_q"].as_f64().unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn power_weight_on_the_line() {
        let v = power_a1(1, 2.0, 2.0, -2.0).unwrap();
        assert!((v["a1"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn spike_ratio_at_q_equal_p() {
        let v = spike_gn(0.2, 128).unwrap();
        let first = v["rows"][0]["ratio"].as_f64().unwrap();
        assert!((first - 0.5f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn errors_become_json() {
        let s = alpha_htype_json(0, 1);
        assert!(s.contains("error"));
    }
}
