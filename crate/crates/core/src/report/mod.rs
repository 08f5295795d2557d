//! Batch runner: executes named suites from a [`SuiteConfig`] and
//! assembles a JSON report plus one CSV table per suite.

mod config;
mod suites;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

pub use config::{ConfigError, EntryConfig, OutputConfig, QuadratureConfig, SuiteConfig};

use crate::trudinger::ConstantBundle;

/// Registered suites in their canonical order.
pub const SUITES: &[(&str, &str)] = &[
    (
        "weights",
        "Muckenhoupt-type weight conditions, sandwich bounds and the Minkowski lemma",
    ),
    (
        "kernels",
        "Riesz, Bessel and heat kernel identities and two-regime bounds",
    ),
    (
        "hardy",
        "integral, logarithmic and Sobolev-type Hardy ratios and the uncertainty chain",
    ),
    (
        "hls",
        "Hardy-Littlewood-Sobolev forms by two routes and the reversed-inequality table",
    ),
    ("ckn", "Caffarelli-Kohn-Nirenberg admissibility and ratios"),
    (
        "tm",
        "truncated exponentials, Trudinger-Moser constants and sharp exponents",
    ),
    ("gn", "critical Gagliardo-Nirenberg and critical Hardy family suprema"),
    (
        "equivalence",
        "exploratory probe linking Trudinger-Moser and critical Hardy constants",
    ),
    ("all", "every suite above"),
];

pub fn list_suites() -> &'static [(&'static str, &'static str)] {
    SUITES
}

/// One checked quantity. `value` carries the primary number with its
/// `abs_error`; ratio entries also fill `lhs`, `rhs` and `ratio`.
#[derive(Clone, Debug, Serialize)]
pub struct Entry {
    pub id: String,
    pub description: String,
    pub value: Option<f64>,
    pub abs_error: f64,
    pub reference: Option<f64>,
    pub tolerance: Option<f64>,
    pub method: String,
    pub seed: u64,
    pub pass: bool,
    /// Exploratory output that never fails the run.
    pub report_only: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lhs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

impl Entry {
    pub fn new(id: &str, description: &str, method: &str, seed: u64) -> Self {
        Self {
            id: id.to_string(),
            description: description.to_string(),
            value: None,
            abs_error: 0.0,
            reference: None,
            tolerance: None,
            method: method.to_string(),
            seed,
            pass: false,
            report_only: false,
            lhs: None,
            rhs: None,
            ratio: None,
            error: None,
            details: Value::Null,
        }
    }

    pub fn value(mut self, v: f64, abs_error: f64) -> Self {
        self.value = Some(v);
        self.abs_error = abs_error;
        self
    }

    /// Sets the value and passes iff it lies within `tol` of `reference`.
    pub fn against(mut self, v: f64, abs_error: f64, reference: f64, tol: f64) -> Self {
        self = self.value(v, abs_error);
        self.reference = Some(reference);
        self.tolerance = Some(tol);
        self.pass = (v - reference).abs() <= tol;
        self
    }

    pub fn ratio_parts(mut self, lhs: f64, rhs: f64, ratio: f64, abs_error: f64) -> Self {
        self.lhs = Some(lhs);
        self.rhs = Some(rhs);
        self.ratio = Some(ratio);
        self.value(ratio, abs_error)
    }

    pub fn pass_if(mut self, ok: bool) -> Self {
        self.pass = ok;
        self
    }

    pub fn details(mut self, d: impl Serialize) -> Self {
        self.details = serde_json::to_value(d).unwrap_or(Value::Null);
        self
    }

    pub fn report_only(mut self) -> Self {
        self.report_only = true;
        self.pass = true;
        self
    }

    fn failed(mut self, e: &crate::Error) -> Self {
        self.error = Some(e.to_string());
        self.pass = self.report_only;
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub description: String,
    pub pass: bool,
    pub entries: Vec<Entry>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub config: SuiteConfig,
    pub seed: u64,
    pub pass: bool,
    pub suites: Vec<SuiteReport>,
    pub constants: Option<ConstantBundle>,
    /// Wall-clock seconds per suite and per entry; the only
    /// nondeterministic field.
    pub timing: BTreeMap<String, f64>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with wall-times removed, identical across runs with equal
    /// config and seed.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Value::Object(m) = &mut v {
            m.remove("timing");
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    pub fn failures(&self) -> Vec<(&str, &Entry)> {
        self.suites
            .iter()
            .flat_map(|s| s.entries.iter().filter(|e| !e.pass).map(move |e| (s.name.as_str(), e)))
            .collect()
    }

    /// Pass/fail of every entry keyed by suite and id.
    pub fn verdicts(&self) -> Vec<(String, String, bool)> {
        self.suites
            .iter()
            .flat_map(|s| s.entries.iter().map(move |e| (s.name.clone(), e.id.clone(), e.pass)))
            .collect()
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }

    pub fn suite_csv(suite: &SuiteReport) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "id",
            "value",
            "abs_error",
            "reference",
            "tolerance",
            "method",
            "seed",
            "pass",
            "report_only",
            "lhs",
            "rhs",
            "ratio",
            "error",
        ])
        .expect("in-memory write");
        let num = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for e in &suite.entries {
            w.write_record([
                e.id.clone(),
                num(e.value),
                format!("{:e}", e.abs_error),
                num(e.reference),
                num(e.tolerance),
                e.method.clone(),
                e.seed.to_string(),
                e.pass.to_string(),
                e.report_only.to_string(),
                num(e.lhs),
                num(e.rhs),
                num(e.ratio),
                e.error.clone().unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8 csv")
    }

    /// Writes report.json and <suite>.csv into `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        let json = dir.join("report.json");
        std::fs::write(&json, self.to_json())?;
        out.push(json);
        for s in &self.suites {
            let p = dir.join(format!("{}.csv", s.name));
            std::fs::write(&p, Self::suite_csv(s))?;
            out.push(p);
        }
        Ok(out)
    }
}

/// Called after each entry with the suite name, the entry and its
/// wall-time in seconds.
pub type Progress = fn(&str, &Entry, f64);

/// Execution knobs that do not affect results.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    pub progress: Option<Progress>,
}

pub fn run(config: &SuiteConfig, opts: RunOptions) -> Result<Report, ConfigError> {
    config.validate()?;
    let ctx = suites::Ctx::from_config(config);
    let mut reports = Vec::new();
    let mut timing = BTreeMap::new();
    for name in config.expanded_suites() {
        let start = Instant::now();
        let tasks = suites::tasks(name, &ctx);
        let timed = execute(name, tasks, opts);
        timing.insert(name.to_string(), start.elapsed().as_secs_f64());
        let mut entries = Vec::with_capacity(timed.len());
        for (e, secs) in timed {
            timing.insert(format!("{name}/{}", e.id), secs);
            entries.push(e);
        }
        let description = SUITES.iter().find(|(n, _)| *n == name).map(|(_, d)| *d).unwrap_or("");
        reports.push(SuiteReport {
            name: name.to_string(),
            description: description.to_string(),
            pass: entries.iter().all(|e| e.pass),
            entries,
        });
    }
    let constants = if config.expanded_suites().contains(&"tm") {
        suites::constant_bundle().ok()
    } else {
        None
    };
    Ok(Report {
        tool: "hypoineq".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        seed: config.seed,
        pass: reports.iter().all(|s| s.pass),
        suites: reports,
        constants,
        timing,
    })
}

fn execute(suite: &str, tasks: Vec<suites::Task>, opts: RunOptions) -> Vec<(Entry, f64)> {
    let one = |t: &suites::Task| {
        let start = Instant::now();
        let e = match (t.run)(t.template.clone()) {
            Ok(e) => e,
            Err(err) => t.template.clone().failed(&err),
        };
        let secs = start.elapsed().as_secs_f64();
        if let Some(p) = opts.progress {
            p(suite, &e, secs);
        }
        (e, secs)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let go = || tasks.par_iter().map(one).collect::<Vec<_>>();
        match opts.jobs {
            Some(k) if k > 0 => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
                Ok(pool) => pool.install(go),
                Err(_) => tasks.iter().map(one).collect(),
            },
            _ => go(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        tasks.iter().map(one).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry() {
        let s = list_suites();
        assert!(s.len() >= 8);
        assert!(s.iter().any(|(n, _)| *n == "tm"));
        assert!(s.iter().all(|(_, d)| !d.is_empty()));
    }

    #[test]
    fn ckn_suite_runs_and_serializes() {
        let cfg = SuiteConfig::parse("suites = [\"ckn\"]\nseed = 5").unwrap();
        let r = run(&cfg, RunOptions::default()).unwrap();
        assert!(r.pass, "{}", r.to_json());
        assert_eq!(r.exit_code(), 0);
        let v: Value = serde_json::from_str(&r.deterministic_json()).unwrap();
        assert!(v.get("timing").is_none());
        for e in &r.suites[0].entries {
            if e.ratio.is_some() {
                assert!(e.lhs.is_some() && e.rhs.is_some() && !e.method.is_empty());
            }
        }
        let csv = Report::suite_csv(&r.suites[0]);
        assert_eq!(csv.lines().count(), r.suites[0].entries.len() + 1);
    }
}
