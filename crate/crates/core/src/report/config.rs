//! Runner configuration: a TOML document naming suites plus optional
//! user-declared ratio entries.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::group::QuasiNorm;
use crate::inequalities::{Kernel, TheoremId};
use crate::trial::make_family;

use super::SUITES;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub suites: Vec<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, rename = "entry", skip_serializing_if = "Vec::is_empty")]
    pub entries: Vec<EntryConfig>,
}

fn default_seed() -> u64 {
    20240917
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    pub tolerance: f64,
    /// Sample pairs for Monte Carlo bilinear forms.
    pub mc_pairs: usize,
    /// Objective evaluations per family supremum.
    pub budget: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            mc_pairs: 200_000,
            budget: 24,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<String>,
}

/// A ratio LHS/RHS evaluated on every listed member of a family; passes
/// when each ratio is finite and, if an envelope is given, below it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryConfig {
    pub id: String,
    pub suite: String,
    pub theorem: String,
    pub group: String,
    #[serde(default)]
    pub norm: Option<String>,
    #[serde(default)]
    pub kernel: Option<String>,
    pub params: BTreeMap<String, f64>,
    pub family: String,
    pub theta: Vec<Vec<f64>>,
    #[serde(default)]
    pub envelope: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub message: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "config error at line {l}, column {c}: {}", self.message),
            _ => write!(f, "config error: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn plain(message: impl Into<String>) -> ConfigError {
    ConfigError {
        message: message.into(),
        line: None,
        column: None,
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let head = &text[..offset.min(text.len())];
    let line = head.matches('\n').count() + 1;
    let col = head.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, col)
}

impl SuiteConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: SuiteConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = match e.span() {
                Some(s) => {
                    let (l, c) = line_col(text, s.start);
                    (Some(l), Some(c))
                }
                None => (None, None),
            };
            ConfigError {
                message: e.message().to_string(),
                line,
                column,
            }
        })?;
        cfg.check().map_err(|(message, anchor)| {
            let at = anchor.and_then(|a| text.find(&a)).map(|o| line_col(text, o));
            ConfigError {
                message,
                line: at.map(|p| p.0),
                column: at.map(|p| p.1),
            }
        })?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Every referenced suite, theorem, group, kernel and family must resolve.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.check().map_err(|(m, _)| plain(m))
    }

    /// Like `validate`, plus a snippet of source text to anchor the error.
    fn check(&self) -> Result<(), (String, Option<String>)> {
        if self.suites.is_empty() {
            return Err(("the suite list is empty".into(), Some("suites".into())));
        }
        for s in &self.suites {
            if !SUITES.iter().any(|(n, _)| n == s) {
                return Err((format!("unknown suite '{s}'"), Some(format!("\"{s}\""))));
            }
        }
        let q = &self.quadrature;
        if !(q.tolerance > 0.0) || q.mc_pairs == 0 || q.budget < 4 {
            return Err((
                "quadrature needs tolerance > 0, mc_pairs > 0 and budget >= 4".into(),
                Some("[quadrature]".into()),
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.entries {
            let anchor = Some(format!("\"{}\"", e.id));
            let ctx = |m: String| (format!("entry '{}': {m}", e.id), anchor.clone());
            if !seen.insert(&e.id) {
                return Err(ctx("duplicate id".into()));
            }
            if e.suite == "all" || !SUITES.iter().any(|(n, _)| *n == e.suite) {
                return Err(ctx(format!("unknown suite '{}'", e.suite)));
            }
            TheoremId::parse(&e.theorem).map_err(|x| ctx(x.to_string()))?;
            let norm = QuasiNorm::parse(&e.group, e.norm.as_deref()).map_err(|x| ctx(x.to_string()))?;
            if let Some(k) = &e.kernel {
                Kernel::parse(k).map_err(|x| ctx(x.to_string()))?;
            }
            let fam = make_family(&e.family, &norm).map_err(|x| ctx(x.to_string()))?;
            if e.theta.is_empty() {
                return Err(ctx("theta lists no members".into()));
            }
            for t in &e.theta {
                if t.len() != fam.params.len() {
                    return Err(ctx(format!(
                        "family '{}' takes {} parameters, got {}",
                        e.family,
                        fam.params.len(),
                        t.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Suites to execute with "all" expanded, in registry order.
    pub fn expanded_suites(&self) -> Vec<&'static str> {
        let all = self.suites.iter().any(|s| s == "all");
        SUITES
            .iter()
            .map(|(n, _)| *n)
            .filter(|n| *n != "all" && (all || self.suites.iter().any(|s| s == n)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_carry_position() {
        let e = SuiteConfig::parse("suites = [\"tm\"]\nseed = \"x\"\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = SuiteConfig::parse("seed = 1\nsuites = [\"tm\", \"nope\"]\n").unwrap_err();
        assert_eq!((e.line, e.column), (Some(2), Some(17)));
        let e = SuiteConfig::parse("suites = []\n").unwrap_err();
        assert_eq!(e.line, Some(1));
        assert!(e.column.is_some());
        let e = SuiteConfig::parse("suites = []").unwrap_err();
        assert!(e.message.contains("empty"));
        assert!(SuiteConfig::parse("suites = [\"nope\"]").is_err());
        assert!(SuiteConfig::parse("suites = [\"tm\"]\nbogus = 1").is_err());
    }

    #[test]
    fn entries_resolve() {
        let text = r#"
suites = ["hardy"]
seed = 3

[[entry]]
id = "hs"
suite = "hardy"
theorem = "hardy-sobolev"
group = "R:3"
params = { p = 2, q = 2, a = 1, b = 2 }
family = "gaussian"
theta = [[1.0], [2.0]]
envelope = 1.2
"#;
        let c = SuiteConfig::parse(text).unwrap();
        assert_eq!(c.entries.len(), 1);
        assert_eq!(c.expanded_suites(), vec!["hardy"]);
        let back = SuiteConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        let bad = text.replace("[[1.0], [2.0]]", "[[1.0, 2.0]]");
        assert!(SuiteConfig::parse(&bad).is_err());
    }
}
