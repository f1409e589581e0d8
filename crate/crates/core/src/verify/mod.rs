//! Numerical experiments that check the quantitative statements about the
//! operators and the r-order total variation, each returning a structured
//! report with the measured value, the bound it is held to and the margin.
//!
//! Approximate statements are held to `C/n` tolerances with `C` frozen per
//! check. Where a quantity is a discretisation error it is also evaluated on
//! the doubled grid and required to shrink. Statements that hold exactly on
//! the grid are flagged `exact` and carry only a rounding allowance.

pub mod corpus;
mod experiments;

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec;
use crate::io::{format_f64, io_err};

pub use experiments::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
}

/// One inequality `measured ≤ bound` or `measured ≥ bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub label: String,
    pub relation: Relation,
    pub measured: f64,
    pub bound: f64,
    /// Signed slack; negative (or NaN) means the check failed.
    pub margin: f64,
    pub pass: bool,
    /// Holds on the grid up to rounding rather than up to a discretisation tolerance.
    pub exact: bool,
}

impl Check {
    pub fn at_most(label: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::build(label.into(), Relation::AtMost, measured, bound)
    }

    pub fn at_least(label: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::build(label.into(), Relation::AtLeast, measured, bound)
    }

    fn build(label: String, relation: Relation, measured: f64, bound: f64) -> Self {
        let margin = match relation {
            Relation::AtMost => bound - measured,
            Relation::AtLeast => measured - bound,
        };
        Check { label, relation, measured, bound, margin, pass: margin >= 0.0, exact: false }
    }

    pub fn exact(mut self) -> Self {
        self.exact = true;
        self
    }

    fn relative_margin(&self) -> f64 {
        if self.margin.is_nan() {
            return f64::NEG_INFINITY;
        }
        if self.measured == 0.0 && self.bound == 0.0 {
            // A degenerate equality says nothing about how tight the others are.
            return f64::INFINITY;
        }
        let scale = self.bound.abs().max(self.measured.abs()).max(f64::MIN_POSITIVE);
        self.margin / scale
    }

    fn prefixed(mut self, prefix: &str) -> Self {
        self.label = format!("{prefix}: {}", self.label);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePoint {
    pub label: String,
    pub value: f64,
}

/// Result of one experiment. The summary fields repeat the check with the
/// smallest relative margin, so `pass` holds exactly when `margin ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub measured: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
    pub grid_sizes: Vec<usize>,
    pub checks: Vec<Check>,
    pub trace: Vec<TracePoint>,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>) -> Self {
        ExperimentReport {
            name: name.into(),
            params: BTreeMap::new(),
            measured: 0.0,
            bound: 0.0,
            margin: 0.0,
            pass: true,
            grid_sizes: Vec::new(),
            checks: Vec::new(),
            trace: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Display) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn grid(mut self, n: usize) -> Self {
        if !self.grid_sizes.contains(&n) {
            self.grid_sizes.push(n);
            self.grid_sizes.sort_unstable();
        }
        self
    }

    pub fn check(mut self, c: Check) -> Self {
        self.checks.push(c);
        self.summarize();
        self
    }

    pub fn trace(mut self, label: impl Into<String>, value: f64) -> Self {
        self.trace.push(TracePoint { label: label.into(), value });
        self
    }

    /// Collects the checks and traces of `parts` under one name, each label
    /// prefixed by the part's distinguishing parameters.
    pub fn merge(name: impl Into<String>, parts: Vec<(String, ExperimentReport)>) -> Self {
        let mut out = ExperimentReport::new(name);
        for (prefix, part) in parts {
            for n in part.grid_sizes {
                out = out.grid(n);
            }
            out.checks.extend(part.checks.into_iter().map(|c| c.prefixed(&prefix)));
            out.trace.extend(
                part.trace.into_iter().map(|t| TracePoint { label: format!("{prefix}: {}", t.label), value: t.value }),
            );
        }
        out.summarize();
        out
    }

    fn summarize(&mut self) {
        let worst = self
            .checks
            .iter()
            .min_by(|a, b| a.relative_margin().total_cmp(&b.relative_margin()))
            .expect("summarize is called with at least one check");
        self.measured = worst.measured;
        self.bound = worst.bound;
        self.margin = worst.margin;
        self.pass = self.checks.iter().all(|c| c.pass);
        debug_assert_eq!(self.pass, self.margin >= 0.0);
    }

    pub fn params_field(&self) -> String {
        self.params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
    }
}

/// Experiment names accepted by [`run_suite`], in run order.
pub const EXPERIMENTS: [&str; 11] = [
    "power_rule",
    "semigroup",
    "integral_bound",
    "caputo_equiv",
    "order_limits",
    "tv_equivalence",
    "monotonicity",
    "interpolation",
    "translation",
    "lsc_order",
    "strict_approx",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub n: usize,
    pub seed: u64,
    pub pass: bool,
    pub reports: Vec<ExperimentReport>,
}

impl SuiteReport {
    /// One row per report: name, params, measured, bound, margin, pass.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let rows = std::iter::once(["name", "params", "measured", "bound", "margin", "pass"].map(String::from)).chain(
            self.reports.iter().map(|r| {
                [
                    r.name.clone(),
                    r.params_field(),
                    format_f64(r.measured),
                    format_f64(r.bound),
                    format_f64(r.margin),
                    r.pass.to_string(),
                ]
            }),
        );
        for row in rows {
            w.write_record(&row).expect("writing to memory cannot fail");
        }
        String::from_utf8(w.into_inner().expect("writing to memory cannot fail")).expect("CSV of UTF-8 fields")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only serialisable data")
    }

    /// Writes `path` with extensions `.csv` and `.json`, creating the directory if needed.
    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        let csv_path = path.with_extension("csv");
        fs::write(&csv_path, self.to_csv()).map_err(io_err(&csv_path))?;
        let json_path = path.with_extension("json");
        fs::write(&json_path, self.to_json() + "\n").map_err(io_err(&json_path))
    }

    pub fn failed(&self) -> impl Iterator<Item = &ExperimentReport> {
        self.reports.iter().filter(|r| !r.pass)
    }
}

/// Expands `all` and checks every name.
pub fn resolve_names<S: AsRef<str>>(names: &[S]) -> Result<Vec<&'static str>> {
    let mut out = Vec::new();
    for name in names {
        let name = name.as_ref().trim();
        if name == "all" {
            out.extend(EXPERIMENTS);
            continue;
        }
        match EXPERIMENTS.iter().find(|&&e| e == name) {
            Some(&e) => out.push(e),
            None => {
                return Err(Error::invalid(format!(
                    "unknown experiment '{name}' (expected all or one of {})",
                    EXPERIMENTS.join(", ")
                )))
            }
        }
    }
    let mut seen = std::collections::HashSet::new();
    out.retain(|e| seen.insert(*e));
    Ok(out)
}

/// Runs the named experiments (`all` for every one) at grid size `n`.
///
/// Every experiment draws its inputs from its own seeded corpus, so reports
/// depend only on `(names, n, seed)` and not on scheduling.
pub fn run_suite<S: AsRef<str> + Sync>(names: &[S], n: usize, seed: u64) -> Result<SuiteReport> {
    let names = resolve_names(names)?;
    if n < 64 || !n.is_multiple_of(64) {
        return Err(Error::invalid(format!("suite grid size must be a positive multiple of 64, got {n}")));
    }
    let groups = exec::map_indexed(&names, |_, name| run_experiment(name, n, seed));
    let mut reports = Vec::new();
    for g in groups {
        reports.extend(g?);
    }
    let pass = reports.iter().all(|r| r.pass);
    Ok(SuiteReport { n, seed, pass, reports })
}

fn run_experiment(name: &str, n: usize, seed: u64) -> Result<Vec<ExperimentReport>> {
    match name {
        "power_rule" => suite_power_rule(n),
        "semigroup" => suite_semigroup(n, seed),
        "integral_bound" => suite_integral_bound(n, seed),
        "caputo_equiv" => suite_caputo_equiv(n),
        "order_limits" => suite_order_limits(n),
        "tv_equivalence" => suite_tv_equivalence(n, seed),
        "monotonicity" => suite_monotonicity(n, seed),
        "interpolation" => suite_interpolation(n, seed),
        "translation" => suite_translation(n, seed),
        "lsc_order" => suite_lsc_order(n),
        "strict_approx" => suite_strict_approx(n),
        _ => unreachable!("names are resolved before dispatch"),
    }
}
