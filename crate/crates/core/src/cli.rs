//! Configuration-driven command-line front end.
//!
//! A problem is described in TOML:
//!
//! ```toml
//! mode = "sweep"
//!
//! [problem]
//! terms = [
//!     { coeffs = [1.0, 1.0], delay = 0.0 },
//!     { coeffs = [3.0], delay = "t1" },
//!     { coeffs = [2.8], delay = "t2" },
//!     { coeffs = [0.6], delay = 1.0 },
//! ]
//!
//! [sweep]
//! param1 = "t1"
//! param2 = "t2"
//! range1 = [0.001, 1.0]
//! range2 = [0.001, 1.0]
//! grid = [50, 50]
//! ```
//!
//! `coeffs[j]` multiplies `λ^j`. A coefficient or delay is a number or a
//! string: a parameter name (`"b"`), a negated name (`"-b"`) or a scaled name
//! (`"2.5*b"`). Parameters that are not swept get values in `[parameters]`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::chart::{self, BenchmarkConfig, BenchmarkRecord, StabilityChart, SweepConfig};
use crate::continuation::ContinuationConfig;
use crate::error::Error;
use crate::quasipoly::{ParameterPoint, QuasiPolynomial, ScalarExpr, Term};
use crate::seeding::{seed_roots, SeedConfig};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Sweep,
    Oracle,
    Benchmark,
    Roots,
}

/// A coefficient or delay as written in the config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Number(f64),
    Expr(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub coeffs: Vec<Value>,
    pub delay: Value,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    #[serde(default)]
    pub terms: Vec<TermConfig>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range1: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range2: Option<[f64; 2]>,
    /// `[n1, n2]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<[usize; 2]>,
    /// Anchor `(param1, param2)`; defaults to the corner nearest the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedingSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_roots: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_modes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub newton_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub newton_max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dedup_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_jacobian: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_jacobian: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_check_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
}

/// Seeding used by the dense oracle.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    /// Defaults to 25.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_modes: Option<usize>,
    /// Defaults to 1; only the dominant root is needed for classification.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_roots: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gnuplot: Option<bool>,
}

/// The config file as written, before semantic checks.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub seeding: SeedingSection,
    #[serde(default)]
    pub continuation: ContinuationSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub benchmark: BenchmarkSection,
    #[serde(default)]
    pub output: OutputSection,
}

pub const DEFAULT_OUTPUT_DIR: &str = "ccr-out";
pub const DEFAULT_ORACLE_MODES: usize = 25;
pub const DEFAULT_ORACLE_ROOTS: usize = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("syntax error: {0}")]
    SyntaxNoSpan(String),
    #[error("{key}: {message}")]
    Semantic { key: String, message: String },
    #[error(transparent)]
    Numeric(#[from] Error),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numeric(_) | CliError::Io { .. } => 1,
            _ => 2,
        }
    }
}

fn semantic(key: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Semantic {
        key: key.into(),
        message: message.into(),
    }
}

/// 1-based line and column of byte `offset` in `text`.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
    (line, column)
}

/// Parses the TOML text and checks the schema; no semantic checks.
pub fn parse_toml(text: &str) -> Result<ProblemConfig, CliError> {
    toml::from_str(text).map_err(|e| match e.span() {
        Some(span) => {
            let (line, column) = line_column(text, span.start);
            CliError::Syntax {
                line,
                column,
                message: e.message().to_string(),
            }
        }
        None => CliError::SyntaxNoSpan(e.message().to_string()),
    })
}

/// Parses and fully validates a config.
pub fn parse_config(text: &str) -> Result<ProblemConfig, CliError> {
    let cfg = parse_toml(text)?;
    cfg.build()?;
    Ok(cfg)
}

/// Serialises a config; `parse_toml(&emit(c))` reproduces `c`.
pub fn emit(cfg: &ProblemConfig) -> Result<String, CliError> {
    toml::to_string(cfg).map_err(|e| CliError::Usage(format!("cannot serialise config: {e}")))
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_value(v: &Value, key: &str) -> Result<ScalarExpr<f64>, CliError> {
    let expr = match v {
        Value::Number(x) => ScalarExpr::constant(*x),
        Value::Expr(s) => {
            let s = s.trim();
            if let Ok(x) = s.parse::<f64>() {
                ScalarExpr::constant(x)
            } else if is_identifier(s) {
                ScalarExpr::param(s)
            } else if let Some(name) = s.strip_prefix('-').map(str::trim).filter(|n| is_identifier(n)) {
                ScalarExpr::scaled(-1.0, name)
            } else if let Some((factor, name)) = s.split_once('*') {
                let (factor, name) = (factor.trim(), name.trim());
                match factor.parse::<f64>() {
                    Ok(f) if is_identifier(name) => ScalarExpr::scaled(f, name),
                    _ => return Err(semantic(key, format!("cannot parse `{s}`"))),
                }
            } else {
                return Err(semantic(
                    key,
                    format!("cannot parse `{s}`; expected a number, `name`, `-name` or `factor*name`"),
                ));
            }
        }
    };
    if let ScalarExpr::Constant(x) | ScalarExpr::Scaled { factor: x, .. } = &expr {
        if !x.is_finite() {
            return Err(semantic(key, "value must be finite"));
        }
    }
    Ok(expr)
}

/// A validated problem ready to run.
#[derive(Clone, Debug)]
pub struct Problem {
    pub mode: Mode,
    pub qp: QuasiPolynomial<f64>,
    /// Full parameter assignment at the anchor.
    pub point: ParameterPoint<f64>,
    pub sweep: Option<SweepConfig<f64>>,
    pub seed_cfg: SeedConfig<f64>,
    pub cont_cfg: ContinuationConfig<f64>,
    pub oracle_seed_cfg: SeedConfig<f64>,
    pub repetitions: usize,
    pub out_dir: PathBuf,
    pub gnuplot: bool,
}

impl ProblemConfig {
    pub fn build(&self) -> Result<Problem, CliError> {
        if self.problem.terms.is_empty() {
            return Err(semantic("problem.terms", "at least one term is required"));
        }
        let mut terms = Vec::with_capacity(self.problem.terms.len());
        for (k, t) in self.problem.terms.iter().enumerate() {
            let key = format!("problem.terms[{k}]");
            if t.coeffs.is_empty() {
                return Err(semantic(format!("{key}.coeffs"), "at least one coefficient is required"));
            }
            let coeffs = t
                .coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| parse_value(c, &format!("{key}.coeffs[{j}]")))
                .collect::<Result<Vec<_>, _>>()?;
            let delay = parse_value(&t.delay, &format!("{key}.delay"))?;
            if let ScalarExpr::Constant(d) = delay {
                if d < 0.0 {
                    return Err(semantic(format!("{key}.delay"), format!("negative delay {d}")));
                }
            }
            terms.push(Term::new(coeffs, delay));
        }
        let qp = QuasiPolynomial::new(terms).map_err(|e| semantic("problem.terms", e.to_string()))?;

        let seed_cfg = self.seed_config()?;
        let cont_cfg = self.continuation_config()?;
        let oracle_seed_cfg = SeedConfig {
            n_modes: self.oracle.n_modes.unwrap_or(DEFAULT_ORACLE_MODES),
            n_roots: self.oracle.n_roots.unwrap_or(DEFAULT_ORACLE_ROOTS),
            ..seed_cfg.clone()
        };
        oracle_seed_cfg
            .validate()
            .map_err(|e| semantic("oracle", e.to_string()))?;

        let needs_sweep = self.mode != Mode::Roots;
        let swept: Option<(String, String, (f64, f64), (f64, f64), [usize; 2], (f64, f64))> = match &self.sweep {
            None if needs_sweep => {
                return Err(semantic("sweep", format!("section required in {:?} mode", self.mode).to_lowercase()))
            }
            None => None,
            Some(s) => {
                let param1 = s.param1.clone().ok_or_else(|| semantic("sweep.param1", "missing"))?;
                let param2 = s.param2.clone().ok_or_else(|| semantic("sweep.param2", "missing"))?;
                if param1 == param2 {
                    return Err(semantic("sweep.param2", format!("duplicate parameter `{param2}`")));
                }
                for (key, name) in [("sweep.param1", &param1), ("sweep.param2", &param2)] {
                    if qp.param_index(name).is_none() {
                        return Err(semantic(key, format!("`{name}` does not appear in any term")));
                    }
                    if self.parameters.contains_key(name) {
                        return Err(semantic(
                            format!("parameters.{name}"),
                            "duplicate parameter: it is also swept",
                        ));
                    }
                }
                let range = |key: &str, r: Option<[f64; 2]>| -> Result<(f64, f64), CliError> {
                    let [lo, hi] = r.ok_or_else(|| semantic(key, "missing range"))?;
                    if !lo.is_finite() || !hi.is_finite() || lo > hi {
                        return Err(semantic(key, "range must be finite with lo <= hi"));
                    }
                    Ok((lo, hi))
                };
                let range1 = range("sweep.range1", s.range1)?;
                let range2 = range("sweep.range2", s.range2)?;
                let grid = s.grid.unwrap_or([50, 50]);
                if grid[0] == 0 || grid[1] == 0 {
                    return Err(semantic("sweep.grid", "grid counts must be at least 1"));
                }
                let anchor = match s.seed {
                    Some([a, b]) => (a, b),
                    None => chart::default_anchor(range1, range2),
                };
                Some((param1, param2, range1, range2, grid, anchor))
            }
        };

        let mut point = ParameterPoint::new();
        for (name, &v) in &self.parameters {
            if qp.param_index(name).is_none() {
                return Err(semantic(format!("parameters.{name}"), "not used by any term"));
            }
            if !v.is_finite() {
                return Err(semantic(format!("parameters.{name}"), "value must be finite"));
            }
            point.set(name, v);
        }
        if let Some((p1, p2, _, _, _, (a1, a2))) = &swept {
            point.set(p1, *a1);
            point.set(p2, *a2);
        }
        if let Some(missing) = qp.param_names().iter().find(|n| point.get(n).is_none()) {
            return Err(semantic("parameters", format!("missing value for `{missing}`")));
        }

        let sweep = match swept {
            None => None,
            Some((param1, param2, range1, range2, [n1, n2], _)) => {
                let cfg = SweepConfig {
                    param1,
                    param2,
                    range1,
                    range2,
                    n1,
                    n2,
                    seed_point: point.clone(),
                    seed_cfg: seed_cfg.clone(),
                    cont_cfg: cont_cfg.clone(),
                };
                cfg.validate(&qp).map_err(|e| semantic("sweep", e.to_string()))?;
                Some(cfg)
            }
        };

        Ok(Problem {
            mode: self.mode,
            qp,
            point,
            sweep,
            seed_cfg,
            cont_cfg,
            oracle_seed_cfg,
            repetitions: self.benchmark.repetitions.unwrap_or(1),
            out_dir: PathBuf::from(self.output.dir.clone().unwrap_or_else(|| DEFAULT_OUTPUT_DIR.into())),
            gnuplot: self.output.gnuplot.unwrap_or(false),
        })
    }

    fn seed_config(&self) -> Result<SeedConfig<f64>, CliError> {
        let d = SeedConfig::default();
        let s = &self.seeding;
        let cfg = SeedConfig {
            n_roots: s.n_roots.unwrap_or(d.n_roots),
            n_modes: s.n_modes.unwrap_or(d.n_modes),
            newton_tol: s.newton_tol.unwrap_or(d.newton_tol),
            newton_max_iter: s.newton_max_iter.unwrap_or(d.newton_max_iter),
            dedup_tol: s.dedup_tol.unwrap_or(d.dedup_tol),
            eps_jacobian: s.eps_jacobian.unwrap_or(d.eps_jacobian),
        };
        cfg.validate().map_err(|e| semantic("seeding", e.to_string()))?;
        Ok(cfg)
    }

    fn continuation_config(&self) -> Result<ContinuationConfig<f64>, CliError> {
        let d = ContinuationConfig::default();
        let c = &self.continuation;
        let cfg = ContinuationConfig {
            abs_tol: c.abs_tol.unwrap_or(d.abs_tol),
            rel_tol: c.rel_tol.unwrap_or(d.rel_tol),
            eps_jacobian: c.eps_jacobian.unwrap_or(d.eps_jacobian),
            residual_check_tol: c.residual_check_tol.unwrap_or(d.residual_check_tol),
            max_step: c.max_step.or(d.max_step),
            max_steps: c.max_steps.unwrap_or(d.max_steps),
        };
        cfg.validate().map_err(|e| semantic("continuation", e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Parser)]
#[command(name = "ccr", version, about = "Stability charts of delay differential equations by continuation of characteristic roots")]
pub struct Args {
    /// Problem description (TOML).
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Grid size as N1xN2.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<[usize; 2]>,
    /// Number of tracked roots.
    #[arg(long)]
    pub roots: Option<usize>,
    /// Anchor point as P1,P2.
    #[arg(long, value_parser = parse_pair)]
    pub seed: Option<[f64; 2]>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long = "tol-abs")]
    pub tol_abs: Option<f64>,
    #[arg(long = "tol-rel")]
    pub tol_rel: Option<f64>,
    /// Also write a gnuplot script for the chart.
    #[arg(long)]
    pub gnuplot: bool,
}

fn parse_grid(s: &str) -> Result<[usize; 2], String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected N1xN2, got `{s}`"))?;
    let n = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    Ok([n(a)?, n(b)?])
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected P1,P2, got `{s}`"))?;
    let x = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok([x(a)?, x(b)?])
}

impl Args {
    /// Applies command-line overrides to `cfg`.
    pub fn apply(&self, cfg: &mut ProblemConfig) {
        if let Some(mode) = self.mode {
            cfg.mode = mode;
        }
        if self.grid.is_some() || self.seed.is_some() {
            let sweep = cfg.sweep.get_or_insert_with(SweepSection::default);
            if let Some(g) = self.grid {
                sweep.grid = Some(g);
            }
            if let Some(s) = self.seed {
                sweep.seed = Some(s);
            }
        }
        if let Some(n) = self.roots {
            cfg.seeding.n_roots = Some(n);
        }
        if let Some(t) = self.tol_abs {
            cfg.continuation.abs_tol = Some(t);
        }
        if let Some(t) = self.tol_rel {
            cfg.continuation.rel_tol = Some(t);
        }
        if let Some(out) = &self.out {
            cfg.output.dir = Some(out.to_string_lossy().into_owned());
        }
        if self.gnuplot {
            cfg.output.gnuplot = Some(true);
        }
    }
}

/// Shortest representation that parses back to the same `f64`.
fn num(x: f64) -> String {
    format!("{x:?}")
}

pub const CHART_HEADER: &str = "p1,p2,max_re,max_im,dominant_index,stable,reseeded,failed,residual_max";

/// One row per node, `grid1` outer and `grid2` inner; `dominant_index` is
/// `-1` at failed nodes.
pub fn chart_csv(chart: &StabilityChart<f64>) -> String {
    let mut out = String::with_capacity(64 * chart.n_nodes() + 128);
    out.push_str(CHART_HEADER);
    out.push('\n');
    for (i, &p1) in chart.grid1.iter().enumerate() {
        for (j, &p2) in chart.grid2.iter().enumerate() {
            let dom = chart.dominant_index[i][j].map_or(-1, |d| d as i64);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                num(p1),
                num(p2),
                num(chart.max_re[i][j]),
                num(chart.max_im[i][j]),
                dom,
                u8::from(chart.stable[i][j]),
                u8::from(chart.reseeded[i][j]),
                u8::from(chart.failed[i][j]),
                num(chart.residual_max[i][j]),
            );
        }
    }
    out
}

fn chart_summary(mode: &str, chart: &StabilityChart<f64>) -> String {
    let max_res = chart
        .residual_max
        .iter()
        .flatten()
        .copied()
        .filter(|r| r.is_finite())
        .fold(0.0, f64::max);
    let mut s = String::new();
    let _ = writeln!(s, "mode: {mode}");
    let _ = writeln!(s, "param1: {}", chart.param1);
    let _ = writeln!(s, "param2: {}", chart.param2);
    let _ = writeln!(s, "grid: {}x{}", chart.grid1.len(), chart.grid2.len());
    let _ = writeln!(s, "nodes: {}", chart.n_nodes());
    let _ = writeln!(s, "stable: {}", chart.stable_count());
    let _ = writeln!(
        s,
        "unstable: {}",
        chart.n_nodes() - chart.stable_count() - chart.failed_count()
    );
    let _ = writeln!(s, "failed: {}", chart.failed_count());
    let _ = writeln!(s, "reseeded: {}", chart.reseeded_count());
    let _ = writeln!(s, "singular_events: {}", chart.singular_points.len());
    let _ = writeln!(s, "residual_violations: {}", chart.residual_violations);
    let _ = writeln!(s, "max_residual: {}", num(max_res));
    s
}

fn timings_report(chart: &StabilityChart<f64>) -> String {
    let t = &chart.timings;
    format!(
        "seeding_seconds: {}\nstage1_seconds: {}\nstage2_seconds: {}\ntotal_seconds: {}\n",
        t.seeding, t.stage1, t.stage2, t.total
    )
}

fn singular_csv(chart: &StabilityChart<f64>) -> String {
    let mut s = String::from("p1,p2\n");
    for (a, b) in &chart.singular_points {
        let _ = writeln!(s, "{},{}", num(*a), num(*b));
    }
    s
}

pub fn benchmark_report(r: &BenchmarkRecord) -> String {
    let opt = |x: Option<f64>| x.map_or_else(|| "n/a".to_string(), |v| v.to_string());
    let best = |v: &[f64]| v.iter().copied().reduce(f64::min);
    let mut s = String::new();
    let _ = writeln!(s, "repetitions: {}", r.repetitions);
    let _ = writeln!(s, "nodes: {}", r.nodes);
    let _ = writeln!(s, "sweep_seconds: {}", opt(best(&r.sweep_seconds)));
    let _ = writeln!(s, "dense_seconds: {}", opt(best(&r.dense_seconds)));
    let _ = writeln!(s, "speedup: {}", opt(r.speedup));
    let _ = writeln!(s, "agreement_percent: {}", opt(r.agreement.map(|a| 100.0 * a)));
    let _ = writeln!(s, "compared_nodes: {}", r.compared_nodes);
    let _ = writeln!(s, "sweep_failed: {}", r.sweep_failed);
    let _ = writeln!(s, "dense_failed: {}", r.dense_failed);
    if let Some(t) = r.sweep_stages {
        let _ = writeln!(s, "sweep_seeding_seconds: {}", t.seeding);
        let _ = writeln!(s, "sweep_stage1_seconds: {}", t.stage1);
        let _ = writeln!(s, "sweep_stage2_seconds: {}", t.stage2);
    }
    s
}

fn gnuplot_script(chart: &StabilityChart<f64>, csv: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set xlabel '{p1}'\n\
         set ylabel '{p2}'\n\
         set cblabel 'max Re(lambda)'\n\
         set palette defined (-1 'blue', 0 'white', 1 'red')\n\
         set view map\n\
         unset key\n\
         plot '{csv}' every ::1 using 1:2:3 with points pointtype 5 pointsize 0.6 palette\n",
        p1 = chart.param1,
        p2 = chart.param2,
    )
}

fn write(dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| CliError::Io {
        context: format!("writing {}", path.display()),
        source,
    })?;
    files.push(path);
    Ok(())
}

/// Runs `problem` and returns the files written.
pub fn run(problem: &Problem) -> Result<Vec<PathBuf>, CliError> {
    let dir = &problem.out_dir;
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        context: format!("creating {}", dir.display()),
        source,
    })?;
    let mut files = Vec::new();
    let sweep = || {
        problem
            .sweep
            .as_ref()
            .ok_or_else(|| semantic("sweep", "section required"))
    };
    match problem.mode {
        Mode::Roots => {
            let set = seed_roots(&problem.qp, &problem.point, &problem.seed_cfg)?;
            let mut s = String::new();
            for (z, r) in set.roots.iter().zip(&set.residuals) {
                let _ = writeln!(s, "{},{},{}", num(z.re), num(z.im), num(*r));
            }
            write(dir, "roots.csv", &s, &mut files)?;
        }
        Mode::Sweep => {
            let chart = chart::sweep2d(&problem.qp, sweep()?)?;
            write(dir, "chart.csv", &chart_csv(&chart), &mut files)?;
            write(dir, "summary.txt", &chart_summary("sweep", &chart), &mut files)?;
            write(dir, "singular.csv", &singular_csv(&chart), &mut files)?;
            write(dir, "timings.txt", &timings_report(&chart), &mut files)?;
            if problem.gnuplot {
                write(dir, "chart.gp", &gnuplot_script(&chart, "chart.csv"), &mut files)?;
            }
        }
        Mode::Oracle => {
            let mut cfg = sweep()?.clone();
            cfg.seed_cfg = problem.oracle_seed_cfg.clone();
            let chart = chart::dense_sweep(&problem.qp, &cfg)?;
            write(dir, "oracle.csv", &chart_csv(&chart), &mut files)?;
            write(dir, "summary.txt", &chart_summary("oracle", &chart), &mut files)?;
            write(dir, "timings.txt", &timings_report(&chart), &mut files)?;
            if problem.gnuplot {
                write(dir, "oracle.gp", &gnuplot_script(&chart, "oracle.csv"), &mut files)?;
            }
        }
        Mode::Benchmark => {
            let cfg = sweep()?;
            let bench = BenchmarkConfig {
                repetitions: problem.repetitions,
                oracle_seed_cfg: Some(problem.oracle_seed_cfg.clone()),
            };
            let record = chart::benchmark(&problem.qp, cfg, &bench)?;
            write(dir, "benchmark.txt", &benchmark_report(&record), &mut files)?;
            if problem.repetitions > 0 {
                let chart = chart::sweep2d(&problem.qp, cfg)?;
                let mut oracle_cfg = cfg.clone();
                oracle_cfg.seed_cfg = problem.oracle_seed_cfg.clone();
                let oracle = chart::dense_sweep(&problem.qp, &oracle_cfg)?;
                write(dir, "chart.csv", &chart_csv(&chart), &mut files)?;
                write(dir, "oracle.csv", &chart_csv(&oracle), &mut files)?;
            }
        }
    }
    Ok(files)
}

fn load(args: &Args) -> Result<Problem, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = parse_toml(&text)?;
    args.apply(&mut cfg);
    cfg.build()
}

/// Entry point of the `ccr` binary; returns the process exit code.
pub fn main_with_args<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = load(&args).and_then(|problem| match args.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?
            .install(|| run(&problem)),
        None => run(&problem),
    });
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("ccr: {e}");
            e.exit_code()
        }
    }
}
