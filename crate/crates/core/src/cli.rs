//! Command-line driver: JSON run configs in, CSV tables out.
//!
//! A config is one JSON document. Every command-line flag overrides the JSON
//! field of the same name before the document is validated.

use crate::bs_core;
use crate::error::Error;
use crate::exact_pricer::{self, Contour, PriceQuote};
use crate::kou_asym;
use crate::merton_asym::{self, MertonIvMode};
use crate::models::{KouParams, MertonParams, Model};
use crate::oracle_mc;
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{Map, Value};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "SMILEWINGS_THREADS";

const TOP_LEVEL_FIELDS: [&str; 7] = ["model", "params", "k_grid", "outputs", "methods", "mc", "out_path"];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {field}: {message}")]
    Config { field: String, message: String },
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config { field: field.into(), message: message.into() }
    }

    pub fn exit_code(&self) -> u8 {
        2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KGrid {
    pub min: f64,
    pub max: f64,
    pub n: usize,
    #[serde(default = "linear")]
    pub spacing: Spacing,
}

fn linear() -> Spacing {
    Spacing::Linear
}

impl KGrid {
    fn validate(&self) -> Result<(), CliError> {
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(CliError::config("k_grid", "min and max must be finite"));
        }
        if !(self.min < self.max) {
            return Err(CliError::config("k_grid", format!("min ({}) must be below max ({})", self.min, self.max)));
        }
        if self.n < 2 {
            return Err(CliError::config("k_grid", format!("n must be at least 2, got {}", self.n)));
        }
        if self.spacing == Spacing::Geometric && !(self.min > 0.0) {
            return Err(CliError::config("k_grid", "geometric spacing needs min > 0"));
        }
        Ok(())
    }

    /// Grid points in increasing order; the end points are hit exactly.
    pub fn points(&self) -> Vec<f64> {
        let last = (self.n - 1) as f64;
        (0..self.n)
            .map(|i| {
                if i == self.n - 1 {
                    return self.max;
                }
                let w = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.min + w * (self.max - self.min),
                    Spacing::Geometric => self.min * (self.max / self.min).powf(w),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Smile,
    CallErrors,
    Density,
    TailExponent,
}

impl Output {
    pub fn file_name(self) -> &'static str {
        match self {
            Output::Smile => "smile.csv",
            Output::CallErrors => "call_errors.csv",
            Output::Density => "density.csv",
            Output::TailExponent => "tail_exponent.csv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IvMethod {
    Exact,
    Order1,
    Order4,
    SemiExplicit,
    Explicit2,
    Mc,
}

impl IvMethod {
    pub fn name(self) -> &'static str {
        match self {
            IvMethod::Exact => "exact",
            IvMethod::Order1 => "order1",
            IvMethod::Order4 => "order4",
            IvMethod::SemiExplicit => "semi_explicit",
            IvMethod::Explicit2 => "explicit2",
            IvMethod::Mc => "mc",
        }
    }

    fn valid_for(self, model: &Model) -> bool {
        match self {
            IvMethod::Exact | IvMethod::Order1 | IvMethod::Mc => true,
            IvMethod::Order4 => matches!(model, Model::Kou(_)),
            IvMethod::SemiExplicit | IvMethod::Explicit2 => matches!(model, Model::Merton(_)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub n_paths: usize,
    pub seed: u64,
}

/// A validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: Model,
    /// `b` was absent and set to the martingale drift.
    pub martingale_b: bool,
    pub k_grid: KGrid,
    pub outputs: Vec<Output>,
    /// Approximations to compare against the exact smile, in config order.
    pub methods: Vec<IvMethod>,
    pub mc: Option<McConfig>,
    pub out_path: PathBuf,
    /// The config document with every default filled in.
    pub resolved: Value,
}

fn field<T: for<'de> Deserialize<'de>>(doc: &Map<String, Value>, name: &str) -> Result<T, CliError> {
    let v = doc.get(name).ok_or_else(|| CliError::config(name, "missing"))?;
    T::deserialize(v).map_err(|e| CliError::config(name, e.to_string()))
}

fn unique<T: PartialEq + Copy>(items: Vec<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(items.len());
    for x in items {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

impl RunConfig {
    /// Validate a config document.
    pub fn from_value(value: Value) -> Result<Self, CliError> {
        let Value::Object(mut doc) = value else {
            return Err(CliError::config("config", "must be a JSON object"));
        };
        if let Some(extra) = doc.keys().find(|k| !TOP_LEVEL_FIELDS.contains(&k.as_str())) {
            return Err(CliError::config(extra.clone(), "unknown field"));
        }

        let model_name: String = field(&doc, "model")?;
        if model_name != "kou" && model_name != "merton" {
            return Err(CliError::config("model", format!("expected \"kou\" or \"merton\", got {model_name:?}")));
        }
        let Some(Value::Object(params)) = doc.get_mut("params") else {
            return Err(CliError::config("params", "missing or not an object"));
        };
        let martingale_b = !params.contains_key("b");
        if martingale_b {
            params.insert("b".into(), Value::from(0.0));
        }
        let params = Value::Object(params.clone());
        let mut model = match model_name.as_str() {
            "kou" => KouParams::deserialize(&params).map(Model::Kou),
            _ => MertonParams::deserialize(&params).map(Model::Merton),
        }
        .map_err(|e| CliError::config("params", e.to_string()))?;
        if martingale_b {
            model = model.with_martingale_drift();
            doc["params"]["b"] = Value::from(model.drift());
        }

        let k_grid: KGrid = field(&doc, "k_grid")?;
        k_grid.validate()?;
        doc["k_grid"]["spacing"] = Value::from(match k_grid.spacing {
            Spacing::Linear => "linear",
            Spacing::Geometric => "geometric",
        });

        let outputs = unique(field::<Vec<Output>>(&doc, "outputs")?);
        if outputs.is_empty() {
            return Err(CliError::config("outputs", "at least one output is required"));
        }
        if outputs.contains(&Output::TailExponent) && !matches!(model, Model::Merton(_)) {
            return Err(CliError::config("outputs", "tail_exponent is only defined for the merton model"));
        }

        let methods = unique(field::<Vec<IvMethod>>(&doc, "methods")?);
        if let Some(bad) = methods.iter().find(|m| !m.valid_for(&model)) {
            return Err(CliError::config("methods", format!("{} is not available for the {model_name} model", bad.name())));
        }
        let methods: Vec<IvMethod> = methods.into_iter().filter(|&m| m != IvMethod::Exact).collect();

        let mc = match doc.get("mc") {
            None | Some(Value::Null) => None,
            Some(_) => Some(field::<McConfig>(&doc, "mc")?),
        };
        if let Some(mc) = mc {
            if mc.n_paths == 0 {
                return Err(CliError::config("mc", "n_paths must be at least 1"));
            }
        }
        if methods.contains(&IvMethod::Mc) && mc.is_none() {
            return Err(CliError::config("mc", "required when methods include mc"));
        }

        let out_path: PathBuf = field::<String>(&doc, "out_path")?.into();
        if out_path.as_os_str().is_empty() {
            return Err(CliError::config("out_path", "must not be empty"));
        }

        Ok(RunConfig {
            model,
            martingale_b,
            k_grid,
            outputs,
            methods,
            mc,
            out_path,
            resolved: Value::Object(doc),
        })
    }

    /// Read a JSON config file and apply command-line overrides.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
        let mut doc: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
        overrides.apply(&mut doc)?;
        Self::from_value(doc)
    }
}

/// Flags that replace fields of the JSON config.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Model tag: kou or merton.
    #[arg(long)]
    pub model: Option<String>,
    /// Model parameters as a JSON object.
    #[arg(long)]
    pub params: Option<String>,
    /// Grid as a JSON object {min, max, n, spacing}.
    #[arg(long = "k_grid")]
    pub k_grid: Option<String>,
    /// Comma-separated list or JSON array.
    #[arg(long)]
    pub outputs: Option<String>,
    /// Comma-separated list or JSON array.
    #[arg(long)]
    pub methods: Option<String>,
    /// Monte Carlo settings as a JSON object {n_paths, seed}.
    #[arg(long)]
    pub mc: Option<String>,
    /// Output directory.
    #[arg(long = "out_path", visible_alias = "out")]
    pub out_path: Option<String>,
    /// Nested override `a.b.c=value`; the value is parsed as JSON when possible.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    pub set: Vec<String>,
}

fn json_flag(name: &str, text: &str) -> Result<Value, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::config(name, format!("flag is not valid JSON: {e}")))
}

fn list_flag(name: &str, text: &str) -> Result<Value, CliError> {
    if text.trim_start().starts_with('[') {
        return json_flag(name, text);
    }
    Ok(Value::Array(
        text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(Value::from).collect(),
    ))
}

impl Overrides {
    pub fn apply(&self, doc: &mut Value) -> Result<(), CliError> {
        let Value::Object(map) = doc else {
            return Err(CliError::config("config", "must be a JSON object"));
        };
        if let Some(m) = &self.model {
            map.insert("model".into(), Value::from(m.as_str()));
        }
        if let Some(p) = &self.params {
            map.insert("params".into(), json_flag("params", p)?);
        }
        if let Some(g) = &self.k_grid {
            map.insert("k_grid".into(), json_flag("k_grid", g)?);
        }
        if let Some(o) = &self.outputs {
            map.insert("outputs".into(), list_flag("outputs", o)?);
        }
        if let Some(m) = &self.methods {
            map.insert("methods".into(), list_flag("methods", m)?);
        }
        if let Some(mc) = &self.mc {
            map.insert("mc".into(), json_flag("mc", mc)?);
        }
        if let Some(o) = &self.out_path {
            map.insert("out_path".into(), Value::from(o.as_str()));
        }
        for item in &self.set {
            let (path, raw) = item
                .split_once('=')
                .ok_or_else(|| CliError::config("set", format!("expected PATH=VALUE, got {item:?}")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::from(raw));
            let mut keys = path.split('.');
            let first = keys.next().unwrap_or_default();
            let mut slot = map
                .entry(first.to_string())
                .or_insert_with(|| Value::Object(Map::new()));
            for key in keys {
                let Value::Object(inner) = slot else {
                    return Err(CliError::config(first, format!("cannot set {path}: parent is not an object")));
                };
                slot = inner.entry(key.to_string()).or_insert_with(|| Value::Object(Map::new()));
            }
            *slot = value;
        }
        Ok(())
    }
}

/// Values of one table row; `None` where a method failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub k: f64,
    pub values: Vec<Option<f64>>,
    pub failures: Vec<String>,
}

impl Row {
    pub fn status(&self) -> String {
        if self.failures.is_empty() {
            "ok".into()
        } else {
            format!("failed:{}", self.failures.join("; "))
        }
    }
}

/// A computed table: column names after the leading grid column, and rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub grid_column: &'static str,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| !r.failures.is_empty()).count()
    }
}

/// Seventeen significant digits.
pub fn fmt_num(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:.16e}"),
        Some(v) if v.is_nan() => "NaN".into(),
        Some(v) if v > 0.0 => "inf".into(),
        Some(_) => "-inf".into(),
        None => "NaN".into(),
    }
}

fn sanitize(reason: &str) -> String {
    reason.replace([',', '\n', '\r', '"'], " ")
}

fn record(failures: &mut Vec<String>, label: &str, e: &Error) {
    failures.push(sanitize(&format!("{label}: {e}")));
}

fn ok_or_record<T>(r: crate::Result<T>, failures: &mut Vec<String>, label: &str) -> Option<T> {
    r.map_err(|e| record(failures, label, &e)).ok()
}

fn approx_iv(model: &Model, method: IvMethod, k: f64) -> crate::Result<f64> {
    let positive = |v: kou_asym::IvExpansion| {
        if v.nonpositive {
            Err(crate::error::domain(format!("truncated expansion {} is not positive", v.value)))
        } else {
            Ok(v.value)
        }
    };
    match (model, method) {
        (Model::Kou(p), IvMethod::Order1) => positive(kou_asym::kou_iv_expansion(p, k, 1)?),
        (Model::Kou(p), IvMethod::Order4) => positive(kou_asym::kou_iv_expansion(p, k, 4)?),
        (Model::Merton(p), IvMethod::Order1) => merton_asym::first_order_iv(p, k),
        (Model::Merton(p), IvMethod::SemiExplicit) => merton_asym::merton_iv(p, k, MertonIvMode::SemiExplicit),
        (Model::Merton(p), IvMethod::Explicit2) => merton_asym::merton_iv(p, k, MertonIvMode::ExplicitTwoTerm),
        _ => unreachable!("method validated against model"),
    }
}

fn mc_iv(k: f64, r: &oracle_mc::MCResult) -> crate::Result<f64> {
    if r.degenerate {
        return Err(crate::error::domain("no Monte Carlo path finished in the money"));
    }
    bs_core::implied_vol(k, r.estimate)
}

/// Exact smile and the requested approximations with their absolute errors.
pub fn smile_table(cfg: &RunConfig) -> Result<Table, CliError> {
    let ks = cfg.k_grid.points();
    let mc = mc_calls(cfg, &ks)?;
    let approx: Vec<IvMethod> = cfg.methods.clone();
    let mut columns = vec!["iv_exact".to_string()];
    columns.extend(approx.iter().map(|m| format!("iv_{}", m.name())));
    columns.extend(approx.iter().map(|m| format!("abs_err_{}", m.name())));
    let rows = ks
        .par_iter()
        .enumerate()
        .map(|(i, &k)| {
            let mut failures = Vec::new();
            let exact = exact_pricer::call_exact(&cfg.model, k, Contour::Auto)
                .and_then(|q| exact_pricer::implied_vol_of_quote(k, &q));
            let exact = ok_or_record(exact, &mut failures, "exact");
            let ivs: Vec<Option<f64>> = approx
                .iter()
                .map(|&m| {
                    let v = match m {
                        IvMethod::Mc => mc_iv(k, &mc.as_ref().expect("mc results")[i]),
                        _ => approx_iv(&cfg.model, m, k),
                    };
                    ok_or_record(v, &mut failures, m.name())
                })
                .collect();
            let errs: Vec<Option<f64>> = ivs.iter().map(|v| Some((v.as_ref()? - exact?).abs())).collect();
            let mut values = vec![exact];
            values.extend(ivs);
            values.extend(errs);
            Row { k, values, failures }
        })
        .collect();
    Ok(Table { grid_column: "k", columns, rows })
}

fn mc_calls(cfg: &RunConfig, ks: &[f64]) -> Result<Option<Vec<oracle_mc::MCResult>>, CliError> {
    if !cfg.methods.contains(&IvMethod::Mc) {
        return Ok(None);
    }
    let mc = cfg.mc.expect("validated");
    oracle_mc::mc_calls(&cfg.model, ks, mc.n_paths, mc.seed)
        .map(Some)
        .map_err(|e| CliError::config("params", e.to_string()))
}

fn rel_err(ln_approx: f64, ln_exact: f64) -> f64 {
    (ln_approx - ln_exact).exp_m1()
}

/// Call prices from the expansions and their relative errors against the
/// exact price (computed from log prices, so deep-wing values stay finite).
pub fn call_error_table(cfg: &RunConfig) -> Result<Table, CliError> {
    let ks = cfg.k_grid.points();
    let mc = mc_calls(cfg, &ks)?;
    let mut names = vec!["expansion"];
    if matches!(cfg.model, Model::Merton(_)) {
        names.push("expansion_explicit");
    }
    let mut columns = vec!["call_exact".to_string()];
    columns.extend(names.iter().map(|n| format!("call_{n}")));
    columns.extend(names.iter().map(|n| format!("rel_err_{n}")));
    if mc.is_some() {
        columns.extend(["call_mc", "std_error_mc", "rel_err_mc"].map(String::from));
    }
    let rows = ks
        .par_iter()
        .enumerate()
        .map(|(i, &k)| {
            let mut failures = Vec::new();
            let exact = ok_or_record(exact_pricer::call_exact(&cfg.model, k, Contour::Auto), &mut failures, "exact");
            let expansions: Vec<_> = match &cfg.model {
                Model::Kou(p) => vec![kou_asym::kou_call_expansion(p, k)],
                Model::Merton(p) => vec![
                    merton_asym::merton_call_expansion(p, k),
                    merton_asym::merton_call_expansion_explicit(p, k),
                ],
            };
            let expansions: Vec<_> = expansions
                .into_iter()
                .zip(&names)
                .map(|(r, n)| ok_or_record(r, &mut failures, n))
                .collect();
            let mut values = vec![exact.map(|q| q.value)];
            values.extend(expansions.iter().map(|e| e.map(|e| e.value)));
            values.extend(
                expansions
                    .iter()
                    .map(|e| Some(rel_err(e.as_ref()?.ln_value, exact.as_ref()?.ln_value))),
            );
            if let Some(mc) = &mc {
                let r = mc[i];
                values.push(Some(r.estimate));
                values.push(Some(r.std_error));
                values.push(exact.map(|q: PriceQuote| r.estimate / q.value - 1.0));
            }
            Row { k, values, failures }
        })
        .collect();
    Ok(Table { grid_column: "k", columns, rows })
}

/// Density of `X_T` on the grid; Merton rows add the saddle-point expansion.
pub fn density_table(cfg: &RunConfig) -> Table {
    let merton = match cfg.model {
        Model::Merton(p) => Some(p),
        Model::Kou(_) => None,
    };
    let mut columns = vec!["density_exact".to_string()];
    if merton.is_some() {
        columns.extend(["density_expansion", "rel_err_expansion"].map(String::from));
    }
    let rows = cfg
        .k_grid
        .points()
        .par_iter()
        .map(|&x| {
            let mut failures = Vec::new();
            let exact = ok_or_record(exact_pricer::density_exact(&cfg.model, x, Contour::Auto), &mut failures, "exact");
            let mut values = vec![exact.map(|q| q.value)];
            if let Some(p) = &merton {
                let e = ok_or_record(merton_asym::merton_density_expansion(p, x), &mut failures, "expansion");
                values.push(e.map(|e| e.value));
                values.push((|| Some(rel_err(e?.ln_value, exact?.ln_value)))());
            }
            Row { k: x, values, failures }
        })
        .collect();
    Table { grid_column: "x", columns, rows }
}

/// Local power-law exponent of the density of `S_T` at `K = e^k` (Merton only).
pub fn tail_exponent_table(cfg: &RunConfig) -> Table {
    let Model::Merton(p) = cfg.model else {
        unreachable!("validated: tail_exponent needs merton");
    };
    let columns = ["strike", "exponent", "density_st", "ln_density_st"].map(String::from).to_vec();
    let rows = cfg
        .k_grid
        .points()
        .par_iter()
        .map(|&k| {
            let mut failures = Vec::new();
            let strike = k.exp();
            let t = ok_or_record(merton_asym::st_tail_exponent(&p, strike), &mut failures, "tail_exponent");
            let values = vec![
                Some(strike),
                t.map(|t| t.exponent),
                t.map(|t| t.density.value),
                t.map(|t| t.density.ln_value),
            ];
            Row { k, values, failures }
        })
        .collect();
    Table { grid_column: "k", columns, rows }
}

fn header(cfg: &RunConfig, command: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# smilewings {} {command}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "# config: {}", cfg.resolved);
    let source = if cfg.martingale_b { "martingale drift" } else { "from config" };
    let _ = writeln!(s, "# b: {} ({source})", fmt_num(Some(cfg.model.drift())));
    s
}

/// Render a table as CSV with `#` comment lines in front.
pub fn render(table: &Table, comments: &str) -> String {
    let mut s = String::from(comments);
    s.push_str(table.grid_column);
    for c in &table.columns {
        s.push(',');
        s.push_str(c);
    }
    s.push_str(",status\n");
    for row in &table.rows {
        s.push_str(&fmt_num(Some(row.k)));
        for v in &row.values {
            s.push(',');
            s.push_str(&fmt_num(*v));
        }
        s.push(',');
        s.push_str(&row.status());
        s.push('\n');
    }
    s
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(path)
}

/// Files written by a command and how many rows failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub failed_rows: usize,
}

impl Report {
    pub fn exit_code(&self) -> u8 {
        u8::from(self.failed_rows > 0)
    }
}

pub fn run(cfg: &RunConfig) -> Result<Report, CliError> {
    let comments = header(cfg, "run");
    let mut report = Report { files: Vec::new(), failed_rows: 0 };
    for &out in &cfg.outputs {
        let table = match out {
            Output::Smile => smile_table(cfg)?,
            Output::CallErrors => call_error_table(cfg)?,
            Output::Density => density_table(cfg),
            Output::TailExponent => tail_exponent_table(cfg),
        };
        report.failed_rows += table.failed_rows();
        report.files.push(write_file(&cfg.out_path, out.file_name(), &render(&table, &comments))?);
    }
    Ok(report)
}

/// One line of the crossover report.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossover {
    pub lower: IvMethod,
    pub higher: IvMethod,
    /// Smallest grid `k` from which `higher` has the smaller error at every
    /// later grid point.
    pub k: Option<f64>,
}

/// Compare every later method in `methods` against every earlier one.
pub fn crossovers(cfg: &RunConfig, smile: &Table) -> Vec<Crossover> {
    let m = cfg.methods.len();
    let err = |row: &Row, j: usize| row.values[1 + m + j];
    let mut out = Vec::new();
    for lo in 0..m {
        for hi in lo + 1..m {
            let mut start = None;
            for (i, row) in smile.rows.iter().enumerate().rev() {
                match (err(row, lo), err(row, hi)) {
                    (Some(a), Some(b)) if b < a => start = Some(i),
                    _ => break,
                }
            }
            out.push(Crossover { lower: cfg.methods[lo], higher: cfg.methods[hi], k: start.map(|i| smile.rows[i].k) });
        }
    }
    out
}

pub fn crossover_report(cfg: &RunConfig) -> Result<Report, CliError> {
    if cfg.methods.len() < 2 {
        return Err(CliError::config("methods", "crossover needs exact plus at least two approximations"));
    }
    let smile = smile_table(cfg)?;
    let mut s = header(cfg, "crossover");
    s.push_str("lower,higher,crossover_k\n");
    for c in crossovers(cfg, &smile) {
        let k = c.k.map_or_else(|| "n/a".to_string(), |k| fmt_num(Some(k)));
        let _ = writeln!(s, "{},{},{k}", c.lower.name(), c.higher.name());
    }
    let path = write_file(&cfg.out_path, "crossover.csv", &s)?;
    Ok(Report { files: vec![path], failed_rows: smile.failed_rows() })
}

#[derive(Debug, Parser)]
#[command(name = "smilewings", version, about = "Implied-volatility wings of jump-diffusion models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the requested CSV tables.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Write the crossover points between approximation methods.
    Crossover {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::config(THREADS_ENV, format!("expected a positive integer, got {raw:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::config(THREADS_ENV, e.to_string()))
}

fn execute(cli: Cli) -> Result<Report, CliError> {
    let pool = thread_pool()?;
    match cli.command {
        Command::Run { config, overrides } => {
            let cfg = RunConfig::load(&config, &overrides)?;
            pool.install(|| run(&cfg))
        }
        Command::Crossover { config, overrides } => {
            let cfg = RunConfig::load(&config, &overrides)?;
            pool.install(|| crossover_report(&cfg))
        }
    }
}

/// Entry point of the `smilewings` binary.
pub fn main_entry<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match execute(cli) {
        Ok(report) => {
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            if report.failed_rows > 0 {
                eprintln!("{} row(s) failed; see the status column", report.failed_rows);
            }
            ExitCode::from(report.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
