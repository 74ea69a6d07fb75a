//! Experiment registry, configuration, seeded runs and result export.
//!
//! A run directory holds `summary.json` (a [`RunResult`]), one CSV file per
//! time series and `timing.json` with the wall-clock duration. The summary
//! leaves timing out so that reruns are byte-identical.
//!
//! Export schemas:
//!
//! * `export.json`: array of summaries sorted by experiment, seed and hash.
//! * `export.csv`: header [`CSV_HEADER`], one row per metric (`kind =
//!   metric`) and per acceptance check (`kind = check`, value 1 or 0).

mod experiments;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "experiment,level,seed,config_hash,kind,name,value";

/// Self level an experiment belongs to, bottom-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    L0,
    L1,
    L2,
    L3,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

/// A CSV time series; `csv` includes its header line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub csv: String,
}

/// What an experiment body returns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub metrics: BTreeMap<String, f64>,
    pub details: BTreeMap<String, Value>,
    pub series: Vec<Series>,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn metric(&mut self, name: &str, v: f64) {
        self.metrics.insert(name.into(), v);
    }

    pub fn detail(&mut self, name: &str, v: impl Serialize) {
        self.details
            .insert(name.into(), serde_json::to_value(v).expect("plain data serializes"));
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, pass, detail));
    }

    pub fn series(&mut self, name: &str, csv: String) {
        self.series.push(Series { name: name.into(), csv });
    }
}

trait Runner: Send + Sync {
    fn defaults(&self) -> Value;
    fn parse(&self, params: &Value) -> std::result::Result<(), String>;
    fn run(&self, params: &Value, seed: u64) -> Result<Outcome>;
}

struct Typed<P>(fn(&P, u64) -> Result<Outcome>);

impl<P> Runner for Typed<P>
where
    P: Serialize + DeserializeOwned + Default + Send + Sync,
{
    fn defaults(&self) -> Value {
        serde_json::to_value(P::default()).expect("defaults serialize")
    }

    fn parse(&self, params: &Value) -> std::result::Result<(), String> {
        serde_json::from_value::<P>(params.clone()).map(|_| ()).map_err(|e| e.to_string())
    }

    fn run(&self, params: &Value, seed: u64) -> Result<Outcome> {
        let p: P = serde_json::from_value(params.clone())?;
        (self.0)(&p, seed)
    }
}

pub struct Experiment {
    pub name: &'static str,
    pub level: Level,
    pub description: &'static str,
    /// Names of the acceptance checks every run evaluates.
    pub checks: &'static [&'static str],
    runner: Box<dyn Runner>,
}

impl Experiment {
    fn new<P>(
        name: &'static str,
        level: Level,
        description: &'static str,
        checks: &'static [&'static str],
        body: fn(&P, u64) -> Result<Outcome>,
    ) -> Self
    where
        P: Serialize + DeserializeOwned + Default + Send + Sync + 'static,
    {
        Self {
            name,
            level,
            description,
            checks,
            runner: Box::new(Typed(body)),
        }
    }

    /// Default parameters as JSON.
    pub fn defaults(&self) -> Value {
        self.runner.defaults()
    }
}

impl fmt::Debug for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Experiment")
            .field("name", &self.name)
            .field("level", &self.level)
            .field("checks", &self.checks)
            .finish()
    }
}

/// All experiments, sorted by name.
pub fn registry() -> &'static [Experiment] {
    static REG: OnceLock<Vec<Experiment>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut v = experiments::all();
        v.sort_by_key(|e| e.name);
        v
    })
}

pub fn find(name: &str) -> Result<&'static Experiment> {
    registry().iter().find(|e| e.name == name).ok_or_else(|| Error::Unknown {
        kind: "experiment",
        name: name.into(),
        registered: registry().iter().map(|e| e.name).collect::<Vec<_>>().join(", "),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Listing {
    pub name: String,
    pub level: Level,
    pub description: String,
}

pub fn list_experiments() -> Vec<Listing> {
    registry()
        .iter()
        .map(|e| Listing {
            name: e.name.into(),
            level: e.level,
            description: e.description.into(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seed: u64,
    /// Dotted parameter path to a value literal, e.g. `sleep.epochs = "4"`.
    pub overrides: BTreeMap<String, String>,
    /// Parameters from a config file, applied before the overrides.
    pub params: Option<Value>,
    pub out_dir: Option<PathBuf>,
}

/// Config file layout.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    experiment: Option<String>,
    seed: Option<u64>,
    params: Option<toml::Table>,
}

impl ExperimentConfig {
    pub fn new(experiment: &str, seed: u64) -> Self {
        Self {
            experiment: experiment.into(),
            seed,
            ..Self::default()
        }
    }

    pub fn with_override(mut self, key: &str, value: &str) -> Self {
        self.overrides.insert(key.into(), value.into());
        self
    }

    /// Merge a TOML file with optional `experiment`, `seed` and a
    /// `[params]` table. Explicit values already set win over the file's
    /// `experiment`.
    pub fn merge_toml(mut self, text: &str) -> Result<Self> {
        let f: ConfigFile = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if let Some(e) = f.experiment {
            if self.experiment.is_empty() {
                self.experiment = e;
            } else if self.experiment != e {
                return Err(Error::param(
                    "experiment",
                    format!("config file is for `{e}`, not `{}`", self.experiment),
                ));
            }
        }
        if let Some(s) = f.seed {
            self.seed = s;
        }
        if let Some(p) = f.params {
            self.params = Some(serde_json::to_value(p)?);
        }
        Ok(self)
    }

    /// Parse `key=value`.
    pub fn parse_assignment(s: &str) -> Result<(String, String)> {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Error::param(s, "expected key=value"))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::param(s, "empty key"));
        }
        Ok((k.into(), v.trim().into()))
    }
}

/// A value literal: TOML syntax when it parses, a bare string otherwise.
fn literal(raw: &str) -> Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .and_then(|v| serde_json::to_value(v).ok())
        .unwrap_or_else(|| Value::String(raw.into()))
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::param(key, format!("`{}` is not a table", parts[..i].join("."))))?;
        if !obj.contains_key(*part) {
            let known = obj.keys().cloned().collect::<Vec<_>>().join(", ");
            return Err(Error::param(key, format!("unknown key; known here: {known}")));
        }
        cur = obj.get_mut(*part).expect("checked");
    }
    // integers are accepted where floats are expected
    *cur = match (&*cur, value) {
        (Value::Number(old), Value::Number(n)) if old.is_f64() && !n.is_f64() => {
            serde_json::json!(n.as_f64().expect("number"))
        }
        (_, v) => v,
    };
    Ok(())
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, Value)>) {
    match v {
        Value::Object(m) if !m.is_empty() => {
            for (k, sub) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, sub, out);
            }
        }
        _ => out.push((prefix.into(), v.clone())),
    }
}

/// Defaults, then file parameters, then overrides; each step is checked
/// against the experiment's schema so errors name the offending key.
pub fn resolve_params(cfg: &ExperimentConfig) -> Result<Value> {
    let exp = find(&cfg.experiment)?;
    let mut params = exp.runner.defaults();
    let mut assignments = Vec::new();
    if let Some(p) = &cfg.params {
        flatten("", p, &mut assignments);
    }
    assignments.extend(cfg.overrides.iter().map(|(k, v)| (k.clone(), literal(v))));
    for (key, value) in assignments {
        if key.is_empty() {
            continue;
        }
        set_path(&mut params, &key, value)?;
        exp.runner.parse(&params).map_err(|e| Error::param(&key, e))?;
    }
    Ok(params)
}

/// Hex SHA-256 of the canonical JSON of experiment, seed and parameters.
/// Object keys serialize sorted, so equal configs hash equally.
pub fn config_hash(experiment: &str, seed: u64, params: &Value) -> String {
    let canon = serde_json::json!({ "experiment": experiment, "params": params, "seed": seed });
    let digest = Sha256::digest(serde_json::to_string(&canon).expect("json").as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesRef {
    pub name: String,
    pub file: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub experiment: String,
    pub level: Level,
    pub seed: u64,
    pub config_hash: String,
    pub params: Value,
    pub metrics: BTreeMap<String, f64>,
    pub details: BTreeMap<String, Value>,
    pub series: Vec<SeriesRef>,
    pub checks: Vec<Check>,
    pub passed: bool,
    /// Kept out of the summary; written to `timing.json`.
    #[serde(skip)]
    pub wall_clock_ms: f64,
    #[serde(skip)]
    pub series_data: Vec<Series>,
}

impl RunResult {
    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes") + "\n"
    }

    /// Write summary, series and timing into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("summary.json"), self.summary_json())?;
        for s in &self.series_data {
            fs::write(dir.join(format!("{}.csv", s.name)), &s.csv)?;
        }
        let timing = serde_json::json!({ "wall_clock_ms": self.wall_clock_ms });
        fs::write(dir.join("timing.json"), serde_json::to_string_pretty(&timing)? + "\n")?;
        Ok(())
    }
}

/// Run one experiment and, when `out_dir` is set, write its files.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult> {
    let res = execute(cfg)?;
    if let Some(dir) = &cfg.out_dir {
        res.write(dir)?;
    }
    Ok(res)
}

fn execute(cfg: &ExperimentConfig) -> Result<RunResult> {
    let exp = find(&cfg.experiment)?;
    let params = resolve_params(cfg)?;
    let start = Instant::now();
    let out = exp.runner.run(&params, cfg.seed)?;
    let wall_clock_ms = start.elapsed().as_secs_f64() * 1e3;
    let got: Vec<&str> = out.checks.iter().map(|c| c.name.as_str()).collect();
    if got != exp.checks {
        return Err(Error::Format(format!(
            "{} evaluated checks {got:?}, declared {:?}",
            exp.name, exp.checks
        )));
    }
    Ok(RunResult {
        experiment: exp.name.into(),
        level: exp.level,
        seed: cfg.seed,
        config_hash: config_hash(exp.name, cfg.seed, &params),
        params,
        metrics: out.metrics,
        details: out.details,
        series: out
            .series
            .iter()
            .map(|s| SeriesRef {
                name: s.name.clone(),
                file: format!("{}.csv", s.name),
                rows: s.csv.lines().count().saturating_sub(1),
            })
            .collect(),
        passed: out.checks.iter().all(|c| c.pass),
        checks: out.checks,
        wall_clock_ms,
        series_data: out.series,
    })
}

/// Run many configs on a pool of `threads` workers; files are written one
/// run at a time after all runs finish.
pub fn run_many(cfgs: &[ExperimentConfig], threads: usize) -> Result<Vec<Result<RunResult>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::param("threads", e.to_string()))?;
    let results: Vec<Result<RunResult>> = pool.install(|| cfgs.par_iter().map(execute).collect());
    for (cfg, r) in cfgs.iter().zip(&results) {
        if let (Some(dir), Ok(r)) = (&cfg.out_dir, r) {
            r.write(dir)?;
        }
    }
    Ok(results)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(Error::Unknown {
                kind: "format",
                name: other.into(),
                registered: "json, csv".into(),
            }),
        }
    }
}

/// Summaries in `dir` and its direct subdirectories.
pub fn collect_summaries(dir: &Path) -> Result<Vec<RunResult>> {
    if !dir.is_dir() {
        return Err(Error::Io(format!("run directory {} does not exist", dir.display())));
    }
    let mut paths = vec![dir.join("summary.json")];
    let mut subs: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subs.sort();
    paths.extend(subs.into_iter().map(|d| d.join("summary.json")));
    let mut out = Vec::new();
    for p in paths.into_iter().filter(|p| p.is_file()) {
        let r: RunResult = serde_json::from_str(&fs::read_to_string(&p)?)
            .map_err(|e| Error::Format(format!("{}: {e}", p.display())))?;
        out.push(r);
    }
    out.sort_by(|a, b| (&a.experiment, a.seed, &a.config_hash).cmp(&(&b.experiment, b.seed, &b.config_hash)));
    Ok(out)
}

pub fn export_csv(runs: &[RunResult]) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for r in runs {
        let head = format!("{},{},{},{}", r.experiment, r.level, r.seed, r.config_hash);
        for (k, v) in &r.metrics {
            s.push_str(&format!("{head},metric,{k},{v}\n"));
        }
        for c in &r.checks {
            s.push_str(&format!("{head},check,{},{}\n", c.name, u8::from(c.pass)));
        }
    }
    s
}

/// Write `export.json` or `export.csv` into `dir`; returns the file path.
pub fn export_results(dir: &Path, format: ExportFormat) -> Result<PathBuf> {
    let runs = collect_summaries(dir)?;
    let (name, body) = match format {
        ExportFormat::Json => ("export.json", serde_json::to_string_pretty(&runs)? + "\n"),
        ExportFormat::Csv => ("export.csv", export_csv(&runs)),
    };
    let path = dir.join(name);
    fs::write(&path, body)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_contract() {
        let reg = registry();
        assert!(reg.len() >= 10);
        let names: Vec<&str> = reg.iter().map(|e| e.name).collect();
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(names, sorted);
        assert!(reg.iter().all(|e| !e.checks.is_empty() && !e.description.is_empty()));
    }

    #[test]
    fn unknown_experiment_lists_registry() {
        let err = run_experiment(&ExperimentConfig::new("nope", 0)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("nope") && msg.contains("mirror-test") && msg.contains("false-belief"));
    }

    #[test]
    fn overrides_are_typed_and_named() {
        let cfg = ExperimentConfig::new("rubber-hand", 0).with_override("step", "5");
        assert_eq!(resolve_params(&cfg).unwrap()["step"], serde_json::json!(5.0));
        let nested = ExperimentConfig::new("rubber-hand", 0).with_override("config.cutoff", "70.5");
        assert_eq!(resolve_params(&nested).unwrap()["config"]["cutoff"], serde_json::json!(70.5));
        for (k, v) in [("bogus", "1"), ("config.bogus", "1"), ("step", "fast"), ("step.x", "1")] {
            let err = resolve_params(&ExperimentConfig::new("rubber-hand", 0).with_override(k, v)).unwrap_err();
            assert!(err.to_string().contains(k), "{err}");
        }
    }

    #[test]
    fn literals() {
        assert_eq!(literal("3"), serde_json::json!(3));
        assert_eq!(literal("true"), serde_json::json!(true));
        assert_eq!(literal("[1.5, 2]"), serde_json::json!([1.5, 2]));
        assert_eq!(literal("sally-anne"), serde_json::json!("sally-anne"));
        assert_eq!(literal("\"quoted\""), serde_json::json!("quoted"));
    }

    #[test]
    fn hash_ignores_key_order() {
        let a = serde_json::json!({"a": 1, "b": {"c": 2, "d": 3}});
        let b: Value = serde_json::from_str(r#"{"b": {"d": 3, "c": 2}, "a": 1}"#).unwrap();
        assert_eq!(config_hash("x", 1, &a), config_hash("x", 1, &b));
        assert_ne!(config_hash("x", 1, &a), config_hash("x", 2, &a));
        assert_eq!(config_hash("x", 1, &a).len(), 64);
    }

    #[test]
    fn toml_file_merges() {
        let cfg = ExperimentConfig::default()
            .merge_toml("experiment = \"rubber-hand\"\nseed = 9\n[params]\nstep = 10\n[params.config]\ncutoff = 80\n")
            .unwrap();
        assert_eq!(cfg.seed, 9);
        let p = resolve_params(&cfg).unwrap();
        assert_eq!(p["step"], serde_json::json!(10.0));
        assert_eq!(p["config"]["cutoff"], serde_json::json!(80.0));
        assert!(ExperimentConfig::new("mirror-test", 0)
            .merge_toml("experiment = \"rubber-hand\"")
            .is_err());
        assert!(ExperimentConfig::default().merge_toml("bogus = 1").is_err());
    }

    #[test]
    fn assignments_parse() {
        assert_eq!(
            ExperimentConfig::parse_assignment("a.b = 3").unwrap(),
            ("a.b".to_string(), "3".to_string())
        );
        assert!(ExperimentConfig::parse_assignment("novalue").is_err());
        assert!(ExperimentConfig::parse_assignment("=3").is_err());
    }

    #[test]
    fn export_of_empty_dir_is_valid() {
        let dir = tempfile::tempdir().unwrap();
        let j = export_results(dir.path(), ExportFormat::Json).unwrap();
        assert_eq!(fs::read_to_string(j).unwrap(), "[]\n");
        let c = export_results(dir.path(), ExportFormat::Csv).unwrap();
        assert_eq!(fs::read_to_string(c).unwrap(), format!("{CSV_HEADER}\n"));
        assert!(export_results(&dir.path().join("missing"), ExportFormat::Csv).is_err());
        assert!("xml".parse::<ExportFormat>().is_err());
    }
}
