//! Scenario configuration: a JSON document layered over a base (the default
//! scenario or a figure preset), with `--json.path value` overrides applied
//! last.

use std::fs;
use std::path::Path;

use dephasr::{Complex64, DensityMatrix, MarkovianSeed, Mode, ModelParams, SpinOperator, TimeGrid};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{CliError, CliResult};

/// Top-level keys of the config document; a long flag whose name is one of
/// these, or starts with one of these followed by `.`, is an override.
pub const CONFIG_KEYS: [&str; 11] = [
    "params",
    "initial_state",
    "operators",
    "t2",
    "t_max",
    "step",
    "cache_step",
    "window",
    "modes",
    "markovian_seed",
    "output",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub params: ModelParams,
    pub initial_state: InitialState,
    pub operators: OperatorPair,
    /// Start times of the two-time correlation functions.
    pub t2: Vec<f64>,
    /// End of every time grid, unless `window` is set.
    pub t_max: f64,
    pub step: f64,
    /// Kernel cache resolution; defaults to `step / 2`.
    #[serde(default)]
    pub cache_step: Option<f64>,
    /// When set, each two-time grid is `[t2, t2 + window]`.
    #[serde(default)]
    pub window: Option<f64>,
    pub modes: Vec<Mode>,
    #[serde(default)]
    pub markovian_seed: MarkovianSeed,
    /// Output path; standard output when absent or `-`.
    #[serde(default)]
    pub output: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum InitialState {
    /// Amplitudes `[[re, im], [re, im]]` of `|0>` and `|1>`, normalised on use.
    Pure { pure: [[f64; 2]; 2] },
    Matrix { rho00: f64, rho11: f64, rho01: [f64; 2] },
}

impl InitialState {
    pub fn density_matrix(&self) -> dephasr::Result<DensityMatrix> {
        match *self {
            InitialState::Pure { pure: [a, b] } => {
                DensityMatrix::pure(Complex64::new(a[0], a[1]), Complex64::new(b[0], b[1]))
            }
            InitialState::Matrix { rho00, rho11, rho01 } => {
                DensityMatrix::from_populations(rho00, rho11, Complex64::new(rho01[0], rho01[1]))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorPair {
    pub a: String,
    pub b: String,
}

/// The default document: the first figure's scenario.
pub fn default_document() -> Value {
    let p = ModelParams::figure_preset();
    json!({
        "params": p,
        "initial_state": { "rho00": 0.75, "rho11": 0.25, "rho01": [3f64.sqrt() / 4.0, 0.0] },
        "operators": { "a": "sx", "b": "sy" },
        "t2": [0.2],
        "t_max": 10.0,
        "step": 1e-3,
        "modes": ["markovian", "nm-qrt", "nm-full", "exact"],
        "markovian_seed": "markovian-evolved",
    })
}

/// Recursively overlays `top` on `base`; objects merge, everything else
/// replaces.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, t) => *b = t,
    }
}

pub fn read_document(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// `(json.path, raw value)` pairs taken from the command line.
pub type Overrides = Vec<(String, String)>;

/// Splits `--<json.path> value` and `--<json.path>=value` overrides out of
/// the raw arguments, returning the remaining arguments and the overrides.
pub fn split_overrides<I>(args: I) -> CliResult<(Vec<String>, Overrides)>
where
    I: IntoIterator<Item = String>,
{
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            rest.push(arg);
            continue;
        };
        let (key, inline) = match flag.split_once('=') {
            Some((k, v)) => (k, Some(v.to_string())),
            None => (flag, None),
        };
        let root = key.split('.').next().unwrap_or_default();
        if !CONFIG_KEYS.contains(&root) {
            rest.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it
                .next()
                .ok_or_else(|| CliError::Config(format!("override --{key} needs a value")))?,
        };
        overrides.push((key.to_string(), value));
    }
    Ok((rest, overrides))
}

/// Sets the value at a dotted `path`. The raw text is read as JSON when it
/// parses and as a string otherwise; a comma-separated list fills an array
/// field.
pub fn apply_override(doc: &mut Value, path: &str, raw: &str) -> CliResult<()> {
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(CliError::Config(format!("malformed override path `{path}`")));
    }
    let (last, parents) = segments.split_last().expect("split yields at least one segment");
    let mut node = doc;
    for seg in parents {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("`{path}` does not name a config field")))?;
        node = obj.entry(seg.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| CliError::Config(format!("`{path}` does not name a config field")))?;

    let wants_array = obj.get(*last).is_some_and(Value::is_array) || matches!(*last, "t2" | "modes");
    let mut value = parse_scalar(raw);
    if wants_array && !value.is_array() {
        value = Value::Array(raw.split(',').map(|s| parse_scalar(s.trim())).collect());
    }
    // the two state representations exclude each other
    if parents == ["initial_state"] {
        if *last == "pure" {
            obj.retain(|k, _| k == "pure");
        } else {
            obj.remove("pure");
        }
    }
    obj.insert(last.to_string(), value);
    Ok(())
}

fn parse_scalar(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Builds a config from `base`, an optional file and the overrides.
pub fn load(base: Value, file: Option<&Path>, overrides: &[(String, String)]) -> CliResult<ScenarioConfig> {
    let mut doc = base;
    if let Some(path) = file {
        let top = read_document(path)?;
        // a state given in the file replaces the base state whole
        if top.get("initial_state").is_some() {
            doc["initial_state"] = Value::Null;
        }
        merge(&mut doc, top);
    }
    for (path, raw) in overrides {
        apply_override(&mut doc, path, raw)?;
    }
    serde_json::from_value(doc).map_err(|e| CliError::Config(e.to_string()))
}

/// A validated configuration with parsed operators and state.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub params: ModelParams,
    pub rho0: DensityMatrix,
    pub a: SpinOperator,
    pub b: SpinOperator,
    pub cache_step: f64,
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> CliResult<Self> {
        let bad = |msg: String| Err(CliError::Config(msg));
        config.params.validate()?;
        let rho0 = config.initial_state.density_matrix()?;
        let a: SpinOperator = config.operators.a.parse()?;
        let b: SpinOperator = config.operators.b.parse()?;
        if !(config.step.is_finite() && config.step > 0.0) {
            return bad(format!("step must be > 0, got {}", config.step));
        }
        if !(config.t_max.is_finite() && config.t_max > 0.0) {
            return bad(format!("t_max must be > 0, got {}", config.t_max));
        }
        if config.t2.is_empty() {
            return bad("t2 list is empty".into());
        }
        if config.modes.is_empty() {
            return bad("modes list is empty".into());
        }
        if let Some(w) = config.window {
            if !(w.is_finite() && w > 0.0) {
                return bad(format!("window must be > 0, got {w}"));
            }
        }
        for &t2 in &config.t2 {
            if !(t2.is_finite() && t2 >= 0.0) {
                return bad(format!("t2 must be >= 0, got {t2}"));
            }
            if config.window.is_none() && t2 > config.t_max {
                return bad(format!("t2 = {t2} exceeds t_max = {}", config.t_max));
            }
        }
        let cache_step = config.cache_step.unwrap_or(0.5 * config.step);
        if !(cache_step.is_finite() && cache_step > 0.0) {
            return bad(format!("cache_step must be > 0, got {cache_step}"));
        }
        let scenario = Self {
            params: config.params,
            rho0,
            a,
            b,
            cache_step,
            config,
        };
        // surface grid errors before any expensive work
        scenario.single_time_grid()?;
        for &t2 in &scenario.config.t2 {
            scenario.two_time_grid(t2)?;
        }
        Ok(scenario)
    }

    pub fn single_time_grid(&self) -> CliResult<TimeGrid> {
        TimeGrid::new(0.0, self.config.t_max, self.config.step).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn two_time_grid(&self, t2: f64) -> CliResult<TimeGrid> {
        let end = match self.config.window {
            Some(w) => t2 + w,
            None => self.config.t_max,
        };
        TimeGrid::new(t2, end, self.config.step).map_err(|e| CliError::Config(format!("t2 = {t2}: {e}")))
    }

    /// Latest time any computation reaches.
    pub fn horizon(&self) -> f64 {
        let two_time = self
            .config
            .t2
            .iter()
            .map(|&t2| t2 + self.config.window.unwrap_or(0.0))
            .fold(0.0, f64::max);
        two_time.max(self.config.t_max)
    }

    pub fn pair_label(&self) -> String {
        format!("{}.{}", self.a, self.b)
    }
}
