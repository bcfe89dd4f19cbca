//! Run configuration: built-in defaults, presets, a JSON file and flag
//! overrides, merged key by key in that order.

use std::fs;
use std::path::{Path, PathBuf};

use hyperkg::training::TrainConfig;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::CliError;

pub const PRESETS: &[&str] = &[
    "wn18rr",
    "wn18rr-mobius",
    "wn18rr-noreg",
    "fb15k237",
    "fb15k237-mobius",
    "fb15k237-noreg",
    "wd",
    "wdpp",
];

/// Hyper-parameter rows for each preset. The Möbius rows have no
/// regularizer, so λ is 0 there.
pub fn preset(name: &str) -> Option<Value> {
    let row = |negs_e: usize, negs_r: usize, eta: f64, lambda: f64, gamma: f64, variant: &str, mode: &str| {
        json!({
            "negs_e": negs_e,
            "negs_r": negs_r,
            "eta": eta,
            "lambda": lambda,
            "dim": 100,
            "gamma": gamma,
            "beta": null,
            "variant": variant,
            "corruption_mode": mode,
        })
    };
    Some(match name {
        "wn18rr" => row(10, 0, 0.01, 0.8, 1.0, "euclidean-add", "bernoulli"),
        "wn18rr-mobius" => row(10, 0, 0.01, 0.0, 1.0, "mobius-add", "bernoulli"),
        "wn18rr-noreg" => row(10, 0, 0.01, 0.0, 1.0, "euclidean-add", "bernoulli"),
        "fb15k237" => row(5, 0, 0.01, 0.2, 0.5, "euclidean-add", "bernoulli"),
        "fb15k237-mobius" => row(5, 0, 0.01, 0.0, 0.5, "mobius-add", "bernoulli"),
        "fb15k237-noreg" => row(5, 0, 0.01, 0.0, 0.5, "euclidean-add", "bernoulli"),
        "wd" => row(1, 1, 0.8, 0.0, 7.0, "euclidean-add", "uniform"),
        "wdpp" => row(1, 1, 0.1, 0.0, 7.0, "euclidean-add", "uniform"),
        _ => return None,
    })
}

pub fn preset_train_config(name: &str) -> Option<TrainConfig> {
    let mut merged = serde_json::to_value(TrainConfig::default()).ok()?;
    merge(&mut merged, preset(name)?);
    serde_json::from_value(merged).ok()
}

/// Everything a run needs: the training hyper-parameters plus paths and
/// evaluation settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub train: TrainConfig,
    pub data_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub ks: Vec<usize>,
}

const RUN_KEYS: &[&str] = &["data_dir", "out", "ks"];

fn defaults() -> Value {
    let mut v = serde_json::to_value(TrainConfig::default()).expect("serializable");
    merge(
        &mut v,
        json!({
            "data_dir": null,
            "out": null,
            "ks": [1, 3, 10],
        }),
    );
    v
}

/// Shallow merge: every key of `over` replaces the one in `base`.
pub fn merge(base: &mut Value, over: Value) {
    if let (Value::Object(b), Value::Object(o)) = (base, over) {
        for (k, v) in o {
            b.insert(k, v);
        }
    }
}

pub fn read_config_file(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    if !value.is_object() {
        return Err(CliError::config(format!("{}: expected a JSON object", path.display())));
    }
    Ok(value)
}

/// Resolves flags > file > preset > defaults.
pub fn resolve(preset_name: Option<&str>, file: Option<&Path>, flags: Map<String, Value>) -> Result<RunConfig, CliError> {
    let mut merged = defaults();
    if let Some(name) = preset_name {
        let p = preset(name).ok_or_else(|| {
            CliError::config(format!("unknown preset '{name}' (available: {})", PRESETS.join(", ")))
        })?;
        merge(&mut merged, p);
    }
    if let Some(path) = file {
        merge(&mut merged, read_config_file(path)?);
    }
    merge(&mut merged, Value::Object(flags));

    // split so that unknown keys are reported by TrainConfig's strict parser
    let Value::Object(mut all) = merged else { unreachable!("defaults are an object") };
    let mut run = Map::new();
    for key in RUN_KEYS {
        if let Some(v) = all.remove(*key) {
            run.insert((*key).to_string(), v);
        }
    }
    let train: TrainConfig =
        serde_json::from_value(Value::Object(all)).map_err(|e| CliError::config(format!("configuration: {e}")))?;
    train.validate().map_err(|e| CliError::config(e.to_string()))?;
    let ks: Vec<usize> = serde_json::from_value(run.remove("ks").unwrap_or(json!([1, 3, 10])))
        .map_err(|e| CliError::config(format!("ks: {e}")))?;
    if ks.is_empty() || ks.contains(&0) {
        return Err(CliError::config("ks must be a non-empty list of positive integers"));
    }
    let path = |v: Option<Value>| -> Result<Option<PathBuf>, CliError> {
        match v {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(PathBuf::from(s))),
            Some(other) => Err(CliError::config(format!("expected a path string, got {other}"))),
        }
    };
    Ok(RunConfig {
        train,
        data_dir: path(run.remove("data_dir"))?,
        out: path(run.remove("out"))?,
        ks,
    })
}
