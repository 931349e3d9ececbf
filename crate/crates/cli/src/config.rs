//! TOML run configuration.
//!
//! ```toml
//! scenario = "hs-soliton-A2"      # optional; the rest of the file overrides it
//!
//! [system]
//! preset = "hs-integrable"        # or inline c, d and 1-based couplings
//!
//! [grid]
//! x0 = -20.0
//! x1 = 20.0
//! h = 0.1
//! boundary = "periodic"           # or "zero-padded"
//!
//! [time]
//! t0 = 1.0
//! tau = "auto"                    # or a number
//! alpha = 1.0
//!
//! [ic]
//! kind = "hs-soliton"
//! m = 1.0
//! d = 0.0
//!
//! [output]
//! directory = "out"
//! snapshot_every = { time = 0.25 }   # or { steps = 1000 }
//! diagnostics_every = { steps = 500 }
//! plot = true
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use ckdv_core::analytic::InitialCondition;
use ckdv_core::model::SystemRepr;
use ckdv_core::{
    hs_integrable_system, hs_nonintegrable_system, kdv_single_system, Boundary, CoupledSystem, Coupling,
};
use serde::{Deserialize, Serialize};
use toml::Value;

use crate::error::{CliError, Result};
use crate::presets;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub system: SystemSpec,
    pub grid: GridSpec,
    pub time: TimeSpec,
    pub ic: InitialCondition,
    #[serde(default)]
    pub output: OutputSpec,
}

/// A named system, optionally with individual fields replaced inline.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couplings: Option<Vec<InlineCoupling>>,
}

/// `g[m][k][n]` with 1-based mode indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineCoupling {
    pub m: usize,
    pub k: usize,
    pub n: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x0: f64,
    pub x1: f64,
    pub h: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t0: f64,
    #[serde(default)]
    pub tau: TauSpec,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_alpha() -> f64 {
    ckdv_core::stability::DEFAULT_ALPHA
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub enum TauSpec {
    #[default]
    Auto,
    Fixed(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TauRepr {
    Word(String),
    Value(f64),
}

impl Serialize for TauSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TauSpec::Auto => TauRepr::Word("auto".into()),
            TauSpec::Fixed(v) => TauRepr::Value(*v),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TauSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match TauRepr::deserialize(d)? {
            TauRepr::Word(w) if w == "auto" => Ok(TauSpec::Auto),
            TauRepr::Word(w) => Err(serde::de::Error::custom(format!(
                "tau must be \"auto\" or a number, got {w:?}"
            ))),
            TauRepr::Value(v) => Ok(TauSpec::Fixed(v)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cadence {
    Steps(u64),
    Time(f64),
}

impl Cadence {
    /// Cadence in whole steps of length `tau` (at least 1).
    pub fn steps(&self, tau: f64) -> u64 {
        match *self {
            Cadence::Steps(n) => n.max(1),
            Cadence::Time(dt) => ((dt / tau).round() as u64).max(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    /// Unset writes only the initial and final snapshots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<Cadence>,
    /// Unset records about a hundred evenly spaced samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics_every: Option<Cadence>,
    #[serde(default = "default_plot")]
    pub plot: bool,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

fn default_plot() -> bool {
    true
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            directory: default_directory(),
            snapshot_every: None,
            diagnostics_every: None,
            plot: true,
        }
    }
}

pub fn system_preset(name: &str) -> Option<CoupledSystem> {
    match name {
        "hs-integrable" => Some(hs_integrable_system()),
        "hs-nonintegrable" => Some(hs_nonintegrable_system()),
        "kdv-single" => Some(kdv_single_system()),
        _ => None,
    }
}

pub const SYSTEM_PRESETS: [&str; 3] = ["hs-integrable", "hs-nonintegrable", "kdv-single"];

impl SystemSpec {
    pub fn preset(name: &str) -> Self {
        SystemSpec {
            preset: Some(name.into()),
            ..Default::default()
        }
    }

    /// Starts from the preset (if any) and replaces every field given inline.
    pub fn resolve(&self) -> Result<CoupledSystem> {
        let base = match &self.preset {
            Some(name) => {
                let sys = system_preset(name).ok_or_else(|| {
                    CliError::Config(format!(
                        "unknown system preset {name:?} (known: {})",
                        SYSTEM_PRESETS.join(", ")
                    ))
                })?;
                SystemRepr::from(sys)
            }
            None => {
                if self.c.is_none() || self.d.is_none() {
                    return Err(CliError::Config(
                        "system needs a preset or inline c and d".into(),
                    ));
                }
                SystemRepr {
                    label: "inline".into(),
                    c: Vec::new(),
                    d: Vec::new(),
                    couplings: Vec::new(),
                }
            }
        };
        let mut repr = base;
        if let Some(label) = &self.label {
            repr.label = label.clone();
        }
        if let Some(c) = &self.c {
            repr.c = c.clone();
        }
        if let Some(d) = &self.d {
            repr.d = d.clone();
        }
        if let Some(list) = &self.couplings {
            repr.couplings = list
                .iter()
                .map(|cp| {
                    if cp.m == 0 || cp.k == 0 || cp.n == 0 {
                        return Err(CliError::Config(
                            "coupling indices are 1-based".into(),
                        ));
                    }
                    Ok(Coupling {
                        m: cp.m - 1,
                        k: cp.k - 1,
                        n: cp.n - 1,
                        value: cp.value,
                    })
                })
                .collect::<Result<_>>()?;
        }
        CoupledSystem::try_from(repr).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Recursively overlays `top` onto `base`. Tables merge key by key, except
/// that a table whose `kind` differs from the base replaces it outright.
pub fn deep_merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Table(b), Value::Table(t)) => {
            let kind_changed = matches!(
                (b.get("kind"), t.get("kind")),
                (Some(x), Some(y)) if x != y
            );
            if kind_changed {
                *b = t;
                return;
            }
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => deep_merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}

/// Parses a command-line value as a TOML scalar, falling back to a string.
pub fn parse_scalar(raw: &str) -> Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Sets the dotted `key` (e.g. `ic.m`) in `doc`, creating tables as needed.
pub fn set_path(doc: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| CliError::Config(format!("bad key {key:?}")))?;
    let mut cur = doc;
    for p in parts {
        let table = cur
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("{key}: {p} is not a table")))?;
        cur = table
            .entry(p.to_string())
            .or_insert_with(|| Value::Table(Default::default()));
    }
    cur.as_table_mut()
        .ok_or_else(|| CliError::Config(format!("{key}: parent is not a table")))?
        .insert(last.to_string(), value);
    Ok(())
}

/// Expands the `scenario` key (if any) under the document.
pub fn expand_scenario(doc: Value) -> Result<Value> {
    let name = match doc.get("scenario") {
        None => return Ok(doc),
        Some(Value::String(s)) => s.clone(),
        Some(other) => return Err(CliError::Config(format!("scenario must be a string, got {other}"))),
    };
    let preset = presets::scenario(&name).ok_or_else(|| {
        CliError::Config(format!(
            "unknown scenario {name:?} (known: {})",
            presets::SCENARIOS.join(", ")
        ))
    })?;
    let mut base = Value::try_from(&preset).map_err(|e| CliError::Config(e.to_string()))?;
    deep_merge(&mut base, doc);
    Ok(base)
}

pub fn parse_document(text: &str) -> Result<Value> {
    text.parse::<toml::Table>()
        .map(Value::Table)
        .map_err(|e| CliError::Config(e.to_string()))
}

pub fn from_document(doc: Value) -> Result<RunConfig> {
    let cfg: RunConfig = expand_scenario(doc)?
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_document(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_document(&text)
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        from_document(parse_document(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(self.time.t0 >= 0.0 && self.time.t0.is_finite()) {
            return bad(format!("t0 = {} must be non-negative", self.time.t0));
        }
        if !(self.time.alpha > 0.0 && self.time.alpha.is_finite()) {
            return bad(format!("alpha = {} must be positive", self.time.alpha));
        }
        if let TauSpec::Fixed(tau) = self.time.tau {
            if !(tau > 0.0 && tau.is_finite()) {
                return bad(format!("tau = {tau} must be positive"));
            }
        }
        if let Some(Cadence::Time(dt)) = self.output.snapshot_every {
            if !(dt > 0.0) {
                return bad(format!("snapshot interval {dt} must be positive"));
            }
        }
        if let Some(Cadence::Time(dt)) = self.output.diagnostics_every {
            if !(dt > 0.0) {
                return bad(format!("diagnostics interval {dt} must be positive"));
            }
        }
        self.system.resolve()?;
        Ok(())
    }
}
