//! Scenario configuration files.
//!
//! A config is a TOML document with global `[morphology]`, `[ground]`,
//! `[gait]` and `[controller]` tables and a list of `[[scenario]]` entries.
//! Each scenario may carry its own partial copies of those four tables;
//! their keys override the global values for that scenario only. Every key
//! has a default, and unknown keys are rejected.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::Deserialize;
use toml::{Table, Value};

use crate::contact::GroundModelParams;
use crate::error::Violation;
use crate::gait::GaitParams;
use crate::kinematics::RobotMorphology;
use crate::sim::{ControllerParams, Scenario};

/// The configuration shipped with the crate.
pub const DEFAULT_CONFIG: &str = include_str!("../config/defaults.toml");

const SECTIONS: [&str; 4] = ["morphology", "ground", "gait", "controller"];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },

    #[error("invalid configuration:\n{}", format_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("no scenario named `{name}`; available: {}", .available.join(", "))]
    UnknownScenario { name: String, available: Vec<String> },

    #[error("parameter `{path}` does not name a numeric config value")]
    UnknownParameter { path: String },

    #[error("parameter `{path}`: {reason}")]
    BadParameter { path: String, reason: String },
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n")
}

/// Typed mirror of the file layout, used only for schema checking so that
/// errors carry source positions.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct Document {
    #[serde(default)]
    morphology: RobotMorphology,
    #[serde(default)]
    ground: GroundModelParams,
    #[serde(default)]
    gait: GaitParams,
    #[serde(default)]
    controller: ControllerParams,
    #[serde(default)]
    scenario: Vec<Scenario>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    /// Where the text came from, for diagnostics.
    pub origin: String,
    pub morphology: RobotMorphology,
    pub ground: GroundModelParams,
    pub gait: GaitParams,
    pub controller: ControllerParams,
    /// Scenarios with the global tables merged in.
    pub scenarios: Vec<Scenario>,
    lines: HashMap<String, usize>,
}

impl Config {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses and schema-checks `text`. Physical sanity is left to
    /// [`Config::violations`].
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let parse_err = |e: toml::de::Error| ConfigError::Parse { origin: origin.into(), message: e.to_string() };
        toml::from_str::<Document>(text).map_err(parse_err)?;
        let raw: Table = toml::from_str(text).map_err(parse_err)?;

        let section = |name: &str| raw.get(name).cloned().unwrap_or_else(|| Value::Table(Table::new()));
        let globals: Vec<Value> = SECTIONS.iter().map(|s| section(s)).collect();

        let mut scenarios = Vec::new();
        if let Some(Value::Array(entries)) = raw.get("scenario") {
            for entry in entries {
                let Value::Table(entry) = entry else { continue };
                let mut merged = entry.clone();
                for (name, global) in SECTIONS.iter().zip(&globals) {
                    let mut base = global.clone();
                    if let Some(over) = entry.get(*name) {
                        merge(&mut base, over);
                    }
                    merged.insert((*name).into(), base);
                }
                scenarios.push(Value::Table(merged).try_into::<Scenario>().map_err(parse_err)?);
            }
        }

        Ok(Config {
            origin: origin.into(),
            morphology: globals[0].clone().try_into().map_err(parse_err)?,
            ground: globals[1].clone().try_into().map_err(parse_err)?,
            gait: globals[2].clone().try_into().map_err(parse_err)?,
            controller: globals[3].clone().try_into().map_err(parse_err)?,
            scenarios,
            lines: key_lines(text),
        })
    }

    pub fn scenario_names(&self) -> Vec<String> {
        self.scenarios.iter().map(|s| s.name.clone()).collect()
    }

    pub fn scenario(&self, name: &str) -> Result<&Scenario, ConfigError> {
        self.scenarios
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| ConfigError::UnknownScenario { name: name.into(), available: self.scenario_names() })
    }

    /// Every physical or consistency problem in the file, not just the first.
    pub fn violations(&self) -> Vec<Violation> {
        let mut global = Vec::new();
        global.extend(self.morphology.check());
        global.extend(self.ground.check());
        global.extend(self.gait.check());
        global.extend(self.controller.check());

        let mut out = global.clone();
        let mut seen = HashSet::new();
        for s in &self.scenarios {
            if !seen.insert(s.name.as_str()) {
                out.push(Violation::new(format!("scenario.{}", s.name), "duplicate scenario name"));
            }
            for v in s.check() {
                if v.key.starts_with("scenario.") || global.contains(&v) {
                    out.push(v);
                } else {
                    out.push(Violation::new(format!("scenario.{}.{}", s.name, v.key), v.message));
                }
            }
        }
        let mut unique: Vec<Violation> = Vec::new();
        for mut v in out {
            if unique.iter().any(|u| u.key == v.key && u.message == v.message) {
                continue;
            }
            v.line = self.line_of(&v.key);
            unique.push(v);
        }
        unique
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(v))
        }
    }

    /// Line of a dotted key, or of the nearest enclosing table that appears
    /// in the file. Keys set only by a scenario override fall back to the
    /// global table.
    fn line_of(&self, key: &str) -> Option<usize> {
        let mut k = key.split('[').next().unwrap_or(key).to_string();
        loop {
            if let Some(line) = self.lines.get(&k) {
                return Some(*line);
            }
            match k.rfind('.') {
                Some(i) => k.truncate(i),
                None => break,
            }
        }
        let rest = key.strip_prefix("scenario.")?;
        let (_, inner) = rest.split_once('.')?;
        if SECTIONS.iter().any(|s| inner.starts_with(&format!("{s}."))) {
            return self.line_of(inner);
        }
        None
    }
}

/// Deep merge of `over` into `base`; tables merge key by key, everything
/// else is replaced.
fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Table(b), Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}

/// Maps dotted keys to the line where they are set. Scenario keys are
/// spelled `scenario.<name>.<key>`.
fn key_lines(text: &str) -> HashMap<String, usize> {
    struct Entry {
        scenario: Option<usize>,
        path: String,
        line: usize,
    }
    let mut entries = Vec::new();
    let mut names: HashMap<usize, String> = HashMap::new();
    let mut header = String::new();
    let mut scenario_idx: Option<usize> = None;
    let mut count = 0;
    let mut in_scenario = false;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        if let Some(h) = l.strip_prefix("[[").and_then(|r| r.strip_suffix("]]")) {
            header = h.trim().to_string();
            in_scenario = header == "scenario";
            if in_scenario {
                scenario_idx = Some(count);
                count += 1;
                entries.push(Entry { scenario: scenario_idx, path: String::new(), line });
            }
            continue;
        }
        if let Some(h) = l.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            header = h.trim().to_string();
            in_scenario = header.starts_with("scenario.");
            if in_scenario {
                let sub = header["scenario.".len()..].to_string();
                entries.push(Entry { scenario: scenario_idx, path: sub.clone(), line });
                header = sub;
            } else {
                entries.push(Entry { scenario: None, path: header.clone(), line });
            }
            continue;
        }
        let Some((k, v)) = l.split_once('=') else { continue };
        let key = k.trim().trim_matches('"').to_string();
        if in_scenario && header == "scenario" {
            if key == "name" {
                if let Some(idx) = scenario_idx {
                    names.insert(idx, v.trim().trim_matches('"').to_string());
                }
            }
            entries.push(Entry { scenario: scenario_idx, path: key, line });
        } else if in_scenario {
            entries.push(Entry { scenario: scenario_idx, path: format!("{header}.{key}"), line });
        } else {
            let path = if header.is_empty() { key } else { format!("{header}.{key}") };
            entries.push(Entry { scenario: None, path, line });
        }
    }

    let mut out = HashMap::new();
    for e in entries {
        let key = match e.scenario {
            Some(idx) => {
                let name = names.get(&idx).cloned().unwrap_or_default();
                if e.path.is_empty() {
                    format!("scenario.{name}")
                } else {
                    format!("scenario.{name}.{}", e.path)
                }
            }
            None => e.path,
        };
        out.entry(key).or_insert(e.line);
    }
    out
}

/// A config document holding exactly `scenario`, with every value spelled
/// out. Loading it reproduces the scenario.
pub fn resolved(scenario: &Scenario) -> String {
    let mut table = Table::try_from(scenario).expect("scenario serialises to TOML");
    let mut doc = Table::new();
    for name in SECTIONS {
        if let Some(v) = table.remove(name) {
            doc.insert(name.into(), v);
        }
    }
    doc.insert("scenario".into(), Value::Array(vec![Value::Table(table)]));
    let body = toml::to_string(&doc).expect("resolved config serialises");
    format!("# Fully resolved scenario `{}`.\n\n{body}", scenario.name)
}

/// Copy of `scenario` with one numeric value replaced. `path` is dotted,
/// with array indices as plain numbers, e.g. `gait.thrust_fraction` or
/// `pushes.0.impulse.0`.
pub fn with_param(scenario: &Scenario, path: &str, value: f64) -> Result<Scenario, ConfigError> {
    let unknown = || ConfigError::UnknownParameter { path: path.into() };
    let mut root = Value::Table(Table::try_from(scenario).expect("scenario serialises to TOML"));
    let mut slot = &mut root;
    for part in path.split('.') {
        slot = match slot {
            Value::Table(t) => t.get_mut(part).ok_or_else(unknown)?,
            Value::Array(a) => {
                let i: usize = part.parse().map_err(|_| unknown())?;
                a.get_mut(i).ok_or_else(unknown)?
            }
            _ => return Err(unknown()),
        };
    }
    *slot = match slot {
        Value::Float(_) => Value::Float(value),
        Value::Integer(_) if value.fract() == 0.0 && value.abs() < 9.0e15 => Value::Integer(value as i64),
        Value::Integer(_) => {
            return Err(ConfigError::BadParameter { path: path.into(), reason: format!("expects an integer, got {value}") })
        }
        _ => return Err(unknown()),
    };
    root.try_into()
        .map_err(|e: toml::de::Error| ConfigError::BadParameter { path: path.into(), reason: e.message().to_string() })
}

/// Parses `path=value` as used on the command line.
pub fn parse_assignment(s: &str) -> Result<(String, f64), ConfigError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| ConfigError::BadParameter { path: s.into(), reason: "expected path=value".into() })?;
    let value = v
        .trim()
        .parse()
        .map_err(|_| ConfigError::BadParameter { path: k.trim().into(), reason: format!("`{}` is not a number", v.trim()) })?;
    Ok((k.trim().to_string(), value))
}
