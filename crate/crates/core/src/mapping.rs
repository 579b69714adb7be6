//! Gesture-to-command rules loaded from JSON, and the converter.
//!
//! Lookup order: global bindings, then mode-switch gestures, then the
//! current mode's bindings.

use std::collections::BTreeMap;
use std::fmt;
use std::marker::PhantomData;
use std::path::Path;

use serde::de::{Deserializer, MapAccess, Visitor};
use serde::{Deserialize, Serialize};

use crate::command::{Action, Mode, Scope};

pub const MAPPING_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_MAPPING: &str = include_str!("../assets/default_mapping.json");

/// A load or validation failure, located in the source text when possible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for MappingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for MappingError {}

/// JSON object that rejects repeated keys.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct StrictMap<V>(pub BTreeMap<String, V>);

impl<V> Default for StrictMap<V> {
    fn default() -> Self {
        Self(BTreeMap::new())
    }
}

impl<'de, V: Deserialize<'de>> Deserialize<'de> for StrictMap<V> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V_<V>(PhantomData<V>);
        impl<'de, V: Deserialize<'de>> Visitor<'de> for V_<V> {
            type Value = StrictMap<V>;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
                let mut out = BTreeMap::new();
                while let Some(key) = access.next_key::<String>()? {
                    if out.contains_key(&key) {
                        return Err(serde::de::Error::custom(format!("duplicate key {key:?}")));
                    }
                    let v = access.next_value()?;
                    out.insert(key, v);
                }
                Ok(StrictMap(out))
            }
        }
        d.deserialize_map(V_(PhantomData))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Binding {
    pub verb: String,
    #[serde(default)]
    pub args: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRules {
    version: u32,
    #[serde(default)]
    description: Option<String>,
    #[serde(default)]
    global: StrictMap<Binding>,
    #[serde(default)]
    mode_switch: StrictMap<String>,
    #[serde(default)]
    modes: StrictMap<StrictMap<Binding>>,
}

/// Validated rules with every binding resolved to an action.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingRules {
    pub version: u32,
    pub description: Option<String>,
    pub global: BTreeMap<String, Action>,
    pub mode_switch: BTreeMap<String, Mode>,
    pub modes: BTreeMap<Mode, BTreeMap<String, Action>>,
}

/// Line and column of the last key in `path`, found by scanning for each
/// quoted key in turn.
fn locate(text: &str, path: &[&str]) -> (Option<usize>, Option<usize>) {
    let mut from = 0;
    for key in path {
        let needle = format!("\"{key}\"");
        match text[from..].find(&needle) {
            Some(i) => from += i + 1,
            None => return (None, None),
        }
    }
    if path.is_empty() {
        return (None, None);
    }
    let before = &text[..from - 1];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (Some(line), Some(column))
}

fn err_at(text: &str, path: &[&str], message: String) -> MappingError {
    let (line, column) = locate(text, path);
    MappingError { line, column, message }
}

impl MappingRules {
    pub fn parse(text: &str) -> Result<Self, MappingError> {
        let raw: RawRules = serde_json::from_str(text).map_err(|e| MappingError {
            line: Some(e.line()),
            column: Some(e.column()),
            message: e.to_string().split(" at line").next().unwrap_or("").to_string(),
        })?;
        if raw.version != MAPPING_FORMAT_VERSION {
            return Err(err_at(text, &["version"], format!("unsupported mapping version {}", raw.version)));
        }
        let mut global = BTreeMap::new();
        for (label, b) in &raw.global.0 {
            let action = Action::from_verb(&b.verb, b.args.clone())
                .map_err(|e| err_at(text, &["global", label], e))?;
            if action.scope() != Scope::Global {
                return Err(err_at(
                    text,
                    &["global", label],
                    format!("{} is a Local verb and cannot be bound globally", b.verb),
                ));
            }
            global.insert(label.clone(), action);
        }
        let mut mode_switch = BTreeMap::new();
        for (label, m) in &raw.mode_switch.0 {
            let mode = Mode::parse(m).ok_or_else(|| err_at(text, &["mode_switch", label], format!("unknown mode {m:?}")))?;
            if global.contains_key(label) {
                return Err(err_at(
                    text,
                    &["mode_switch", label],
                    format!("label {label:?} is already bound globally"),
                ));
            }
            mode_switch.insert(label.clone(), mode);
        }
        let mut modes = BTreeMap::new();
        for (name, bindings) in &raw.modes.0 {
            let mode = Mode::parse(name).ok_or_else(|| err_at(text, &["modes", name], format!("unknown mode {name:?}")))?;
            let mut table = BTreeMap::new();
            for (label, b) in &bindings.0 {
                let action = Action::from_verb(&b.verb, b.args.clone())
                    .map_err(|e| err_at(text, &["modes", name, label], e))?;
                if action.scope() == Scope::Local && action.home_mode() != mode {
                    return Err(err_at(
                        text,
                        &["modes", name, label],
                        format!("{} belongs to {} mode, not {}", b.verb, action.home_mode().name(), name),
                    ));
                }
                table.insert(label.clone(), action);
            }
            modes.insert(mode, table);
        }
        Ok(Self {
            version: raw.version,
            description: raw.description,
            global,
            mode_switch,
            modes,
        })
    }

    pub fn load(path: &Path) -> Result<Self, MappingError> {
        let text = std::fs::read_to_string(path).map_err(|e| MappingError {
            line: None,
            column: None,
            message: format!("{}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    pub fn default_rules() -> Self {
        Self::parse(DEFAULT_MAPPING).expect("bundled mapping is valid")
    }

    /// Every label the rules mention.
    pub fn labels(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .global
            .keys()
            .chain(self.mode_switch.keys())
            .chain(self.modes.values().flat_map(|t| t.keys()))
            .cloned()
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// The action a recognized gesture stands for in `mode`, if any.
    pub fn convert(&self, label: &str, mode: Mode) -> Option<Action> {
        if let Some(a) = self.global.get(label) {
            return Some(a.clone());
        }
        if let Some(m) = self.mode_switch.get(label) {
            return Some(Action::SwitchMode { mode: *m });
        }
        self.modes.get(&mode).and_then(|t| t.get(label)).cloned()
    }
}
