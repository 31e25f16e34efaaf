//! Named systems and observables loaded from JSON.
//!
//! Entries are `{name, kind, params}`. Shift kinds are `full_shift` and `sft`;
//! every other system kind is a lift rule (`translation`, `shear`,
//! `circle_sine`, `doubling`, `compose`, `product`) whose params are the
//! rule's fields. Observable kinds are the `Observable` variants.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ergokit::systems::LiftRule;
use ergokit::{Observable, ShiftSpace, System, TorusLift};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::ConfigError;

pub const SCHEMA_VERSION: u32 = 1;
/// Overrides the built-in catalog when set.
pub const CATALOG_ENV: &str = "ERGOKIT_CATALOG";

const BUILTIN: &str = include_str!("../../../catalog/default.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub name: String,
    pub kind: String,
    #[serde(default)]
    pub params: Map<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogFile {
    pub schema_version: u32,
    pub systems: Vec<Entry>,
    pub observables: Vec<Entry>,
}

#[derive(Clone, Debug)]
pub struct Catalog {
    /// Where the catalog came from: a path, or "builtin".
    pub source: String,
    pub systems: BTreeMap<String, System>,
    pub observables: BTreeMap<String, Observable>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ShiftParams {
    #[serde(default)]
    alphabet: Option<usize>,
    #[serde(default)]
    matrix: Option<Vec<Vec<u8>>>,
    #[serde(default)]
    embedding: Option<Vec<Vec<f64>>>,
    /// Equally spaced values in [0,1] with the value metric.
    #[serde(default)]
    interval: bool,
}

#[derive(Deserialize)]
struct VolumeClaim {
    #[serde(default)]
    volume_preserving: bool,
}

fn tagged(tag: &str, kind: &str, params: &Map<String, Value>) -> Value {
    let mut m = params.clone();
    m.insert(tag.into(), Value::String(kind.into()));
    Value::Object(m)
}

fn system_of(e: &Entry) -> Result<System, String> {
    match e.kind.as_str() {
        "full_shift" | "sft" => {
            let p: ShiftParams = serde_json::from_value(Value::Object(e.params.clone())).map_err(|x| x.to_string())?;
            let s = if e.kind == "sft" {
                let m = p.matrix.ok_or("sft needs a matrix")?;
                ShiftSpace::sft(m.iter().map(|r| r.iter().map(|&b| b != 0).collect()).collect())
            } else {
                let a = p.alphabet.ok_or("full_shift needs an alphabet size")?;
                if p.interval {
                    ShiftSpace::discretized_interval(a)
                } else {
                    ShiftSpace::full(a)
                }
            }
            .map_err(|x| x.to_string())?;
            let s = match p.embedding {
                Some(v) => s.with_embedding(v).map_err(|x| x.to_string())?,
                None => s,
            };
            Ok(System::Shift(s))
        }
        kind => {
            let mut params = e.params.clone();
            let claim: VolumeClaim = serde_json::from_value(Value::Object(params.clone())).map_err(|x| x.to_string())?;
            params.remove("volume_preserving");
            let rule: LiftRule = serde_json::from_value(tagged("rule", kind, &params)).map_err(|x| x.to_string())?;
            let f = TorusLift::new(rule).map_err(|x| x.to_string())?;
            Ok(System::Lift(f.with_volume_claim(claim.volume_preserving)))
        }
    }
}

fn observable_of(e: &Entry) -> Result<Observable, String> {
    serde_json::from_value(tagged("kind", &e.kind, &e.params)).map_err(|x| x.to_string())
}

impl Catalog {
    pub fn parse(text: &str, source: &str) -> Result<Catalog, ConfigError> {
        let file: CatalogFile =
            serde_json::from_str(text).map_err(|e| ConfigError(format!("catalog {source}: {e}")))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(ConfigError(format!(
                "catalog {source}: schema version {} (expected {SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        let mut systems = BTreeMap::new();
        for e in &file.systems {
            let s = system_of(e).map_err(|m| ConfigError(format!("system {:?}: {m}", e.name)))?;
            if systems.insert(e.name.clone(), s).is_some() {
                return Err(ConfigError(format!("duplicate system {:?}", e.name)));
            }
        }
        let mut observables = BTreeMap::new();
        for e in &file.observables {
            let o = observable_of(e).map_err(|m| ConfigError(format!("observable {:?}: {m}", e.name)))?;
            if observables.insert(e.name.clone(), o).is_some() {
                return Err(ConfigError(format!("duplicate observable {:?}", e.name)));
            }
        }
        Ok(Catalog {
            source: source.into(),
            systems,
            observables,
        })
    }

    pub fn builtin() -> Catalog {
        Catalog::parse(BUILTIN, "builtin").expect("the shipped catalog parses")
    }

    /// An explicit path wins, then the environment variable, then the built-in catalog.
    pub fn load(path: Option<&Path>) -> Result<Catalog, ConfigError> {
        let path: Option<PathBuf> = path
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CATALOG_ENV).map(PathBuf::from));
        match path {
            None => Ok(Catalog::builtin()),
            Some(p) => {
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| ConfigError(format!("cannot read catalog {}: {e}", p.display())))?;
                Catalog::parse(&text, &p.display().to_string())
            }
        }
    }

    pub fn system(&self, name: &str) -> Result<&System, ConfigError> {
        self.systems.get(name).ok_or_else(|| {
            ConfigError(format!(
                "unknown system {name:?}; known: {}",
                self.systems.keys().cloned().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    /// A catalog observable, validated against `sys`.
    pub fn observable(&self, name: &str, sys: &System) -> Result<&Observable, ConfigError> {
        let o = self.observables.get(name).ok_or_else(|| {
            ConfigError(format!(
                "unknown observable {name:?}; known: {}",
                self.observables.keys().cloned().collect::<Vec<_>>().join(", ")
            ))
        })?;
        o.validate(sys)
            .map_err(|e| ConfigError(format!("observable {name:?} on this system: {e}")))?;
        Ok(o)
    }
}
