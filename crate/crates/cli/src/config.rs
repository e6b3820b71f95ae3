//! JSON system configuration: either an affine interval IFS or an explicit
//! incidence matrix with a depth-d weight table, plus a tail point and named
//! cylinder targets. Symbols are single characters; words in the file are
//! plain strings of them.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Deserialize;
use thermoform_core::{
    from_affine_ifs, AffineIfsSpec, AffineMap, LocallyConstantPotential, Subshift, SymbolId,
    TailPoint, TargetSet, Word,
};

#[derive(Debug)]
pub struct ConfigError {
    pub path: String,
    pub detail: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.detail)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    name: Option<String>,
    #[serde(default = "default_alpha")]
    alpha: f64,
    #[serde(default)]
    ifs: Option<IfsConfig>,
    #[serde(default)]
    explicit: Option<ExplicitConfig>,
    tail: TailConfig,
    #[serde(default)]
    targets: BTreeMap<String, Vec<String>>,
}

fn default_alpha() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IfsConfig {
    maps: Vec<MapConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapConfig {
    slope: f64,
    offset: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExplicitConfig {
    symbols: Vec<String>,
    incidence: Vec<Vec<u8>>,
    depth: usize,
    weights: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TailConfig {
    #[serde(default)]
    prefix: String,
    cycle: String,
}

/// A loaded and validated system.
#[derive(Debug)]
pub struct System {
    pub name: String,
    pub subshift: Subshift,
    pub potential: LocallyConstantPotential,
    pub tail: TailPoint,
    pub targets: BTreeMap<String, TargetSet>,
    pub osc_warning: Option<String>,
}

impl System {
    pub fn target(&self, name: &str) -> Result<&TargetSet, ConfigError> {
        self.targets.get(name).ok_or_else(|| ConfigError {
            path: self.name.clone(),
            detail: format!(
                "unknown target {name:?}; declared targets: {:?}",
                self.targets.keys().collect::<Vec<_>>()
            ),
        })
    }
}

pub fn load_system(path: &Path, allow_overlap: bool) -> Result<System, ConfigError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        path: shown.clone(),
        detail: e.to_string(),
    })?;
    let cfg: ConfigFile = serde_json::from_str(&text).map_err(|e| ConfigError {
        path: shown.clone(),
        detail: format!("line {}, column {}: {}", e.line(), e.column(), e),
    })?;
    let fail = |field: &str, detail: String| ConfigError {
        path: shown.clone(),
        detail: format!("field {field:?}: {detail}"),
    };
    let name = cfg
        .name
        .clone()
        .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "system".into());

    let (subshift, potential, osc_warning) = match (&cfg.ifs, &cfg.explicit) {
        (Some(ifs), None) => {
            let spec = AffineIfsSpec {
                maps: ifs
                    .maps
                    .iter()
                    .map(|m| AffineMap {
                        slope: m.slope,
                        offset: m.offset,
                    })
                    .collect(),
            };
            let sys = from_affine_ifs(&spec, cfg.alpha, allow_overlap)
                .map_err(|e| fail("ifs", e.to_string()))?;
            (sys.subshift, sys.potential, sys.osc_warning)
        }
        (None, Some(explicit)) => {
            let sub = Subshift::new(
                explicit.symbols.clone(),
                explicit.incidence.clone(),
                cfg.alpha,
            )
            .map_err(|e| fail("explicit", e.to_string()))?;
            for s in &explicit.symbols {
                if s.chars().count() != 1 {
                    return Err(fail(
                        "explicit.symbols",
                        format!("symbol {s:?} must be a single character"),
                    ));
                }
            }
            let mut table: BTreeMap<Vec<SymbolId>, f64> = BTreeMap::new();
            for (key, &value) in &explicit.weights {
                let ids = parse_word(&sub, key).map_err(|d| fail("explicit.weights", d))?;
                table.insert(ids, value);
            }
            let pot = LocallyConstantPotential::from_table(&sub, explicit.depth, &table)
                .map_err(|e| fail("explicit.weights", e.to_string()))?;
            (sub, pot, None)
        }
        (Some(_), Some(_)) => {
            return Err(fail("ifs/explicit", "exactly one must be present".into()))
        }
        (None, None) => {
            return Err(fail(
                "ifs/explicit",
                "one of the two system blocks is required".into(),
            ))
        }
    };

    let prefix = parse_word_allow_empty(&subshift, &cfg.tail.prefix)
        .map_err(|d| fail("tail.prefix", d))?;
    let cycle =
        parse_word_allow_empty(&subshift, &cfg.tail.cycle).map_err(|d| fail("tail.cycle", d))?;
    let tail = subshift
        .tail_point(prefix, cycle)
        .map_err(|e| fail("tail", e.to_string()))?;

    let mut targets = BTreeMap::new();
    for (tname, words) in &cfg.targets {
        let parsed: Result<Vec<Word>, ConfigError> = words
            .iter()
            .map(|w| {
                let ids = parse_word(&subshift, w)
                    .map_err(|d| fail(&format!("targets.{tname}"), d))?;
                subshift
                    .word(ids)
                    .map_err(|e| fail(&format!("targets.{tname}"), e.to_string()))
            })
            .collect();
        let set = TargetSet::new(parsed?)
            .map_err(|e| fail(&format!("targets.{tname}"), e.to_string()))?;
        targets.insert(tname.clone(), set);
    }

    Ok(System {
        name,
        subshift,
        potential,
        tail,
        targets,
        osc_warning,
    })
}

fn parse_word(sub: &Subshift, s: &str) -> Result<Vec<SymbolId>, String> {
    if s.is_empty() {
        return Err("empty word".into());
    }
    parse_word_allow_empty(sub, s)
}

fn parse_word_allow_empty(sub: &Subshift, s: &str) -> Result<Vec<SymbolId>, String> {
    s.chars()
        .map(|c| {
            sub.symbol_id(&c.to_string())
                .map_err(|_| format!("unknown symbol {c:?} in word {s:?}"))
        })
        .collect()
}
