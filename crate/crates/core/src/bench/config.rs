use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datasets::DatasetSpec;
use crate::diffmethods::{DiffMethod, DiffMethodSpec};
use crate::discovery::{EvoConfig, LibraryConfig, SindyConfig, TermSpec};
use crate::grid::MultiIndex;
use crate::metrics::GroundTruth;

/// Version of the config and report layout.
pub const SCHEMA_VERSION: u32 = 1;

const KNOWN_KEYS: [&str; 9] = [
    "schema_version",
    "output_dir",
    "seed",
    "repeats",
    "noise",
    "datasets",
    "methods",
    "discovery",
    "error_strip",
];

const DATASET_KINDS: &str = "damped_ode (ode), kdv_soliton (kdv), burgers, wave, laplace";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Sindy,
    Evolutionary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscoveryConfig {
    pub engine: Engine,
    pub library: LibraryConfig,
    pub sindy: SindyConfig,
    /// The per-cell seed replaces `seed`.
    pub evolutionary: EvoConfig,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        Self {
            engine: Engine::Sindy,
            library: LibraryConfig::default(),
            sindy: SindyConfig::default(),
            evolutionary: EvoConfig::default(),
        }
    }
}

/// A dataset with bench-specific settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    /// Identifier in cell ids and output files; defaults to the kind key.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Term regressed by SINDy: a label such as `u_t`, or `auto` to try
    /// every single derivative. Defaults to the leading term of the known
    /// equation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    /// Highest pure derivative order per axis in the jet.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_orders: Option<Vec<usize>>,
    #[serde(flatten)]
    pub spec: DatasetSpec,
}

/// How the regression target is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetChoice {
    Fixed(TermSpec),
    Auto,
}

impl DatasetEntry {
    pub fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.spec.key().to_string())
    }

    pub fn axis_names(&self) -> Vec<String> {
        self.spec.kind.axis_names().iter().map(|s| s.to_string()).collect()
    }

    pub fn max_orders(&self) -> Vec<usize> {
        self.max_orders.clone().unwrap_or_else(|| self.spec.kind.default_max_orders())
    }

    /// Pure partials up to [`DatasetEntry::max_orders`].
    pub fn indices(&self) -> Vec<MultiIndex> {
        let orders = self.max_orders();
        let dim = orders.len();
        orders
            .iter()
            .enumerate()
            .flat_map(|(axis, &m)| (1..=m).map(move |r| MultiIndex::along(dim, axis, r)))
            .collect()
    }

    pub fn truth(&self) -> GroundTruth {
        GroundTruth::for_dataset(&self.spec)
    }

    pub fn target(&self) -> Result<TargetChoice, String> {
        match self.target.as_deref() {
            None => Ok(TargetChoice::Fixed(self.truth().designated)),
            Some("auto") => Ok(TargetChoice::Auto),
            Some(s) => TermSpec::parse(s, &self.axis_names())
                .map(TargetChoice::Fixed)
                .map_err(|e| e.to_string()),
        }
    }
}

/// A full experiment matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// Noise levels in percent of the field's mean absolute value.
    #[serde(default = "default_noise")]
    pub noise: Vec<f64>,
    pub datasets: Vec<DatasetEntry>,
    #[serde(default = "default_methods", deserialize_with = "de_methods")]
    pub methods: Vec<DiffMethodSpec>,
    #[serde(default)]
    pub discovery: DiscoveryConfig,
    /// Nodes removed from each end of every axis for interior error norms.
    #[serde(default = "default_error_strip")]
    pub error_strip: usize,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}
fn default_output() -> PathBuf {
    PathBuf::from("results")
}
fn default_repeats() -> usize {
    10
}
fn default_noise() -> Vec<f64> {
    vec![0.0, 0.5, 1.0]
}
fn default_methods() -> Vec<DiffMethodSpec> {
    DiffMethod::ALL.iter().map(|m| m.default_spec()).collect()
}
fn default_error_strip() -> usize {
    10
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MethodEntry {
    Name(String),
    Spec(DiffMethodSpec),
}

fn de_methods<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<DiffMethodSpec>, D::Error> {
    let entries: Vec<MethodEntry> = Vec::deserialize(d)?;
    entries
        .into_iter()
        .map(|e| match e {
            MethodEntry::Name(s) => s
                .parse::<DiffMethod>()
                .map(|m| m.default_spec())
                .map_err(serde::de::Error::custom),
            MethodEntry::Spec(s) => Ok(s),
        })
        .collect()
}

impl ExperimentConfig {
    /// One dataset, default everything else.
    pub fn minimal(spec: DatasetSpec) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            output_dir: default_output(),
            seed: 0,
            repeats: default_repeats(),
            noise: default_noise(),
            datasets: vec![DatasetEntry {
                name: None,
                target: None,
                max_orders: None,
                spec,
            }],
            methods: default_methods(),
            discovery: DiscoveryConfig::default(),
            error_strip: default_error_strip(),
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Cross-field checks; every problem is reported.
    pub fn check(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut push = |loc: String, msg: String| out.push(Diagnostic::new(loc, msg));
        if self.schema_version != SCHEMA_VERSION {
            push(
                "schema_version".into(),
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            );
        }
        if self.repeats == 0 {
            push("repeats".into(), "must be at least 1".into());
        }
        if self.noise.is_empty() {
            push("noise".into(), "at least one noise level is required".into());
        }
        for (i, n) in self.noise.iter().enumerate() {
            if !(n.is_finite() && *n >= 0.0) {
                push(format!("noise[{i}]"), format!("noise level must be a finite percentage ≥ 0, got {n}"));
            }
        }
        if self.error_strip == 0 {
            push("error_strip".into(), "must be at least 1".into());
        }
        if self.datasets.is_empty() {
            push("datasets".into(), "at least one dataset is required".into());
        }
        let mut names = Vec::new();
        for (i, d) in self.datasets.iter().enumerate() {
            let loc = format!("datasets[{i}]");
            if let Err(e) = d.spec.validate() {
                push(loc.clone(), e.to_string());
            }
            let name = d.name();
            if names.contains(&name) {
                push(format!("{loc}.name"), format!("duplicate dataset name `{name}`"));
            }
            names.push(name);
            let dim = d.axis_names().len();
            if let Some(m) = &d.max_orders {
                if m.len() != dim {
                    push(format!("{loc}.max_orders"), format!("expected {dim} entries, got {}", m.len()));
                } else if m.iter().all(|&o| o == 0) {
                    push(format!("{loc}.max_orders"), "at least one order must be positive".into());
                }
            }
            if let Err(e) = d.target() {
                push(format!("{loc}.target"), e);
            }
        }
        if self.methods.is_empty() {
            push("methods".into(), "at least one method is required".into());
        }
        let mut seen = Vec::new();
        for (i, m) in self.methods.iter().enumerate() {
            if let Err(e) = m.validate() {
                push(format!("methods[{i}]"), e.to_string());
            }
            if seen.contains(&m.method()) {
                push(format!("methods[{i}]"), format!("method `{}` listed twice", m.method().key()));
            }
            seen.push(m.method());
        }
        if self.discovery.library.max_factors == 0 {
            push("discovery.library.max_factors".into(), "must be at least 1".into());
        }
        if let Err(e) = self.discovery.sindy.validate() {
            push("discovery.sindy".into(), e.to_string());
        }
        if let Err(e) = self.discovery.evolutionary.validate() {
            push("discovery.evolutionary".into(), e.to_string());
        }
        out
    }
}

/// One validation problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// Key path such as `datasets[1].kind`.
    pub location: String,
    pub message: String,
}

impl Diagnostic {
    fn new(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{} problem(s) in config", .0.len())]
    Invalid(Vec<Diagnostic>),
}

/// Reads, parses and cross-checks a TOML config.
pub fn validate_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| {
        let loc = e
            .span()
            .map(|s| {
                let line = text[..s.start.min(text.len())].matches('\n').count() + 1;
                format!("line {line}")
            })
            .unwrap_or_else(|| "config".into());
        ConfigError::Invalid(vec![Diagnostic::new(loc, e.message().to_string())])
    })?;

    let mut diags = Vec::new();
    for key in table.keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            diags.push(Diagnostic::new(key.clone(), "unknown key"));
        }
    }
    check_scalars(&table, &mut diags);
    check_noise(&table, &mut diags);
    check_methods(&table, &mut diags);
    check_datasets(&table, &mut diags);
    if let Some(v) = table.get("discovery") {
        if let Err(e) = v.clone().try_into::<DiscoveryConfig>() {
            diags.push(Diagnostic::new("discovery", e.message().trim().to_string()));
        }
    }
    if diags.is_empty() {
        let config: ExperimentConfig = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| {
            ConfigError::Invalid(vec![Diagnostic::new("config", e.message().trim().to_string())])
        })?;
        let diags = config.check();
        return if diags.is_empty() {
            Ok(config)
        } else {
            Err(ConfigError::Invalid(diags))
        };
    }

    // Drop what failed to parse and cross-check the rest, so that one run
    // reports every problem.
    let (table, dataset_idx, method_idx) = sanitize(table);
    if let Ok(config) = toml::Value::Table(table).try_into::<ExperimentConfig>() {
        for mut d in config.check() {
            d.location = remap(&d.location, "datasets", &dataset_idx);
            d.location = remap(&d.location, "methods", &method_idx);
            if !diags.contains(&d) {
                diags.push(d);
            }
        }
    }
    Err(ConfigError::Invalid(diags))
}

fn sanitize(mut table: toml::Table) -> (toml::Table, Vec<usize>, Vec<usize>) {
    table.retain(|k, _| KNOWN_KEYS.contains(&k));
    for key in ["schema_version", "seed", "repeats", "error_strip"] {
        if !matches!(table.get(key), Some(toml::Value::Integer(i)) if *i >= 0) {
            table.remove(key);
        }
    }
    if !table.get("output_dir").is_some_and(|v| v.is_str()) {
        table.remove("output_dir");
    }
    match table.get_mut("noise") {
        Some(toml::Value::Array(a)) => {
            for v in a.iter_mut() {
                let ok = match v {
                    toml::Value::Float(f) => f.is_finite() && *f >= 0.0,
                    toml::Value::Integer(n) => *n >= 0,
                    _ => false,
                };
                if !ok {
                    *v = toml::Value::Float(0.0);
                }
            }
        }
        Some(_) => {
            table.remove("noise");
        }
        None => {}
    }
    let keep = |v: &toml::Value, f: &dyn Fn(&toml::Value) -> bool| -> (Vec<toml::Value>, Vec<usize>) {
        let mut kept = Vec::new();
        let mut idx = Vec::new();
        for (i, x) in v.as_array().into_iter().flatten().enumerate() {
            if f(x) {
                kept.push(x.clone());
                idx.push(i);
            }
        }
        (kept, idx)
    };
    let (datasets, dataset_idx) = match table.get("datasets") {
        Some(v) => keep(v, &|x| x.clone().try_into::<DatasetEntry>().is_ok()),
        None => (Vec::new(), Vec::new()),
    };
    table.insert("datasets".into(), toml::Value::Array(datasets));
    let mut method_idx = Vec::new();
    if let Some(v) = table.get("methods") {
        let (methods, idx) = keep(v, &|x| match x {
            toml::Value::String(s) => s.parse::<DiffMethod>().is_ok(),
            _ => x.clone().try_into::<DiffMethodSpec>().is_ok(),
        });
        table.insert("methods".into(), toml::Value::Array(methods));
        method_idx = idx;
    }
    if table.get("discovery").is_some_and(|v| v.clone().try_into::<DiscoveryConfig>().is_err()) {
        table.remove("discovery");
    }
    (table, dataset_idx, method_idx)
}

/// Rewrites `prefix[k]` to `prefix[idx[k]]`.
fn remap(location: &str, prefix: &str, idx: &[usize]) -> String {
    let Some(rest) = location.strip_prefix(prefix).and_then(|r| r.strip_prefix('[')) else {
        return location.to_string();
    };
    let Some((num, tail)) = rest.split_once(']') else {
        return location.to_string();
    };
    match num.parse::<usize>().ok().and_then(|k| idx.get(k)) {
        Some(orig) => format!("{prefix}[{orig}]{tail}"),
        None => location.to_string(),
    }
}

fn check_scalars(table: &toml::Table, diags: &mut Vec<Diagnostic>) {
    for key in ["schema_version", "seed", "repeats", "error_strip"] {
        match table.get(key) {
            None => {}
            Some(toml::Value::Integer(i)) if *i >= 0 => {}
            Some(v) => diags.push(Diagnostic::new(key, format!("expected a non-negative integer, got {v}"))),
        }
    }
    if let Some(v) = table.get("output_dir") {
        if !v.is_str() {
            diags.push(Diagnostic::new("output_dir", "expected a path string"));
        }
    }
}

fn check_noise(table: &toml::Table, diags: &mut Vec<Diagnostic>) {
    match table.get("noise") {
        None => {}
        Some(toml::Value::Array(a)) => {
            for (i, v) in a.iter().enumerate() {
                let x = match v {
                    toml::Value::Float(f) => Some(*f),
                    toml::Value::Integer(n) => Some(*n as f64),
                    _ => None,
                };
                match x {
                    Some(x) if x.is_finite() && x >= 0.0 => {}
                    Some(x) => diags.push(Diagnostic::new(
                        format!("noise[{i}]"),
                        format!("noise level must be a finite percentage ≥ 0, got {x}"),
                    )),
                    None => diags.push(Diagnostic::new(format!("noise[{i}]"), "expected a number")),
                }
            }
        }
        Some(_) => diags.push(Diagnostic::new("noise", "expected an array of percentages")),
    }
}

fn valid_method_names() -> String {
    DiffMethod::ALL.iter().map(|m| m.key()).collect::<Vec<_>>().join(", ")
}

fn check_methods(table: &toml::Table, diags: &mut Vec<Diagnostic>) {
    let Some(v) = table.get("methods") else { return };
    let Some(a) = v.as_array() else {
        diags.push(Diagnostic::new("methods", "expected an array"));
        return;
    };
    for (i, m) in a.iter().enumerate() {
        let loc = format!("methods[{i}]");
        match m {
            toml::Value::String(s) => {
                if s.parse::<DiffMethod>().is_err() {
                    diags.push(Diagnostic::new(
                        loc,
                        format!("unknown method `{s}`; valid names: {}", valid_method_names()),
                    ));
                }
            }
            toml::Value::Table(t) => {
                let name = t.get("method").and_then(|v| v.as_str());
                match name.map(|n| n.parse::<DiffMethod>()) {
                    None => diags.push(Diagnostic::new(format!("{loc}.method"), "missing method name")),
                    Some(Err(_)) => diags.push(Diagnostic::new(
                        format!("{loc}.method"),
                        format!(
                            "unknown method `{}`; valid names: {}",
                            name.unwrap_or_default(),
                            valid_method_names()
                        ),
                    )),
                    Some(Ok(_)) => match m.clone().try_into::<DiffMethodSpec>() {
                        Ok(spec) => {
                            if let Err(e) = spec.validate() {
                                diags.push(Diagnostic::new(loc, e.to_string()));
                            }
                        }
                        Err(e) => diags.push(Diagnostic::new(loc, e.message().trim().to_string())),
                    },
                }
            }
            _ => diags.push(Diagnostic::new(loc, "expected a method name or table")),
        }
    }
}

fn check_datasets(table: &toml::Table, diags: &mut Vec<Diagnostic>) {
    let Some(v) = table.get("datasets") else {
        diags.push(Diagnostic::new("datasets", "at least one dataset is required"));
        return;
    };
    let Some(a) = v.as_array() else {
        diags.push(Diagnostic::new("datasets", "expected an array of tables"));
        return;
    };
    for (i, d) in a.iter().enumerate() {
        let loc = format!("datasets[{i}]");
        let Some(t) = d.as_table() else {
            diags.push(Diagnostic::new(loc, "expected a table"));
            continue;
        };
        let kind = t.get("kind").and_then(|k| k.as_str());
        let known = ["damped_ode", "ode", "kdv_soliton", "kdv", "burgers", "wave", "laplace"];
        match kind {
            None => {
                diags.push(Diagnostic::new(format!("{loc}.kind"), format!("missing; valid kinds: {DATASET_KINDS}")));
                continue;
            }
            Some(k) if !known.contains(&k) => {
                diags.push(Diagnostic::new(
                    format!("{loc}.kind"),
                    format!("unknown dataset `{k}`; valid kinds: {DATASET_KINDS}"),
                ));
                continue;
            }
            _ => {}
        }
        match d.clone().try_into::<DatasetEntry>() {
            Ok(entry) => {
                if let Err(e) = entry.spec.validate() {
                    diags.push(Diagnostic::new(loc.clone(), e.to_string()));
                }
                if let Err(e) = entry.target() {
                    diags.push(Diagnostic::new(format!("{loc}.target"), e));
                }
            }
            Err(e) => diags.push(Diagnostic::new(loc, e.message().trim().to_string())),
        }
    }
}
