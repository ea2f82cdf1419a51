//! Scenario files: parsing, required-field checks and value validation.
//!
//! A scenario is a TOML document with a `[scenario]` header and one section named
//! after the module it runs. Every field of a module section has a default; the
//! resolved values are echoed into the run manifest.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::experiments::{
    bernoulli::BernoulliConfig, functional::FunctionalConfig, kinetic::KineticConfig,
    relax::RelaxConfig, suite::SuiteConfig, trajectory::TrajectoryConfig,
    typicality::TypicalityConfig,
};

/// Scenarios shipped with the binary, addressable by name instead of by path.
pub const BUNDLED: &[(&str, &str)] = &[
    (
        "relax_2mode_box",
        include_str!("../scenarios/relax_2mode_box.toml"),
    ),
    (
        "bernoulli_decay",
        include_str!("../scenarios/bernoulli_decay.toml"),
    ),
    (
        "typicality_chebyshev",
        include_str!("../scenarios/typicality_chebyshev.toml"),
    ),
    (
        "functional_discrimination",
        include_str!("../scenarios/functional_discrimination.toml"),
    ),
    (
        "kinetic_fokker_planck",
        include_str!("../scenarios/kinetic_fokker_planck.toml"),
    ),
    (
        "kinetic_master",
        include_str!("../scenarios/kinetic_master.toml"),
    ),
    (
        "trajectory_gaussian",
        include_str!("../scenarios/trajectory_gaussian.toml"),
    ),
    ("suite", include_str!("../scenarios/suite.toml")),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Module {
    Relax,
    Typicality,
    Functional,
    Kinetic,
    Bernoulli,
    Trajectory,
    Suite,
}

impl Module {
    pub fn name(self) -> &'static str {
        match self {
            Module::Relax => "relax",
            Module::Typicality => "typicality",
            Module::Functional => "functional",
            Module::Kinetic => "kinetic",
            Module::Bernoulli => "bernoulli",
            Module::Trajectory => "trajectory",
            Module::Suite => "suite",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        <Self as clap::ValueEnum>::from_str(s, false).ok()
    }

    /// Bundled scenario used when a subcommand is given without `--config`.
    pub fn default_scenario(self) -> &'static str {
        match self {
            Module::Relax => "relax_2mode_box",
            Module::Typicality => "typicality_chebyshev",
            Module::Functional => "functional_discrimination",
            Module::Kinetic => "kinetic_fokker_planck",
            Module::Bernoulli => "bernoulli_decay",
            Module::Trajectory => "trajectory_gaussian",
            Module::Suite => "suite",
        }
    }
}

fn default_budget() -> f64 {
    60.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub name: String,
    pub module: Module,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub seed: u64,
    /// Wall-clock budget in seconds; overruns are reported as warnings.
    #[serde(default = "default_budget")]
    pub budget_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub scenario: Header,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relax: Option<RelaxConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub typicality: Option<TypicalityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional: Option<FunctionalConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kinetic: Option<KineticConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bernoulli: Option<BernoulliConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<TrajectoryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<SuiteConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config {}: {}", self.source, self.message)
    }
}

/// One rejected value, located by its dotted field path.
#[derive(Debug, Clone, PartialEq)]
pub struct Invalid {
    pub field: String,
    pub reason: String,
}

impl Invalid {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// Collects value checks for one section.
pub struct Checker<'a> {
    section: &'a str,
    pub found: Vec<Invalid>,
}

impl<'a> Checker<'a> {
    pub fn new(section: &'a str) -> Self {
        Self {
            section,
            found: Vec::new(),
        }
    }

    pub fn require(&mut self, ok: bool, field: &str, reason: &str) {
        if !ok {
            self.found
                .push(Invalid::new(format!("{}.{field}", self.section), reason));
        }
    }

    pub fn positive(&mut self, field: &str, v: f64) {
        self.require(
            v > 0.0 && v.is_finite(),
            field,
            "must be a positive finite number",
        );
    }

    pub fn at_least(&mut self, field: &str, v: usize, min: usize) {
        self.require(v >= min, field, &format!("must be at least {min}"));
    }
}

/// Reads a scenario from a path or, failing that, from the bundled set by name.
pub fn load(spec: &str) -> Result<(Scenario, String), ConfigError> {
    let path = Path::new(spec);
    let (text, source) = if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            source: spec.into(),
            message: e.to_string(),
        })?;
        (text, path.display().to_string())
    } else if let Some((name, text)) = BUNDLED.iter().find(|(n, _)| *n == spec) {
        (text.to_string(), format!("bundled:{name}"))
    } else {
        let names: Vec<&str> = BUNDLED.iter().map(|(n, _)| *n).collect();
        return Err(ConfigError {
            source: spec.into(),
            message: format!(
                "no such file, and not a bundled scenario ({})",
                names.join(", ")
            ),
        });
    };
    let scenario = parse(&text).map_err(|message| ConfigError {
        source: source.clone(),
        message,
    })?;
    Ok((scenario, text))
}

/// Parses and validates scenario text.
pub fn parse(text: &str) -> Result<Scenario, String> {
    let tree: toml::Table = text.parse().map_err(|e: toml::de::Error| e.to_string())?;
    let missing = missing_fields(&tree);
    if !missing.is_empty() {
        return Err(format!("missing required fields: {}", missing.join(", ")));
    }
    let mut s: Scenario = toml::from_str(text).map_err(|e| e.to_string())?;
    let module = s.scenario.module;
    if module == Module::Suite && s.suite.is_none() {
        s.suite = Some(SuiteConfig::default());
    }
    let mut bad = Vec::new();
    if s.scenario.name.trim().is_empty() {
        bad.push(Invalid::new("scenario.name", "must not be empty"));
    }
    if !(s.scenario.budget_seconds > 0.0) {
        bad.push(Invalid::new("scenario.budget_seconds", "must be positive"));
    }
    let present = [
        ("relax", s.relax.is_some()),
        ("typicality", s.typicality.is_some()),
        ("functional", s.functional.is_some()),
        ("kinetic", s.kinetic.is_some()),
        ("bernoulli", s.bernoulli.is_some()),
        ("trajectory", s.trajectory.is_some()),
    ];
    for (name, there) in present {
        if there && name != module.name() {
            bad.push(Invalid::new(
                name,
                format!("section does not belong to a `{}` scenario", module.name()),
            ));
        }
    }
    bad.extend(
        match module {
            Module::Relax => s.relax.as_ref().map(RelaxConfig::validate),
            Module::Typicality => s.typicality.as_ref().map(TypicalityConfig::validate),
            Module::Functional => s.functional.as_ref().map(FunctionalConfig::validate),
            Module::Kinetic => s.kinetic.as_ref().map(KineticConfig::validate),
            Module::Bernoulli => s.bernoulli.as_ref().map(BernoulliConfig::validate),
            Module::Trajectory => s.trajectory.as_ref().map(TrajectoryConfig::validate),
            Module::Suite => s.suite.as_ref().map(SuiteConfig::validate),
        }
        .unwrap_or_default(),
    );
    if bad.is_empty() {
        return Ok(s);
    }
    let lines: Vec<String> = bad
        .iter()
        .map(|b| match locate(text, &b.field) {
            Some(line) => format!("field `{}` (line {line}): {}", b.field, b.reason),
            None => format!("field `{}`: {}", b.field, b.reason),
        })
        .collect();
    Err(lines.join("; "))
}

fn missing_fields(tree: &toml::Table) -> Vec<String> {
    let mut missing = Vec::new();
    let header = tree.get("scenario").and_then(|v| v.as_table());
    for key in ["name", "module"] {
        if header.and_then(|h| h.get(key)).is_none() {
            missing.push(format!("scenario.{key}"));
        }
    }
    let module = header
        .and_then(|h| h.get("module"))
        .and_then(|v| v.as_str())
        .and_then(Module::parse);
    if let Some(m) = module {
        if m != Module::Suite && !tree.contains_key(m.name()) {
            missing.push(format!("[{}] section", m.name()));
        }
    }
    missing
}

/// 1-based line of `section.key` (or of the `[section]` header) in the source text.
pub fn locate(text: &str, field: &str) -> Option<usize> {
    let (section, key) = match field.rsplit_once('.') {
        Some((s, k)) => (s, Some(k)),
        None => (field, None),
    };
    let mut current = String::new();
    let mut header_line = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name
                .trim_matches(|c| c == '[' || c == ']')
                .trim()
                .to_string();
            if current == section {
                header_line.get_or_insert(i + 1);
            }
            continue;
        }
        if current != section {
            continue;
        }
        if let (Some(key), Some((lhs, _))) = (key, line.split_once('=')) {
            if lhs.trim() == key {
                return Some(i + 1);
            }
        }
    }
    header_line
}
