//! Run outputs: data tables, plots, in-scenario assertions and the manifest.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use pilotwave::table::Table;
use serde::Serialize;

use crate::config::Scenario;
use crate::plot::LinePlot;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Run(pilotwave::Error),
    Io(PathBuf, std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Run(_) | CliError::Io(..) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Run(e) => write!(f, "run failed: {e}"),
            CliError::Io(p, e) => write!(f, "cannot write {}: {e}", p.display()),
        }
    }
}

impl From<pilotwave::Error> for CliError {
    fn from(e: pilotwave::Error) -> Self {
        CliError::Run(e)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub path: String,
    pub kind: &'static str,
    pub description: String,
}

/// Everything a scenario produces, accumulated while it runs.
#[derive(Debug)]
pub struct Report {
    out: PathBuf,
    pub artifacts: Vec<Artifact>,
    pub assertions: Vec<Assertion>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(out: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(out).map_err(|e| CliError::Io(out.to_path_buf(), e))?;
        Ok(Self {
            out: out.to_path_buf(),
            artifacts: Vec::new(),
            assertions: Vec::new(),
            warnings: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.out
    }

    fn write(
        &mut self,
        file: &str,
        kind: &'static str,
        description: &str,
        bytes: &[u8],
    ) -> Result<(), CliError> {
        let path = self.out.join(file);
        fs::write(&path, bytes).map_err(|e| CliError::Io(path, e))?;
        self.artifacts.push(Artifact {
            path: file.into(),
            kind,
            description: description.into(),
        });
        Ok(())
    }

    pub fn table(&mut self, file: &str, description: &str, t: &Table) -> Result<(), CliError> {
        let mut buf = Vec::new();
        t.write_to(&mut buf)
            .map_err(|e| CliError::Io(self.out.join(file), e))?;
        self.write(file, "data", description, &buf)
    }

    pub fn plot(&mut self, file: &str, p: &LinePlot) -> Result<(), CliError> {
        self.write(file, "plot", &p.title.clone(), p.to_svg().as_bytes())
    }

    pub fn text(&mut self, file: &str, description: &str, bytes: &[u8]) -> Result<(), CliError> {
        self.write(file, "data", description, bytes)
    }

    /// Free-form output that may differ between runs, such as timings.
    pub fn log(&mut self, file: &str, description: &str, bytes: &[u8]) -> Result<(), CliError> {
        self.write(file, "log", description, bytes)
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.assertions.push(Assertion {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    pub fn failed(&self) -> Vec<&Assertion> {
        self.assertions.iter().filter(|a| !a.passed).collect()
    }
}

#[derive(Serialize)]
struct RunInfo<'a> {
    scenario: &'a str,
    module: &'a str,
    seed: u64,
    jobs: usize,
    strict: bool,
    status: &'a str,
    started_unix: u64,
    wall_seconds: f64,
    budget_seconds: f64,
    config_source: &'a str,
}

#[derive(Serialize)]
struct Versions {
    pilotwave_cli: &'static str,
    pilotwave: &'static str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    run: RunInfo<'a>,
    versions: Versions,
    warnings: &'a [String],
    assertion: &'a [Assertion],
    artifact: &'a [Artifact],
    config: &'a Scenario,
}

pub struct RunMeta<'a> {
    pub source: &'a str,
    pub jobs: usize,
    pub strict: bool,
    pub status: &'a str,
    pub started_unix: u64,
    pub wall_seconds: f64,
}

/// Writes `manifest.toml`: run metadata, versions, assertions, artifacts and the
/// resolved configuration with every default filled in.
pub fn write_manifest(
    report: &Report,
    scenario: &Scenario,
    meta: &RunMeta,
) -> Result<PathBuf, CliError> {
    let m = Manifest {
        run: RunInfo {
            scenario: &scenario.scenario.name,
            module: scenario.scenario.module.name(),
            seed: scenario.scenario.seed,
            jobs: meta.jobs,
            strict: meta.strict,
            status: meta.status,
            started_unix: meta.started_unix,
            wall_seconds: meta.wall_seconds,
            budget_seconds: scenario.scenario.budget_seconds,
            config_source: meta.source,
        },
        versions: Versions {
            pilotwave_cli: env!("CARGO_PKG_VERSION"),
            pilotwave: pilotwave::VERSION,
        },
        warnings: &report.warnings,
        assertion: &report.assertions,
        artifact: &report.artifacts,
        config: scenario,
    };
    let text = toml::to_string(&m)
        .map_err(|e| CliError::Config(format!("cannot serialize manifest: {e}")))?;
    let path = report.dir().join("manifest.toml");
    fs::write(&path, text).map_err(|e| CliError::Io(path.clone(), e))?;
    Ok(path)
}
