use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::parser::ValueSource;
use clap::ArgMatches;
use confplane::field::{read_cpg1, write_cpg1};
use confplane::ScalarGrid;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: &str = "confplane-report/1";

/// Bad input from the caller: malformed expression, unreadable file,
/// inconsistent options. Exit status 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Serialize)]
pub struct InputFile {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Default, Serialize)]
pub struct InputEcho {
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub expressions: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub files: Vec<InputFile>,
}

#[derive(Debug, Serialize)]
pub struct Stage {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct Timings {
    pub total_seconds: f64,
    pub stages: Vec<Stage>,
}

/// Collects inputs, output paths and stage timings while a command runs.
pub struct Context {
    pub input: InputEcho,
    pub outputs: Vec<PathBuf>,
    stages: Vec<Stage>,
    started: Instant,
}

impl Context {
    pub fn new() -> Self {
        Self {
            input: InputEcho::default(),
            outputs: Vec::new(),
            stages: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn expression(&mut self, role: &str, text: &str) -> anyhow::Result<confplane::Expr> {
        self.input.expressions.insert(role.into(), text.into());
        confplane::parse(text).map_err(|e| usage(format!("--{role}: {e}")))
    }

    /// Reads a CPG1 grid and records its digest.
    pub fn grid(&mut self, role: &str, path: &Path) -> anyhow::Result<ScalarGrid> {
        let bytes = std::fs::read(path)
            .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
        let digest = Sha256::digest(&bytes);
        self.input.files.push(InputFile {
            role: role.into(),
            path: path.to_path_buf(),
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
        });
        read_cpg1(bytes.as_slice()).map_err(|e| usage(format!("{}: {e}", path.display())))
    }

    pub fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.stages.push(Stage {
            name: name.into(),
            seconds: t.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn write_grid(&mut self, path: impl Into<PathBuf>, grid: &ScalarGrid) -> anyhow::Result<()> {
        let path = path.into();
        let file = std::fs::File::create(&path)?;
        write_cpg1(grid, std::io::BufWriter::new(file))?;
        self.outputs.push(path);
        Ok(())
    }

    pub fn write_text(&mut self, path: &Path, text: &str) -> anyhow::Result<()> {
        std::fs::write(path, text)?;
        self.outputs.push(path.to_path_buf());
        Ok(())
    }

    pub fn finish(self, command: &str, parameters: Value, sources: BTreeMap<String, String>, result: Value) -> Report {
        Report {
            schema: SCHEMA_VERSION,
            tool: "confplane",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            input: self.input,
            parameters,
            parameter_sources: sources,
            result,
            outputs: self.outputs,
            timings: Timings {
                total_seconds: self.started.elapsed().as_secs_f64(),
                stages: self.stages,
            },
        }
    }
}

/// Field order is fixed; `timings` comes last so that everything before it
/// is byte-identical between runs with the same inputs.
#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub input: InputEcho,
    pub parameters: Value,
    pub parameter_sources: BTreeMap<String, String>,
    pub result: Value,
    pub outputs: Vec<PathBuf>,
    pub timings: Timings,
}

/// Where each parameter of the innermost subcommand came from.
pub fn parameter_sources(matches: &ArgMatches) -> BTreeMap<String, String> {
    let mut m = matches;
    while let Some((_, sub)) = m.subcommand() {
        m = sub;
    }
    m.ids()
        // Argument groups (one per flattened struct) are named in CamelCase.
        .filter(|id| !id.as_str().starts_with(|c: char| c.is_ascii_uppercase()))
        .filter_map(|id| {
            let source = match m.value_source(id.as_str())? {
                ValueSource::CommandLine => "flag",
                ValueSource::EnvVariable => "env",
                ValueSource::DefaultValue => "default",
                _ => "other",
            };
            Some((id.as_str().replace('-', "_"), source.to_string()))
        })
        .collect()
}
