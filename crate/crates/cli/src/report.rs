use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind, SCHEMA_VERSION};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskStatus {
    Pass,
    Fail,
    Error,
}

/// A named assertion with its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub name: String,
    pub status: TaskStatus,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
    pub result: serde_json::Value,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// A file produced by a run, relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

/// Builder for one task's report and artifacts.
#[derive(Debug)]
pub struct Task {
    pub report: TaskReport,
    pub artifacts: Vec<Artifact>,
}

impl Task {
    pub fn new(name: impl Into<String>) -> Self {
        Task {
            report: TaskReport {
                name: name.into(),
                status: TaskStatus::Pass,
                checks: Vec::new(),
                result: serde_json::Value::Null,
                artifacts: Vec::new(),
                error: None,
            },
            artifacts: Vec::new(),
        }
    }

    /// Run `body`, turning an error into an `error` status instead of aborting.
    pub fn guarded(name: impl Into<String>, body: impl FnOnce(&mut Task) -> Result<()>) -> Self {
        let mut t = Task::new(name);
        if let Err(e) = body(&mut t) {
            t.report.error = Some(e.to_string());
        }
        t.finish()
    }

    pub fn check(
        &mut self,
        name: impl Into<String>,
        passed: bool,
        detail: impl Into<String>,
    ) -> bool {
        self.report.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
        passed
    }

    pub fn artifact(&mut self, name: impl Into<String>, contents: String) {
        let name = name.into();
        self.report.artifacts.push(name.clone());
        self.artifacts.push(Artifact { name, contents });
    }

    pub fn result(&mut self, value: impl Serialize) {
        self.report.result = serde_json::to_value(value).expect("serializable result");
    }

    fn finish(mut self) -> Self {
        self.report.status = if self.report.error.is_some() {
            TaskStatus::Error
        } else if self.report.checks.iter().any(|c| !c.passed) {
            TaskStatus::Fail
        } else {
            TaskStatus::Pass
        };
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub schema_version: u32,
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    pub tasks: Vec<TaskReport>,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}

impl RunReport {
    pub fn new(config: &ExperimentConfig, tasks: Vec<TaskReport>) -> Self {
        let passed = tasks.iter().all(|t| t.status == TaskStatus::Pass);
        RunReport {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            schema_version: SCHEMA_VERSION,
            kind: config.kind,
            config: config.clone(),
            tasks,
            passed,
            wall_time_ms: None,
        }
    }

    pub fn checks(&self) -> impl Iterator<Item = (&TaskReport, &Check)> {
        self.tasks
            .iter()
            .flat_map(|t| t.checks.iter().map(move |c| (t, c)))
    }

    /// 0 when everything passed, 2 when an assertion failed, 1 when a task errored.
    pub fn exit_code(&self) -> i32 {
        if self.tasks.iter().any(|t| t.status == TaskStatus::Error) {
            1
        } else if self.tasks.iter().any(|t| t.status == TaskStatus::Fail) {
            2
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report values are finite");
        s.push('\n');
        s
    }
}

/// Report plus the files a run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub artifacts: Vec<Artifact>,
}

impl RunOutput {
    /// Write every artifact and `report.json` into `dir`, each file atomically.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let io = |source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(io)?;
        for a in &self.artifacts {
            write_atomic(dir, &a.name, &a.contents)?;
        }
        write_atomic(dir, "report.json", &self.report.to_json())
    }
}

fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    let io = |source| CliError::Io {
        path: path.clone(),
        source,
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(&path).map_err(|e| io(e.error))?;
    Ok(())
}
