//! Coverage adapters: anything that turns a full assignment into the set of
//! code units it executes.
//!
//! Exec mode launches a command per assignment. The assignment goes to the
//! child's stdin as one JSON object `{name: token}`; the child prints
//! `{"total_units": N, "covered": [ids]}` and exits 0. A nonzero exit is an
//! execution failure, which is recorded rather than treated as an error.
//!
//! Replay mode reads a file with one JSON record per line,
//! `{"assignment": {...}, "total_units": N, "covered": [...]}`, which is also
//! the layout of an exported coverage matrix.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Duration;

use serde::Deserialize;
use wait_timeout::ChildExt;

use crate::model::{ParameterModel, TestCase};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunOutcome {
    Covered {
        total_units: usize,
        covered: BTreeSet<usize>,
    },
    Failed(String),
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AdapterError {
    #[error("adapter protocol violation for {assignment}: {message}")]
    Protocol { assignment: String, message: String },
    #[error("adapter timed out after {secs:.1}s on {assignment}")]
    Timeout { assignment: String, secs: f64 },
    #[error("replay file has no record for {0}")]
    MissingRecord(String),
    #[error("cannot launch adapter `{command}`: {message}")]
    Launch { command: String, message: String },
    #[error("replay file {path}, line {line}: {message}")]
    BadReplay { path: String, line: usize, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

pub trait CoverageAdapter: Sync {
    fn run(&self, model: &ParameterModel, case: &TestCase) -> Result<RunOutcome, AdapterError>;
}

/// Shape of the JSON object an exec adapter prints.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdapterResponse {
    total_units: usize,
    covered: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ExecAdapter {
    program: String,
    args: Vec<String>,
    timeout: Duration,
    cwd: Option<PathBuf>,
}

impl ExecAdapter {
    pub fn new(command: &[String], timeout: Duration) -> Result<Self, AdapterError> {
        let (program, args) = command.split_first().ok_or_else(|| AdapterError::Launch {
            command: String::new(),
            message: "empty command".into(),
        })?;
        Ok(ExecAdapter {
            program: program.clone(),
            args: args.to_vec(),
            timeout,
            cwd: None,
        })
    }

    /// Directory the command is launched from.
    pub fn current_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cwd = Some(dir.into());
        self
    }

    fn command_line(&self) -> String {
        std::iter::once(self.program.as_str())
            .chain(self.args.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl CoverageAdapter for ExecAdapter {
    fn run(&self, model: &ParameterModel, case: &TestCase) -> Result<RunOutcome, AdapterError> {
        let assignment = case.describe(model);
        let input = serde_json::Value::Object(case.to_map(model)).to_string();

        let mut cmd = Command::new(&self.program);
        if let Some(dir) = &self.cwd {
            cmd.current_dir(dir);
        }
        let mut child = cmd
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| AdapterError::Launch {
                command: self.command_line(),
                message: e.to_string(),
            })?;

        if let Some(mut stdin) = child.stdin.take() {
            // a child that exits without reading stdin closes the pipe early
            match stdin.write_all(input.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(AdapterError::Launch {
                        command: self.command_line(),
                        message: e.to_string(),
                    });
                }
                _ => {}
            }
        }

        let mut stdout = child.stdout.take().expect("piped stdout");
        let mut stderr = child.stderr.take().expect("piped stderr");
        let out_reader = std::thread::spawn(move || {
            let mut buf = String::new();
            let _ = stdout.read_to_string(&mut buf);
            buf
        });
        let err_reader = std::thread::spawn(move || {
            let mut buf = String::new();
            let _ = stderr.read_to_string(&mut buf);
            buf
        });

        let status = match child.wait_timeout(self.timeout) {
            Ok(Some(status)) => status,
            Ok(None) => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(AdapterError::Timeout {
                    assignment,
                    secs: self.timeout.as_secs_f64(),
                });
            }
            Err(e) => {
                return Err(AdapterError::Launch {
                    command: self.command_line(),
                    message: e.to_string(),
                })
            }
        };
        let stdout = out_reader.join().unwrap_or_default();
        let stderr = err_reader.join().unwrap_or_default();

        if !status.success() {
            let mut reason = match status.code() {
                Some(code) => format!("exit status {code}"),
                None => "terminated by signal".to_string(),
            };
            let tail = stderr.trim();
            if !tail.is_empty() {
                reason.push_str(": ");
                reason.push_str(tail.lines().last().unwrap_or(tail));
            }
            return Ok(RunOutcome::Failed(reason));
        }

        let resp: AdapterResponse = serde_json::from_str(stdout.trim()).map_err(|e| AdapterError::Protocol {
            assignment: assignment.clone(),
            message: format!("malformed response: {e}"),
        })?;
        outcome_from_parts(resp.total_units, resp.covered, &assignment)
    }
}

fn outcome_from_parts(total_units: usize, covered: Vec<usize>, assignment: &str) -> Result<RunOutcome, AdapterError> {
    if total_units == 0 {
        return Err(AdapterError::Protocol {
            assignment: assignment.to_string(),
            message: "total_units must be positive".into(),
        });
    }
    if let Some(bad) = covered.iter().find(|&&u| u >= total_units) {
        return Err(AdapterError::Protocol {
            assignment: assignment.to_string(),
            message: format!("unit {bad} outside [0, {total_units})"),
        });
    }
    Ok(RunOutcome::Covered {
        total_units,
        covered: covered.into_iter().collect(),
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReplayRecord {
    assignment: serde_json::Map<String, serde_json::Value>,
    #[serde(default)]
    status: Option<String>,
    #[serde(default)]
    reason: Option<String>,
    #[serde(default)]
    total_units: Option<usize>,
    #[serde(default)]
    covered: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ReplayAdapter {
    records: HashMap<TestCase, RunOutcome>,
}

impl ReplayAdapter {
    pub fn load(path: &Path, model: &ParameterModel) -> Result<Self, AdapterError> {
        let text = std::fs::read_to_string(path).map_err(|e| AdapterError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text, model, &path.display().to_string())
    }

    pub fn parse(text: &str, model: &ParameterModel, origin: &str) -> Result<Self, AdapterError> {
        let bad = |line: usize, message: String| AdapterError::BadReplay {
            path: origin.to_string(),
            line,
            message,
        };
        let mut records = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: ReplayRecord = serde_json::from_str(line).map_err(|e| bad(i + 1, e.to_string()))?;
            let case = model
                .case_from_map(&rec.assignment)
                .map_err(|e| bad(i + 1, e.to_string()))?;
            let outcome = match rec.status.as_deref() {
                None | Some("ok") => {
                    let total = rec
                        .total_units
                        .ok_or_else(|| bad(i + 1, "missing total_units".into()))?;
                    outcome_from_parts(total, rec.covered, &case.describe(model))
                        .map_err(|e| bad(i + 1, e.to_string()))?
                }
                Some("execution-failed") => RunOutcome::Failed(rec.reason.unwrap_or_else(|| "recorded failure".into())),
                Some(other) => return Err(bad(i + 1, format!("unknown status `{other}`"))),
            };
            records.insert(case, outcome);
        }
        Ok(ReplayAdapter { records })
    }
}

impl CoverageAdapter for ReplayAdapter {
    fn run(&self, model: &ParameterModel, case: &TestCase) -> Result<RunOutcome, AdapterError> {
        self.records
            .get(case)
            .cloned()
            .ok_or_else(|| AdapterError::MissingRecord(case.describe(model)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Parameter;

    fn m() -> ParameterModel {
        ParameterModel::new(vec![
            Parameter::new("A", &["on", "off"]),
            Parameter::new("B", &["on", "off"]),
        ])
        .unwrap()
    }

    #[test]
    fn replay_lookup_and_missing_record() {
        let m = m();
        let text = r#"{"assignment":{"A":"on","B":"off"},"total_units":5,"covered":[1,2,3]}

{"assignment":{"A":"off","B":"off"},"status":"execution-failed","reason":"boom"}
"#;
        let r = ReplayAdapter::parse(text, &m, "mem").unwrap();
        assert_eq!(
            r.run(&m, &TestCase(vec![0, 1])).unwrap(),
            RunOutcome::Covered {
                total_units: 5,
                covered: [1, 2, 3].into_iter().collect()
            }
        );
        assert_eq!(
            r.run(&m, &TestCase(vec![1, 1])).unwrap(),
            RunOutcome::Failed("boom".into())
        );
        let err = r.run(&m, &TestCase(vec![0, 0])).unwrap_err();
        assert_eq!(err, AdapterError::MissingRecord("A=on,B=on".into()));
    }

    #[test]
    fn replay_rejects_out_of_range_units() {
        let m = m();
        let text = r#"{"assignment":{"A":"on","B":"on"},"total_units":5,"covered":[5]}"#;
        assert!(matches!(
            ReplayAdapter::parse(text, &m, "mem"),
            Err(AdapterError::BadReplay { line: 1, .. })
        ));
    }

    #[test]
    fn empty_exec_command_is_rejected() {
        assert!(ExecAdapter::new(&[], DEFAULT_TIMEOUT).is_err());
    }
}
