use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde_json::{json, Value};

use crate::model::{ParameterModel, TestCase};

use super::adapter::{AdapterError, CoverageAdapter, RunOutcome};
use super::{ExperimentPlan, ImpactError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageRecord {
    pub covered: BTreeSet<usize>,
    pub status: RunStatus,
}

impl CoverageRecord {
    pub fn is_ok(&self) -> bool {
        self.status == RunStatus::Ok
    }
}

/// Coverage per executed assignment. All successful records share one
/// `total_units`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageMatrix {
    total_units: Option<usize>,
    entries: BTreeMap<TestCase, CoverageRecord>,
}

impl CoverageMatrix {
    pub fn new() -> Self {
        CoverageMatrix {
            total_units: None,
            entries: BTreeMap::new(),
        }
    }

    /// Adds a successful run. Fails if the unit count disagrees with earlier
    /// records or a unit id is out of range.
    pub fn insert_covered(
        &mut self,
        case: TestCase,
        total_units: usize,
        covered: BTreeSet<usize>,
    ) -> Result<(), String> {
        if total_units == 0 {
            return Err("total_units must be positive".into());
        }
        if let Some(t) = self.total_units {
            if t != total_units {
                return Err(format!("total_units {total_units} differs from earlier runs ({t})"));
            }
        }
        if let Some(bad) = covered.iter().find(|&&u| u >= total_units) {
            return Err(format!("unit {bad} outside [0, {total_units})"));
        }
        self.total_units = Some(total_units);
        self.entries.insert(
            case,
            CoverageRecord {
                covered,
                status: RunStatus::Ok,
            },
        );
        Ok(())
    }

    pub fn insert_failed(&mut self, case: TestCase, reason: impl Into<String>) {
        self.entries.insert(
            case,
            CoverageRecord {
                covered: BTreeSet::new(),
                status: RunStatus::Failed(reason.into()),
            },
        );
    }

    pub fn total_units(&self) -> Option<usize> {
        self.total_units
    }

    pub fn get(&self, case: &TestCase) -> Option<&CoverageRecord> {
        self.entries.get(case)
    }

    /// Covered fraction for a successful run.
    pub fn fraction(&self, case: &TestCase) -> Option<f64> {
        let rec = self.entries.get(case)?;
        let total = self.total_units?;
        rec.is_ok().then(|| rec.covered.len() as f64 / total as f64)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&TestCase, &CoverageRecord)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn failed_count(&self) -> usize {
        self.entries.values().filter(|r| !r.is_ok()).count()
    }

    /// JSON lines sorted by assignment value indices. Successful records use
    /// the replay layout, so an export can be fed back as a replay file.
    pub fn to_jsonl(&self, model: &ParameterModel) -> String {
        let mut out = String::new();
        for (case, rec) in &self.entries {
            let line = match &rec.status {
                RunStatus::Ok => json!({
                    "assignment": Value::Object(case.to_map(model)),
                    "total_units": self.total_units,
                    "covered": rec.covered.iter().collect::<Vec<_>>(),
                }),
                RunStatus::Failed(reason) => json!({
                    "assignment": Value::Object(case.to_map(model)),
                    "status": "execution-failed",
                    "reason": reason,
                }),
            };
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }
}

impl Default for CoverageMatrix {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExecOptions {
    pub workers: usize,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions { workers: 1 }
    }
}

/// Runs every distinct planned assignment once. Up to `workers` adapter
/// calls are in flight at a time; the first adapter error (in plan order)
/// aborts the run.
pub fn execute(
    model: &ParameterModel,
    plan: &ExperimentPlan,
    adapter: &dyn CoverageAdapter,
    options: ExecOptions,
) -> Result<CoverageMatrix, ImpactError> {
    if plan.unique.is_empty() {
        return Err(ImpactError::EmptyPlan);
    }
    let cases = &plan.unique;
    let results: Mutex<Vec<Option<Result<RunOutcome, AdapterError>>>> =
        Mutex::new((0..cases.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = options.workers.clamp(1, cases.len());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= cases.len() {
                    break;
                }
                let res = adapter.run(model, &cases[i]);
                let stop = res.is_err();
                results.lock().expect("result lock")[i] = Some(res);
                if stop {
                    // skip the rest of the queue
                    next.store(cases.len(), Ordering::SeqCst);
                }
            });
        }
    });

    let results = results.into_inner().expect("result lock");
    let mut matrix = CoverageMatrix::new();
    for (case, res) in cases.iter().zip(results) {
        match res {
            // left unrun after an earlier abort
            None => continue,
            Some(Err(e)) => return Err(ImpactError::Adapter(e)),
            Some(Ok(RunOutcome::Failed(reason))) => {
                log::warn!("execution failed for {}: {reason}", case.describe(model));
                matrix.insert_failed(case.clone(), reason);
            }
            Some(Ok(RunOutcome::Covered { total_units, covered })) => matrix
                .insert_covered(case.clone(), total_units, covered)
                .map_err(|message| {
                    ImpactError::Adapter(AdapterError::Protocol {
                        assignment: case.describe(model),
                        message,
                    })
                })?,
        }
    }
    Ok(matrix)
}
