//! Fault-detection evaluation against simulated programs.
//!
//! Mutants are kill predicates over a test's assignment and coverage. A
//! mutant is killed by a suite when at least one case satisfies its
//! predicate. Mutation score is killed / total; efficiency is killed per
//! test case.

mod expr;
mod fixture;

pub use expr::{parse_guard, CmpOp, Expr, ExprError, GuardContext};
pub use fixture::{Block, BlockEntry, FaultModel, Fixture, FixtureDocument, Mutant, MutantEntry, SimulatedSut};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::model::{ModelError, TestCase, TestSuite};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EvalError {
    #[error(transparent)]
    Guard(#[from] ExprError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid fixture: {0}")]
    Fixture(String),
    #[error("suite `{suite}` row {row} does not match the fixture model")]
    ModelMismatch { suite: String, row: usize },
    #[error("efficiency is undefined for the empty suite `{0}`")]
    EmptySuite(String),
    #[error("reports `{0}` and `{1}` were produced with different fault models")]
    FaultModelMismatch(String, String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionLog {
    pub entries: Vec<(TestCase, BTreeSet<usize>)>,
}

pub fn run_suite(suite: &TestSuite, sut: &SimulatedSut) -> Result<ExecutionLog, EvalError> {
    let entries = suite
        .cases
        .iter()
        .enumerate()
        .map(|(row, case)| {
            if !sut.accepts(case) {
                return Err(EvalError::ModelMismatch {
                    suite: suite.label.clone(),
                    row: row + 1,
                });
            }
            Ok((case.clone(), sut.coverage(case)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ExecutionLog { entries })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KindTally {
    pub killed: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub label: String,
    pub suite_size: usize,
    pub mutants_total: usize,
    pub killed: usize,
    pub score: f64,
    /// `None` for an empty suite.
    pub efficiency: Option<f64>,
    pub mutant_ids: Vec<String>,
    /// One character per mutant in `mutant_ids` order: `1` killed, `0` alive.
    pub kill_bitmap: String,
    pub by_kind: BTreeMap<String, KindTally>,
}

impl EvaluationReport {
    pub fn killed_ids(&self) -> impl Iterator<Item = &str> {
        self.mutant_ids
            .iter()
            .zip(self.kill_bitmap.chars())
            .filter(|(_, b)| *b == '1')
            .map(|(id, _)| id.as_str())
    }

    pub fn is_killed(&self, index: usize) -> bool {
        self.kill_bitmap.as_bytes().get(index) == Some(&b'1')
    }
}

pub fn mutation_score(
    suite: &TestSuite,
    faults: &FaultModel,
    sut: &SimulatedSut,
) -> Result<EvaluationReport, EvalError> {
    let log = run_suite(suite, sut)?;
    let kills: Vec<bool> = faults
        .mutants
        .iter()
        .map(|m| log.entries.iter().any(|(case, cov)| m.kill.eval(case, Some(cov))))
        .collect();
    let killed = kills.iter().filter(|&&k| k).count();
    let total = faults.len();
    let mut by_kind: BTreeMap<String, KindTally> = BTreeMap::new();
    for (m, &k) in faults.mutants.iter().zip(&kills) {
        let t = by_kind
            .entry(m.kind.clone())
            .or_insert(KindTally { killed: 0, total: 0 });
        t.total += 1;
        t.killed += usize::from(k);
    }
    Ok(EvaluationReport {
        label: suite.label.clone(),
        suite_size: suite.len(),
        mutants_total: total,
        killed,
        score: if total == 0 { 0.0 } else { killed as f64 / total as f64 },
        efficiency: (!suite.is_empty()).then(|| killed as f64 / suite.len() as f64),
        mutant_ids: faults.ids(),
        kill_bitmap: kills.iter().map(|&k| if k { '1' } else { '0' }).collect(),
        by_kind,
    })
}

/// Killed mutants per test case.
pub fn efficiency(report: &EvaluationReport) -> Result<f64, EvalError> {
    if report.suite_size == 0 {
        return Err(EvalError::EmptySuite(report.label.clone()));
    }
    Ok(report.killed as f64 / report.suite_size as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub baseline: String,
    pub candidate: String,
    pub baseline_killed: usize,
    pub candidate_killed: usize,
    pub delta_killed: i64,
    /// Killed by the candidate but not the baseline.
    pub newly_killed: Vec<String>,
    /// Killed by the baseline but not the candidate.
    pub lost: Vec<String>,
    pub baseline_efficiency: Option<f64>,
    pub candidate_efficiency: Option<f64>,
    /// `(eff_candidate − eff_baseline) / eff_baseline`; `None` when the
    /// baseline efficiency is zero or undefined.
    pub relative_efficiency_change: Option<f64>,
}

pub fn compare(baseline: &EvaluationReport, candidate: &EvaluationReport) -> Result<Comparison, EvalError> {
    if baseline.mutant_ids != candidate.mutant_ids {
        return Err(EvalError::FaultModelMismatch(
            baseline.label.clone(),
            candidate.label.clone(),
        ));
    }
    let mut newly_killed = Vec::new();
    let mut lost = Vec::new();
    for (i, id) in baseline.mutant_ids.iter().enumerate() {
        match (baseline.is_killed(i), candidate.is_killed(i)) {
            (false, true) => newly_killed.push(id.clone()),
            (true, false) => lost.push(id.clone()),
            _ => {}
        }
    }
    let relative = match (baseline.efficiency, candidate.efficiency) {
        (Some(b), Some(c)) if b > 0.0 => Some((c - b) / b),
        _ => None,
    };
    Ok(Comparison {
        baseline: baseline.label.clone(),
        candidate: candidate.label.clone(),
        baseline_killed: baseline.killed,
        candidate_killed: candidate.killed,
        delta_killed: candidate.killed as i64 - baseline.killed as i64,
        newly_killed,
        lost,
        baseline_efficiency: baseline.efficiency,
        candidate_efficiency: candidate.efficiency,
        relative_efficiency_change: relative,
    })
}

/// Plain-text score/efficiency table.
pub fn render_evaluation(reports: &[EvaluationReport], comparison: Option<&Comparison>) -> String {
    let width = reports.iter().map(|r| r.label.len()).max().unwrap_or(5).max(5);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>5}  {:>13}  {:>6}  {:>10}",
        "suite", "size", "killed/total", "score", "efficiency"
    );
    for r in reports {
        let eff = r.efficiency.map_or("n/a".to_string(), |e| format!("{e:.2}"));
        let _ = writeln!(
            out,
            "{:<width$}  {:>5}  {:>13}  {:>5.1}%  {:>10}",
            r.label,
            r.suite_size,
            format!("{}/{}", r.killed, r.mutants_total),
            r.score * 100.0,
            eff
        );
    }
    if let Some(c) = comparison {
        out.push('\n');
        let _ = writeln!(
            out,
            "killed: {} -> {} ({:+})",
            c.baseline_killed, c.candidate_killed, c.delta_killed
        );
        match (
            c.baseline_efficiency,
            c.candidate_efficiency,
            c.relative_efficiency_change,
        ) {
            (Some(b), Some(a), Some(rel)) => {
                let _ = writeln!(
                    out,
                    "relative efficiency change: ({a:.2} - {b:.2}) / {b:.2} = {:+.1}%",
                    rel * 100.0
                );
            }
            _ => {
                let _ = writeln!(out, "relative efficiency change: n/a");
            }
        }
        let list = |ids: &[String]| {
            if ids.is_empty() {
                "none".to_string()
            } else {
                ids.join(", ")
            }
        };
        let _ = writeln!(out, "newly killed by {}: {}", c.candidate, list(&c.newly_killed));
        let _ = writeln!(out, "killed only by {}: {}", c.baseline, list(&c.lost));
    }
    out
}
