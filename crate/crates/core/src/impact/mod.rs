//! Coverage-impact analysis.
//!
//! The impact of a parameter is the spread between the best and worst
//! coverage observed while only that parameter (or pair) changes:
//! `I_p = C_p^max − C_p^min`. By default the spread is taken within each
//! constant profile and the largest per-profile spread wins; `Global` mode
//! takes one spread over every run of the parameter instead.
//!
//! Spreads are computed on integer unit counts and divided by `total_units`
//! once, so e.g. 15/100 vs 3/100 yields exactly `0.12`.

mod adapter;
mod matrix;
mod plan;
mod sensitivity;

pub use adapter::{AdapterError, CoverageAdapter, ExecAdapter, ReplayAdapter, RunOutcome, DEFAULT_TIMEOUT};
pub use matrix::{execute, CoverageMatrix, CoverageRecord, ExecOptions, RunStatus};
pub use plan::{plan_experiments, profiles, ConstantProfile, ExperimentPlan, PairRun, SingleRun, DEFAULT_PROFILES};
pub use sensitivity::{sensitivity_report, ParameterSensitivity, SensitivityReport};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{ParameterModel, TestCase};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ImpactError {
    #[error("profile count must be at least 1, got {0}")]
    BadProfileCount(usize),
    #[error("experiment plan is empty")]
    EmptyPlan,
    #[error(transparent)]
    Adapter(#[from] AdapterError),
    #[error("coverage matrix has no run for {0}")]
    MissingRun(String),
    #[error("no successful runs for {0}")]
    NoUsableRuns(String),
    #[error("parameter index {0} out of range")]
    BadIndex(usize),
    #[error("malformed impact document: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImpactMode {
    /// Spread within each constant profile, maximum over profiles.
    #[default]
    Profile,
    /// One spread over all runs regardless of profile.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subject {
    Single(usize),
    /// Always stored with the lower index first.
    Pair(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Impact {
    pub subject: Subject,
    pub value: f64,
}

pub fn impact_single(
    model: &ParameterModel,
    matrix: &CoverageMatrix,
    plan: &ExperimentPlan,
    p: usize,
    mode: ImpactMode,
) -> Result<Impact, ImpactError> {
    if p >= model.len() {
        return Err(ImpactError::BadIndex(p));
    }
    let runs: Vec<(usize, &TestCase)> = plan.singles_for(p).map(|r| (r.profile, &r.case)).collect();
    let value = spread(model, matrix, &runs, mode, &model.parameter(p).name)?;
    Ok(Impact {
        subject: Subject::Single(p),
        value,
    })
}

pub fn impact_pair(
    model: &ParameterModel,
    matrix: &CoverageMatrix,
    plan: &ExperimentPlan,
    p: usize,
    q: usize,
    mode: ImpactMode,
) -> Result<Impact, ImpactError> {
    if p >= model.len() || q >= model.len() || p == q {
        return Err(ImpactError::BadIndex(p.max(q)));
    }
    let (lo, hi) = (p.min(q), p.max(q));
    let runs: Vec<(usize, &TestCase)> = plan.pairs_for(lo, hi).map(|r| (r.profile, &r.case)).collect();
    let label = format!("{}×{}", model.parameter(lo).name, model.parameter(hi).name);
    let value = spread(model, matrix, &runs, mode, &label)?;
    Ok(Impact {
        subject: Subject::Pair(lo, hi),
        value,
    })
}

/// Max − min covered-unit count, grouped by profile unless `Global`.
/// Failed runs are skipped with a warning.
fn spread(
    model: &ParameterModel,
    matrix: &CoverageMatrix,
    runs: &[(usize, &TestCase)],
    mode: ImpactMode,
    subject: &str,
) -> Result<f64, ImpactError> {
    let mut groups: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for &(profile, case) in runs {
        let rec = matrix
            .get(case)
            .ok_or_else(|| ImpactError::MissingRun(case.describe(model)))?;
        if !rec.is_ok() {
            log::warn!(
                "{subject}: ignoring failed run {} in impact computation",
                case.describe(model)
            );
            continue;
        }
        let key = match mode {
            ImpactMode::Profile => profile,
            ImpactMode::Global => 0,
        };
        let n = rec.covered.len();
        let e = groups.entry(key).or_insert((n, n));
        e.0 = e.0.min(n);
        e.1 = e.1.max(n);
    }
    let widest = groups
        .values()
        .map(|(lo, hi)| hi - lo)
        .max()
        .ok_or_else(|| ImpactError::NoUsableRuns(subject.to_string()))?;
    let total = matrix
        .total_units()
        .ok_or_else(|| ImpactError::NoUsableRuns(subject.to_string()))?;
    Ok(widest as f64 / total as f64)
}

/// Every single and pairwise impact for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpactTable {
    pub mode: ImpactMode,
    pub singles: Vec<f64>,
    /// Keyed by `(p, q)` with `p < q`.
    pub pairs: BTreeMap<(usize, usize), f64>,
}

impl ImpactTable {
    pub fn single(&self, p: usize) -> f64 {
        self.singles[p]
    }

    pub fn pair(&self, p: usize, q: usize) -> Option<f64> {
        self.pairs.get(&(p.min(q), p.max(q))).copied()
    }

    pub fn to_document(&self, model: &ParameterModel) -> ImpactDocument {
        ImpactDocument {
            mode: self.mode,
            singles: self
                .singles
                .iter()
                .enumerate()
                .map(|(p, &impact)| SingleEntry {
                    parameter: model.parameter(p).name.clone(),
                    impact,
                })
                .collect(),
            pairs: self
                .pairs
                .iter()
                .map(|(&(p, q), &impact)| PairEntry {
                    parameters: [model.parameter(p).name.clone(), model.parameter(q).name.clone()],
                    impact,
                })
                .collect(),
        }
    }

    pub fn from_document(model: &ParameterModel, doc: &ImpactDocument) -> Result<Self, ImpactError> {
        let idx = |name: &str| {
            model
                .index_of(name)
                .ok_or_else(|| ImpactError::Malformed(format!("unknown parameter `{name}`")))
        };
        let mut singles = vec![None; model.len()];
        for e in &doc.singles {
            singles[idx(&e.parameter)?] = Some(e.impact);
        }
        let singles = singles
            .into_iter()
            .enumerate()
            .map(|(p, v)| {
                v.ok_or_else(|| ImpactError::Malformed(format!("missing impact for `{}`", model.parameter(p).name)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut pairs = BTreeMap::new();
        for e in &doc.pairs {
            let (p, q) = (idx(&e.parameters[0])?, idx(&e.parameters[1])?);
            if p == q {
                return Err(ImpactError::Malformed(format!("pair ({0}, {0})", e.parameters[0])));
            }
            pairs.insert((p.min(q), p.max(q)), e.impact);
        }
        for v in singles.iter().chain(pairs.values()) {
            if !(0.0..=1.0).contains(v) {
                return Err(ImpactError::Malformed(format!("impact {v} outside [0, 1]")));
            }
        }
        Ok(ImpactTable {
            mode: doc.mode,
            singles,
            pairs,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleEntry {
    pub parameter: String,
    pub impact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    pub parameters: [String; 2],
    pub impact: f64,
}

/// `impacts.json` layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactDocument {
    pub mode: ImpactMode,
    pub singles: Vec<SingleEntry>,
    pub pairs: Vec<PairEntry>,
}

pub fn compute_impacts(
    model: &ParameterModel,
    matrix: &CoverageMatrix,
    plan: &ExperimentPlan,
    mode: ImpactMode,
) -> Result<ImpactTable, ImpactError> {
    let k = model.len();
    let singles = (0..k)
        .map(|p| impact_single(model, matrix, plan, p, mode).map(|i| i.value))
        .collect::<Result<Vec<_>, _>>()?;
    let mut pairs = BTreeMap::new();
    for p in 0..k {
        for q in p + 1..k {
            pairs.insert((p, q), impact_pair(model, matrix, plan, p, q, mode)?.value);
        }
    }
    Ok(ImpactTable { mode, singles, pairs })
}
