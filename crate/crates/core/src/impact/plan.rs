use std::collections::HashSet;

use crate::model::{ParameterModel, TestCase};

use super::ImpactError;

pub const DEFAULT_PROFILES: usize = 2;

/// Background values for every parameter that is not being swept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstantProfile {
    pub id: usize,
    pub values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingleRun {
    pub param: usize,
    pub value: usize,
    pub profile: usize,
    pub case: TestCase,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairRun {
    pub params: (usize, usize),
    pub values: (usize, usize),
    pub profile: usize,
    pub case: TestCase,
}

/// One-factor sweeps and two-factor grids against each constant profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentPlan {
    pub profiles: Vec<ConstantProfile>,
    pub singles: Vec<SingleRun>,
    pub pairs: Vec<PairRun>,
    /// Distinct assignments in first-seen order (singles before pairs).
    pub unique: Vec<TestCase>,
}

impl ExperimentPlan {
    pub fn singles_for(&self, param: usize) -> impl Iterator<Item = &SingleRun> {
        self.singles.iter().filter(move |r| r.param == param)
    }

    pub fn pairs_for(&self, p: usize, q: usize) -> impl Iterator<Item = &PairRun> {
        let key = (p.min(q), p.max(q));
        self.pairs.iter().filter(move |r| r.params == key)
    }
}

/// Profile `r` puts every parameter at value index `min(r, |V_p| - 1)`.
/// Profiles that coincide with an earlier one (possible once `r` passes the
/// largest domain) are dropped.
pub fn profiles(model: &ParameterModel, count: usize) -> Vec<ConstantProfile> {
    let sizes = model.domain_sizes();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for r in 0..count {
        let values: Vec<usize> = sizes.iter().map(|&n| r.min(n - 1)).collect();
        if seen.insert(values.clone()) {
            out.push(ConstantProfile { id: r, values });
        } else {
            log::warn!("constant profile {r} repeats an earlier profile and is skipped");
        }
    }
    out
}

pub fn plan_experiments(model: &ParameterModel, profile_count: usize) -> Result<ExperimentPlan, ImpactError> {
    if profile_count < 1 {
        return Err(ImpactError::BadProfileCount(profile_count));
    }
    let profiles = profiles(model, profile_count);
    let sizes = model.domain_sizes();
    let k = model.len();

    let mut singles = Vec::new();
    for p in 0..k {
        for v in 0..sizes[p] {
            for prof in &profiles {
                let mut values = prof.values.clone();
                values[p] = v;
                singles.push(SingleRun {
                    param: p,
                    value: v,
                    profile: prof.id,
                    case: TestCase(values),
                });
            }
        }
    }

    let mut pairs = Vec::new();
    for p in 0..k {
        for q in p + 1..k {
            for prof in &profiles {
                for vp in 0..sizes[p] {
                    for vq in 0..sizes[q] {
                        let mut values = prof.values.clone();
                        values[p] = vp;
                        values[q] = vq;
                        pairs.push(PairRun {
                            params: (p, q),
                            values: (vp, vq),
                            profile: prof.id,
                            case: TestCase(values),
                        });
                    }
                }
            }
        }
    }

    let mut seen = HashSet::new();
    let unique = singles
        .iter()
        .map(|r| &r.case)
        .chain(pairs.iter().map(|r| &r.case))
        .filter(|c| seen.insert((*c).clone()))
        .cloned()
        .collect();

    Ok(ExperimentPlan {
        profiles,
        singles,
        pairs,
        unique,
    })
}
