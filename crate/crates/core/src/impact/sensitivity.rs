use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::model::ParameterModel;

use super::CoverageMatrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterSensitivity {
    pub parameter: String,
    /// Units whose covered status flips between two runs that differ only in
    /// this parameter.
    pub sensitive: BTreeSet<usize>,
    /// Sensitive units no other parameter is sensitive to.
    pub exclusive: BTreeSet<usize>,
    pub sensitive_fraction: f64,
    pub exclusive_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub total_units: usize,
    pub parameters: Vec<ParameterSensitivity>,
    /// Units no successful run covered.
    pub never_covered: BTreeSet<usize>,
    pub never_covered_fraction: f64,
}

/// Per-parameter sensitive and exclusive unit sets over every successful run
/// in the matrix.
pub fn sensitivity_report(matrix: &CoverageMatrix, model: &ParameterModel) -> SensitivityReport {
    let total = matrix.total_units().unwrap_or(0);
    let frac = |n: usize| if total == 0 { 0.0 } else { n as f64 / total as f64 };
    let ok: Vec<_> = matrix.entries().filter(|(_, r)| r.is_ok()).collect();

    let mut sensitive: Vec<BTreeSet<usize>> = Vec::with_capacity(model.len());
    for p in 0..model.len() {
        // runs that agree everywhere except on p
        let mut groups: BTreeMap<Vec<usize>, Vec<&BTreeSet<usize>>> = BTreeMap::new();
        for (case, rec) in &ok {
            let mut key = case.values().to_vec();
            key[p] = usize::MAX;
            groups.entry(key).or_default().push(&rec.covered);
        }
        let mut set = BTreeSet::new();
        for runs in groups.values().filter(|g| g.len() > 1) {
            let union: BTreeSet<usize> = runs.iter().flat_map(|s| s.iter().copied()).collect();
            for u in union {
                if !runs.iter().all(|s| s.contains(&u)) {
                    set.insert(u);
                }
            }
        }
        sensitive.push(set);
    }

    let parameters = (0..model.len())
        .map(|p| {
            let others: BTreeSet<usize> = sensitive
                .iter()
                .enumerate()
                .filter(|&(q, _)| q != p)
                .flat_map(|(_, s)| s.iter().copied())
                .collect();
            let exclusive: BTreeSet<usize> = sensitive[p].difference(&others).copied().collect();
            ParameterSensitivity {
                parameter: model.parameter(p).name.clone(),
                sensitive_fraction: frac(sensitive[p].len()),
                exclusive_fraction: frac(exclusive.len()),
                sensitive: sensitive[p].clone(),
                exclusive,
            }
        })
        .collect();

    let ever: BTreeSet<usize> = ok.iter().flat_map(|(_, r)| r.covered.iter().copied()).collect();
    let never_covered: BTreeSet<usize> = (0..total).filter(|u| !ever.contains(u)).collect();

    SensitivityReport {
        total_units: total,
        parameters,
        never_covered_fraction: frac(never_covered.len()),
        never_covered,
    }
}
