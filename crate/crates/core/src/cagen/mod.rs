//! Covering-array generation.
//!
//! Requirements are first compiled into an explicit universe of target
//! tuples, a greedy one-test-at-a-time engine covers that universe, and a
//! brute-force verifier re-checks the result tuple by tuple.

mod export;
mod generate;
mod verify;

pub use export::{suite_from_csv, suite_from_json, suite_to_csv, suite_to_json, SuiteDocument};
pub use generate::generate;
pub use verify::{verify, VerificationReport};

use std::collections::BTreeSet;

use serde::Serialize;

use crate::model::{CoverageRequirement, ParameterModel, TestCase, TestSuite};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CagenError {
    #[error("requirement {requirement} references parameter index {index}, model has {k} parameters")]
    IndexOutOfRange {
        requirement: String,
        index: usize,
        k: usize,
    },
    #[error("requirement {0}: strength exceeds relation size")]
    StrengthTooLarge(String),
    #[error("suite row {row}: {message}")]
    BadRow { row: usize, message: String },
    #[error("malformed suite: {0}")]
    Malformed(String),
}

/// A partial assignment over a subset of parameters that some test must
/// contain. `params` is strictly increasing; `values[i]` is the value index
/// bound to `params[i]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TargetTuple {
    params: Vec<usize>,
    values: Vec<usize>,
}

impl TargetTuple {
    /// Bindings must be sorted by parameter index without repeats.
    pub fn new(bindings: &[(usize, usize)]) -> Self {
        assert!(!bindings.is_empty(), "target tuple needs at least one binding");
        assert!(
            bindings.windows(2).all(|w| w[0].0 < w[1].0),
            "tuple bindings must be sorted by parameter index"
        );
        TargetTuple {
            params: bindings.iter().map(|b| b.0).collect(),
            values: bindings.iter().map(|b| b.1).collect(),
        }
    }

    pub fn params(&self) -> &[usize] {
        &self.params
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn bindings(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.params.iter().copied().zip(self.values.iter().copied())
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }

    pub fn value_of(&self, param: usize) -> Option<usize> {
        self.params.iter().position(|&p| p == param).map(|i| self.values[i])
    }

    pub fn is_covered_by(&self, case: &TestCase) -> bool {
        self.bindings().all(|(p, v)| case.value(p) == v)
    }

    pub fn describe(&self, model: &ParameterModel) -> String {
        let parts: Vec<String> = self
            .bindings()
            .map(|(p, v)| {
                let param = model.parameter(p);
                format!("{}={}", param.name, param.values[v])
            })
            .collect();
        format!("{{{}}}", parts.join(", "))
    }

    pub fn to_map(&self, model: &ParameterModel) -> serde_json::Map<String, serde_json::Value> {
        self.bindings()
            .map(|(p, v)| {
                let param = model.parameter(p);
                (param.name.clone(), param.values[v].clone().into())
            })
            .collect()
    }
}

/// Deduplicated target tuples in canonical order: by parameter subset, then
/// by value indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleUniverse {
    tuples: Vec<TargetTuple>,
    requirements: Vec<CoverageRequirement>,
}

impl TupleUniverse {
    pub fn tuples(&self) -> &[TargetTuple] {
        &self.tuples
    }

    pub fn requirements(&self) -> &[CoverageRequirement] {
        &self.requirements
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

/// Expands each `(relation, t)` into every value combination of every
/// `t`-subset of the relation.
pub fn compile_requirements(
    model: &ParameterModel,
    requirements: &[CoverageRequirement],
) -> Result<TupleUniverse, CagenError> {
    let sizes = model.domain_sizes();
    let mut set = BTreeSet::new();
    for req in requirements {
        if let Some(&index) = req.relation().iter().find(|&&i| i >= model.len()) {
            return Err(CagenError::IndexOutOfRange {
                requirement: req.to_string(),
                index,
                k: model.len(),
            });
        }
        if req.strength() > req.relation().len() {
            return Err(CagenError::StrengthTooLarge(req.to_string()));
        }
        for subset in combinations(req.relation(), req.strength()) {
            let dims: Vec<usize> = subset.iter().map(|&p| sizes[p]).collect();
            for values in cross_product(&dims) {
                set.insert(TargetTuple {
                    params: subset.clone(),
                    values,
                });
            }
        }
    }
    Ok(TupleUniverse {
        tuples: set.into_iter().collect(),
        requirements: requirements.to_vec(),
    })
}

/// All `t`-element subsets of `items`, lexicographic by position.
pub fn combinations(items: &[usize], t: usize) -> Vec<Vec<usize>> {
    let n = items.len();
    if t > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..t).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let mut i = t;
        while i > 0 && idx[i - 1] == i - 1 + n - t {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..t {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn cross_product(dims: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::with_capacity(dims.len())];
    for &d in dims {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..d).map(move |v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
    }
    out
}

/// Before/after suite size record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SizeComparison {
    pub baseline_label: String,
    pub baseline_size: usize,
    pub candidate_label: String,
    pub candidate_size: usize,
    /// candidate − baseline
    pub difference: i64,
}

pub fn suite_stats(baseline: &TestSuite, candidate: &TestSuite) -> SizeComparison {
    SizeComparison {
        baseline_label: baseline.label.clone(),
        baseline_size: baseline.len(),
        candidate_label: candidate.label.clone(),
        candidate_size: candidate.len(),
        difference: candidate.len() as i64 - baseline.len() as i64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Parameter;

    fn uniform_model(k: usize, v: usize) -> ParameterModel {
        let values: Vec<String> = (0..v).map(|i| i.to_string()).collect();
        let refs: Vec<&str> = values.iter().map(String::as_str).collect();
        ParameterModel::new((0..k).map(|i| Parameter::new(format!("p{i}"), &refs)).collect()).unwrap()
    }

    #[test]
    fn combinations_enumerate_in_order() {
        assert_eq!(combinations(&[0, 1, 2], 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(combinations(&[4, 7], 2), vec![vec![4, 7]]);
        assert_eq!(combinations(&[1, 2, 3], 1).len(), 3);
        assert_eq!(combinations(&[0, 1, 2, 3, 4], 3).len(), 10);
        assert!(combinations(&[0], 2).is_empty());
    }

    #[test]
    fn pairwise_over_three_binary_params_is_twelve_tuples() {
        let m = uniform_model(3, 2);
        let u = compile_requirements(&m, &[m.uniform(2).unwrap()]).unwrap();
        assert_eq!(u.len(), 12);
    }

    #[test]
    fn single_parameter_strength_one() {
        let m = uniform_model(3, 3);
        let u = compile_requirements(&m, &[m.requirement([1], 1).unwrap()]).unwrap();
        assert_eq!(u.len(), 3);
        assert!(u.tuples().iter().all(|t| t.params() == [1]));
    }

    #[test]
    fn five_ternary_params_pairwise_is_ninety() {
        let m = uniform_model(5, 3);
        let u = compile_requirements(&m, &[m.uniform(2).unwrap()]).unwrap();
        // independent count: distinct projections of the exhaustive array
        let mut seen = BTreeSet::new();
        for case in m.exhaustive_cases() {
            for a in 0..5 {
                for b in a + 1..5 {
                    seen.insert((a, b, case.value(a), case.value(b)));
                }
            }
        }
        assert_eq!(seen.len(), 90);
        assert_eq!(u.len(), 90);
    }

    #[test]
    fn overlapping_requirements_deduplicate() {
        let m = uniform_model(4, 2);
        let reqs = [m.uniform(2).unwrap(), m.requirement([0, 1, 2], 2).unwrap()];
        let u = compile_requirements(&m, &reqs).unwrap();
        assert_eq!(u.len(), 6 * 4);
    }

    #[test]
    fn out_of_range_relation_is_rejected() {
        let small = uniform_model(2, 2);
        let big = uniform_model(4, 2);
        let req = big.requirement([0, 3], 2).unwrap();
        assert!(matches!(
            compile_requirements(&small, &[req]),
            Err(CagenError::IndexOutOfRange { index: 3, .. })
        ));
    }

    #[test]
    fn size_comparison_signs() {
        let mk = |n: usize| TestSuite::with_cases("s", (0..n).map(|i| TestCase(vec![i])).collect());
        assert_eq!(suite_stats(&mk(28), &mk(25)).difference, -3);
        assert_eq!(suite_stats(&mk(19), &mk(62)).difference, 43);
        assert_eq!(suite_stats(&mk(7), &mk(7)).difference, 0);
    }
}
