use serde_json::{json, Value};

use crate::model::{ParameterModel, TestSuite};

use super::{TargetTuple, TupleUniverse};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    pub total: usize,
    pub covered: usize,
    pub uncovered: Vec<TargetTuple>,
}

impl VerificationReport {
    pub fn is_complete(&self) -> bool {
        self.uncovered.is_empty()
    }

    pub fn to_json(&self, model: &ParameterModel) -> Value {
        json!({
            "total_tuples": self.total,
            "covered": self.covered,
            "uncovered": self.uncovered.iter().map(|t| Value::Object(t.to_map(model))).collect::<Vec<_>>(),
        })
    }
}

/// Checks every target tuple against every row.
pub fn verify(suite: &TestSuite, universe: &TupleUniverse) -> VerificationReport {
    let uncovered: Vec<TargetTuple> = universe
        .tuples()
        .iter()
        .filter(|t| !suite.cases.iter().any(|c| t.is_covered_by(c)))
        .cloned()
        .collect();
    VerificationReport {
        total: universe.len(),
        covered: universe.len() - uncovered.len(),
        uncovered,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cagen::compile_requirements;
    use crate::model::{Parameter, TestCase};

    fn m() -> ParameterModel {
        ParameterModel::new(vec![
            Parameter::new("a", &["0", "1"]),
            Parameter::new("b", &["0", "1", "2"]),
            Parameter::new("c", &["0", "1"]),
        ])
        .unwrap()
    }

    #[test]
    fn empty_suite_covers_nothing() {
        let m = m();
        let u = compile_requirements(&m, &[m.uniform(2).unwrap()]).unwrap();
        let r = verify(&TestSuite::new("empty"), &u);
        assert_eq!(r.covered, 0);
        assert_eq!(r.uncovered.len(), r.total);
    }

    #[test]
    fn exhaustive_suite_covers_everything() {
        let m = m();
        let ex = TestSuite::with_cases("ex", m.exhaustive_cases());
        for t in 1..=3 {
            let u = compile_requirements(&m, &[m.uniform(t).unwrap()]).unwrap();
            assert!(verify(&ex, &u).is_complete());
        }
    }

    #[test]
    fn reports_the_missing_tuple() {
        let m = m();
        let u = compile_requirements(&m, &[m.requirement([0, 2], 2).unwrap()]).unwrap();
        let s = TestSuite::with_cases(
            "three",
            vec![
                TestCase(vec![0, 0, 0]),
                TestCase(vec![0, 0, 1]),
                TestCase(vec![1, 0, 0]),
            ],
        );
        let r = verify(&s, &u);
        assert_eq!(r.covered + r.uncovered.len(), r.total);
        assert_eq!(r.uncovered, vec![TargetTuple::new(&[(0, 1), (2, 1)])]);
        assert_eq!(r.uncovered[0].describe(&m), "{a=1, c=1}");
    }
}
