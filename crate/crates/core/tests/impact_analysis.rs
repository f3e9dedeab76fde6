use std::collections::BTreeSet;
use std::path::PathBuf;

use codeaware_core::evaluate::Fixture;
use codeaware_core::impact::{
    compute_impacts, execute, impact_pair, impact_single, plan_experiments, sensitivity_report, AdapterError,
    CoverageAdapter, CoverageMatrix, ExecOptions, ImpactError, ImpactMode, ReplayAdapter, RunOutcome,
};
use codeaware_core::model::{Parameter, ParameterModel, TestCase};
use proptest::prelude::*;

fn fixture(name: &str) -> Fixture {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .join("fixture.toml");
    Fixture::load(&path).unwrap()
}

/// Adapter driven by a plain function of the value indices.
struct FnAdapter<F> {
    total: usize,
    f: F,
}

impl<F> CoverageAdapter for FnAdapter<F>
where
    F: Fn(&[usize]) -> Option<Vec<usize>> + Sync,
{
    fn run(&self, _: &ParameterModel, case: &TestCase) -> Result<RunOutcome, AdapterError> {
        Ok(match (self.f)(case.values()) {
            Some(units) => RunOutcome::Covered {
                total_units: self.total,
                covered: units.into_iter().collect(),
            },
            None => RunOutcome::Failed("crashed".into()),
        })
    }
}

fn binary(names: &[&str]) -> ParameterModel {
    ParameterModel::new(names.iter().map(|n| Parameter::new(*n, &["on", "off"])).collect()).unwrap()
}

#[test]
fn overlap_fixture_fractions_are_exact() {
    let f = fixture("overlap");
    let plan = plan_experiments(&f.model, 2).unwrap();
    let m = execute(&f.model, &plan, &f.sut, ExecOptions::default()).unwrap();
    let frac = |a, b| m.fraction(&TestCase(vec![a, b])).unwrap();
    assert_eq!(frac(0, 1), 0.6);
    assert_eq!(frac(1, 0), 0.6);
    assert_eq!(frac(0, 0), 0.8);
    assert_eq!(frac(1, 1), 0.0);

    let s = sensitivity_report(&m, &f.model);
    assert_eq!(s.never_covered_fraction, 0.2);
    assert_eq!(s.parameters[0].sensitive, BTreeSet::from([1, 2, 3]));
    assert_eq!(s.parameters[1].sensitive, BTreeSet::from([2, 3, 4]));
    assert_eq!(s.parameters[0].exclusive, BTreeSet::from([1]));
    assert_eq!(s.parameters[1].exclusive, BTreeSet::from([4]));

    let t = compute_impacts(&f.model, &m, &plan, ImpactMode::Profile).unwrap();
    assert_eq!(t.single(0), 0.6);
    assert_eq!(t.single(1), 0.6);
    assert_eq!(t.pair(0, 1), Some(0.8));
}

#[test]
fn spread_of_fifteen_and_three_units_is_exactly_twelve_hundredths() {
    let model = binary(&["p", "q"]);
    let adapter = FnAdapter {
        total: 100,
        f: |v: &[usize]| Some(if v[0] == 0 { (0..15).collect() } else { (0..3).collect() }),
    };
    let plan = plan_experiments(&model, 1).unwrap();
    let m = execute(&model, &plan, &adapter, ExecOptions::default()).unwrap();
    let i = impact_single(&model, &m, &plan, 0, ImpactMode::Profile).unwrap();
    assert_eq!(i.value, 0.12);
}

#[test]
fn global_mode_sees_spread_across_profiles() {
    // q only matters when p differs between profiles.
    let model = binary(&["p", "q"]);
    let adapter = FnAdapter {
        total: 10,
        f: |v: &[usize]| Some(if v[1] == 0 { vec![0, 1, 2, 3] } else { vec![0] }),
    };
    let plan = plan_experiments(&model, 2).unwrap();
    let m = execute(&model, &plan, &adapter, ExecOptions::default()).unwrap();
    let profile = impact_single(&model, &m, &plan, 0, ImpactMode::Profile).unwrap().value;
    let global = impact_single(&model, &m, &plan, 0, ImpactMode::Global).unwrap().value;
    assert_eq!(profile, 0.0);
    assert_eq!(global, 0.3);
}

#[test]
fn failed_runs_are_skipped_until_nothing_is_left() {
    let model = binary(&["p", "q"]);
    let plan = plan_experiments(&model, 1).unwrap();
    let some_fail = FnAdapter {
        total: 4,
        f: |v: &[usize]| (v != [1, 1]).then(|| vec![v[0]]),
    };
    let m = execute(&model, &plan, &some_fail, ExecOptions::default()).unwrap();
    assert_eq!(m.failed_count(), 1);
    assert_eq!(
        impact_single(&model, &m, &plan, 0, ImpactMode::Profile).unwrap().value,
        0.0
    );

    let all_fail = FnAdapter {
        total: 4,
        f: |_: &[usize]| None,
    };
    let m = execute(&model, &plan, &all_fail, ExecOptions::default()).unwrap();
    assert!(matches!(
        impact_single(&model, &m, &plan, 0, ImpactMode::Profile),
        Err(ImpactError::NoUsableRuns(_))
    ));
}

#[test]
fn replay_reproduces_the_exported_matrix() {
    let f = fixture("interaction-fault");
    let plan = plan_experiments(&f.model, 2).unwrap();
    let m = execute(&f.model, &plan, &f.sut, ExecOptions { workers: 4 }).unwrap();
    let jsonl = m.to_jsonl(&f.model);
    let replay = ReplayAdapter::parse(&jsonl, &f.model, "mem").unwrap();
    let again = execute(&f.model, &plan, &replay, ExecOptions::default()).unwrap();
    assert_eq!(again.to_jsonl(&f.model), jsonl);
}

#[test]
fn replay_missing_assignment_names_it() {
    let model = binary(&["A", "B"]);
    let text = r#"{"assignment":{"A":"on","B":"on"},"total_units":5,"covered":[1]}"#;
    let replay = ReplayAdapter::parse(text, &model, "mem").unwrap();
    let plan = plan_experiments(&model, 2).unwrap();
    let err = execute(&model, &plan, &replay, ExecOptions::default()).unwrap_err();
    match err {
        ImpactError::Adapter(AdapterError::MissingRecord(what)) => assert!(what.contains("A=")),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn worker_count_does_not_change_the_matrix() {
    let f = fixture("dont-care");
    let plan = plan_experiments(&f.model, 3).unwrap();
    let one = execute(&f.model, &plan, &f.sut, ExecOptions { workers: 1 }).unwrap();
    let many = execute(&f.model, &plan, &f.sut, ExecOptions { workers: 8 }).unwrap();
    assert_eq!(one.to_jsonl(&f.model), many.to_jsonl(&f.model));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn impacts_stay_in_unit_range(
        weights in prop::collection::vec(prop::collection::vec(0usize..5, 3), 3),
        profiles in 1usize..4,
    ) {
        let model = ParameterModel::new(
            (0..3).map(|i| Parameter::new(format!("p{i}"), &["a", "b", "c"])).collect(),
        ).unwrap();
        // Each (parameter, value) owns a disjoint band of units.
        let w = weights.clone();
        let adapter = FnAdapter {
            total: 45,
            f: move |v: &[usize]| {
                Some(v.iter().enumerate().flat_map(|(p, &x)| {
                    let base = p * 15 + x * 5;
                    base..base + w[p][x]
                }).collect())
            },
        };
        let plan = plan_experiments(&model, profiles).unwrap();
        let m: CoverageMatrix = execute(&model, &plan, &adapter, ExecOptions::default()).unwrap();
        let t = compute_impacts(&model, &m, &plan, ImpactMode::Profile).unwrap();
        for (p, w) in weights.iter().enumerate() {
            let i = t.single(p);
            prop_assert!((0.0..=1.0).contains(&i));
            // Independent bands: the impact is the spread of that parameter's band sizes.
            let hi = *w.iter().max().unwrap();
            let lo = *w.iter().min().unwrap();
            prop_assert_eq!(i, (hi - lo) as f64 / 45.0);
            for q in p + 1..3 {
                let pq = impact_pair(&model, &m, &plan, p, q, ImpactMode::Profile).unwrap().value;
                prop_assert!((0.0..=1.0).contains(&pq));
                prop_assert!(pq + 1e-12 >= i.max(t.single(q)));
            }
        }
    }
}
