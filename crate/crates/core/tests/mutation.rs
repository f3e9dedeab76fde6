use std::path::PathBuf;

use codeaware_core::doc::Format;
use codeaware_core::evaluate::{compare, efficiency, mutation_score, render_evaluation, EvalError, Fixture};
use codeaware_core::model::{TestCase, TestSuite};
use proptest::prelude::*;

fn fixture(name: &str) -> Fixture {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .join("fixture.toml");
    Fixture::load(&path).unwrap()
}

/// Kill conditions evaluated by hand on the overlap fixture:
/// `a-only` needs A=on,B=off; `b-tail` needs unit 4 with A=off (so B=on);
/// `dead-unit` can never die.
#[test]
fn overlap_kills_match_hand_evaluation() {
    let f = fixture("overlap");
    let cases = |rows: &[[usize; 2]]| TestSuite::with_cases("s", rows.iter().map(|r| TestCase(r.to_vec())).collect());
    let r = mutation_score(&cases(&[[0, 1]]), &f.faults, &f.sut).unwrap();
    assert_eq!(r.kill_bitmap, "100");
    let r = mutation_score(&cases(&[[1, 0]]), &f.faults, &f.sut).unwrap();
    assert_eq!(r.kill_bitmap, "010");
    let all = cases(&[[0, 0], [0, 1], [1, 0], [1, 1]]);
    let r = mutation_score(&all, &f.faults, &f.sut).unwrap();
    assert_eq!(r.kill_bitmap, "110");
    assert_eq!(r.score, 2.0 / 3.0);
    assert_eq!(r.efficiency, Some(0.5));
}

#[test]
fn identical_suites_have_zero_deltas() {
    let f = fixture("interaction-fault");
    let suite = TestSuite::with_cases("a", f.model.exhaustive_cases());
    let a = mutation_score(&suite, &f.faults, &f.sut).unwrap();
    let c = compare(&a, &a).unwrap();
    assert_eq!(c.delta_killed, 0);
    assert!(c.newly_killed.is_empty() && c.lost.is_empty());
    assert_eq!(c.relative_efficiency_change, Some(0.0));
}

#[test]
fn empty_suite_has_no_efficiency() {
    let f = fixture("overlap");
    let r = mutation_score(&TestSuite::new("empty"), &f.faults, &f.sut).unwrap();
    assert_eq!(r.killed, 0);
    assert_eq!(r.efficiency, None);
    assert!(matches!(efficiency(&r), Err(EvalError::EmptySuite(_))));
}

#[test]
fn suite_from_another_model_is_rejected() {
    let f = fixture("overlap");
    let bad = TestSuite::with_cases("wide", vec![TestCase(vec![0, 0, 0])]);
    assert!(matches!(
        mutation_score(&bad, &f.faults, &f.sut),
        Err(EvalError::ModelMismatch { row: 1, .. })
    ));
}

#[test]
fn rendered_table_shows_the_arithmetic() {
    let f = fixture("overlap");
    let one = TestSuite::with_cases("one", vec![TestCase(vec![0, 1])]);
    let two = TestSuite::with_cases("two", vec![TestCase(vec![0, 1]), TestCase(vec![1, 0])]);
    let a = mutation_score(&one, &f.faults, &f.sut).unwrap();
    let b = mutation_score(&two, &f.faults, &f.sut).unwrap();
    let c = compare(&a, &b).unwrap();
    assert_eq!(c.newly_killed, vec!["b-tail"]);
    let text = render_evaluation(&[a, b], Some(&c));
    assert!(
        text.contains("relative efficiency change: (1.00 - 1.00) / 1.00 = +0.0%"),
        "{text}"
    );
}

#[test]
fn guards_compare_by_domain_position() {
    let text = r#"
name = "ordering"
total_units = 2
[[parameters]]
name = "size"
values = ["small", "medium", "large"]
[[blocks]]
lines = [0]
guard = "size >= medium"
[[mutants]]
id = "big"
kind = "ROR"
kill = "size > medium or not covered(0)"
"#;
    let f = Fixture::parse(text, Format::Toml).unwrap();
    let cov = |v| f.sut.coverage(&TestCase(vec![v]));
    assert!(cov(0).is_empty());
    assert_eq!(cov(1).len(), 1);
    assert_eq!(cov(2).len(), 1);
    let kills = |v: usize| {
        let s = TestSuite::with_cases("s", vec![TestCase(vec![v])]);
        mutation_score(&s, &f.faults, &f.sut).unwrap().killed
    };
    assert_eq!((kills(0), kills(1), kills(2)), (1, 0, 1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Adding tests can only add kills.
    #[test]
    fn kills_are_monotone_in_the_suite(picks in prop::collection::vec(0usize..243, 0..20), extra in prop::collection::vec(0usize..243, 1..10)) {
        let f = fixture("interaction-fault");
        let all = f.model.exhaustive_cases();
        let small = TestSuite::with_cases("small", picks.iter().map(|&i| all[i].clone()).collect());
        let mut bigger = small.clone();
        bigger.label = "bigger".into();
        bigger.cases.extend(extra.iter().map(|&i| all[i].clone()));
        let a = mutation_score(&small, &f.faults, &f.sut).unwrap();
        let b = mutation_score(&bigger, &f.faults, &f.sut).unwrap();
        for i in 0..a.mutant_ids.len() {
            prop_assert!(!a.is_killed(i) || b.is_killed(i));
        }
        prop_assert!(compare(&a, &b).unwrap().lost.is_empty());
    }
}
