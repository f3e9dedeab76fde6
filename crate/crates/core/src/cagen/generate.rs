use crate::model::{ParameterModel, TestCase, TestSuite};

use super::TupleUniverse;

/// Greedy one-test-at-a-time construction.
///
/// Each new test is seeded with the first uncovered tuple in universe order.
/// The remaining parameters are filled in descending order of how many
/// uncovered tuples mention them (ties: lower index). For each parameter the
/// chosen value is the one that completes the most uncovered tuples given
/// what has been assigned so far (ties: lower value index). Parameters no
/// tuple mentions end up at value 0.
///
/// Every emitted test covers its seed, so the loop runs at most
/// `universe.len()` times.
pub fn generate(model: &ParameterModel, universe: &TupleUniverse, label: &str) -> TestSuite {
    let k = model.len();
    let sizes = model.domain_sizes();
    let tuples = universe.tuples();

    let mut by_param: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (id, t) in tuples.iter().enumerate() {
        for &p in t.params() {
            by_param[p].push(id);
        }
    }

    let mut uncovered = vec![true; tuples.len()];
    let mut remaining = tuples.len();
    let mut cursor = 0;
    let mut cases = Vec::new();

    while remaining > 0 {
        while !uncovered[cursor] {
            cursor += 1;
        }
        let seed = &tuples[cursor];

        let mut assigned: Vec<Option<usize>> = vec![None; k];
        for (p, v) in seed.bindings() {
            assigned[p] = Some(v);
        }

        let mut order: Vec<(usize, usize)> = (0..k)
            .filter(|&p| assigned[p].is_none())
            .map(|p| {
                let open = by_param[p].iter().filter(|&&id| uncovered[id]).count();
                (p, open)
            })
            .collect();
        order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

        for (p, _) in order {
            let mut gains = vec![0usize; sizes[p]];
            for &id in &by_param[p] {
                if !uncovered[id] {
                    continue;
                }
                let t = &tuples[id];
                let others_match = t.bindings().all(|(q, v)| q == p || assigned[q] == Some(v));
                if others_match {
                    gains[t.value_of(p).expect("tuple mentions p")] += 1;
                }
            }
            // max_by_key keeps the last maximum; scan manually for the first
            let mut best = 0;
            for (v, &g) in gains.iter().enumerate() {
                if g > gains[best] {
                    best = v;
                }
            }
            assigned[p] = Some(best);
        }

        let case = TestCase(assigned.into_iter().map(|v| v.unwrap_or(0)).collect());
        for (id, t) in tuples.iter().enumerate() {
            if uncovered[id] && t.is_covered_by(&case) {
                uncovered[id] = false;
                remaining -= 1;
            }
        }
        cases.push(case);
    }

    TestSuite::with_cases(label, cases).finalize()
}
