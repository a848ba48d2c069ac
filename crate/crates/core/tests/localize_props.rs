mod support;

use pecker_core::empc::{compute_empc, SweepMode};
use pecker_core::frontend::StmtId;
use pecker_core::localize::{
    activation_cycle, dual_score, rank_statements, Candidate, FailingRun, Truncation,
};
use pecker_core::StmtSet;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn pruning_safety_over_random_traces() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut checked = 0;
    for _ in 0..1000 {
        checked += support::pruning_trial(&mut rng).unwrap();
    }
    assert!(checked > 1000, "too few activated statements ({checked})");
}

#[test]
fn truncation_none_sees_later_cycles() {
    // Sanity check that the property above is not vacuous: without pruning,
    // rewriting the suffix does move scores.
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let mut moved = 0;
    for _ in 0..300 {
        let case = support::random_case(&mut rng, 30, 10);
        let empc = compute_empc(&case.pdg, &case.trace, &case.results, SweepMode::Single).unwrap();
        let act = activation_cycle(&case.pdg, &empc, case.fail);
        let n = case.trace.stmt_count();
        for s in (0..n).map(StmtId) {
            let Some(c) = act.get(s).cycle() else {
                continue;
            };
            let before = dual_score(
                s,
                &[FailingRun {
                    trace: &case.trace,
                    activation: &act,
                }],
                &[],
                Truncation::None,
            );
            let mut t = case.trace.clone();
            for cycle in t.cycles_mut().iter_mut().skip(c + 1) {
                *cycle = StmtSet::from_ids(n, (0..n).filter(|_| rng.gen_bool(0.5)).map(StmtId));
            }
            let after = dual_score(
                s,
                &[FailingRun {
                    trace: &t,
                    activation: &act,
                }],
                &[],
                Truncation::None,
            );
            moved += (before != after) as usize;
        }
    }
    assert!(moved > 0);
}

fn arb_candidates() -> impl Strategy<Value = (Vec<Candidate>, Vec<f64>)> {
    (1usize..25).prop_flat_map(|n| {
        (
            proptest::collection::vec(
                (
                    0u32..3,
                    0u32..4,
                    proptest::option::of(0u32..4),
                    any::<bool>(),
                ),
                n,
            ),
            proptest::collection::vec(0.0f64..1.0, n),
        )
            .prop_map(|(raw, fallback)| {
                let cands = raw
                    .into_iter()
                    .enumerate()
                    .filter(|(_, r)| r.3)
                    .map(|(i, (aef, aep, e, _))| Candidate {
                        stmt: StmtId(i),
                        score: pecker_core::localize::SuspicionScore { aef, aep },
                        empc: e.map_or(
                            pecker_core::empc::Empc::Infinite,
                            pecker_core::empc::Empc::Finite,
                        ),
                    })
                    .collect();
                (cands, fallback)
            })
    })
}

proptest! {
    #[test]
    fn ranking_is_a_permutation_with_candidates_first((cands, fallback) in arb_candidates()) {
        let order = rank_statements(&cands, &fallback);
        let mut sorted: Vec<usize> = order.iter().map(|s| s.0).collect();
        sorted.sort();
        prop_assert_eq!(sorted, (0..fallback.len()).collect::<Vec<_>>());
        let top = cands.iter().filter(|c| c.score.aef > 0).count();
        for (i, s) in order.iter().enumerate() {
            let is_cand = cands.iter().any(|c| c.stmt == *s && c.score.aef > 0);
            prop_assert_eq!(is_cand, i < top);
        }
        // Input order of candidates does not matter.
        let mut rev = cands.clone();
        rev.reverse();
        prop_assert_eq!(rank_statements(&rev, &fallback), order);
    }
}
