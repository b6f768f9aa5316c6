use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rollchain_core::chain::{validate_chain, NodeId, PruneMode};
use rollchain_core::consensus::{
    run_protocol, FailureKind, FailurePlan, ProtocolConfig, RogueProposal, Schedule, Variant,
};
use rollchain_core::netsim::Graph;

fn complete_schedule(n: u64) -> Schedule {
    let ids: Vec<NodeId> = (1..=n).map(NodeId).collect();
    Schedule::build(&ids, &Graph::complete(n as usize)).unwrap()
}

fn prune_mode() -> impl Strategy<Value = PruneMode> {
    prop_oneof![Just(PruneMode::Reset), Just(PruneMode::Sliding)]
}

fn variant() -> impl Strategy<Value = Variant> {
    prop_oneof![Just(Variant::FullChain), Just(Variant::SingleBlock)]
}

/// Random failures over the first `turns` iterations of an `n`-node run.
fn failure_plan(n: u64, turns: u64) -> impl Strategy<Value = FailurePlan> {
    prop::collection::vec((1..=n, 1..=turns, any::<bool>()), 0..6).prop_map(|entries| {
        let mut plan = FailurePlan::new();
        for (node, it, failed) in entries {
            let kind = if failed {
                FailureKind::Failed
            } else {
                FailureKind::Isolated
            };
            plan.insert(NodeId(node), it, kind);
        }
        plan
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn same_seed_gives_identical_runs(
        n in 2u64..7,
        cycles in 1u64..4,
        prune in prune_mode(),
        variant in variant(),
        seed in any::<u64>(),
        plan in failure_plan(6, 6),
    ) {
        let schedule = complete_schedule(n);
        let failures = {
            let mut f = FailurePlan::new();
            for (node, it, kind) in plan.entries() {
                if node.0 <= n && it <= n * cycles {
                    f.insert(node, it, kind);
                }
            }
            f
        };
        let config = ProtocolConfig { variant, prune, cycles, failures, ..ProtocolConfig::default() };
        let a = run_protocol(&schedule, &config, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = run_protocol(&schedule, &config, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(validate_chain(&a.full_chain).is_empty());
        // Counters only grow, so cumulative bytes are nondecreasing.
        let cumulative = a.cumulative_bytes();
        prop_assert!(cumulative.windows(2).all(|w| w[0] <= w[1]));
        // Every turn is either accepted or accounted as lost.
        prop_assert_eq!(a.accepted_count() + a.lost().len(), (n * cycles) as usize);
    }

    #[test]
    fn unscheduled_proposals_never_change_the_result(
        n in 3u64..7,
        cycles in 1u64..3,
        variant in variant(),
        seed in any::<u64>(),
        raw in prop::collection::vec((1u64..20, 1u64..12, prop::collection::vec(1u64..7, 1..4)), 1..8),
    ) {
        let schedule = complete_schedule(n);
        let turns = n * cycles;
        let rogue: Vec<RogueProposal> = raw
            .into_iter()
            .filter_map(|(sender, it, targets)| {
                let iteration = (it - 1) % turns + 1;
                let sender = NodeId(sender);
                if schedule.creator_for(iteration).node_id == sender {
                    return None;
                }
                let targets = targets.into_iter().filter(|&t| t <= n).map(NodeId).collect();
                Some(RogueProposal { iteration, sender, targets })
            })
            .collect();
        let base = ProtocolConfig { variant, cycles, ..ProtocolConfig::default() };
        let attacked = ProtocolConfig { rogue, ..base.clone() };
        let clean = run_protocol(&schedule, &base, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let dirty = run_protocol(&schedule, &attacked, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(&clean.records, &dirty.records);
        prop_assert_eq!(&clean.full_chain, &dirty.full_chain);
    }

    #[test]
    fn variants_agree_on_failure_free_runs(
        n in 2u64..8,
        cycles in 1u64..4,
        prune in prune_mode(),
        seed in any::<u64>(),
    ) {
        let schedule = complete_schedule(n);
        let run = |variant| {
            let config = ProtocolConfig { variant, prune, cycles, ..ProtocolConfig::default() };
            run_protocol(&schedule, &config, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
        };
        let a = run(Variant::FullChain);
        let b = run(Variant::SingleBlock);
        prop_assert_eq!(&a.records, &b.records);
        prop_assert!(a.lost().is_empty());
        for (k, (ba, bb)) in a.bytes_per_iteration.iter().zip(&b.bytes_per_iteration).enumerate() {
            prop_assert!(ba >= bb, "iteration {}", k + 1);
            // A sent window always holds the new block plus at least its head.
            if k >= 1 {
                prop_assert!(ba > bb, "iteration {}", k + 1);
            }
        }
    }

    // With every node neighboring every creator and no failures, nothing is lost.
    #[test]
    fn full_connectivity_loses_nothing(n in 1u64..9, cycles in 1u64..3, seed in any::<u64>()) {
        let schedule = complete_schedule(n);
        let config = ProtocolConfig { cycles, ..ProtocolConfig::default() };
        let out = run_protocol(&schedule, &config, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(out.lost().is_empty());
        prop_assert_eq!(out.full_chain.len() as u64, 1 + n * cycles);
    }
}
