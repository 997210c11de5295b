mod common;

use mtcode::beliefs::{a_belief_of_path, memory_belief_of_path, receiver_belief_direct, CanonicalBeliefSet, SideForward};
use mtcode::coordinator::{history_rule_cost, reachable_a_beliefs};
use mtcode::engine::{encoder_marginals, expected_distortion_exact, simulate_mc, simulate_mc_with, trace_rollout, PrefixTree, SystemAssembly};
use mtcode::model::random::{random_instance, DistortionKind, RandomSpec};
use mtcode::model::{Instance, Staged};
use mtcode::oracle::{verify_theorem1, SearchBudget};
use mtcode::policies::{Decoder, EncodeCtx, EncoderPolicy};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_system(spec: RandomSpec, seed: u64) -> SystemAssembly {
    let inst = random_instance(&spec, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x55);
    let encs = (0..inst.n()).map(|i| common::random_general(&inst, i, &mut rng)).collect();
    SystemAssembly::new(inst, encs, Decoder::Tau)
}

#[test]
fn exact_matches_flat_enumeration_on_random_instances() {
    for seed in 0..6 {
        let asm = random_system(RandomSpec { sparsity: 0.2, ..RandomSpec::uniform(2, 2, 2, 2, 2 + seed as usize % 2) }, seed);
        let exact = expected_distortion_exact(&asm).unwrap();
        let flat = common::flat_cost(&asm);
        assert!(common::max_abs(&exact.per_stage, &flat) <= 1e-12, "{:?} vs {:?}", exact.per_stage, flat);
        assert!((exact.per_stage.iter().sum::<f64>() - exact.total).abs() <= 1e-15);
    }
}

#[test]
fn zero_distortion_costs_nothing() {
    let mut asm = random_system(RandomSpec::uniform(2, 2, 2, 2, 3), 1);
    let len = asm.instance.xa_size() * asm.instance.est_size();
    asm.instance.distortion.rho = Staged::Invariant(vec![0.0; len]);
    let r = expected_distortion_exact(&asm).unwrap();
    assert_eq!(r.total, 0.0);
    assert!(r.per_stage.iter().all(|&c| c == 0.0));
}

#[test]
fn perfect_reconstruction_costs_nothing() {
    let spec = RandomSpec { a_size: 1, noiseless: true, ..RandomSpec::uniform(2, 1, 2, 2, 1) };
    let inst = random_instance(&spec, 2);
    let encs = (0..2).map(|i| common::prefix_encoder(&inst, i, &|xs| *xs.last().unwrap())).collect();
    let r = expected_distortion_exact(&SystemAssembly::new(inst, encs, Decoder::Tau)).unwrap();
    assert_eq!(r.total, 0.0);
}

#[test]
fn monte_carlo_is_deterministic_across_runs_and_workers() {
    let asm = random_system(RandomSpec::uniform(2, 2, 2, 2, 3), 3);
    let a = simulate_mc(&asm, 5000, 11).unwrap();
    let b = simulate_mc(&asm, 5000, 11).unwrap();
    assert_eq!(a, b);
    for workers in [2, 3, 8] {
        assert_eq!(simulate_mc_with(&asm, 5000, 11, workers).unwrap(), a);
    }
    assert_ne!(simulate_mc(&asm, 5000, 12).unwrap(), a);
}

#[test]
fn constant_distortion_has_exact_mean_and_no_spread() {
    let mut asm = random_system(RandomSpec::uniform(2, 2, 2, 2, 3), 4);
    let len = asm.instance.xa_size() * asm.instance.est_size();
    asm.instance.distortion.rho = Staged::Invariant(vec![0.75; len]);
    let r = simulate_mc(&asm, 3000, 5).unwrap();
    let mc = r.monte_carlo.unwrap();
    assert_eq!(mc.mean, 0.75 * 3.0);
    assert_eq!(mc.stderr, 0.0);
}

#[test]
fn monte_carlo_agrees_with_exact_within_four_standard_errors() {
    let asm = random_system(RandomSpec { distortion: DistortionKind::Random(3), ..RandomSpec::uniform(2, 2, 2, 2, 3) }, 6);
    let exact = expected_distortion_exact(&asm).unwrap().total;
    let mc = simulate_mc(&asm, 40_000, 1).unwrap().monte_carlo.unwrap();
    assert!((mc.mean - exact).abs() <= 4.0 * mc.stderr, "{} vs {exact} (se {})", mc.mean, mc.stderr);
}

fn deterministic_instance() -> Instance {
    let mut inst = random_instance(&RandomSpec { a_size: 1, noiseless: true, ..RandomSpec::uniform(2, 1, 2, 2, 3) }, 7);
    for i in 0..2 {
        inst.source.init[i] = vec![vec![1.0, 0.0]];
        inst.source.kernel[i] = Staged::Invariant(vec![vec![vec![0.0, 1.0], vec![1.0, 0.0]]]);
    }
    inst
}

#[test]
fn deterministic_system_trajectory_ignores_seed() {
    let inst = deterministic_instance();
    let encs = (0..2).map(|i| common::prefix_encoder(&inst, i, &|xs| xs.len() % 2)).collect();
    let asm = SystemAssembly::new(inst, encs, Decoder::Tau);
    let base = trace_rollout(&asm, 0).unwrap();
    for seed in 1..20 {
        let tr = trace_rollout(&asm, seed).unwrap();
        assert_eq!(tr.stages, base.stages);
        assert_eq!(tr.total, base.total);
    }
}

#[test]
fn trace_records_match_the_belief_recursions() {
    let asm = random_system(RandomSpec::uniform(2, 2, 2, 2, 3), 8);
    let inst = &asm.instance;
    for seed in 0..40 {
        let tr = trace_rollout(&asm, seed).unwrap();
        let sum: f64 = tr.stages.iter().map(|s| s.distortion).sum();
        assert!((sum - tr.total).abs() <= 1e-15);
        for (k, st) in tr.stages.iter().enumerate() {
            let t = k + 1;
            assert_eq!(st.t, t);
            let psi = receiver_belief_direct(inst, &asm.encoders, &asm.receiver, t, &st.y, &st.m_prev).unwrap();
            assert!(common::max_abs(&st.psi, psi.as_slice()) <= 1e-12);
            for i in 0..2 {
                let xs: Vec<usize> = tr.stages[..=k].iter().map(|s| s.x[i]).collect();
                let zs: Vec<usize> = tr.stages[..k].iter().map(|s| s.z[i]).collect();
                assert!(common::max_abs(&st.b[i], a_belief_of_path(inst, i, &xs).unwrap().as_slice()) <= 1e-12);
                let mu = memory_belief_of_path(inst, &asm.receiver, i, &zs).unwrap();
                assert!(common::max_abs(&st.mu.as_ref().unwrap()[i], mu.pmf().as_slice()) <= 1e-12);
            }
            assert!((st.distortion - inst.rho(t)[inst.xa_index(&st.x, tr.a) * inst.est_size() + st.estimate]).abs() <= 1e-15);
        }
    }
}

#[test]
fn encoder_marginals_are_consistent_with_the_source() {
    let asm = random_system(RandomSpec { time_varying: true, ..RandomSpec::uniform(3, 2, 2, 2, 3) }, 9);
    let inst = &asm.instance;
    for i in 0..2 {
        let tree = PrefixTree::build(inst, i);
        let ctx = EncodeCtx { inst, receiver: &asm.receiver, encoder: i };
        let outputs = tree.assign(&asm.encoders[i], &ctx).unwrap();
        let margs = encoder_marginals(inst, &asm.receiver, &tree, &outputs);
        for (k, sm) in margs.stages.iter().enumerate() {
            let t = k + 1;
            for a in 0..inst.a_size() {
                let mut px: Vec<f64> = inst.init(i)[a].clone();
                for s in 1..t {
                    let ker = &inst.kernel(i, s)[a];
                    px = (0..3).map(|x2| (0..3).map(|x| px[x] * ker[x][x2]).sum()).collect();
                }
                for (x, want) in px.iter().enumerate() {
                    let got: f64 = (0..sm.m_size).flat_map(|m| (0..sm.y_size).map(move |y| (m, y))).map(|(m, y)| sm.get(a, x, m, y)).sum();
                    assert!((got - want).abs() <= 1e-12);
                }
            }
        }
    }
}

#[test]
fn exact_evaluator_agrees_with_coordinator_side_cost() {
    for seed in 0..4 {
        let inst = random_instance(&RandomSpec { distortion: DistortionKind::Random(3), ..RandomSpec::perfect(2, 2, 2, 3) }, 30 + seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let set: CanonicalBeliefSet = reachable_a_beliefs(&inst, 0, None).unwrap();
        let rule = common::random_history_rule(&inst, 0, &set, &mut rng);
        let other = common::random_general(&inst, 1, &mut rng);
        let encs = vec![EncoderPolicy::CommonInfo(rule.to_encoder()), other];
        let side = SideForward::build(&inst, &encs, &inst.receiver, 0).unwrap();
        let coord = history_rule_cost(&inst, &side, &rule, 0).unwrap();
        let asm = SystemAssembly::new(inst.clone(), encs, Decoder::Tau);
        let exact = expected_distortion_exact(&asm).unwrap().total;
        let flat: f64 = common::flat_cost(&asm).iter().sum();
        assert!((coord - exact).abs() <= 1e-12, "{coord} vs {exact}");
        assert!((flat - exact).abs() <= 1e-12);
    }
}

#[test]
fn structured_optimum_matches_global_optimum_on_a_small_instance() {
    let inst = random_instance(&RandomSpec { distortion: DistortionKind::Random(2), ..RandomSpec::uniform(2, 2, 2, 2, 2) }, 3);
    let r = verify_theorem1(&inst, &SearchBudget::default()).unwrap();
    assert!(r.pass);
    assert!(r.gap.abs() <= 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn exact_equals_flat_enumeration(seed in 0u64..100_000, m in 1usize..3, t in 1usize..4, sparsity in 0.0f64..0.5) {
        let asm = random_system(RandomSpec { sparsity, time_varying: true, distortion: DistortionKind::Random(2), ..RandomSpec::uniform(2, 2, 2, m, t) }, seed);
        let exact = expected_distortion_exact(&asm).unwrap();
        prop_assert!(common::max_abs(&exact.per_stage, &common::flat_cost(&asm)) <= 1e-12);
    }
}
