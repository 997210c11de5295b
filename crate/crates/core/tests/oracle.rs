mod common;

use mtcode::engine::{expected_distortion_exact, SystemAssembly};
use mtcode::model::random::{random_instance, DistortionKind, RandomSpec};
use mtcode::model::Instance;
use mtcode::oracle::*;
use mtcode::policies::Decoder;
use mtcode::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small(seed: u64) -> Instance {
    random_instance(&RandomSpec { distortion: DistortionKind::Random(2), ..RandomSpec::uniform(2, 2, 2, 2, 2) }, seed)
}

#[test]
fn single_symbol_channel_optimum_is_best_blind_estimate() {
    let spec = RandomSpec { distortion: DistortionKind::Random(3), ..RandomSpec::uniform(2, 2, 1, 2, 2) };
    let inst = random_instance(&spec, 5);
    let opt = enumerate_global_optimum(&inst, &SearchBudget::default()).unwrap();
    let est = inst.est_size();
    let blind: f64 = (1..=2)
        .map(|t| {
            let xa = common::unconditional_xa(&inst, t);
            (0..est).map(|s| xa.iter().enumerate().map(|(k, p)| p * inst.rho(t)[k * est + s]).sum::<f64>()).fold(f64::INFINITY, f64::min)
        })
        .sum();
    assert!((opt.cost - blind).abs() <= 1e-12, "{} vs {blind}", opt.cost);
    assert!((opt.witness_cost - opt.cost).abs() <= 1e-12);
}

#[test]
fn identity_feasible_instance_has_zero_optimum() {
    let spec = RandomSpec { a_size: 1, noiseless: true, ..RandomSpec::uniform(2, 1, 2, 2, 1) };
    let opt = enumerate_global_optimum(&random_instance(&spec, 1), &SearchBudget::default()).unwrap();
    assert_eq!(opt.cost, 0.0);
    assert_eq!(opt.witness_cost, 0.0);
}

#[test]
fn enumeration_counts_follow_the_closed_form() {
    let inst = small(2);
    let opt = enumerate_global_optimum(&inst, &SearchBudget::default()).unwrap();
    // |M|^|Y| first-stage rules; 2 + 4 prefix nodes, each with |Z| = 2 outputs.
    assert_eq!(opt.counts.memory_rules, vec![4, 4]);
    assert_eq!(opt.counts.strategies_per_encoder, vec![4 * 64, 4 * 64]);
    assert_eq!(opt.counts.combinations, 256 * 256);
}

#[test]
fn global_search_is_deterministic() {
    let inst = small(3);
    let a = verify_theorem1(&inst, &SearchBudget::default()).unwrap();
    let b = verify_theorem1(&inst, &SearchBudget::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn global_optimum_never_exceeds_structured_optimum() {
    for seed in 10..14 {
        let r = verify_theorem1(&small(seed), &SearchBudget::default()).unwrap();
        assert!(r.global_min <= r.structured_min + 1e-12);
        assert!(r.pass, "gap {}", r.gap);
        assert!((r.structured_witness_cost - r.structured_min).abs() <= 1e-12);
    }
}

#[test]
fn single_state_source_has_no_structure_gap() {
    let spec = RandomSpec { x_sizes: vec![1, 1], distortion: DistortionKind::Random(2), ..RandomSpec::uniform(1, 2, 2, 2, 3) };
    let r = verify_theorem1(&random_instance(&spec, 4), &SearchBudget::default()).unwrap();
    assert_eq!(r.gap, 0.0);
    assert!(r.pass);
}

#[test]
fn exhausted_budget_is_reported() {
    let tight = SearchBudget { max_strategies: 100, ..SearchBudget::default() };
    match enumerate_global_optimum(&small(1), &tight) {
        Err(Error::BudgetExceeded { .. }) => {}
        other => panic!("expected budget error, got {other:?}"),
    }
}

#[test]
fn posterior_decoder_matches_best_table() {
    for seed in 0..4 {
        let inst = random_instance(&RandomSpec { distortion: DistortionKind::Random(3), ..RandomSpec::uniform(2, 2, 2, 2, 3) }, 70 + seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let encs = (0..2).map(|i| common::random_general(&inst, i, &mut rng)).collect();
        let asm = SystemAssembly::new(inst, encs, Decoder::Tau);
        let r = verify_theorem2(&asm, &SearchBudget::default()).unwrap();
        assert!(r.pass, "gap {}", r.gap);
        assert_eq!(r.method, DecoderSearch::Exhaustive);
        assert!((r.tau_cost - expected_distortion_exact(&asm).unwrap().total).abs() <= 1e-15);
        assert!((r.table_min_reevaluated - r.table_min).abs() <= 1e-12);
    }
}

#[test]
fn markov_check_passes_when_state_is_the_symbol() {
    let spec = RandomSpec { a_size: 1, m_sizes: vec![1, 1], ..RandomSpec::uniform(2, 1, 2, 1, 3) };
    let inst = random_instance(&spec, 6);
    for i in 0..2 {
        assert!(verify_lemma3_markov(&inst, &inst.receiver, i, BeliefVariant::Exact, 100_000).unwrap().pass);
    }
}

#[test]
fn markov_check_passes_on_random_instance_and_catches_corruption() {
    let inst = random_instance(&RandomSpec::uniform(2, 2, 2, 2, 3), 7);
    let good = verify_lemma3_markov(&inst, &inst.receiver, 0, BeliefVariant::Exact, 100_000).unwrap();
    assert!(good.pass, "{good:?}");
    assert!(good.max_kernel_gap <= MARKOV_TOL);
    let bad = verify_lemma3_markov(&inst, &inst.receiver, 0, BeliefVariant::DropPrevious, 100_000).unwrap();
    assert!(!bad.pass);
}

#[test]
fn randomized_encoders_never_beat_the_deterministic_optimum() {
    let r = verify_no_randomization_gain(&small(8), 50, 1, &SearchBudget::default()).unwrap();
    assert!(r.pass);
    assert!(r.min_margin >= -1e-9);
    assert_eq!(r.point_mass_cost, r.deterministic_min);
    assert!((r.uniform_mixture_cost - r.uniform_average).abs() <= LINEARITY_TOL);
    assert!(r.max_linearity_error <= LINEARITY_TOL);
}
