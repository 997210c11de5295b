mod common;

use mtcode::beliefs::*;
use mtcode::model::random::{random_instance, DistortionKind, RandomSpec};
use mtcode::model::{Instance, MemoryMode, MemoryRules, Staged};
use mtcode::policies::{EncoderPolicy, PartialEncoder};
use proptest::prelude::*;

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && common::max_abs(a, b) <= tol
}

fn binary_instance(t: usize) -> Instance {
    random_instance(&RandomSpec::uniform(2, 2, 2, 2, t), 5)
}

#[test]
fn a_belief_update_with_single_latent_value() {
    let prev = Pmf::new(vec![1.0]).unwrap();
    let k = vec![vec![vec![0.3, 0.7], vec![0.6, 0.4]]];
    assert_eq!(update_a_belief(&prev, 0, 1, &k).unwrap().as_slice(), &[1.0]);
}

#[test]
fn a_belief_update_with_uninformative_kernel() {
    let prev = Pmf::new(vec![0.3, 0.7]).unwrap();
    let row = vec![vec![0.25, 0.75], vec![0.5, 0.5]];
    let k = vec![row.clone(), row];
    assert!(close(update_a_belief(&prev, 1, 0, &k).unwrap().as_slice(), &[0.3, 0.7], 1e-15));
}

#[test]
fn a_belief_update_bayes_step() {
    let prev = Pmf::new(vec![0.5, 0.5]).unwrap();
    let k = vec![vec![vec![0.1, 0.9], vec![0.5, 0.5]], vec![vec![0.9, 0.1], vec![0.5, 0.5]]];
    let b = update_a_belief(&prev, 0, 1, &k).unwrap();
    assert!(close(b.as_slice(), &[0.9, 0.1], 1e-15), "{b:?}");
}

#[test]
fn a_belief_update_rejects_impossible_transition() {
    let prev = Pmf::new(vec![0.5, 0.5]).unwrap();
    let k = vec![vec![vec![1.0, 0.0], vec![0.5, 0.5]], vec![vec![1.0, 0.0], vec![0.5, 0.5]]];
    assert!(update_a_belief(&prev, 0, 1, &k).is_err());
}

#[test]
fn initial_a_belief_examples() {
    let mut inst = binary_instance(1);
    inst.source.a_prior = vec![0.5, 0.5];
    inst.source.init[0] = vec![vec![0.3, 0.7], vec![0.3, 0.7]];
    assert!(close(init_a_belief(&inst, 0, 1).unwrap().as_slice(), &[0.5, 0.5], 1e-15));

    inst.source.init[0] = vec![vec![0.8, 0.2], vec![0.2, 0.8]];
    assert!(close(init_a_belief(&inst, 0, 0).unwrap().as_slice(), &[0.8, 0.2], 1e-15));

    inst.source.a_prior = vec![1.0, 0.0];
    assert_eq!(init_a_belief(&inst, 0, 1).unwrap().as_slice(), &[1.0, 0.0]);
}

fn identity_rule() -> (Vec<usize>, Vec<Vec<usize>>) {
    (vec![0, 1], vec![vec![0, 1], vec![0, 1]])
}

#[test]
fn memory_belief_noiseless_channel() {
    let (first, later) = identity_rule();
    let rule = StageRule { first: &first, table: Some(&later) };
    let ch = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let mu = update_memory_belief(&MemoryBelief::initial(2), 1, &ch, rule).unwrap();
    assert_eq!(mu.pmf().as_slice(), &[0.0, 1.0, 0.0]);
}

#[test]
fn memory_belief_binary_symmetric_channel() {
    let (first, later) = identity_rule();
    let rule = StageRule { first: &first, table: Some(&later) };
    let ch = vec![vec![0.8, 0.2], vec![0.2, 0.8]];
    let mu = update_memory_belief(&MemoryBelief::initial(2), 0, &ch, rule).unwrap();
    assert!(close(mu.pmf().as_slice(), &[0.8, 0.2, 0.0], 1e-15));
}

#[test]
fn memory_belief_input_ignoring_channel() {
    let (first, later) = identity_rule();
    let ch = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
    let prev = MemoryBelief(Pmf::new(vec![0.3, 0.7, 0.0]).unwrap());
    for z in 0..2 {
        for (p, table) in [(&MemoryBelief::initial(2), None), (&prev, Some(later.as_slice()))] {
            let mu = update_memory_belief(p, z, &ch, StageRule { first: &first, table }).unwrap();
            assert!(close(mu.pmf().as_slice(), &[0.5, 0.5, 0.0], 1e-15));
        }
    }
}

#[test]
fn receiver_belief_constant_source_is_point_mass() {
    let mut inst = binary_instance(2);
    for i in 0..2 {
        inst.source.init[i] = vec![vec![0.0, 1.0]; 2];
        inst.source.kernel[i] = Staged::Invariant(vec![vec![vec![0.0, 1.0]; 2]; 2]);
    }
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
    let encs = vec![common::random_general(&inst, 0, &mut rng), common::random_general(&inst, 1, &mut rng)];
    let recv = inst.receiver.clone();
    for ys in common::sequences(2, 2) {
        for ms in common::sequences(2, 2) {
            if let Ok(psi) = receiver_belief_direct(&inst, &encs, &recv, 2, &ys, &ms) {
                let (xs, _) = (0..inst.xa_size()).map(|k| inst.xa_decode(k)).zip(psi.as_slice()).filter(|(_, p)| **p > 0.0).map(|(k, _)| k).next().unwrap();
                assert_eq!(xs, vec![1, 1]);
                let on_x: f64 = (0..2).map(|a| psi[inst.xa_index(&[1, 1], a)]).sum();
                assert!((on_x - 1.0).abs() <= 1e-15);
            }
        }
    }
}

#[test]
fn receiver_belief_without_information_is_the_prior_marginal() {
    let mut inst = random_instance(&RandomSpec { noiseless: true, ..RandomSpec::uniform(2, 2, 2, 2, 3) }, 17);
    inst.receiver.mode = MemoryMode::Finite;
    let encs: Vec<EncoderPolicy> = (0..2).map(|i| common::prefix_encoder(&inst, i, &|_| 0)).collect();
    for t in 1..=3 {
        // memory after t-1 receptions of symbol 0
        let ms: Vec<usize> = (0..2).map(|i| (1..t).fold(0, |m, s| inst.receiver.step(&inst.alphabets, i, s, m, 0))).collect();
        let psi = receiver_belief_direct(&inst, &encs, &inst.receiver, t, &[0, 0], &ms).unwrap();
        assert!(close(psi.as_slice(), &common::unconditional_xa(&inst, t), 1e-14), "stage {t}");
    }
}

#[test]
fn receiver_belief_identity_encoders_recover_symbols() {
    let mut inst = random_instance(&RandomSpec { noiseless: true, ..RandomSpec::uniform(2, 2, 2, 2, 2) }, 23);
    for i in 0..2 {
        inst.receiver.memory_rules[i] = MemoryRules { first: vec![0, 1], later: Staged::Invariant(vec![vec![0, 1], vec![0, 1]]) };
    }
    let encs: Vec<EncoderPolicy> = (0..2).map(|i| common::prefix_encoder(&inst, i, &|xs| *xs.last().unwrap())).collect();
    for ys in common::sequences(2, 2) {
        let psi = receiver_belief_direct(&inst, &encs, &inst.receiver, 1, &ys, &[0, 0]).unwrap();
        let mut expect = vec![0.0; inst.xa_size()];
        let w: Vec<f64> = (0..2).map(|a| inst.a_prior()[a] * inst.init(0)[a][ys[0]] * inst.init(1)[a][ys[1]]).collect();
        let s: f64 = w.iter().sum();
        for a in 0..2 {
            expect[inst.xa_index(&ys, a)] = w[a] / s;
        }
        assert!(close(psi.as_slice(), &expect, 1e-15));
    }
    // Stage 2: memory holds the previous symbol of each encoder.
    for prev in common::sequences(2, 2) {
        for ys in common::sequences(2, 2) {
            let Ok(psi) = receiver_belief_direct(&inst, &encs, &inst.receiver, 2, &ys, &prev) else { continue };
            let mut expect = vec![0.0; inst.xa_size()];
            let w: Vec<f64> = (0..2)
                .map(|a| inst.a_prior()[a] * (0..2).map(|i| inst.init(i)[a][prev[i]] * inst.kernel(i, 1)[a][prev[i]][ys[i]]).product::<f64>())
                .collect();
            let s: f64 = w.iter().sum();
            for a in 0..2 {
                expect[inst.xa_index(&ys, a)] = w[a] / s;
            }
            assert!(close(psi.as_slice(), &expect, 1e-15));
        }
    }
}

fn single_symbol_instance() -> Instance {
    let spec = RandomSpec { x_sizes: vec![1, 2], z_sizes: vec![1, 2], ..RandomSpec::perfect(2, 2, 2, 3) };
    random_instance(&spec, 8)
}

#[test]
fn xi_stays_a_point_mass_without_branching() {
    let inst = single_symbol_instance();
    let mut set = CanonicalBeliefSet::new();
    let mut xi = XiState::Empty;
    for t in 1..=3 {
        let w = PartialEncoder::from_pairs(predict_xi(&xi, &inst, 0, t, &mut set).unwrap().support.iter().map(|e| ((e.x, e.b), 0)));
        xi = update_xi(&xi, 0, &w, &inst, 0, t, &mut set).unwrap();
        assert_eq!(xi.entries().len(), 1);
        assert_eq!(xi.entries()[0].p, 1.0);
        assert_eq!(set.get(xi.entries()[0].b).as_slice(), inst.a_prior());
    }
}

#[test]
fn xi_under_constant_partial_encoder_is_the_predictive_law() {
    let inst = random_instance(&RandomSpec::perfect(2, 2, 2, 3), 19);
    let mut set = CanonicalBeliefSet::new();
    let mut xi = XiState::Empty;
    let mut ws = Vec::new();
    for t in 1..=3 {
        let pred = predict_xi(&xi, &inst, 0, t, &mut set).unwrap();
        let w = PartialEncoder::from_pairs(pred.support.iter().map(|e| ((e.x, e.b), 1)));
        let next = update_xi(&xi, 1, &w, &inst, 0, t, &mut set).unwrap();
        for (e, p) in pred.support.iter().zip(next.entries()) {
            assert_eq!((e.x, e.b), (p.x, p.b));
            assert!((e.p - p.p).abs() <= 1e-15);
        }
        ws.push(w);
        // The predictive law is the forward push of (x, posterior) pairs.
        let direct = common::direct_xi(&inst, 0, &ws, &vec![1; t], &set).unwrap();
        for e in next.entries() {
            assert!((direct[&(e.x, e.b)] - e.p).abs() <= 1e-14);
        }
        xi = next;
    }
}

#[test]
fn xi_under_identity_partial_encoder_pins_the_symbol() {
    let inst = random_instance(&RandomSpec::perfect(2, 2, 2, 3), 21);
    let mut set = CanonicalBeliefSet::new();
    let mut xi = XiState::Empty;
    for (t, z) in [(1, 0), (2, 1), (3, 1)] {
        let pred = predict_xi(&xi, &inst, 0, t, &mut set).unwrap();
        let w = PartialEncoder::from_pairs(pred.support.iter().map(|e| ((e.x, e.b), e.x)));
        xi = update_xi(&xi, z, &w, &inst, 0, t, &mut set).unwrap();
        assert!(xi.entries().iter().all(|e| e.x == z));
        let mass: f64 = xi.entries().iter().map(|e| e.p).sum();
        assert!((mass - 1.0).abs() <= 1e-15);
    }
}

fn build_xi(inst: &Instance, zs: &[usize], pick: &dyn Fn(usize, usize, usize) -> usize, set: &mut CanonicalBeliefSet) -> (XiState, Vec<PartialEncoder>) {
    let mut xi = XiState::Empty;
    let mut ws = Vec::new();
    for (k, &z) in zs.iter().enumerate() {
        let t = k + 1;
        let pred = predict_xi(&xi, inst, 0, t, set).unwrap();
        let w = PartialEncoder::from_pairs(pred.support.iter().map(|e| ((e.x, e.b), pick(t, e.x, e.b))));
        xi = update_xi(&xi, z, &w, inst, 0, t, set).unwrap();
        ws.push(w);
    }
    (xi, ws)
}

#[test]
fn psi_lifts_the_symbol_marginal_when_the_other_encoder_is_trivial() {
    let spec = RandomSpec { a_size: 1, x_sizes: vec![2, 1], z_sizes: vec![2, 1], ..RandomSpec::perfect(2, 1, 2, 2) };
    let inst = random_instance(&spec, 4);
    let encs: Vec<EncoderPolicy> = (0..2).map(|i| common::prefix_encoder(&inst, i, &|xs| xs.last().unwrap() % inst.z_size(i))).collect();
    let side = SideForward::build(&inst, &encs, &inst.receiver, 0).unwrap();
    let mut set = CanonicalBeliefSet::new();
    let (xi, _) = build_xi(&inst, &[0, 1], &|_, x, _| (x + 1) % 2, &mut set);
    let psi = psi_from_xi(&xi, &[vec![], vec![0, 0]], &side, &inst, &set).unwrap();
    let marg = xi.x_a_marginal(2, &set);
    for x in 0..2 {
        assert!((psi[inst.xa_index(&[x, 0], 0)] - marg[x][0]).abs() <= 1e-15);
    }
}

#[test]
fn psi_factorizes_with_identity_encoders_and_one_latent_value() {
    let spec = RandomSpec { a_size: 1, ..RandomSpec::perfect(2, 1, 2, 2) };
    let inst = random_instance(&spec, 6);
    let encs: Vec<EncoderPolicy> = (0..2).map(|i| common::prefix_encoder(&inst, i, &|xs| *xs.last().unwrap())).collect();
    let side = SideForward::build(&inst, &encs, &inst.receiver, 0).unwrap();
    for z1 in common::sequences(2, 2) {
        for z2 in common::sequences(2, 2) {
            let mut set = CanonicalBeliefSet::new();
            let (xi, _) = build_xi(&inst, &z1, &|_, x, _| x, &mut set);
            let psi = psi_from_xi(&xi, &[vec![], z2.clone()], &side, &inst, &set).unwrap();
            for x1 in 0..2 {
                for x2 in 0..2 {
                    let expect = if (x1, x2) == (z1[1], z2[1]) { 1.0 } else { 0.0 };
                    assert!((psi[inst.xa_index(&[x1, x2], 0)] - expect).abs() <= 1e-15);
                }
            }
        }
    }
}

#[test]
fn stage_cost_examples() {
    let mut inst = random_instance(&RandomSpec { distortion: DistortionKind::Random(3), ..RandomSpec::perfect(2, 2, 2, 2) }, 13);
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
    let encs = vec![common::random_general(&inst, 0, &mut rng), common::random_general(&inst, 1, &mut rng)];
    let mut set = CanonicalBeliefSet::new();
    let (xi, _) = build_xi(&inst, &[0, 1], &|_, x, _| x, &mut set);
    let side = SideForward::build(&inst, &encs, &inst.receiver, 0).unwrap();
    assert!(coordinator_stage_cost(&xi, 2, &side, &inst, &set) > 0.0);
    inst.distortion.rho = Staged::Invariant(vec![0.0; inst.xa_size() * 3]);
    assert_eq!(coordinator_stage_cost(&xi, 2, &side, &inst, &set), 0.0);

    let spec = RandomSpec { x_sizes: vec![1, 1], distortion: DistortionKind::Random(3), ..RandomSpec::perfect(1, 1, 2, 2) };
    let single = random_instance(&spec, 2);
    let encs: Vec<EncoderPolicy> = (0..2).map(|i| common::prefix_encoder(&single, i, &|_| 0)).collect();
    let side = SideForward::build(&single, &encs, &single.receiver, 0).unwrap();
    let mut set = CanonicalBeliefSet::new();
    let (xi, _) = build_xi(&single, &[1, 0], &|t, _, _| t % 2, &mut set);
    let best = single.rho(2).iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(coordinator_stage_cost(&xi, 2, &side, &single, &set), best);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn recursive_a_belief_equals_direct_posterior(seed in 0u64..100_000, x in 1usize..4, a in 1usize..4, path in proptest::collection::vec(0usize..4, 1..5)) {
        let inst = random_instance(&RandomSpec { time_varying: true, sparsity: 0.2, ..RandomSpec::uniform(x, a, 2, 2, 4) }, seed);
        let xs: Vec<usize> = path.iter().map(|v| v % x).collect();
        match (a_belief_of_path(&inst, 0, &xs), common::direct_a_posterior(&inst, 0, &xs)) {
            (Ok(b), Some(d)) => prop_assert!(close(b.as_slice(), &d, 1e-12)),
            (Err(_), None) => {}
            (r, d) => prop_assert!(false, "{r:?} vs {d:?}"),
        }
    }

    #[test]
    fn recursive_memory_belief_equals_direct_enumeration(seed in 0u64..100_000, m in 1usize..4, zs in proptest::collection::vec(0usize..2, 0..4)) {
        let inst = random_instance(&RandomSpec { time_varying: true, ..RandomSpec::uniform(2, 2, 2, m, 4) }, seed);
        let mu = memory_belief_of_path(&inst, &inst.receiver, 1, &zs).unwrap();
        prop_assert!(close(mu.pmf().as_slice(), &common::direct_memory_belief(&inst, &inst.receiver, 1, &zs), 1e-12));
    }

    #[test]
    fn recursive_xi_equals_direct_conditioning(seed in 0u64..100_000, zs in proptest::collection::vec(0usize..2, 1..4), salt in 0usize..1000) {
        let inst = random_instance(&RandomSpec::perfect(2, 2, 2, 3), seed);
        let mut set = CanonicalBeliefSet::new();
        let mut xi = XiState::Empty;
        let mut ws = Vec::new();
        for (k, &z) in zs.iter().enumerate() {
            let t = k + 1;
            let pred = predict_xi(&xi, &inst, 0, t, &mut set).unwrap();
            let w = PartialEncoder::from_pairs(pred.support.iter().map(|e| ((e.x, e.b), common::hash_pick(salt as u64, &[t, e.x, e.b], 2))));
            if pred.symbol_prob(&w, z).unwrap() == 0.0 {
                return Ok(());
            }
            xi = condition_xi(&pred, &w, z).unwrap();
            ws.push(w);
        }
        let direct = common::direct_xi(&inst, 0, &ws, &zs, &set).unwrap();
        prop_assert_eq!(direct.len(), xi.entries().len());
        for e in xi.entries() {
            prop_assert!((direct[&(e.x, e.b)] - e.p).abs() <= 1e-12);
        }
    }
}
