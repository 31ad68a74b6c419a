use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crowdvet::consensus::wmsr_update;
use crowdvet::estimation::{weight_from_adjacency, BinaryMatrix};
use crowdvet::flocking::saturate;
use crowdvet::threat::{AdversaryStrategy, ObservationChannel};
use crowdvet::topology::{
    algebraic_connectivity, tau_pair, vertex_connectivity, CommGraph, Role, RoleAssignment,
};
use crowdvet::trust::{
    all_correct, find_spoofed_robots, ground_truth, rounds_bound_theorem1, ProtocolRun, TrustValue, TrustVector,
    World,
};

fn graph(n: usize, bits: &[bool]) -> CommGraph {
    let mut g = CommGraph::new(n).unwrap();
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            if bits[k] {
                g.add_edge(i, j).unwrap();
            }
            k += 1;
        }
    }
    g
}

fn arb_graph(max_n: usize) -> impl Strategy<Value = CommGraph> {
    (2..=max_n).prop_flat_map(|n| {
        prop::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| graph(n, &bits))
    })
}

/// Legitimate, hidden or spoofed roles; no spawners so no spawn map is needed.
fn arb_roles(n: usize) -> impl Strategy<Value = RoleAssignment> {
    prop::collection::vec(prop_oneof![4 => Just(Role::Legitimate), 1 => Just(Role::Hidden), 1 => Just(Role::Spoofed)], n)
        .prop_map(RoleAssignment::new)
}

fn arb_world(max_n: usize) -> impl Strategy<Value = (CommGraph, RoleAssignment)> {
    arb_graph(max_n).prop_flat_map(|g| {
        let n = g.n();
        (Just(g), arb_roles(n))
    })
}

fn noisy_world(g: CommGraph, roles: RoleAssignment, eps: f64) -> World {
    World::new(g, roles, ObservationChannel::bernoulli(eps).unwrap(), AdversaryStrategy::default()).unwrap()
}

fn roles_have_positive_tau(world: &World) -> bool {
    matches!(crowdvet::topology::min_tau(&world.graph, &world.roles), Ok(t) if t > 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn neighborhoods_are_symmetric_and_self_inclusive(g in arb_graph(12)) {
        for i in 0..g.n() {
            let ni = g.neighbors(i).unwrap();
            prop_assert!(ni.contains(&i));
            for &j in &ni {
                prop_assert!(g.neighbors(j).unwrap().contains(&i));
            }
        }
    }

    #[test]
    fn tau_is_symmetric((g, roles) in arb_world(12)) {
        for i in roles.legitimate() {
            for j in roles.legitimate().into_iter().filter(|&j| g.has_edge(i, j)) {
                prop_assert_eq!(tau_pair(&g, &roles, i, j).unwrap(), tau_pair(&g, &roles, j, i).unwrap());
            }
        }
    }

    #[test]
    fn bitset_vote_matches_reference((g, roles) in arb_world(10), seed in any::<u64>(), rounds in 1usize..12) {
        let world = noisy_world(g, roles, 0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut run = ProtocolRun::new(&world, &mut rng);
        run.advance_by(rounds, &mut rng);
        prop_assert_eq!(run.final_vectors(), run.final_vectors_reference());
    }

    #[test]
    fn same_seed_same_vectors((g, roles) in arb_world(10), seed in any::<u64>()) {
        let world = noisy_world(g, roles, 0.25);
        let a = find_spoofed_robots(&world, 7, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = find_spoofed_robots(&world, 7, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn owner_entry_is_trust((g, roles) in arb_world(10), seed in any::<u64>()) {
        let world = noisy_world(g, roles, 0.2);
        let out = find_spoofed_robots(&world, 5, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        for (i, v) in &out {
            prop_assert_eq!(v.owner(), *i);
            prop_assert_eq!(v.get(*i), TrustValue::Trust);
        }
    }

    #[test]
    fn noiseless_channel_gives_ground_truth((g, roles) in arb_world(10), seed in any::<u64>()) {
        let world = World::new(g, roles, ObservationChannel::noiseless(), AdversaryStrategy::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut run = ProtocolRun::new(&world, &mut rng);
        run.advance(&mut rng);
        let out = run.interim_vectors();
        let truth: BTreeMap<_, _> = world.roles.legitimate().into_iter().map(|i| (i, ground_truth(&world, i))).collect();
        for (i, v) in &truth {
            prop_assert_eq!(out.get(i), Some(v));
        }
        if roles_have_positive_tau(&world) {
            let fin = find_spoofed_robots(&world, 1, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            prop_assert!(all_correct(&world, &fin));
        }
    }

    #[test]
    fn wmsr_stays_in_honest_hull(
        own in -10.0f64..10.0,
        honest in prop::collection::vec(-10.0f64..10.0, 2..8),
        adversarial in prop::collection::vec(-1e3f64..1e3, 0..=2),
    ) {
        let f = 2;
        let mut all = honest.clone();
        all.extend_from_slice(&adversarial);
        let x = wmsr_update(own, &all, f);
        let lo = honest.iter().copied().fold(own, f64::min);
        let hi = honest.iter().copied().fold(own, f64::max);
        prop_assert!(x >= lo - 1e-12 && x <= hi + 1e-12, "{x} outside [{lo}, {hi}]");
    }

    #[test]
    fn saturate_caps_norm(u in prop::array::uniform3(-100.0f64..100.0), u_max in 0.1f64..50.0) {
        let s = saturate(u, u_max);
        let norm = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
        prop_assert!(norm <= u_max * (1.0 + 1e-12));
        let orig = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        if orig <= u_max {
            prop_assert_eq!(s, u);
        }
    }

    #[test]
    fn ternary_round_trip(n in 1usize..20, owner_seed in any::<usize>(), vals in prop::collection::vec(0u8..3, 20)) {
        let owner = owner_seed % n;
        let mut v = TrustVector::new(owner, n);
        for j in (0..n).filter(|&j| j != owner) {
            v.set(j, [TrustValue::Trust, TrustValue::Distrust, TrustValue::NoData][vals[j] as usize]);
        }
        prop_assert_eq!(TrustVector::from_ternary(owner, &v.to_ternary()).unwrap(), v);
    }

    #[test]
    fn edge_list_round_trip(g in arb_graph(15)) {
        prop_assert_eq!(CommGraph::from_edge_list(&g.to_edge_list()).unwrap(), g);
    }

    #[test]
    fn connectivity_inequalities(g in arb_graph(10)) {
        let n = g.n();
        let kappa = vertex_connectivity(&g);
        let min_deg = (0..n).map(|i| g.degree(i)).min().unwrap();
        prop_assert!(kappa <= min_deg);
        if g.edge_count() < n * (n - 1) / 2 {
            let l2 = algebraic_connectivity(&g).unwrap();
            prop_assert!(l2 <= kappa as f64 + 1e-9, "λ₂ {l2} > κ {kappa}");
        }
    }

    #[test]
    fn uniform_weights_are_row_stochastic(g in arb_graph(12)) {
        let w = weight_from_adjacency(&BinaryMatrix::from_graph(&g)).unwrap();
        prop_assert!(w.is_row_stochastic(1e-12));
    }

    #[test]
    fn bound_monotone_in_tau_and_epsilon(
        l in 2usize..200,
        extra in 0usize..200,
        tau in 1i64..50,
        eps in 0.02f64..0.45,
        delta in 0.01f64..0.5,
    ) {
        let n = l + extra;
        let d_l = l;
        let base = rounds_bound_theorem1(l, n, eps, tau, d_l, delta).unwrap();
        prop_assert!(rounds_bound_theorem1(l, n, eps, tau + 1, d_l, delta).unwrap() <= base);
        prop_assert!(rounds_bound_theorem1(l, n, (eps + 0.01).min(0.499), tau, d_l, delta).unwrap() <= base);
    }
}
