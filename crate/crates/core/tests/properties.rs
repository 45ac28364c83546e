mod common;

use common::*;
use pic::cli::{load_into, save_checkpoint};
use pic::critics::{build_adjacency, CriticInput, GraphMode, Graphs, PicCritic, PicSpec, Pooling};
use pic::engine::{collision_forces, step, JointAction};
use pic::evalstat::{bootstrap_ci, moving_average, ttest_2samp};
use pic::learner::Actor;
use pic::numerics::Matrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Group embeddings travel with their agents, so a heterogeneous team's
    /// value is unchanged when agents and their group labels move together.
    #[test]
    fn pic_with_groups_is_permutation_invariant(seed in any::<u64>(), n in 2usize..12, b in 1usize..4) {
        let mut rng = seeded(seed);
        let critic = PicCritic::new(
            PicSpec { obs_dim: 5, act_dim: 5, hidden: vec![16, 16], pooling: Pooling::Max, groups: Some((3, 2)) },
            &mut rng,
        );
        let groups: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let obs = rand_matrix(&mut rng, b * n, 5, -2.0, 2.0);
        let act = rand_matrix(&mut rng, b * n, 5, 0.0, 1.0);
        let perm = rand_perm(&mut rng, n);
        let moved_groups: Vec<usize> = perm.iter().map(|&p| groups[p]).collect();
        let q = |o: &Matrix, a: &Matrix, g: &[usize]| {
            critic.forward(&CriticInput { obs: o, act: a, n_agents: n, groups: Some(g), graphs: &Graphs::Full })
                .unwrap().q().clone()
        };
        let base = q(&obs, &act, &groups);
        let moved = q(&permute_rows(&obs, n, &perm), &permute_rows(&act, n, &perm), &moved_groups);
        for (x, y) in base.iter().zip(moved.iter()) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    /// Nearest-neighbour graphs commute with relabelling the nodes.
    #[test]
    fn knn_adjacency_is_equivariant(seed in any::<u64>(), n in 3usize..20, k in 1usize..3) {
        let mut rng = seeded(seed);
        let pos = rand_matrix(&mut rng, n, 2, -1.0, 1.0);
        let perm = rand_perm(&mut rng, n);
        let a = build_adjacency(pos.view(), GraphMode::Knn(k)).unwrap();
        let b = build_adjacency(permute_rows(&pos, n, &perm).view(), GraphMode::Knn(k)).unwrap();
        let expect = a.permute(&perm);
        prop_assert_eq!(b.matrix(), expect.matrix());
        for row in a.matrix().rows() {
            prop_assert_eq!(row.sum(), k as f64);
        }
    }

    #[test]
    fn contact_forces_cancel_in_pairs(seed in any::<u64>(), n in 2usize..40) {
        let mut rng = seeded(seed);
        let w = crowded_world(&mut rng, n);
        let f = collision_forces(&w);
        let scale = f.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for c in 0..2 {
            prop_assert!(f.column(c).sum().abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn physics_step_is_permutation_equivariant(seed in any::<u64>(), n in 2usize..25) {
        let mut rng = seeded(seed);
        let w = crowded_world(&mut rng, n);
        let a = JointAction::new(rand_matrix(&mut rng, n, 5, 0.0, 1.0)).unwrap();
        let perm = rand_perm(&mut rng, n);
        let direct = step(&w.permute_agents(&perm), &a.permute(&perm)).unwrap();
        let relabelled = step(&w, &a).unwrap().permute_agents(&perm);
        let d = (&direct.pos - &relabelled.pos).fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(d <= 1e-12, "position mismatch {}", d);
    }

    #[test]
    fn speed_never_exceeds_limit(seed in any::<u64>(), n in 2usize..20, limit in 0.05f64..2.0) {
        let mut rng = seeded(seed);
        let mut w = crowded_world(&mut rng, n);
        for b in &mut w.bodies[..n] {
            b.max_speed = limit;
            b.sensitivity = 5.0;
        }
        let a = JointAction::new(rand_matrix(&mut rng, n, 5, 0.0, 1.0)).unwrap();
        for _ in 0..5 {
            w = step(&w, &a).unwrap();
            for v in w.vel.rows().into_iter().take(n) {
                prop_assert!(v.dot(&v).sqrt() <= limit + 1e-12);
            }
        }
    }

    #[test]
    fn swapping_samples_negates_t(a in prop::collection::vec(-50.0f64..50.0, 2..30),
                                  b in prop::collection::vec(-50.0f64..50.0, 2..30)) {
        let ab = ttest_2samp(&a, &b).unwrap();
        let ba = ttest_2samp(&b, &a).unwrap();
        prop_assert!((ab.t + ba.t).abs() <= 1e-12 * ab.t.abs().max(1.0));
        prop_assert!((ab.p - ba.p).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab.p));
    }

    #[test]
    fn bootstrap_interval_brackets_the_mean(seed in any::<u64>(),
                                            a in prop::collection::vec(-5.0f64..5.0, 1..12),
                                            b in prop::collection::vec(-5.0f64..5.0, 1..12)) {
        let ci = bootstrap_ci(&a, &b, 200, 0.95, &mut seeded(seed)).unwrap();
        prop_assert!(ci.lo <= ci.diff && ci.diff <= ci.hi);
    }

    #[test]
    fn moving_average_of_constant_is_constant(c in -100.0f64..100.0, len in 1usize..60, window in 1usize..20) {
        let out = moving_average(&vec![c; len], window);
        prop_assert_eq!(out.len(), if window > len { 1 } else { len - window + 1 });
        for v in out {
            prop_assert!((v - c).abs() <= 1e-12 * c.abs().max(1.0));
        }
    }

    #[test]
    fn checkpoints_round_trip_bitwise(seed in any::<u64>(), obs in 1usize..12, hidden in 1usize..20) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.ckpt");
        let mut rng = seeded(seed);
        let a = Actor::new(obs, 5, &[hidden, hidden], &mut rng);
        let b = Actor::new(obs, 5, &[hidden], &mut rng);
        save_checkpoint(&path, &[("x", &a.params), ("y", &b.params)]).unwrap();
        let mut a2 = Actor::new(obs, 5, &[hidden, hidden], &mut rng);
        let mut b2 = Actor::new(obs, 5, &[hidden], &mut rng);
        load_into(&path, &mut [("x", &mut a2.params), ("y", &mut b2.params)]).unwrap();
        for (p, q) in a.params.iter().chain(b.params.iter()).zip(a2.params.iter().chain(b2.params.iter())) {
            let same = p.value.iter().zip(q.value.iter()).all(|(x, y)| x.to_bits() == y.to_bits());
            prop_assert!(same, "tensor {} differs", p.name);
        }
    }
}
