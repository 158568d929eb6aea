//! Properties of the ranking layer: candidates, scheduling, loss and training.

use capdr::logic::{Clause, Cube, Lit, Var};
use capdr::policy::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn arb_state_cube(max_vars: usize) -> impl Strategy<Value = Cube> {
    prop::collection::vec(any::<bool>(), 1..=max_vars).prop_map(|bits| Cube::from_state(&bits))
}

fn arb_cube_and_core() -> impl Strategy<Value = (Cube, Option<Cube>)> {
    arb_state_cube(8).prop_flat_map(|d| {
        let n = d.len();
        let lits = d.lits().to_vec();
        (
            Just(d),
            prop::option::of(prop::collection::vec(any::<bool>(), n).prop_map(move |keep| {
                Cube::new(
                    lits.iter()
                        .zip(&keep)
                        .filter(|(_, k)| **k)
                        .map(|(l, _)| *l)
                        .collect(),
                )
            })),
        )
    })
}

proptest! {
    #[test]
    fn candidates_block_the_target((d, core) in arb_cube_and_core(), budget in 0usize..20) {
        let cands = generate_blocker_candidates(&d, core.as_ref(), budget);
        prop_assert!(cands.contains(&d.negate()), "fallback missing");
        prop_assert!(cands.len() <= budget + 2);
        for c in &cands {
            prop_assert!(!c.is_empty());
            // ¬C is a sub-cube of d, so C excludes every state of d
            prop_assert!(c.negate().is_subcube_of(&d));
        }
        let mut seen = cands.clone();
        seen.sort();
        seen.dedup();
        prop_assert_eq!(seen.len(), cands.len());
    }

    #[test]
    fn push_order_is_a_level_sorted_permutation(
        levels in prop::collection::vec(1usize..5, 0..12),
        seed in any::<u64>(),
    ) {
        let clauses: Vec<Clause> = (0..levels.len())
            .map(|i| Clause::new(vec![Lit::new(Var(i as u32), i % 2 == 0)]))
            .collect();
        let views: Vec<PushView> = clauses
            .iter()
            .zip(&levels)
            .enumerate()
            .map(|(i, (c, &level))| PushView { clause: c, level, stamp: i as u64, features: [i as f64; FEATURE_DIM] })
            .collect();
        let order = order_push_candidates(&views, &Ranker::Random { seed });
        let mut sorted = order.clone();
        sorted.sort();
        prop_assert_eq!(sorted, (0..views.len()).collect::<Vec<_>>());
        prop_assert!(order.windows(2).all(|w| views[w[0]].level <= views[w[1]].level));
    }

    #[test]
    fn model_text_round_trips(w in prop::collection::vec(-1e6f64..1e6, FEATURE_DIM), tag in "[a-z0-9_]{0,12}") {
        let m = PolicyModel::new(w, tag);
        let back = PolicyModel::from_text(&m.to_text()).unwrap();
        prop_assert_eq!(back, m);
    }
}

#[test]
fn fairness_bounds_the_wait_of_every_obligation() {
    // A ranker that always prefers the newest obligation starves old ones
    // unless the fairness override kicks in.
    let mut w = vec![0.0; FEATURE_DIM];
    w[2] = -1.0; // recency: older means lower score
    let adversary = Ranker::Linear(PolicyModel::new(w, "adversary"));
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for bound in [1u32, 4, 16] {
        struct Pending {
            cube: Cube,
            stamp: u64,
            skipped: u32,
            waited: u64,
        }
        let mut queue: Vec<Pending> = Vec::new();
        let mut next = 0u64;
        let mut max_queue = 0usize;
        let mut worst = 0u64;
        for step in 0..4000u64 {
            // one arrival per step on average, occasionally two
            for _ in 0..rng.gen_range(0..=2) {
                if queue.len() < 24 {
                    let bits: Vec<bool> = (0..6).map(|_| rng.gen()).collect();
                    queue.push(Pending {
                        cube: Cube::from_state(&bits),
                        stamp: next,
                        skipped: 0,
                        waited: 0,
                    });
                    next += 1;
                }
            }
            if queue.is_empty() {
                continue;
            }
            max_queue = max_queue.max(queue.len());
            let views: Vec<ObligationView> = queue
                .iter()
                .map(|p| {
                    let mut f = [0.0; FEATURE_DIM];
                    f[2] = (step - p.stamp.min(step)) as f64;
                    f[9] = 1.0;
                    ObligationView {
                        level: 1,
                        stamp: p.stamp,
                        cube: &p.cube,
                        skipped: p.skipped,
                        features: f,
                    }
                })
                .collect();
            let i = select_obligation(&views, &adversary, bound).unwrap();
            let served = queue.remove(i);
            worst = worst.max(served.waited);
            for p in &mut queue {
                p.skipped += 1;
                p.waited += 1;
            }
        }
        let limit = bound as u64 + max_queue as u64;
        assert!(worst <= limit, "bound {bound}: waited {worst} > {limit}");
    }
}

#[test]
fn fairness_is_exact_for_a_single_starved_obligation() {
    let mut w = vec![0.0; FEATURE_DIM];
    w[0] = 1.0;
    let ranker = Ranker::Linear(PolicyModel::new(w, "levels"));
    let starved = Cube::from_state(&[false]);
    let fresh = Cube::from_state(&[true]);
    for bound in [1u32, 3, 64] {
        let mut skipped = 0u32;
        let mut rounds = 0;
        loop {
            let mut low = [0.0; FEATURE_DIM];
            low[0] = 0.0;
            let mut high = [0.0; FEATURE_DIM];
            high[0] = 5.0;
            let views = [
                ObligationView {
                    level: 0,
                    stamp: 0,
                    cube: &starved,
                    skipped,
                    features: low,
                },
                ObligationView {
                    level: 5,
                    stamp: 1 + rounds,
                    cube: &fresh,
                    skipped: 0,
                    features: high,
                },
            ];
            if select_obligation(&views, &ranker, bound).unwrap() == 0 {
                break;
            }
            skipped += 1;
            rounds += 1;
        }
        assert_eq!(rounds, bound as u64);
    }
}

fn random_pairs(rng: &mut impl Rng, n: usize) -> Vec<TrainingPair> {
    (0..n)
        .map(|_| {
            let mut a = [0.0; FEATURE_DIM];
            let mut b = [0.0; FEATURE_DIM];
            for k in 0..FEATURE_DIM {
                a[k] = rng.gen_range(-3.0..3.0);
                b[k] = rng.gen_range(-3.0..3.0);
            }
            TrainingPair {
                preferred: a,
                other: b,
            }
        })
        .collect()
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let n = rng.gen_range(1..20);
        let pairs = random_pairs(&mut rng, n);
        let lambda = rng.gen_range(0.0..1.0);
        let theta: Vec<f64> = (0..FEATURE_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = pairwise_gradient(&theta, &pairs, lambda);
        for k in 0..FEATURE_DIM {
            let h = 1e-6;
            let mut up = theta.clone();
            let mut dn = theta.clone();
            up[k] += h;
            dn[k] -= h;
            let fd = (pairwise_loss(&up, &pairs, lambda) - pairwise_loss(&dn, &pairs, lambda)) / (2.0 * h);
            let rel = (fd - g[k]).abs() / g[k].abs().max(1.0);
            assert!(rel <= 1e-5, "component {k}: analytic {} vs numeric {fd}", g[k]);
        }
    }
}

#[test]
fn training_separates_separable_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let truth: Vec<f64> = (0..FEATURE_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut pairs = random_pairs(&mut rng, 200);
    for p in &mut pairs {
        let m: f64 = (0..FEATURE_DIM)
            .map(|k| truth[k] * (p.preferred[k] - p.other[k]))
            .sum();
        if m < 0.0 {
            std::mem::swap(&mut p.preferred, &mut p.other);
        }
    }
    let (model, report) = train(&pairs, 1e-6, 300, 1, "separable").unwrap();
    assert!(report.losses.windows(2).all(|w| w[1] <= w[0]), "loss went up");
    let correct = pairs
        .iter()
        .filter(|p| model.score(&p.preferred).unwrap() > model.score(&p.other).unwrap())
        .count();
    assert!(correct as f64 >= 0.97 * pairs.len() as f64, "{correct}/200");
}

#[test]
fn training_is_deterministic_per_seed() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pairs = random_pairs(&mut rng, 30);
    let a = train(&pairs, 1e-3, 50, 7, "x").unwrap().0;
    let b = train(&pairs, 1e-3, 50, 7, "x").unwrap().0;
    assert_eq!(a, b);
    assert_eq!(train(&[], 0.0, 1, 0, "x").unwrap_err(), PolicyError::NoPairs);
}

#[test]
fn pairs_prefer_the_cheaper_action() {
    let cand = |key: &str, v: f64| RankedCandidate {
        key: key.into(),
        features: [v; FEATURE_DIM],
    };
    let ev = |chosen: usize, cost: CostToGo| RankingEvent {
        cp: ChoicePoint::Blocker,
        context_hash: "ctx".into(),
        candidates: vec![cand("a", 1.0), cand("b", 2.0)],
        chosen,
        guard_outcomes: vec![None, None],
        cost_to_go: Some(cost),
        step: 0,
        at_secs: 0.0,
    };
    let events = [ev(0, CostToGo::Observed(5.0)), ev(1, CostToGo::Observed(2.0))];
    let pairs = label_pairs(&events, FailPenalty::Fixed);
    assert!(!pairs.is_empty());
    assert!(pairs.iter().all(|p| p.preferred == [2.0; FEATURE_DIM]));
    let events = [ev(0, CostToGo::Failed), ev(1, CostToGo::Observed(2.0))];
    let pairs = label_pairs(
        &events,
        FailPenalty::Par {
            factor: 2.0,
            budget_secs: 10.0,
        },
    );
    assert!(pairs.iter().all(|p| p.preferred == [2.0; FEATURE_DIM]));
}
