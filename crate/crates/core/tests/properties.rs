mod common;

use proptest::prelude::*;
use rand::Rng;

use common::rng;
use privmed::dp::{exponential_probabilities, NoiseSource, SparseSession};
use privmed::game::sample_profile_seeded;
use privmed::harness::{
    for_each_profile, generate, naive_regret, random_thresholds, run_algorithm, AlgorithmSpec, GeneratorSpec,
};
use privmed::market::{hinge_price_scalar, security_loss};
use privmed::onedim::{
    make_optin_game, s_extremes, select_equilibrium, selection_min_alpha, smooth_walk, Quality, QuasiAggregativeGame,
    SelectionParams,
};
use privmed::{MixedProfile, PureProfile};

fn linear_onedim(n: usize, seed: u64) -> QuasiAggregativeGame {
    let g = generate(&GeneratorSpec::Linear { n, m: 3, d: 1, with_loss: false }, seed).unwrap();
    QuasiAggregativeGame::from_aggregative(g).unwrap()
}

fn random_profile(n: usize, m: usize, seed: u64) -> PureProfile {
    let mut r = rng(seed);
    PureProfile((0..n).map(|_| r.gen_range(0..m)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ranking_is_sorted_permutation_of_grid(seed in any::<u64>(), slope in -1.0f64..=1.0, n in 3usize..40) {
        let q = make_optin_game(&random_thresholds(n, seed)).unwrap();
        let quality = Quality::Linear { slope, intercept: 0.0 };
        let alpha = selection_min_alpha(&q, 5000.0, 0.05);
        let params = SelectionParams::new(&q, quality.clone(), 4.0 * q.gamma(), 5000.0, alpha, 0.05).unwrap();
        for pair in params.ranked.windows(2) {
            prop_assert!(quality.value(pair[0]) >= quality.value(pair[1]));
        }
        let mut sorted = params.ranked.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assert_eq!(sorted, q.grid(alpha));
    }

    #[test]
    fn walk_moves_aggregator_by_at_most_one_player(seed in any::<u64>(), n in 2usize..30) {
        let q = linear_onedim(n, seed);
        let hi = random_profile(n, 3, seed ^ 1);
        let lo = random_profile(n, 3, seed ^ 2);
        let walk = smooth_walk(&hi, &lo).unwrap();
        prop_assert_eq!(&walk[0], &lo);
        prop_assert_eq!(&walk[n], &hi);
        for pair in walk.windows(2) {
            let gap = (q.aggregate(pair[0].actions()) - q.aggregate(pair[1].actions())).abs();
            prop_assert!(gap <= q.gamma_eff() + 1e-12);
        }
    }

    #[test]
    fn extremes_bracket_every_abr_profile(seed in any::<u64>(), n in 1usize..6, s in -1.0f64..1.0, xi in 0.0f64..0.5) {
        let q = linear_onedim(n, seed);
        let ex = s_extremes(&q, s, xi).unwrap();
        let sets: Vec<Vec<usize>> = q.players().iter().map(|p| p.abr_set(&[s], xi)).collect();
        for_each_profile(n, q.m(), |x| {
            if x.iter().zip(&sets).all(|(a, set)| set.contains(a)) {
                let v = q.aggregate(x);
                assert!(ex.s_min <= v + 1e-12 && v <= ex.s_max + 1e-12);
            }
        }).unwrap();
    }

    #[test]
    fn selected_profile_lies_in_abr_sets(seed in any::<u64>(), n in 3usize..30) {
        let q = make_optin_game(&random_thresholds(n, seed)).unwrap();
        let alpha = selection_min_alpha(&q, 2000.0, 0.05);
        let params = SelectionParams::new(&q, Quality::identity(), 4.0 * q.gamma(), 2000.0, alpha, 0.05).unwrap();
        let out = select_equilibrium(&q, &params, &mut NoiseSource::noisy(seed)).unwrap();
        if let (Some(x), Some(by)) = (out.outcome.profile(), out.transcript.selected) {
            let s = params.ranked[by.rank()];
            for (i, p) in q.players().iter().enumerate() {
                prop_assert!(p.abr_set(&[s], params.xi).contains(&x[i]));
            }
        }
    }

    #[test]
    fn naive_and_incremental_regret_agree(seed in any::<u64>(), n in 1usize..8, m in 2usize..5, d in 1usize..4) {
        let g = generate(&GeneratorSpec::Linear { n, m, d, with_loss: false }, seed).unwrap();
        let x = random_profile(n, m, seed.wrapping_add(7));
        let fast = g.regret(&x).unwrap().per_player;
        for (a, b) in naive_regret(&g, x.actions()).iter().zip(&fast) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn translation_inequalities_hold(seed in any::<u64>(), n in 1usize..10, shift in -0.5f64..0.5) {
        let g = generate(&GeneratorSpec::Anonymous { n, m: 3, with_loss: false }, seed).unwrap();
        let x = random_profile(n, 3, seed ^ 9);
        let shifted: Vec<f64> = g.aggregator(&x).unwrap().iter().map(|v| v + shift).collect();
        prop_assert_eq!(g.translate_checks(&x, 0.1, &shifted, 1e-9).unwrap().violations(), 0);
    }

    #[test]
    fn reported_bounds_match_formulas(seed in any::<u64>(), n in 20usize..200) {
        let g = generate(&GeneratorSpec::Threshold { n }, seed).unwrap();
        let q = QuasiAggregativeGame::from_aggregative(g.clone()).unwrap();
        let psumm = AlgorithmSpec::Psummnash { epsilon: 50.0, alpha: None, beta: 0.05 };
        let r = run_algorithm(&psumm, &g, &mut NoiseSource::noisy(seed)).unwrap();
        let alpha = r.parameters["alpha"].as_f64().unwrap();
        prop_assert!((r.bound - (10.0 * alpha + 2.0 * g.gamma_eff())).abs() <= 1e-12);

        let select = AlgorithmSpec::Select { zeta: None, epsilon: 500.0, alpha: None, beta: 0.05, quality: Quality::identity() };
        let r = run_algorithm(&select, &g, &mut NoiseSource::noisy(seed)).unwrap();
        let alpha = r.parameters["alpha"].as_f64().unwrap();
        let zeta = r.parameters["zeta"].as_f64().unwrap();
        prop_assert!((r.bound - (10.0 * alpha + 3.0 * q.gamma_eff() + zeta)).abs() <= 1e-12);
    }

    #[test]
    fn hinge_price_is_monotone_and_loss_capped(a in -100.0f64..100.0, b in -100.0f64..100.0, lambda in 0.1f64..50.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (p, q) = (hinge_price_scalar(lo, lambda), hinge_price_scalar(hi, lambda));
        prop_assert!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&q) && p <= q);
        prop_assert!(security_loss(a, lambda) <= lambda / 16.0 + 1e-9);
        prop_assert!(security_loss(a, lambda) >= 0.0);
    }

    #[test]
    fn sparse_session_stops_after_budget(seed in any::<u64>(), budget in 1usize..5, queries in prop::collection::vec(-3.0f64..3.0, 1..60)) {
        let mut src = NoiseSource::noisy(seed);
        let mut session = SparseSession::new(1.0, 0.0, budget, 1.0, &mut src).unwrap();
        let mut below = 0;
        for &q in &queries {
            if session.is_halted() {
                prop_assert!(session.answer(q, &mut src).is_err());
                break;
            }
            below += session.answer(q, &mut src).unwrap().is_below() as usize;
        }
        prop_assert!(below <= budget);
        prop_assert_eq!(below, session.count());
    }

    #[test]
    fn softmax_is_a_monotone_distribution(scores in prop::collection::vec(-5.0f64..5.0, 1..12), eps in 0.01f64..20.0) {
        let p = exponential_probabilities(&scores, eps, 1.0);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if scores[i] > scores[j] {
                    prop_assert!(p[i] >= p[j]);
                }
            }
        }
    }

    #[test]
    fn rounding_respects_supports(seed in any::<u64>(), rows in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 3), 1..20)) {
        let rows: Vec<Vec<f64>> = rows.into_iter().map(|mut r| { if r.iter().all(|&v| v == 0.0) { r[0] = 1.0; } r }).collect();
        let p = MixedProfile::normalized(rows).unwrap();
        let x = sample_profile_seeded(&p, seed);
        for (i, &a) in x.actions().iter().enumerate() {
            prop_assert!(p.row(i)[a] > 0.0);
        }
        prop_assert_eq!(x, sample_profile_seeded(&p, seed));
    }
}
