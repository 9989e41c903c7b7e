use approx::{assert_abs_diff_eq, assert_relative_eq};
use cdm_core::experts::ExpertMatrix;
use cdm_core::metrics::{crossover_step, CROSSOVER_BURN_IN, CROSSOVER_WINDOW};
use cdm_core::perlin::{Context, PerlinBandit};
use cdm_core::policy::{wmv_scores, Exp4p, MetaCmab};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn matrix(n: usize, k: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0..=1.0f64, k), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn landscape_values_are_bounded_and_invert(seed in any::<u64>(), x in 0.0..=1.0f64, y in 0.0..=1.0f64) {
        let b = PerlinBandit::sample(3, 5, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let c = Context::new(x, y).unwrap();
        let inv = b.inverted();
        for k in 0..3 {
            let v = b.value(k, &c).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
            assert_abs_diff_eq!(v + inv.value(k, &c).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn wmv_ignores_expert_order(rows in matrix(4, 3), conf in prop::collection::vec(0.01..0.99f64, 4)) {
        let a = ExpertMatrix::from_rows(&rows).unwrap();
        let ca = ExpertMatrix::broadcast(&conf, 3).unwrap();
        let order = [2, 0, 3, 1];
        let b = a.select_rows(&order).unwrap();
        let cb = ca.select_rows(&order).unwrap();
        let (sa, sb) = (wmv_scores(&a, Some(&ca)).unwrap(), wmv_scores(&b, Some(&cb)).unwrap());
        for (x, y) in sa.iter().zip(&sb) {
            assert_relative_eq!(*x, *y, epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn exp4p_probabilities_form_a_distribution(
        rows in matrix(3, 4),
        w in prop::collection::vec(-5.0..5.0f64, 3),
        conf in prop::collection::vec(0.0..=1.0f64, 3),
    ) {
        prop_assume!(rows.iter().all(|r| r.iter().sum::<f64>() > 1e-6));
        let mut p = Exp4p::new(3, 4, 100, 0.1, 100.0).unwrap();
        p.set_log_weights(w).unwrap();
        let advice = ExpertMatrix::from_rows(&rows).unwrap();
        let c = ExpertMatrix::broadcast(&conf, 4).unwrap();
        for confidence in [None, Some(&c)] {
            let (probs, normalized) = p.probabilities(&advice, confidence).unwrap();
            prop_assert!(probs.iter().all(|&q| q >= 0.0));
            assert_abs_diff_eq!(probs.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            for row in normalized.chunks(4) {
                assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn linucb_matches_a_direct_ridge_solve(
        ys in prop::collection::vec(prop::collection::vec(0.0..=1.0f64, 3), 1..40),
        rs in prop::collection::vec(prop::bool::ANY, 40),
    ) {
        let mut m = MetaCmab::with_prior_diagonal(&[1.0; 3], 1.0).unwrap();
        let mut a = DMatrix::<f64>::identity(3, 3);
        let mut b = DVector::<f64>::zeros(3);
        for (y, &r) in ys.iter().zip(&rs) {
            let r = f64::from(u8::from(r));
            m.update_context(y, r).unwrap();
            let v = DVector::from_column_slice(y);
            a += &v * v.transpose();
            b += v * r;
        }
        let direct = a.lu().solve(&b).unwrap();
        for (x, y) in m.theta().iter().zip(direct.iter()) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-9);
        }
    }

    #[test]
    fn crossover_of_a_dominating_series(offset in 0.0..1.0f64, len in 60usize..200) {
        let reference = vec![0.5; len];
        let above: Vec<f64> = reference.iter().map(|r| r + offset).collect();
        prop_assert_eq!(crossover_step(&above, &reference), Some(CROSSOVER_BURN_IN));
        let below: Vec<f64> = reference.iter().map(|r| r - offset - 1e-9).collect();
        prop_assert_eq!(crossover_step(&below, &reference), None);
        let short = &above[..CROSSOVER_BURN_IN + CROSSOVER_WINDOW - 1];
        prop_assert_eq!(crossover_step(short, &reference), None);
    }
}
