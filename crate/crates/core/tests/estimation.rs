mod common;

use common::{complete, grid_argmax, random_items, simulate_pattern};
use proptest::prelude::*;
use psybench::estimation::{
    apply_scale, combine_inverse_variance, estimate_many, estimate_theta_mle, percent_correct, EstimateMethod,
    ProficiencyEstimate, ScaleTransform,
};
use psybench::model::{score_and_information, ItemParameters, ItemSet, ResponsePattern, ScoredResponse};
use psybench::{Error, Execution};

fn est(theta: f64, se: f64) -> ProficiencyEstimate {
    ProficiencyEstimate {
        taker_id: "t".into(),
        theta,
        se,
        ci_low: theta - 1.96 * se,
        ci_high: theta + 1.96 * se,
        method: EstimateMethod::Mle,
        boundary_flag: false,
    }
}

#[test]
fn single_correct_item_sits_on_the_upper_clamp() {
    let items = ItemSet::new(vec![ItemParameters::two_pl("i", 1.0, 0.0).unwrap()]).unwrap();
    let p = ResponsePattern::new("t", vec![ScoredResponse::new("i", 1)]).unwrap();
    let e = estimate_theta_mle(&p, &items).unwrap();
    assert_eq!(e.theta, 6.0);
    assert!(e.boundary_flag);
    assert!(e.se.is_finite() && e.se > 0.0);
    let p = ResponsePattern::new("t", vec![ScoredResponse::new("i", 0)]).unwrap();
    let e = estimate_theta_mle(&p, &items).unwrap();
    assert_eq!(e.theta, -6.0);
    assert!(e.boundary_flag);
}

#[test]
fn empty_pattern_is_a_contract_error() {
    let items = ItemSet::new(vec![ItemParameters::two_pl("i", 1.0, 0.0).unwrap()]).unwrap();
    let p = ResponsePattern::new("t", vec![ScoredResponse::missing("i")]).unwrap();
    assert!(matches!(estimate_theta_mle(&p, &items), Err(Error::Contract(_))));
}

#[test]
fn interior_estimates_are_stationary_and_match_the_grid() {
    let bank = random_items(30, 11);
    let set = ItemSet::new(bank.clone()).unwrap();
    let patterns: Vec<ResponsePattern> = (0..40)
        .map(|i| simulate_pattern(&bank, -2.0 + 0.1 * i as f64, 5, i))
        .collect();
    for (p, e) in patterns.iter().zip(estimate_many(&patterns, &set, Execution::Parallel)) {
        let e = e.unwrap();
        assert!((e.theta - grid_argmax(p, &set)).abs() <= 5e-4, "{e:?}");
        if !e.boundary_flag {
            let (score, _) = score_and_information(p, &set, e.theta).unwrap();
            assert!(score.abs() < 1e-8, "score {score}");
            assert!((e.ci_high - e.ci_low - 2.0 * 1.96 * e.se).abs() < 1e-12);
        }
    }
}

#[test]
fn sampling_distribution_at_fixed_theta() {
    // 1000 patterns of 60 mixed items at θ = 0.8.
    let bank = random_items(60, 21);
    let set = ItemSet::new(bank.clone()).unwrap();
    let patterns: Vec<ResponsePattern> = (0..1000).map(|i| simulate_pattern(&bank, 0.8, 99, i)).collect();
    let est: Vec<ProficiencyEstimate> = estimate_many(&patterns, &set, Execution::Parallel)
        .into_iter()
        .map(Result::unwrap)
        .collect();
    let n = est.len() as f64;
    let mean = est.iter().map(|e| e.theta).sum::<f64>() / n;
    let sd = (est.iter().map(|e| (e.theta - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mean_se = est.iter().map(|e| e.se).sum::<f64>() / n;
    assert!((mean - 0.8).abs() <= 0.05, "mean {mean}");
    assert!((sd / mean_se - 1.0).abs() <= 0.15, "sd {sd} se {mean_se}");
}

#[test]
fn parallel_and_sequential_estimates_agree() {
    let bank = random_items(25, 3);
    let set = ItemSet::new(bank.clone()).unwrap();
    let patterns: Vec<ResponsePattern> = (0..200).map(|i| simulate_pattern(&bank, 0.0, 8, i)).collect();
    let a: Vec<_> = estimate_many(&patterns, &set, Execution::Sequential).into_iter().map(Result::unwrap).collect();
    let b: Vec<_> = estimate_many(&patterns, &set, Execution::Parallel).into_iter().map(Result::unwrap).collect();
    assert_eq!(a, b);
}

#[test]
fn percent_correct_examples() {
    let items = vec![
        ItemParameters::two_pl("x", 1.0, 0.0).unwrap(),
        ItemParameters::three_pl("y", 1.0, 0.0, 0.2).unwrap(),
        ItemParameters::gpc("z", 1.0, 0.0, vec![0.3, -0.3]).unwrap(),
    ];
    let set = ItemSet::new(items.clone()).unwrap();
    assert_eq!(percent_correct(&complete(&items, &[1, 0, 1]), &set).unwrap(), 0.5);
    assert_eq!(percent_correct(&complete(&items, &[1, 1, 2]), &set).unwrap(), 1.0);
    let none = ResponsePattern::new("t", vec![ScoredResponse::missing("x")]).unwrap();
    assert!(percent_correct(&none, &set).is_err());
}

#[test]
fn percent_correct_matches_recount() {
    let bank = random_items(50, 17);
    let set = ItemSet::new(bank.clone()).unwrap();
    for i in 0..100 {
        let mut p = simulate_pattern(&bank, 0.3, 4, i);
        for (j, r) in p.responses.iter_mut().enumerate() {
            if (i as usize + j).is_multiple_of(7) {
                r.category = None;
            }
        }
        let mut earned = 0;
        let mut possible = 0;
        for r in &p.responses {
            if let Some(c) = r.category {
                earned += c;
                possible += set.get(&r.item_id).unwrap().num_categories() - 1;
            }
        }
        assert_eq!(percent_correct(&p, &set).unwrap(), earned as f64 / possible as f64);
    }
}

#[test]
fn weighting_fixture_and_equal_components() {
    let w = combine_inverse_variance(&[est(1.0, 0.1), est(2.0, 0.2)]).unwrap();
    assert!((w.theta - 1.2).abs() <= 1e-12);
    assert!((w.se - 1.0 / 125f64.sqrt()).abs() <= 1e-12);
    assert_eq!(w.n_components, 2);
    let w = combine_inverse_variance(&vec![est(0.4, 0.3); 9]).unwrap();
    assert!((w.theta - 0.4).abs() < 1e-15);
    assert!((w.se - 0.1).abs() < 1e-15);
    let single = combine_inverse_variance(&[est(0.7, 0.25)]).unwrap();
    assert_eq!((single.theta, single.se), (0.7, 0.25));
}

#[test]
fn weighting_rejects_invalid_components() {
    assert!(combine_inverse_variance(&[]).is_err());
    let mut b = est(6.0, 1.0);
    b.boundary_flag = true;
    assert!(matches!(combine_inverse_variance(&[est(0.0, 0.2), b]), Err(Error::Contract(_))));
    assert!(combine_inverse_variance(&[est(0.0, 0.0)]).is_err());
}

#[test]
fn scale_examples() {
    let t = ScaleTransform::default();
    assert_eq!(t.value(0.0), 500.0);
    let s = apply_scale(&est(1.5, 0.2), &t);
    assert!((s.theta - 650.0).abs() < 1e-12 && (s.se - 20.0).abs() < 1e-12);
    assert!(ScaleTransform::new(500.0, 0.0, 0.0, 1.0).is_err());
}

fn components() -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((-4.0f64..4.0, 0.05f64..1.5), 1..12)
}

proptest! {
    #[test]
    fn weighting_is_permutation_invariant(comps in components(), rot in 0usize..12) {
        let list: Vec<_> = comps.iter().map(|&(t, s)| est(t, s)).collect();
        let mut perm = list.clone();
        perm.reverse();
        let k = rot % perm.len();
        perm.rotate_left(k);
        let a = combine_inverse_variance(&list).unwrap();
        let b = combine_inverse_variance(&perm).unwrap();
        prop_assert_eq!(a.theta.to_bits(), b.theta.to_bits());
        prop_assert_eq!(a.se.to_bits(), b.se.to_bits());
    }

    #[test]
    fn weighted_estimate_in_hull_with_smaller_se(comps in components()) {
        let list: Vec<_> = comps.iter().map(|&(t, s)| est(t, s)).collect();
        let w = combine_inverse_variance(&list).unwrap();
        let lo = comps.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
        let hi = comps.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(w.theta >= lo - 1e-12 && w.theta <= hi + 1e-12);
        if comps.len() >= 2 {
            prop_assert!(comps.iter().all(|c| w.se < c.1));
        }
    }

    #[test]
    fn scale_round_trips_and_preserves_order(
        thetas in proptest::collection::vec(-6.0f64..6.0, 2..30),
        tm in 100.0f64..900.0, tsd in 1.0f64..200.0, sm in -1.0f64..1.0, ssd in 0.5f64..2.0,
    ) {
        let t = ScaleTransform::new(tm, tsd, sm, ssd).unwrap();
        let inv = t.inverse();
        let mut raw_order: Vec<usize> = (0..thetas.len()).collect();
        raw_order.sort_by(|&i, &j| thetas[i].total_cmp(&thetas[j]).then(i.cmp(&j)));
        let scaled: Vec<f64> = thetas.iter().map(|&x| t.value(x)).collect();
        let mut scaled_order: Vec<usize> = (0..thetas.len()).collect();
        scaled_order.sort_by(|&i, &j| scaled[i].total_cmp(&scaled[j]).then(i.cmp(&j)));
        prop_assert_eq!(raw_order, scaled_order);
        for (&x, &y) in thetas.iter().zip(&scaled) {
            prop_assert!((inv.value(y) - x).abs() <= 1e-12 * x.abs().max(1.0) * (tsd / ssd).max(1.0));
        }
    }

    #[test]
    fn another_correct_answer_never_lowers_theta(
        params in proptest::collection::vec((0.3f64..2.5, -2.5f64..2.5, 0.0f64..0.3), 2..20),
        cats in proptest::collection::vec(0usize..2, 20),
        extra in (0.3f64..2.5, -2.5f64..2.5, 0.0f64..0.3),
    ) {
        let mut items: Vec<ItemParameters> = params
            .iter()
            .enumerate()
            .map(|(i, &(a, b, c))| ItemParameters::three_pl(format!("i{i}"), a, b, c).unwrap())
            .collect();
        let before = complete(&items, &cats[..items.len()]);
        let set = ItemSet::new(items.clone()).unwrap();
        let t0 = estimate_theta_mle(&before, &set).unwrap().theta;
        items.push(ItemParameters::three_pl("extra", extra.0, extra.1, extra.2).unwrap());
        let mut c = cats[..items.len() - 1].to_vec();
        c.push(1);
        let after = complete(&items, &c);
        let t1 = estimate_theta_mle(&after, &ItemSet::new(items).unwrap()).unwrap().theta;
        prop_assert!(t1 >= t0 - 1e-7, "{} -> {}", t0, t1);
    }
}
