#![allow(dead_code)]

use psybench::model::{prob_category, ItemParameters, ItemSet, ResponsePattern, ScoredResponse};
use psybench::simulation::{simulate_response, taker_rng};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random mixed bank: roughly 40% 3PL, 40% 2PL, 20% GPC with 3 or 4 categories.
pub fn random_items(n: usize, seed: u64) -> Vec<ItemParameters> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let a = rng.random_range(0.7..2.0);
            let b = rng.random_range(-2.0..2.0);
            let id = format!("i{i:03}");
            match rng.random_range(0..5) {
                0 | 1 => ItemParameters::three_pl(id, a, b, rng.random_range(0.1..0.3)).unwrap(),
                2 | 3 => ItemParameters::two_pl(id, a, b).unwrap(),
                _ => {
                    let d1: f64 = rng.random_range(-1.0..1.0);
                    if rng.random::<bool>() {
                        ItemParameters::gpc(id, a, b, vec![d1, -d1]).unwrap()
                    } else {
                        let d2: f64 = rng.random_range(-1.0..1.0);
                        ItemParameters::gpc(id, a, b, vec![d1, d2, -(d1 + d2)]).unwrap()
                    }
                }
            }
        })
        .collect()
}

pub fn simulate_pattern(items: &[ItemParameters], theta: f64, seed: u64, index: u64) -> ResponsePattern {
    let mut rng = taker_rng(seed, index);
    let responses = items.iter().map(|it| simulate_response(theta, it, &mut rng)).collect();
    ResponsePattern::new(format!("r{index}"), responses).unwrap()
}

/// Log-likelihood as a plain sum of log category probabilities.
pub fn direct_log_likelihood(pattern: &ResponsePattern, items: &ItemSet, theta: f64) -> f64 {
    pattern
        .responses
        .iter()
        .filter_map(|r| {
            r.category
                .map(|c| prob_category(theta, items.get(&r.item_id).unwrap()).unwrap()[c].ln())
        })
        .sum()
}

/// Maximizer of the log-likelihood over 24001 equally spaced points on [-6, 6].
pub fn grid_argmax(pattern: &ResponsePattern, items: &ItemSet) -> f64 {
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..=24_000 {
        let t = -6.0 + 12.0 * k as f64 / 24_000.0;
        let ll = direct_log_likelihood(pattern, items, t);
        if ll > best.0 {
            best = (ll, t);
        }
    }
    best.1
}

pub fn complete(items: &[ItemParameters], cats: &[usize]) -> ResponsePattern {
    let responses = items
        .iter()
        .zip(cats)
        .map(|(it, &c)| ScoredResponse::new(it.item_id(), c))
        .collect();
    ResponsePattern::new("t", responses).unwrap()
}

/// `|a - b| <= rtol * max(|a|, |b|) + atol`.
pub fn near(a: f64, b: f64, rtol: f64, atol: f64) -> bool {
    (a - b).abs() <= rtol * a.abs().max(b.abs()) + atol
}
