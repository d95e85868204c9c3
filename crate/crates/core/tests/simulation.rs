mod common;

use common::random_items;
use psybench::calibration::CalibrationConfig;
use psybench::fixtures::recovery_items;
use psybench::model::{ItemParameters, ItemSet};
use psybench::simulation::{
    recovery_study, simulate_matrix, simulate_response, taker_rng, theta_recovery, SimulationSpec, TakerSpec,
};
use psybench::Execution;

fn spec(seed: u64, takers: TakerSpec, missingness: f64) -> SimulationSpec {
    SimulationSpec {
        seed,
        takers,
        item_bank: None,
        missingness,
    }
}

#[test]
fn category_frequencies_converge() {
    let item = ItemParameters::gpc("g", 1.1, 0.2, vec![0.8, 0.1, -0.9]).unwrap();
    let theta = 0.4;
    let n = 1_000_000;
    let mut counts = [0usize; 4];
    let mut rng = taker_rng(12, 0);
    for _ in 0..n {
        counts[simulate_response(theta, &item, &mut rng).category.unwrap()] += 1;
    }
    for (l, &p) in item.probs(theta).iter().enumerate() {
        let se = (p * (1.0 - p) / n as f64).sqrt();
        let freq = counts[l] as f64 / n as f64;
        assert!((freq - p).abs() <= 3.0 * se, "category {l}: {freq} vs {p}");
    }
}

#[test]
fn missing_fraction_concentrates() {
    let items = ItemSet::new(random_items(100, 2)).unwrap();
    let s = spec(5, TakerSpec::Normal { n: 1000, mean: 0.0, sd: 1.0 }, 0.5);
    let m = simulate_matrix(&s, &items, Execution::Parallel).unwrap().matrix;
    let missing = m.cells().iter().filter(|c| c.is_none()).count() as f64 / m.cells().len() as f64;
    assert!((0.49..=0.51).contains(&missing), "{missing}");
}

#[test]
fn equal_thetas_reproduce_column_probabilities() {
    let bank = random_items(20, 8);
    let items = ItemSet::new(bank.clone()).unwrap();
    let n = 20_000;
    let s = spec(6, TakerSpec::Explicit { thetas: vec![-0.5; n] }, 0.0);
    let m = simulate_matrix(&s, &items, Execution::Parallel).unwrap().matrix;
    for (j, item) in bank.iter().enumerate() {
        let probs = item.probs(-0.5);
        for (l, &p) in probs.iter().enumerate() {
            let freq = (0..n).filter(|&r| m.cell(r, j) == Some(l as u8)).count() as f64 / n as f64;
            // 4 standard errors: 20 items and up to 4 categories are checked at once.
            assert!((freq - p).abs() <= 4.0 * (p * (1.0 - p) / n as f64).sqrt(), "item {j} cat {l}");
        }
    }
}

#[test]
fn output_is_byte_stable() {
    let items = ItemSet::new(random_items(15, 1)).unwrap();
    let s = spec(77, TakerSpec::Normal { n: 300, mean: 0.3, sd: 1.2 }, 0.2);
    let write = |exec| {
        let mut buf = Vec::new();
        simulate_matrix(&s, &items, exec).unwrap().matrix.write_csv(&mut buf).unwrap();
        buf
    };
    let first = write(Execution::Sequential);
    assert_eq!(first, write(Execution::Sequential));
    assert_eq!(first, write(Execution::Parallel));
}

#[test]
fn spec_documents_parse() {
    let doc = r#"{ "seed": 3, "takers": { "kind": "normal", "n": 10, "mean": 0, "sd": 1 }, "missingness": 0.1 }"#;
    let s: SimulationSpec = serde_json::from_str(doc).unwrap();
    assert_eq!(s.n_takers(), 10);
    let doc = r#"{ "seed": 3, "takers": { "kind": "explicit", "thetas": [0.5, -1] } }"#;
    let s: SimulationSpec = serde_json::from_str(doc).unwrap();
    assert_eq!(s.missingness, 0.0);
    assert!(simulate_matrix(&s, &ItemSet::new(vec![]).unwrap(), Execution::Sequential).is_err());
}

#[test]
fn doubling_test_length_shrinks_se() {
    let long = random_items(120, 30);
    let short = ItemSet::new(long[..60].to_vec()).unwrap();
    let long = ItemSet::new(long).unwrap();
    let thetas: Vec<f64> = (0..1000).map(|i| -1.5 + 3.0 * i as f64 / 999.0).collect();
    let a = theta_recovery(&short, &thetas, 4, Execution::Parallel).unwrap();
    let b = theta_recovery(&long, &thetas, 4, Execution::Parallel).unwrap();
    let ratio = b.median_se / a.median_se;
    assert!((0.65..=0.75).contains(&ratio), "{ratio}");
}

#[test]
fn small_recovery_and_identifiability() {
    let truth = recovery_items(30, 12);
    let s = spec(2024, TakerSpec::Normal { n: 2000, mean: 0.0, sd: 1.0 }, 0.0);
    let report = recovery_study(&s, &truth, &CalibrationConfig::default()).unwrap();
    assert!(report.calibration.converged);
    assert!(report.b.rmse < 0.2 && report.a.rmse < 0.25, "{:?} {:?}", report.a, report.b);
    // The N(0, 1) prior fixes the scale: posterior means and variances add up
    // to the prior moments.
    let eap = &report.calibration.eap;
    let n = eap.len() as f64;
    let mean = eap.iter().map(|e| e.0).sum::<f64>() / n;
    let total_var = eap.iter().map(|e| (e.0 - mean).powi(2) + e.1 * e.1).sum::<f64>() / n;
    assert!(mean.abs() <= 0.05, "mean {mean}");
    assert!((0.9..=1.1).contains(&total_var.sqrt()), "sd {}", total_var.sqrt());
}
