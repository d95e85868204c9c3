//! Deterministic banks and record generators for tests, benches and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::harness::{BankItem, ItemBank, ItemFormat, RawResponseRecord, DEFAULT_OPTIONS};
use crate::model::{ItemParameters, ItemSet};
use crate::simulation::{category_from_uniform, simulate_matrix, taker_rng, SimulatedData, SimulationSpec};

const CONTENT_DOMAINS: [&str; 4] = ["number", "algebra", "geometry", "data_and_probability"];
const COGNITIVE_DOMAINS: [&str; 3] = ["knowing", "applying", "reasoning"];

/// Seed of the generator behind [`assessment_bank`].
pub const ASSESSMENT_BANK_SEED: u64 = 20_240_801;

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn domains(i: usize) -> (String, String) {
    (
        CONTENT_DOMAINS[i % CONTENT_DOMAINS.len()].to_owned(),
        COGNITIVE_DOMAINS[i % COGNITIVE_DOMAINS.len()].to_owned(),
    )
}

/// A synthetic large-scale-assessment bank: 48 multiple-choice 3PL items,
/// 30 open-ended 2PL items and 10 three-category GPC items, all parameters
/// rounded to three decimals.
pub fn assessment_bank() -> ItemBank {
    let mut rng = ChaCha8Rng::seed_from_u64(ASSESSMENT_BANK_SEED);
    let mut items = Vec::with_capacity(88);
    for i in 0..48 {
        let (content_domain, cognitive_domain) = domains(i);
        let a = round3(uniform(&mut rng, 0.6, 1.8));
        let b = round3(uniform(&mut rng, -2.0, 2.0));
        let c = round3(uniform(&mut rng, 0.1, 0.3));
        items.push(BankItem {
            params: ItemParameters::three_pl(format!("M{:03}", i + 1), a, b, c).expect("valid 3PL"),
            format: ItemFormat::MultipleChoice,
            answer_key: Some((b'A' + (i % 4) as u8) as char),
            num_options: Some(DEFAULT_OPTIONS),
            content_domain,
            cognitive_domain,
            se: None,
        });
    }
    for i in 0..30 {
        let (content_domain, cognitive_domain) = domains(i + 48);
        let a = round3(uniform(&mut rng, 0.6, 1.8));
        let b = round3(uniform(&mut rng, -2.0, 2.0));
        items.push(BankItem {
            params: ItemParameters::two_pl(format!("O{:03}", i + 1), a, b).expect("valid 2PL"),
            format: ItemFormat::OpenDichotomous,
            answer_key: None,
            num_options: None,
            content_domain,
            cognitive_domain,
            se: None,
        });
    }
    for i in 0..10 {
        let (content_domain, cognitive_domain) = domains(i + 78);
        let a = round3(uniform(&mut rng, 0.6, 1.8));
        let b = round3(uniform(&mut rng, -1.5, 1.5));
        let delta = round3(uniform(&mut rng, 0.3, 1.0));
        items.push(BankItem {
            params: ItemParameters::gpc(format!("P{:03}", i + 1), a, b, vec![delta, -delta]).expect("valid GPC"),
            format: ItemFormat::OpenPartialCredit,
            answer_key: None,
            num_options: None,
            content_domain,
            cognitive_domain,
            se: None,
        });
    }
    let mut bank = ItemBank::new("assessment-shaped synthetic bank", items).expect("valid bank");
    bank.provenance = format!("synthetic; generated with seed {ASSESSMENT_BANK_SEED}");
    bank
}

/// Items for recovery studies: alternating 3PL (c = 0.2) and 2PL items with
/// a ~ U(0.7, 2) and b ~ U(−2, 2).
pub fn recovery_items(n: usize, seed: u64) -> ItemSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let items = (0..n)
        .map(|i| {
            let a = uniform(&mut rng, 0.7, 2.0);
            let b = uniform(&mut rng, -2.0, 2.0);
            let id = format!("R{:03}", i + 1);
            if i % 2 == 0 {
                ItemParameters::three_pl(id, a, b, 0.2)
            } else {
                ItemParameters::two_pl(id, a, b)
            }
            .expect("valid item")
        })
        .collect();
    ItemSet::new(items).expect("unique ids")
}

/// Ten open-ended 2PL items and three single-response takers whose ranking
/// under percent-correct is the reverse of their ranking under ML θ.
///
/// Items `E1..E5` are easy and weakly discriminating (a = 0.5, b = −1);
/// `H1..H5` are hard and sharply discriminating (a = 2, b = 1). Taker `A`
/// answers every easy item and one hard item (6/10), `C` three easy and two
/// hard (5/10), `B` four hard items only (4/10). Under the 2PL the weighted
/// score Σ aᵢxᵢ orders them B (8) > C (5.5) > A (4.5).
pub fn divergence_fixture() -> (ItemBank, Vec<RawResponseRecord>) {
    let mut items = Vec::new();
    for (prefix, a, b) in [("E", 0.5, -1.0), ("H", 2.0, 1.0)] {
        for k in 1..=5 {
            items.push(BankItem {
                params: ItemParameters::two_pl(format!("{prefix}{k}"), a, b).expect("valid 2PL"),
                format: ItemFormat::OpenDichotomous,
                answer_key: None,
                num_options: None,
                content_domain: String::new(),
                cognitive_domain: String::new(),
                se: None,
            });
        }
    }
    let bank = ItemBank::new("rank divergence", items).expect("valid bank");
    let correct: [(&str, &[&str]); 3] = [
        ("A", &["E1", "E2", "E3", "E4", "E5", "H1"]),
        ("B", &["H1", "H2", "H3", "H4"]),
        ("C", &["E1", "E2", "E3", "H1", "H2"]),
    ];
    let mut records = Vec::new();
    for (taker, right) in correct {
        for item in bank.items() {
            let score = usize::from(right.contains(&item.item_id()));
            records.push(RawResponseRecord::new(taker, "base", item.item_id(), "", Some(score)));
        }
    }
    (bank, records)
}

/// Seed used for prompt variant `variant` (> 0) of a study seeded with `seed`.
pub fn variant_seed(seed: u64, variant: u64) -> u64 {
    seed ^ variant.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Simulated raw records for `variants` prompt variants per taker.
///
/// Every taker keeps one θ across variants. Variant `base` reproduces
/// [`simulate_matrix`] exactly; variant `vK` redraws missingness and responses
/// from the stream of `(variant_seed(seed, K), taker index)`. Multiple-choice
/// answers are written as `"[X]"`, correct or a deterministic wrong option;
/// open-ended records carry a human score. Missing cells produce no record.
pub fn simulate_records(
    spec: &SimulationSpec,
    bank: &ItemBank,
    variants: usize,
    execution: Execution,
) -> Result<(SimulatedData, Vec<RawResponseRecord>)> {
    if variants == 0 {
        return Err(Error::contract("at least one variant is required"));
    }
    let base = simulate_matrix(spec, bank.item_set(), execution)?;
    let n_items = bank.len();
    let mut records = Vec::new();
    for v in 0..variants {
        let variant_id = if v == 0 { "base".to_owned() } else { format!("v{v}") };
        let rows: Vec<Vec<Option<u8>>> = if v == 0 {
            (0..base.matrix.n_respondents()).map(|r| base.matrix.row(r).to_vec()).collect()
        } else {
            let seed = variant_seed(spec.seed, v as u64);
            execution.map_indexed(base.thetas.len(), |i| {
                let mut rng = taker_rng(seed, i as u64);
                bank.item_set()
                    .iter()
                    .map(|item| {
                        let miss: f64 = rng.random();
                        let u: f64 = rng.random();
                        (miss >= spec.missingness).then(|| category_from_uniform(base.thetas[i], item, u) as u8)
                    })
                    .collect()
            })
        };
        for (r, row) in rows.iter().enumerate() {
            let taker = &base.matrix.respondents()[r];
            for (j, cell) in row.iter().enumerate().take(n_items) {
                let Some(cat) = cell else { continue };
                let item = &bank.items()[j];
                let record = match item.format {
                    ItemFormat::MultipleChoice => {
                        let key = item.answer_key.expect("multiple-choice key");
                        let letter = if *cat == 1 {
                            key
                        } else {
                            let options = item.option_count();
                            let k = key as u8 - b'A';
                            let shift = 1 + ((r + j) % (options as usize - 1).max(1)) as u8;
                            (b'A' + (k + shift) % options) as char
                        };
                        RawResponseRecord::new(taker, &variant_id, item.item_id(), format!("[{letter}]"), None)
                    }
                    _ => RawResponseRecord::new(taker, &variant_id, item.item_id(), "", Some(*cat as usize)),
                };
                records.push(record);
            }
        }
    }
    Ok((base, records))
}
