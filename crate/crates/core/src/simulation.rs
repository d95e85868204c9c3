//! Synthetic test takers and responses drawn from the item response models.
//!
//! Random streams: every taker gets its own ChaCha8 stream, obtained by seeding
//! with the study seed and selecting stream number = taker index
//! (`ChaCha8Rng::set_stream`). A taker's draws therefore depend only on
//! `(seed, index)`, never on iteration order or thread count. Within a stream the
//! order is fixed: θ (when drawn from a distribution), then for each item a
//! missingness uniform followed by a response uniform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::calibration::{calibrate_mml_em, CalibrationConfig, CalibrationResult};
use crate::error::{Error, Result};
use crate::estimation::{mle_resolved, ProficiencyEstimate};
use crate::exec::Execution;
use crate::matrix::{ItemDescriptor, ResponseMatrix};
use crate::model::{ItemParameters, ItemSet, ModelKind, ResolvedPattern, ResponsePattern, ScoredResponse};
use crate::numeric::quantile_sorted;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TakerSpec {
    Explicit { thetas: Vec<f64> },
    Normal { n: usize, mean: f64, sd: f64 },
    /// Several groups, each normal; taker ids are `<population>:<index>`.
    Populations { populations: Vec<PopulationSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub id: String,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub seed: u64,
    pub takers: TakerSpec,
    /// Path of the item bank used by the command-line front end.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item_bank: Option<String>,
    /// Per-cell probability that a response is missing, completely at random.
    #[serde(default)]
    pub missingness: f64,
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.missingness) {
            return Err(Error::validation(
                "missingness",
                format!("must lie in [0, 1), got {}", self.missingness),
            ));
        }
        let bad_sd = |sd: f64| !(sd.is_finite() && sd >= 0.0);
        match &self.takers {
            TakerSpec::Explicit { thetas } => {
                if let Some(i) = thetas.iter().position(|t| !t.is_finite()) {
                    return Err(Error::validation(format!("takers.thetas[{i}]"), "must be finite"));
                }
            }
            TakerSpec::Normal { mean, sd, .. } => {
                if !mean.is_finite() || bad_sd(*sd) {
                    return Err(Error::validation("takers", "normal spec needs finite mean and sd >= 0"));
                }
            }
            TakerSpec::Populations { populations } => {
                for (i, p) in populations.iter().enumerate() {
                    if !p.mean.is_finite() || bad_sd(p.sd) {
                        return Err(Error::validation(
                            format!("takers.populations[{i}]"),
                            "needs finite mean and sd >= 0",
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n_takers(&self) -> usize {
        match &self.takers {
            TakerSpec::Explicit { thetas } => thetas.len(),
            TakerSpec::Normal { n, .. } => *n,
            TakerSpec::Populations { populations } => populations.iter().map(|p| p.n).sum(),
        }
    }

    /// `(taker_id, explicit θ or (mean, sd))` for every taker, in index order.
    fn taker_plan(&self) -> Vec<(String, ThetaSource)> {
        match &self.takers {
            TakerSpec::Explicit { thetas } => thetas
                .iter()
                .enumerate()
                .map(|(i, &t)| (format!("T{i:05}"), ThetaSource::Fixed(t)))
                .collect(),
            TakerSpec::Normal { n, mean, sd } => (0..*n)
                .map(|i| (format!("T{i:05}"), ThetaSource::Normal(*mean, *sd)))
                .collect(),
            TakerSpec::Populations { populations } => populations
                .iter()
                .flat_map(|p| {
                    (0..p.n).map(move |i| (format!("{}:{i:05}", p.id), ThetaSource::Normal(p.mean, p.sd)))
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum ThetaSource {
    Fixed(f64),
    Normal(f64, f64),
}

/// Random stream for taker `index` under `seed`.
pub fn taker_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Category drawn by inverse CDF on a single uniform.
pub fn simulate_response<R: Rng + ?Sized>(theta: f64, item: &ItemParameters, rng: &mut R) -> ScoredResponse {
    let u: f64 = rng.random();
    ScoredResponse::new(item.item_id(), category_from_uniform(theta, item, u))
}

pub(crate) fn category_from_uniform(theta: f64, item: &ItemParameters, u: f64) -> usize {
    let probs = item.probs(theta);
    let mut cum = 0.0;
    for (l, p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return l;
        }
    }
    probs.len() - 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub matrix: ResponseMatrix,
    pub thetas: Vec<f64>,
}

/// Simulates a respondents × items matrix. Rows may end up entirely missing when
/// missingness is high; [`ResponseMatrix::validate`] reports that.
pub fn simulate_matrix(spec: &SimulationSpec, items: &ItemSet, execution: Execution) -> Result<SimulatedData> {
    spec.validate()?;
    if items.is_empty() {
        return Err(Error::contract("simulation needs at least one item"));
    }
    let plan = spec.taker_plan();
    let rows: Vec<(f64, Vec<Option<u8>>)> = execution.map_indexed(plan.len(), |i| {
        let mut rng = taker_rng(spec.seed, i as u64);
        let theta = match plan[i].1 {
            ThetaSource::Fixed(t) => t,
            ThetaSource::Normal(mean, sd) => {
                let z: f64 = rng.sample(StandardNormal);
                mean + sd * z
            }
        };
        let cells = items
            .iter()
            .map(|item| {
                let miss: f64 = rng.random();
                let u: f64 = rng.random();
                (miss >= spec.missingness).then(|| category_from_uniform(theta, item, u) as u8)
            })
            .collect();
        (theta, cells)
    });
    let descriptors = items
        .iter()
        .map(|i| ItemDescriptor {
            item_id: i.item_id().to_owned(),
            kind: i.kind(),
            num_categories: i.num_categories(),
        })
        .collect();
    let mut thetas = Vec::with_capacity(rows.len());
    let mut cells = Vec::with_capacity(rows.len() * items.len());
    for (t, row) in rows {
        thetas.push(t);
        cells.extend(row);
    }
    let matrix = ResponseMatrix::from_parts(plan.into_iter().map(|p| p.0).collect(), descriptors, cells)?;
    Ok(SimulatedData { matrix, thetas })
}

/// Summary of θ estimates against known true values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaRecovery {
    pub n: usize,
    pub bias: f64,
    pub rmse: f64,
    /// Fraction of 95% intervals containing the true θ.
    pub coverage: f64,
    pub median_se: f64,
    pub mean_se: f64,
    pub sd_estimate: f64,
    pub mean_estimate: f64,
    pub n_boundary: usize,
}

impl ThetaRecovery {
    pub fn from_estimates(truth: &[f64], estimates: &[ProficiencyEstimate]) -> Result<Self> {
        if truth.is_empty() || truth.len() != estimates.len() {
            return Err(Error::contract("theta recovery needs matching, non-empty truth and estimates"));
        }
        let n = truth.len() as f64;
        let errors: Vec<f64> = truth.iter().zip(estimates).map(|(t, e)| e.theta - t).collect();
        let bias = errors.iter().sum::<f64>() / n;
        let rmse = (errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
        let covered = truth
            .iter()
            .zip(estimates)
            .filter(|(t, e)| e.ci_low <= **t && **t <= e.ci_high)
            .count();
        let mut ses: Vec<f64> = estimates.iter().map(|e| e.se).collect();
        ses.sort_by(f64::total_cmp);
        let mean_estimate = estimates.iter().map(|e| e.theta).sum::<f64>() / n;
        let sd_estimate = if estimates.len() > 1 {
            (estimates.iter().map(|e| (e.theta - mean_estimate).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            n: truth.len(),
            bias,
            rmse,
            coverage: covered as f64 / n,
            median_se: quantile_sorted(&ses, 0.5),
            mean_se: ses.iter().sum::<f64>() / n,
            sd_estimate,
            mean_estimate,
            n_boundary: estimates.iter().filter(|e| e.boundary_flag).count(),
        })
    }
}

/// Simulates one complete pattern per true θ, estimates θ by ML with the same
/// items, and compares against the truth.
pub fn theta_recovery(items: &ItemSet, thetas: &[f64], seed: u64, execution: Execution) -> Result<ThetaRecovery> {
    if thetas.is_empty() {
        return Err(Error::contract("theta recovery needs at least one replicate"));
    }
    let spec = SimulationSpec {
        seed,
        takers: TakerSpec::Explicit {
            thetas: thetas.to_vec(),
        },
        item_bank: None,
        missingness: 0.0,
    };
    let data = simulate_matrix(&spec, items, execution)?;
    let patterns = data.matrix.patterns();
    let estimates = execution
        .map_slice(&patterns, |p| mle_resolved(&ResolvedPattern::new(p, items)?))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    ThetaRecovery::from_estimates(&data.thetas, &estimates)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterRecovery {
    pub n: usize,
    pub bias: f64,
    pub rmse: f64,
}

impl ParameterRecovery {
    fn from_pairs(pairs: &[(f64, f64)]) -> Option<Self> {
        if pairs.is_empty() {
            return None;
        }
        let n = pairs.len() as f64;
        let bias = pairs.iter().map(|(t, e)| e - t).sum::<f64>() / n;
        let rmse = (pairs.iter().map(|(t, e)| (e - t).powi(2)).sum::<f64>() / n).sqrt();
        Some(Self {
            n: pairs.len(),
            bias,
            rmse,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryReport {
    pub a: ParameterRecovery,
    pub b: ParameterRecovery,
    /// Over 3PL items only; `None` when the bank has none.
    pub c: Option<ParameterRecovery>,
    /// Over all GPC threshold offsets.
    pub d: Option<ParameterRecovery>,
    /// θ estimated with the calibrated parameters on the calibration sample.
    pub theta: ThetaRecovery,
    pub calibration: CalibrationResult,
}

/// Simulates from known parameters, calibrates, then scores the sample with the
/// calibrated bank and compares every estimate with its generating value.
pub fn recovery_study(
    spec: &SimulationSpec,
    truth: &ItemSet,
    config: &CalibrationConfig,
) -> Result<RecoveryReport> {
    if spec.n_takers() == 0 || truth.is_empty() {
        return Err(Error::contract("recovery study needs takers and items"));
    }
    let data = simulate_matrix(spec, truth, config.execution)?;
    let calibration = calibrate_mml_em(&data.matrix, config)?;
    let fitted = ItemSet::new(calibration.parameters())?;

    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut c = Vec::new();
    let mut d = Vec::new();
    for (t, f) in truth.iter().zip(fitted.iter()) {
        a.push((t.a(), f.a()));
        b.push((t.b(), f.b()));
        match t.kind() {
            ModelKind::ThreePL => c.push((t.c(), f.c())),
            ModelKind::Gpc => d.extend(t.d().iter().copied().zip(f.d().iter().copied())),
            ModelKind::TwoPL => {}
        }
    }

    let patterns: Vec<ResponsePattern> = data.matrix.patterns();
    let estimates = config
        .execution
        .map_slice(&patterns, |p| mle_resolved(&ResolvedPattern::new(p, &fitted)?))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let theta = ThetaRecovery::from_estimates(&data.thetas, &estimates)?;

    Ok(RecoveryReport {
        a: ParameterRecovery::from_pairs(&a).expect("non-empty bank"),
        b: ParameterRecovery::from_pairs(&b).expect("non-empty bank"),
        c: ParameterRecovery::from_pairs(&c),
        d: ParameterRecovery::from_pairs(&d),
        theta,
        calibration,
    })
}
