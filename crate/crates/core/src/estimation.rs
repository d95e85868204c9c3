//! Proficiency estimation: maximum-likelihood θ with Wald intervals, percent-correct
//! scoring, inverse-variance combination of variant estimates and linear rescaling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{ItemSet, ResolvedPattern, ResponsePattern, THETA_MAX, THETA_MIN};
use crate::numeric::CompensatedSum;

/// Two-sided 95% normal quantile used for every Wald interval.
pub const Z_95: f64 = 1.96;

const MAX_ITERATIONS: usize = 200;
const SCORE_TOLERANCE: f64 = 1e-8;
const STEP_TOLERANCE: f64 = 1e-10;
/// Spacing of the bracketing grid the optimizer scans for sign changes of the score.
const BRACKET_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimateMethod {
    #[serde(rename = "MLE")]
    Mle,
    #[serde(rename = "PercentCorrect")]
    PercentCorrect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProficiencyEstimate {
    pub taker_id: String,
    pub theta: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub method: EstimateMethod,
    /// Set when the maximum sits on the θ clamp (no interior MLE).
    pub boundary_flag: bool,
}

impl ProficiencyEstimate {
    fn mle(taker_id: &str, theta: f64, se: f64, boundary_flag: bool) -> Self {
        Self {
            taker_id: taker_id.to_owned(),
            theta,
            se,
            ci_low: theta - Z_95 * se,
            ci_high: theta + Z_95 * se,
            method: EstimateMethod::Mle,
            boundary_flag,
        }
    }
}

/// Maximum-likelihood θ for one pattern.
///
/// The score function is scanned on a 0.1-spaced grid over `[-6, 6]`; every
/// bracketed sign change is refined by Newton steps that fall back to bisection
/// whenever a step leaves the bracket. The candidate (interior or clamp) with the
/// highest log-likelihood wins. All-lowest and all-highest patterns go straight
/// to the clamp. Boundary estimates take their standard error from the expected
/// information at the clamp.
pub fn estimate_theta_mle(pattern: &ResponsePattern, items: &ItemSet) -> Result<ProficiencyEstimate> {
    let resolved = ResolvedPattern::new(pattern, items)?;
    mle_resolved(&resolved)
}

pub(crate) fn mle_resolved(pattern: &ResolvedPattern<'_>) -> Result<ProficiencyEstimate> {
    let boundary = |theta: f64| {
        let info = pattern.expected_information(theta);
        ProficiencyEstimate::mle(pattern.taker_id, theta, 1.0 / info.sqrt(), true)
    };
    if pattern.all_lowest() {
        return Ok(boundary(THETA_MIN));
    }
    if pattern.all_highest() {
        return Ok(boundary(THETA_MAX));
    }

    let steps = ((THETA_MAX - THETA_MIN) / BRACKET_STEP).round() as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|k| THETA_MIN + (THETA_MAX - THETA_MIN) * k as f64 / steps as f64)
        .collect();
    let scores: Vec<f64> = grid.iter().map(|&t| pattern.derivatives(t).1).collect();

    // (theta, log-likelihood, interior?)
    let mut best: Option<(f64, f64, bool)> = None;
    let mut consider = |theta: f64, interior: bool| {
        let ll = pattern.log_likelihood(theta);
        if best.is_none_or(|(_, b, _)| ll > b) {
            best = Some((theta, ll, interior));
        }
    };
    if scores[0] < 0.0 {
        consider(THETA_MIN, false);
    }
    if scores[steps] > 0.0 {
        consider(THETA_MAX, false);
    }
    for k in 0..steps {
        if scores[k] > 0.0 && scores[k + 1] <= 0.0 {
            let theta = refine_root(pattern, grid[k], grid[k + 1])?;
            consider(theta, true);
        }
    }
    let (theta, _, interior) = best.ok_or_else(|| Error::Estimation {
        taker_id: pattern.taker_id.to_owned(),
        message: "no maximum found on the bracketing grid".into(),
        last_iterate: 0.0,
    })?;
    if !interior {
        return Ok(boundary(theta));
    }
    let (_, _, observed) = pattern.derivatives(theta);
    let info = if observed > 0.0 {
        observed
    } else {
        pattern.expected_information(theta)
    };
    Ok(ProficiencyEstimate::mle(pattern.taker_id, theta, 1.0 / info.sqrt(), false))
}

/// Safeguarded Newton iteration for a zero of the score on `[lo, hi]`, where the
/// score is positive at `lo` and non-positive at `hi`.
fn refine_root(pattern: &ResolvedPattern<'_>, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_ITERATIONS {
        let (_, score, info) = pattern.derivatives(x);
        if score.abs() < SCORE_TOLERANCE {
            return Ok(x);
        }
        if score > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = if info > 0.0 { x + score / info } else { f64::NAN };
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() < STEP_TOLERANCE {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::Estimation {
        taker_id: pattern.taker_id.to_owned(),
        message: format!("no convergence after {MAX_ITERATIONS} iterations"),
        last_iterate: x,
    })
}

/// MLE for many patterns; each result is independent of the others.
pub fn estimate_many(
    patterns: &[ResponsePattern],
    items: &ItemSet,
    execution: Execution,
) -> Vec<Result<ProficiencyEstimate>> {
    execution.map_slice(patterns, |p| estimate_theta_mle(p, items))
}

/// Earned score points over attainable score points across observed items.
pub fn percent_correct(pattern: &ResponsePattern, items: &ItemSet) -> Result<f64> {
    let resolved = ResolvedPattern::new(pattern, items)?;
    let (earned, possible) = resolved
        .observed
        .iter()
        .fold((0usize, 0usize), |(e, p), (item, c)| (e + c, p + item.max_score()));
    Ok(earned as f64 / possible as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedEstimate {
    pub theta: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_components: usize,
}

/// Fixed-effect inverse-variance combination: weights `1/se²`, pooled
/// `se = 1/√Σw`, Wald 95% interval.
///
/// Components are put in a canonical order before compensated summation, so the
/// result is bit-identical under any permutation of the input.
pub fn combine_inverse_variance(estimates: &[ProficiencyEstimate]) -> Result<WeightedEstimate> {
    if estimates.is_empty() {
        return Err(Error::contract("inverse-variance combination of zero estimates"));
    }
    for e in estimates {
        if e.boundary_flag {
            return Err(Error::contract(format!(
                "estimate for {} is boundary-flagged and cannot be weighted",
                e.taker_id
            )));
        }
        if !(e.se > 0.0 && e.se.is_finite()) || !e.theta.is_finite() {
            return Err(Error::contract(format!(
                "estimate for {} has invalid se {} or theta {}",
                e.taker_id, e.se, e.theta
            )));
        }
    }
    let mut components: Vec<(f64, f64)> = estimates.iter().map(|e| (e.theta, e.se)).collect();
    components.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));

    let mut weight_sum = CompensatedSum::new();
    let mut weighted = CompensatedSum::new();
    for &(theta, se) in &components {
        let w = 1.0 / (se * se);
        weight_sum.add(w);
        weighted.add(w * theta);
    }
    let total = weight_sum.value();
    let theta = weighted.value() / total;
    let se = 1.0 / total.sqrt();
    Ok(WeightedEstimate {
        theta,
        se,
        ci_low: theta - Z_95 * se,
        ci_high: theta + Z_95 * se,
        n_components: components.len(),
    })
}

/// Positive linear map from one score scale to another.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleTransform {
    pub target_mean: f64,
    pub target_sd: f64,
    pub source_mean: f64,
    pub source_sd: f64,
}

impl Default for ScaleTransform {
    fn default() -> Self {
        Self {
            target_mean: 500.0,
            target_sd: 100.0,
            source_mean: 0.0,
            source_sd: 1.0,
        }
    }
}

impl ScaleTransform {
    pub fn new(target_mean: f64, target_sd: f64, source_mean: f64, source_sd: f64) -> Result<Self> {
        let t = Self {
            target_mean,
            target_sd,
            source_mean,
            source_sd,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.target_mean, self.target_sd, self.source_mean, self.source_sd]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.target_sd <= 0.0 || self.source_sd <= 0.0 {
            return Err(Error::validation(
                "scale",
                format!("scale transform needs finite values and positive SDs: {self:?}"),
            ));
        }
        Ok(())
    }

    pub fn slope(&self) -> f64 {
        self.target_sd / self.source_sd
    }

    pub fn value(&self, theta: f64) -> f64 {
        self.target_mean + self.slope() * (theta - self.source_mean)
    }

    pub fn inverse(&self) -> Self {
        Self {
            target_mean: self.source_mean,
            target_sd: self.source_sd,
            source_mean: self.target_mean,
            source_sd: self.target_sd,
        }
    }
}

/// Rescales θ, se and interval bounds.
pub fn apply_scale(estimate: &ProficiencyEstimate, transform: &ScaleTransform) -> ProficiencyEstimate {
    ProficiencyEstimate {
        theta: transform.value(estimate.theta),
        se: estimate.se * transform.slope(),
        ci_low: transform.value(estimate.ci_low),
        ci_high: transform.value(estimate.ci_high),
        ..estimate.clone()
    }
}

pub fn apply_scale_weighted(estimate: &WeightedEstimate, transform: &ScaleTransform) -> WeightedEstimate {
    WeightedEstimate {
        theta: transform.value(estimate.theta),
        se: estimate.se * transform.slope(),
        ci_low: transform.value(estimate.ci_low),
        ci_high: transform.value(estimate.ci_high),
        n_components: estimate.n_components,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ItemParameters, ScoredResponse};

    fn est(theta: f64, se: f64) -> ProficiencyEstimate {
        ProficiencyEstimate::mle("t", theta, se, false)
    }

    #[test]
    fn single_correct_item_hits_upper_clamp() {
        let items = ItemSet::new(vec![ItemParameters::two_pl("i", 1.0, 0.0).unwrap()]).unwrap();
        let pat = ResponsePattern::new("t", vec![ScoredResponse::new("i", 1)]).unwrap();
        let e = estimate_theta_mle(&pat, &items).unwrap();
        assert_eq!(e.theta, 6.0);
        assert!(e.boundary_flag);
        assert!(e.se > 0.0 && e.se.is_finite());
        assert!(e.ci_low <= e.theta && e.theta <= e.ci_high);

        let pat = ResponsePattern::new("t", vec![ScoredResponse::new("i", 0)]).unwrap();
        let e = estimate_theta_mle(&pat, &items).unwrap();
        assert_eq!(e.theta, -6.0);
        assert!(e.boundary_flag);
    }

    #[test]
    fn interior_estimate_is_stationary() {
        let items = ItemSet::new(vec![
            ItemParameters::two_pl("i", 1.0, -0.5).unwrap(),
            ItemParameters::two_pl("j", 1.2, 0.5).unwrap(),
            ItemParameters::gpc("k", 0.9, 0.0, vec![0.4, -0.4]).unwrap(),
        ])
        .unwrap();
        let pat = ResponsePattern::new(
            "t",
            vec![
                ScoredResponse::new("i", 1),
                ScoredResponse::new("j", 0),
                ScoredResponse::new("k", 1),
            ],
        )
        .unwrap();
        let e = estimate_theta_mle(&pat, &items).unwrap();
        assert!(!e.boundary_flag);
        let (score, info) = crate::model::score_and_information(&pat, &items, e.theta).unwrap();
        assert!(score.abs() < 1e-8, "{score}");
        assert!((e.se - 1.0 / info.sqrt()).abs() < 1e-12);
        assert!((e.ci_high - e.theta - 1.96 * e.se).abs() < 1e-12);
    }

    #[test]
    fn empty_pattern_is_a_contract_error() {
        let items = ItemSet::new(vec![ItemParameters::two_pl("i", 1.0, 0.0).unwrap()]).unwrap();
        let pat = ResponsePattern::new("t", vec![ScoredResponse::missing("i")]).unwrap();
        assert!(matches!(estimate_theta_mle(&pat, &items), Err(Error::Contract(_))));
        assert!(matches!(percent_correct(&pat, &items), Err(Error::Contract(_))));
    }

    #[test]
    fn percent_correct_counts_partial_credit() {
        let items = ItemSet::new(vec![
            ItemParameters::three_pl("m", 1.0, 0.0, 0.2).unwrap(),
            ItemParameters::two_pl("o", 1.0, 0.0).unwrap(),
            ItemParameters::gpc("p", 1.0, 0.0, vec![0.3, -0.3]).unwrap(),
        ])
        .unwrap();
        let pat = ResponsePattern::new(
            "t",
            vec![
                ScoredResponse::new("m", 1),
                ScoredResponse::new("o", 0),
                ScoredResponse::new("p", 1),
            ],
        )
        .unwrap();
        assert_eq!(percent_correct(&pat, &items).unwrap(), 0.5);
        let top = ResponsePattern::new(
            "t",
            vec![
                ScoredResponse::new("m", 1),
                ScoredResponse::new("o", 1),
                ScoredResponse::new("p", 2),
            ],
        )
        .unwrap();
        assert_eq!(percent_correct(&top, &items).unwrap(), 1.0);
    }

    #[test]
    fn weighting_hand_example() {
        let w = combine_inverse_variance(&[est(1.0, 0.1), est(2.0, 0.2)]).unwrap();
        assert!((w.theta - 1.2).abs() < 1e-12);
        assert!((w.se - 1.0 / 125f64.sqrt()).abs() < 1e-12);
        assert!((w.ci_low - (1.2 - 1.96 / 125f64.sqrt())).abs() < 1e-12);
        assert_eq!(w.n_components, 2);
    }

    #[test]
    fn weighting_equal_components() {
        let comps = vec![est(0.7, 0.3); 4];
        let w = combine_inverse_variance(&comps).unwrap();
        assert!((w.theta - 0.7).abs() < 1e-15);
        assert!((w.se - 0.15).abs() < 1e-15);
    }

    #[test]
    fn weighting_rejects_boundary_and_empty() {
        assert!(combine_inverse_variance(&[]).is_err());
        let mut b = est(6.0, 0.5);
        b.boundary_flag = true;
        assert!(combine_inverse_variance(&[est(1.0, 0.1), b]).is_err());
        assert!(combine_inverse_variance(&[est(1.0, 0.0)]).is_err());
    }

    #[test]
    fn scale_examples() {
        let t = ScaleTransform::default();
        assert_eq!(apply_scale(&est(0.0, 0.1), &t).theta, 500.0);
        let s = apply_scale(&est(1.5, 0.2), &t);
        assert!((s.theta - 650.0).abs() < 1e-12);
        assert!((s.se - 20.0).abs() < 1e-12);
        let back = apply_scale(&s, &t.inverse());
        assert!((back.theta - 1.5).abs() < 1e-12);
        assert!((back.se - 0.2).abs() < 1e-12);
        assert!(ScaleTransform::new(500.0, 0.0, 0.0, 1.0).is_err());
        assert!(ScaleTransform::new(500.0, 100.0, 0.0, -1.0).is_err());
    }
}
