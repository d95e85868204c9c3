//! End-to-end scoring of record streams: assembly, per-variant ML estimation,
//! exclusion of boundary variants, inverse-variance combination and rescaling.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::assembly::{assemble_patterns, VariantPattern};
use super::bank::ItemBank;
use super::records::{RawResponseRecord, Reject};
use super::scoring::Diagnostic;
use crate::error::{Error, Result};
use crate::estimation::{
    apply_scale, apply_scale_weighted, combine_inverse_variance, mle_resolved, ProficiencyEstimate,
    ScaleTransform, WeightedEstimate,
};
use crate::exec::Execution;
use crate::model::ResolvedPattern;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineOptions {
    /// Applied to every θ estimate after combination.
    pub scale: Option<ScaleTransform>,
    pub execution: Execution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantEstimate {
    pub variant_id: String,
    pub estimate: ProficiencyEstimate,
    /// Earned over attainable score points.
    pub percent_correct: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcludedVariant {
    pub variant_id: String,
    pub reason: String,
}

/// Per-variant results for one taker; `included` and `excluded` partition the
/// supplied variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantEstimateSet {
    pub taker_id: String,
    pub included: Vec<VariantEstimate>,
    pub excluded: Vec<ExcludedVariant>,
    /// Percent-correct of every supplied variant, boundary variants included.
    pub percent_correct: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TakerResult {
    pub taker_id: String,
    pub variants: VariantEstimateSet,
    pub weighted: Option<WeightedEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub bank: String,
    pub scale: Option<ScaleTransform>,
    pub takers: Vec<TakerResult>,
    pub rejects: Vec<Reject>,
    pub diagnostics: Vec<Diagnostic>,
}

impl PipelineOutput {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("pipeline output serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::validation(path, e.into_inner().to_string())
        })
    }
}

/// Runs assembly and estimation for every taker in `records`.
pub fn run_pipeline(bank: &ItemBank, records: &[RawResponseRecord], options: &PipelineOptions) -> Result<PipelineOutput> {
    let assembly = assemble_patterns(records, bank)?;
    let mut out = run_patterns(bank, &assembly.patterns, options)?;
    out.rejects = assembly.rejects;
    out.diagnostics = assembly.diagnostics;
    Ok(out)
}

/// Estimate and percent-correct of one variant pattern.
type PatternResult = Result<(ProficiencyEstimate, f64)>;

/// Estimation stage of [`run_pipeline`] on already-assembled patterns.
pub fn run_patterns(bank: &ItemBank, patterns: &[VariantPattern], options: &PipelineOptions) -> Result<PipelineOutput> {
    if let Some(s) = &options.scale {
        s.validate()?;
    }
    let items = bank.item_set();
    let per_pattern: Vec<Result<(ProficiencyEstimate, f64)>> = options.execution.map_slice(patterns, |vp| {
        let resolved = ResolvedPattern::new(&vp.pattern, items)?;
        let est = mle_resolved(&resolved)?;
        let (earned, possible) = resolved
            .observed
            .iter()
            .fold((0usize, 0usize), |(e, p), (item, c)| (e + c, p + item.max_score()));
        Ok((est, earned as f64 / possible as f64))
    });

    let mut grouped: BTreeMap<&str, Vec<(&VariantPattern, PatternResult)>> = BTreeMap::new();
    for (vp, res) in patterns.iter().zip(per_pattern) {
        grouped.entry(vp.taker_id.as_str()).or_default().push((vp, res));
    }

    let mut takers = Vec::with_capacity(grouped.len());
    for (taker_id, entries) in grouped {
        let mut set = VariantEstimateSet {
            taker_id: taker_id.to_owned(),
            included: Vec::new(),
            excluded: Vec::new(),
            percent_correct: BTreeMap::new(),
        };
        for (vp, res) in entries {
            if set.percent_correct.contains_key(&vp.variant_id) {
                return Err(Error::Assembly(format!(
                    "taker {taker_id} has more than one pattern for variant {}",
                    vp.variant_id
                )));
            }
            match res {
                Ok((est, pc)) => {
                    set.percent_correct.insert(vp.variant_id.clone(), pc);
                    if est.boundary_flag {
                        set.excluded.push(ExcludedVariant {
                            variant_id: vp.variant_id.clone(),
                            reason: format!("boundary estimate at theta = {}", est.theta),
                        });
                    } else {
                        set.included.push(VariantEstimate {
                            variant_id: vp.variant_id.clone(),
                            estimate: est,
                            percent_correct: pc,
                        });
                    }
                }
                Err(e) => {
                    set.excluded.push(ExcludedVariant {
                        variant_id: vp.variant_id.clone(),
                        reason: e.to_string(),
                    });
                }
            }
        }
        let comps: Vec<ProficiencyEstimate> = set.included.iter().map(|v| v.estimate.clone()).collect();
        let (weighted, error) = if comps.is_empty() {
            let err = Error::Pipeline {
                taker_id: taker_id.to_owned(),
                message: "every variant was excluded".into(),
            };
            log::warn!("{err}");
            (None, Some(err.to_string()))
        } else {
            (Some(combine_inverse_variance(&comps)?), None)
        };
        let (weighted, included) = match &options.scale {
            Some(t) => (
                weighted.map(|w| apply_scale_weighted(&w, t)),
                set.included
                    .into_iter()
                    .map(|v| VariantEstimate {
                        estimate: apply_scale(&v.estimate, t),
                        ..v
                    })
                    .collect(),
            ),
            None => (weighted, set.included),
        };
        set.included = included;
        takers.push(TakerResult {
            taker_id: taker_id.to_owned(),
            variants: set,
            weighted,
            error,
        });
    }
    Ok(PipelineOutput {
        bank: bank.name.clone(),
        scale: options.scale,
        takers,
        rejects: Vec::new(),
        diagnostics: Vec::new(),
    })
}
