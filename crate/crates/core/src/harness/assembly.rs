//! Turning scored records into one response pattern per (taker, variant).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::bank::{ItemBank, ItemFormat};
use super::records::{RawResponseRecord, Reject};
use super::scoring::{score_multiple_choice, Diagnostic};
use crate::error::{Error, Result};
use crate::model::{ResponsePattern, ScoredResponse};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantPattern {
    pub taker_id: String,
    pub variant_id: String,
    pub pattern: ResponsePattern,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assembly {
    /// Sorted by (taker_id, variant_id); each pattern lists every bank item in bank order.
    pub patterns: Vec<VariantPattern>,
    pub rejects: Vec<Reject>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Scores every record and groups them by (taker, variant). Items without a
/// record are missing. Unknown items and out-of-range scores become rejects;
/// duplicates and unscored open-ended records are errors.
///
/// The output does not depend on the order of `records`.
pub fn assemble_patterns(records: &[RawResponseRecord], bank: &ItemBank) -> Result<Assembly> {
    let mut cells: BTreeMap<(&str, &str), Vec<Option<usize>>> = BTreeMap::new();
    let mut seen: BTreeSet<(&str, &str, &str)> = BTreeSet::new();
    let mut unscored: BTreeSet<&str> = BTreeSet::new();
    let mut out = Assembly::default();

    for rec in records {
        let key = (rec.taker_id.as_str(), rec.variant_id.as_str(), rec.item_id.as_str());
        if !seen.insert(key) {
            return Err(Error::Assembly(format!(
                "duplicate record for taker {}, variant {}, item {}",
                rec.taker_id, rec.variant_id, rec.item_id
            )));
        }
        let Some(pos) = bank.item_set().position(&rec.item_id) else {
            out.rejects.push(Reject {
                line: rec.line,
                reason: format!("unknown item_id {}", rec.item_id),
            });
            continue;
        };
        let item = &bank.items()[pos];
        let category = match item.format {
            ItemFormat::MultipleChoice => {
                if rec.extracted_answer.trim().is_empty() {
                    out.rejects.push(Reject {
                        line: rec.line,
                        reason: format!("multiple-choice record for {} has no extracted answer", rec.item_id),
                    });
                    continue;
                }
                let scored = score_multiple_choice(rec, bank)?;
                out.diagnostics.extend(scored.diagnostic);
                scored.response.category.expect("scored")
            }
            ItemFormat::OpenDichotomous | ItemFormat::OpenPartialCredit => match rec.human_score {
                None => {
                    unscored.insert(rec.item_id.as_str());
                    continue;
                }
                Some(s) if s >= item.params.num_categories() => {
                    out.rejects.push(Reject {
                        line: rec.line,
                        reason: format!(
                            "human_score {s} out of range for item {} with {} categories",
                            rec.item_id,
                            item.params.num_categories()
                        ),
                    });
                    continue;
                }
                Some(s) => s,
            },
        };
        cells
            .entry((rec.taker_id.as_str(), rec.variant_id.as_str()))
            .or_insert_with(|| vec![None; bank.len()])[pos] = Some(category);
    }

    if !unscored.is_empty() {
        return Err(Error::Assembly(format!(
            "open-ended records without human_score for items: {}",
            unscored.into_iter().collect::<Vec<_>>().join(", ")
        )));
    }

    out.patterns = cells
        .into_iter()
        .map(|((taker, variant), row)| VariantPattern {
            taker_id: taker.to_owned(),
            variant_id: variant.to_owned(),
            pattern: ResponsePattern {
                taker_id: taker.to_owned(),
                responses: bank
                    .items()
                    .iter()
                    .zip(row)
                    .map(|(item, category)| ScoredResponse {
                        item_id: item.item_id().to_owned(),
                        category,
                    })
                    .collect(),
            },
        })
        .collect();
    out.rejects.sort_by(|a, b| a.line.cmp(&b.line).then_with(|| a.reason.cmp(&b.reason)));
    out.diagnostics.sort_by(|a, b| {
        (a.line, &a.taker_id, &a.variant_id, &a.item_id).cmp(&(b.line, &b.taker_id, &b.variant_id, &b.item_id))
    });
    Ok(out)
}
