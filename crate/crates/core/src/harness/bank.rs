//! Item bank documents (JSON).
//!
//! ```json
//! {
//!   "name": "demo",
//!   "provenance": "synthetic",
//!   "scale": { "target_mean": 500, "target_sd": 100, "source_mean": 0, "source_sd": 1 },
//!   "items": [
//!     { "item_id": "M001", "model": "3PL", "format": "multiple_choice",
//!       "num_categories": 2, "a": 1.1, "b": -0.3, "c": 0.2,
//!       "answer_key": "B", "num_options": 4,
//!       "content_domain": "number", "cognitive_domain": "knowing" }
//!   ]
//! }
//! ```
//!
//! `c` appears only on 3PL items and `d` (threshold offsets `d_1..d_{m-1}`, summing
//! to zero) only on GPC items. Calibration output adds per-item `se` and a
//! top-level `calibration` block; both are optional on input.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calibration::{CalibrationResult, ItemStandardErrors};
use crate::error::{Error, Result};
use crate::estimation::ScaleTransform;
use crate::model::{ItemParameters, ItemSet, ModelKind};
use crate::quadrature::QuadratureSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemFormat {
    MultipleChoice,
    OpenDichotomous,
    OpenPartialCredit,
}

impl ItemFormat {
    /// Model each format must use.
    pub fn required_model(self) -> ModelKind {
        match self {
            ItemFormat::MultipleChoice => ModelKind::ThreePL,
            ItemFormat::OpenDichotomous => ModelKind::TwoPL,
            ItemFormat::OpenPartialCredit => ModelKind::Gpc,
        }
    }

    pub fn is_open_ended(self) -> bool {
        !matches!(self, ItemFormat::MultipleChoice)
    }
}

/// Default number of options of a multiple-choice item.
pub const DEFAULT_OPTIONS: u8 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ItemDocument {
    item_id: String,
    model: ModelKind,
    format: ItemFormat,
    num_categories: usize,
    a: f64,
    b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    answer_key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    num_options: Option<u8>,
    #[serde(default)]
    content_domain: String,
    #[serde(default)]
    cognitive_domain: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    se: Option<ItemStandardErrors>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSummary {
    pub log_marginal_likelihood: f64,
    pub n_cycles: usize,
    pub converged: bool,
    pub quadrature: QuadratureSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flagged_items: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BankDocument {
    name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    provenance: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scale: Option<ScaleTransform>,
    items: Vec<ItemDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    calibration: Option<CalibrationSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BankItem {
    pub params: ItemParameters,
    pub format: ItemFormat,
    /// Upper-case option letter; multiple-choice items only.
    pub answer_key: Option<char>,
    pub num_options: Option<u8>,
    pub content_domain: String,
    pub cognitive_domain: String,
    pub se: Option<ItemStandardErrors>,
}

impl BankItem {
    pub fn item_id(&self) -> &str {
        self.params.item_id()
    }

    /// Option count used to decide whether an extracted key is a valid option.
    pub fn option_count(&self) -> u8 {
        self.num_options.unwrap_or(DEFAULT_OPTIONS)
    }
}

#[derive(Debug, Clone)]
pub struct ItemBank {
    pub name: String,
    pub provenance: String,
    pub scale: Option<ScaleTransform>,
    pub calibration: Option<CalibrationSummary>,
    items: Vec<BankItem>,
    set: ItemSet,
}

impl PartialEq for ItemBank {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.provenance == other.provenance
            && self.scale == other.scale
            && self.calibration == other.calibration
            && self.items == other.items
    }
}

impl ItemBank {
    pub fn new(name: impl Into<String>, items: Vec<BankItem>) -> Result<Self> {
        for (i, item) in items.iter().enumerate() {
            validate_item(i, item)?;
        }
        let set = ItemSet::new(items.iter().map(|i| i.params.clone()).collect())?;
        Ok(Self {
            name: name.into(),
            provenance: String::new(),
            scale: None,
            calibration: None,
            items,
            set,
        })
    }

    pub fn items(&self) -> &[BankItem] {
        &self.items
    }

    pub fn item_set(&self) -> &ItemSet {
        &self.set
    }

    pub fn get(&self, item_id: &str) -> Option<&BankItem> {
        self.set.position(item_id).map(|i| &self.items[i])
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn count_by_format(&self, format: ItemFormat) -> usize {
        self.items.iter().filter(|i| i.format == format).count()
    }

    /// Parses and validates a bank document. Schema violations name the JSON path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: BankDocument = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::validation(path, e.into_inner().to_string())
        })?;
        Self::from_document(doc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn from_document(doc: BankDocument) -> Result<Self> {
        let mut items = Vec::with_capacity(doc.items.len());
        for (i, it) in doc.items.into_iter().enumerate() {
            let here = |field: &str| format!("items[{i}].{field}");
            let params = match it.model {
                ModelKind::ThreePL => {
                    let c = it
                        .c
                        .ok_or_else(|| Error::validation(here("c"), "3PL items need a lower asymptote"))?;
                    ItemParameters::three_pl(&it.item_id, it.a, it.b, c)
                }
                ModelKind::TwoPL => {
                    if it.c.is_some_and(|c| c != 0.0) {
                        return Err(Error::validation(here("c"), "2PL items have no lower asymptote"));
                    }
                    ItemParameters::two_pl(&it.item_id, it.a, it.b)
                }
                ModelKind::Gpc => {
                    let d = it
                        .d
                        .clone()
                        .ok_or_else(|| Error::validation(here("d"), "GPC items need threshold offsets"))?;
                    ItemParameters::gpc(&it.item_id, it.a, it.b, d)
                }
            }
            .map_err(|e| match e {
                Error::Validation { message, .. } => Error::validation(format!("items[{i}]"), message),
                other => other,
            })?;
            if it.model != ModelKind::Gpc && it.d.as_ref().is_some_and(|d| !d.is_empty()) {
                return Err(Error::validation(here("d"), "only GPC items carry threshold offsets"));
            }
            if params.num_categories() != it.num_categories {
                return Err(Error::validation(
                    here("num_categories"),
                    format!(
                        "declared {} categories but the parameters imply {}",
                        it.num_categories,
                        params.num_categories()
                    ),
                ));
            }
            let answer_key = match it.answer_key.as_deref() {
                None => None,
                Some(k) => {
                    let k = k.trim().to_ascii_uppercase();
                    let mut chars = k.chars();
                    match (chars.next(), chars.next()) {
                        (Some(ch), None) if ch.is_ascii_uppercase() => Some(ch),
                        _ => {
                            return Err(Error::validation(
                                here("answer_key"),
                                format!("answer key must be a single letter, got {k:?}"),
                            ))
                        }
                    }
                }
            };
            items.push(BankItem {
                params,
                format: it.format,
                answer_key,
                num_options: it.num_options,
                content_domain: it.content_domain,
                cognitive_domain: it.cognitive_domain,
                se: it.se,
            });
        }
        if let Some(scale) = &doc.scale {
            scale.validate()?;
        }
        let mut bank = Self::new(doc.name, items)?;
        bank.provenance = doc.provenance;
        bank.scale = doc.scale;
        bank.calibration = doc.calibration;
        Ok(bank)
    }

    fn to_document(&self) -> BankDocument {
        BankDocument {
            name: self.name.clone(),
            provenance: self.provenance.clone(),
            scale: self.scale,
            calibration: self.calibration.clone(),
            items: self
                .items
                .iter()
                .map(|i| ItemDocument {
                    item_id: i.item_id().to_owned(),
                    model: i.params.kind(),
                    format: i.format,
                    num_categories: i.params.num_categories(),
                    a: i.params.a(),
                    b: i.params.b(),
                    c: (i.params.kind() == ModelKind::ThreePL).then(|| i.params.c()),
                    d: (i.params.kind() == ModelKind::Gpc).then(|| i.params.d().to_vec()),
                    answer_key: i.answer_key.map(String::from),
                    num_options: i.num_options,
                    content_domain: i.content_domain.clone(),
                    cognitive_domain: i.cognitive_domain.clone(),
                    se: i.se.clone(),
                })
                .collect(),
        }
    }

    /// Pretty-printed JSON with a trailing newline. Floats use the shortest
    /// representation that parses back to the identical value.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_document()).expect("bank serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    /// Copy of this bank with parameters and standard errors taken from a calibration
    /// whose items match this bank's ids.
    pub fn with_calibration(&self, result: &CalibrationResult) -> Result<Self> {
        let mut items = self.items.clone();
        for cal in &result.items {
            let pos = self.set.position(cal.params.item_id()).ok_or_else(|| {
                Error::contract(format!("calibrated item {} is not in the bank", cal.params.item_id()))
            })?;
            items[pos].params = cal.params.clone();
            items[pos].se = Some(cal.se.clone());
        }
        let mut bank = Self::new(self.name.clone(), items)?;
        bank.provenance = self.provenance.clone();
        bank.scale = self.scale;
        bank.calibration = Some(CalibrationSummary {
            log_marginal_likelihood: result.log_marginal_likelihood,
            n_cycles: result.n_cycles,
            converged: result.converged,
            quadrature: result.quadrature,
            flagged_items: result
                .items
                .iter()
                .filter(|i| i.flagged)
                .map(|i| i.params.item_id().to_owned())
                .collect(),
        });
        Ok(bank)
    }
}

fn validate_item(index: usize, item: &BankItem) -> Result<()> {
    let here = |field: &str| format!("items[{index}].{field}");
    let required = item.format.required_model();
    if item.params.kind() != required {
        return Err(Error::validation(
            here("model"),
            format!(
                "{:?} items must use the {} model, found {}",
                item.format,
                required,
                item.params.kind()
            ),
        ));
    }
    match item.format {
        ItemFormat::MultipleChoice => {
            let key = item
                .answer_key
                .ok_or_else(|| Error::validation(here("answer_key"), "multiple-choice item lacks an answer key"))?;
            let options = item.option_count();
            if options == 0 || options > 26 {
                return Err(Error::validation(here("num_options"), "must lie in 1..=26"));
            }
            if (key as u8) >= b'A' + options {
                return Err(Error::validation(
                    here("answer_key"),
                    format!("key {key} is outside the {options} available options"),
                ));
            }
        }
        _ => {
            if item.answer_key.is_some() {
                return Err(Error::validation(here("answer_key"), "only multiple-choice items carry a key"));
            }
        }
    }
    Ok(())
}
