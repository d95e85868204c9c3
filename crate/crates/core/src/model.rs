//! Item response models: category probabilities, pattern log-likelihoods, their
//! θ-derivatives and information functions for the 3PL, 2PL and generalized
//! partial credit (GPC) models.
//!
//! Every model shares the logistic scaling constant [`SCALING_CONSTANT`] (1.7).
//! Probabilities are combined in log-space throughout; a GPC item's category
//! probabilities are normalized with log-sum-exp.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{log_add_exp, log_sum_exp, logistic, softplus, CompensatedSum};

/// Logistic scaling constant placing slopes on the normal-ogive metric.
pub const SCALING_CONSTANT: f64 = 1.7;

/// Tolerance on `Σ d = 0` for GPC threshold offsets.
pub const THRESHOLD_SUM_TOLERANCE: f64 = 1e-9;

/// Lower and upper clamp for θ in every iterative routine.
pub const THETA_MIN: f64 = -6.0;
pub const THETA_MAX: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "3PL")]
    ThreePL,
    #[serde(rename = "2PL")]
    TwoPL,
    #[serde(rename = "GPC")]
    Gpc,
}

impl ModelKind {
    pub fn is_dichotomous(self) -> bool {
        !matches!(self, ModelKind::Gpc)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::ThreePL => "3PL",
            ModelKind::TwoPL => "2PL",
            ModelKind::Gpc => "GPC",
        })
    }
}

/// One item's model and parameters. Constructed only through validating
/// constructors, so a value of this type always satisfies the model invariants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemParameters {
    item_id: String,
    kind: ModelKind,
    a: f64,
    b: f64,
    c: f64,
    d: Vec<f64>,
    num_categories: usize,
}

impl ItemParameters {
    pub fn three_pl(item_id: impl Into<String>, a: f64, b: f64, c: f64) -> Result<Self> {
        let item_id = item_id.into();
        check_slope_location(&item_id, a, b)?;
        if !(c.is_finite() && (0.0..1.0).contains(&c)) {
            return Err(Error::validation(
                format!("{item_id}.c"),
                format!("lower asymptote must lie in [0, 1), got {c}"),
            ));
        }
        Ok(Self {
            item_id,
            kind: ModelKind::ThreePL,
            a,
            b,
            c,
            d: Vec::new(),
            num_categories: 2,
        })
    }

    pub fn two_pl(item_id: impl Into<String>, a: f64, b: f64) -> Result<Self> {
        let item_id = item_id.into();
        check_slope_location(&item_id, a, b)?;
        Ok(Self {
            item_id,
            kind: ModelKind::TwoPL,
            a,
            b,
            c: 0.0,
            d: Vec::new(),
            num_categories: 2,
        })
    }

    /// GPC item with threshold offsets `d_1..d_{m-1}` (the implicit `d_0 = 0` is not stored).
    /// The offsets must sum to zero; they are never re-normalized here.
    pub fn gpc(item_id: impl Into<String>, a: f64, b: f64, d: Vec<f64>) -> Result<Self> {
        let item_id = item_id.into();
        check_slope_location(&item_id, a, b)?;
        if d.is_empty() {
            return Err(Error::validation(
                format!("{item_id}.d"),
                "a GPC item needs at least one threshold offset",
            ));
        }
        if let Some(bad) = d.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(
                format!("{item_id}.d[{bad}]"),
                "threshold offsets must be finite",
            ));
        }
        let sum: f64 = d.iter().sum();
        if sum.abs() > THRESHOLD_SUM_TOLERANCE {
            return Err(Error::validation(
                format!("{item_id}.d"),
                format!("threshold offsets must sum to 0 (within {THRESHOLD_SUM_TOLERANCE}), got {sum}"),
            ));
        }
        let num_categories = d.len() + 1;
        Ok(Self {
            item_id,
            kind: ModelKind::Gpc,
            a,
            b,
            c: 0.0,
            d,
            num_categories,
        })
    }

    pub fn item_id(&self) -> &str {
        &self.item_id
    }
    pub fn kind(&self) -> ModelKind {
        self.kind
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    /// Lower asymptote; zero for 2PL and GPC items.
    pub fn c(&self) -> f64 {
        self.c
    }
    /// Threshold offsets `d_1..d_{m-1}`; empty for dichotomous items.
    pub fn d(&self) -> &[f64] {
        &self.d
    }
    pub fn num_categories(&self) -> usize {
        self.num_categories
    }
    /// Highest attainable score on this item.
    pub fn max_score(&self) -> usize {
        self.num_categories - 1
    }

    /// Log-probability of every category at `theta`.
    pub fn log_probs(&self, theta: f64) -> Vec<f64> {
        match self.kind {
            ModelKind::ThreePL | ModelKind::TwoPL => {
                let (lp0, lp1) = dichotomous_log_probs(self.a, self.b, self.c, theta);
                vec![lp0, lp1]
            }
            ModelKind::Gpc => {
                let z = self.gpc_exponents(theta);
                let lse = log_sum_exp(&z);
                z.into_iter().map(|v| v - lse).collect()
            }
        }
    }

    /// Probability of every category at `theta`.
    pub fn probs(&self, theta: f64) -> Vec<f64> {
        self.log_probs(theta).into_iter().map(f64::exp).collect()
    }

    /// Log-probability of `category` plus its first and second θ-derivatives.
    pub fn category_derivatives(&self, theta: f64, category: usize) -> (f64, f64, f64) {
        let da = SCALING_CONSTANT * self.a;
        match self.kind {
            ModelKind::ThreePL | ModelKind::TwoPL => {
                let z = da * (theta - self.b);
                let s = logistic(z);
                let (lp0, lp1) = dichotomous_log_probs(self.a, self.b, self.c, theta);
                if category == 0 {
                    (lp0, -da * s, -da * da * s * (1.0 - s))
                } else if self.c == 0.0 {
                    (lp1, da * (1.0 - s), -da * da * s * (1.0 - s))
                } else {
                    let p = lp1.exp();
                    let dp = (1.0 - self.c) * da * s * (1.0 - s);
                    let d2p = dp * da * (1.0 - 2.0 * s);
                    let r = dp / p;
                    (lp1, r, d2p / p - r * r)
                }
            }
            ModelKind::Gpc => {
                let lp = self.log_probs(theta);
                let (mean, var) = category_moments(&lp);
                (lp[category], da * (category as f64 - mean), -da * da * var)
            }
        }
    }

    /// Expected (Fisher) information contributed by this item at `theta`.
    pub fn information(&self, theta: f64) -> f64 {
        let da = SCALING_CONSTANT * self.a;
        match self.kind {
            ModelKind::ThreePL | ModelKind::TwoPL => {
                let s = logistic(da * (theta - self.b));
                if self.c == 0.0 {
                    da * da * s * (1.0 - s)
                } else {
                    let p = self.c + (1.0 - self.c) * s;
                    da * da * (1.0 - self.c) * s * s * (1.0 - s) / p
                }
            }
            ModelKind::Gpc => {
                let (_, var) = category_moments(&self.log_probs(theta));
                da * da * var
            }
        }
    }

    /// Expected item score `Σ l·P_l(θ)`.
    pub fn expected_score(&self, theta: f64) -> f64 {
        self.probs(theta)
            .iter()
            .enumerate()
            .map(|(l, p)| l as f64 * p)
            .sum()
    }

    /// GPC exponents `1.7·a·Σ_{v=1..l} (θ − b + d_v)`, with `l = 0` mapping to zero.
    /// The shared `v = 0` term cancels in the normalization and is dropped.
    fn gpc_exponents(&self, theta: f64) -> Vec<f64> {
        let da = SCALING_CONSTANT * self.a;
        let mut z = Vec::with_capacity(self.num_categories);
        let mut acc = 0.0;
        z.push(0.0);
        for dv in &self.d {
            acc += theta - self.b + dv;
            z.push(da * acc);
        }
        z
    }
}

fn check_slope_location(item_id: &str, a: f64, b: f64) -> Result<()> {
    if !a.is_finite() {
        return Err(Error::validation(format!("{item_id}.a"), "slope must be finite"));
    }
    if !b.is_finite() {
        return Err(Error::validation(format!("{item_id}.b"), "difficulty must be finite"));
    }
    Ok(())
}

/// `(ln P0, ln P1)` of a dichotomous item.
#[inline]
pub(crate) fn dichotomous_log_probs(a: f64, b: f64, c: f64, theta: f64) -> (f64, f64) {
    let z = SCALING_CONSTANT * a * (theta - b);
    let log_s = -softplus(-z);
    let log_1ms = -softplus(z);
    if c == 0.0 {
        (log_1ms, log_s)
    } else {
        let log_c = c.ln();
        let log_1mc = (-c).ln_1p();
        (log_1mc + log_1ms, log_add_exp(log_c, log_1mc + log_s))
    }
}

/// Mean and variance of the category index under the given log-probabilities.
fn category_moments(log_probs: &[f64]) -> (f64, f64) {
    let mut mean = 0.0;
    let mut second = 0.0;
    for (l, lp) in log_probs.iter().enumerate() {
        let p = lp.exp();
        let l = l as f64;
        mean += l * p;
        second += l * l * p;
    }
    (mean, (second - mean * mean).max(0.0))
}

/// Probability of a correct response under the 3PL (or 2PL, with `c = 0`) model.
pub fn prob_3pl(theta: f64, item: &ItemParameters) -> Result<f64> {
    check_theta(theta)?;
    if !item.kind.is_dichotomous() {
        return Err(Error::contract(format!(
            "prob_3pl called on {} item {}",
            item.kind, item.item_id
        )));
    }
    let s = logistic(SCALING_CONSTANT * item.a * (theta - item.b));
    Ok(item.c + (1.0 - item.c) * s)
}

/// Category probabilities of a GPC item.
pub fn prob_gpc(theta: f64, item: &ItemParameters) -> Result<Vec<f64>> {
    check_theta(theta)?;
    if item.kind != ModelKind::Gpc {
        return Err(Error::contract(format!(
            "prob_gpc called on {} item {}",
            item.kind, item.item_id
        )));
    }
    if item.d.len() + 1 != item.num_categories {
        return Err(Error::contract(format!(
            "item {} has {} thresholds for {} categories",
            item.item_id,
            item.d.len(),
            item.num_categories
        )));
    }
    Ok(item.probs(theta))
}

/// Category probabilities of any item: `[1 − p, p]` for dichotomous items.
pub fn prob_category(theta: f64, item: &ItemParameters) -> Result<Vec<f64>> {
    match item.kind {
        ModelKind::ThreePL | ModelKind::TwoPL => {
            let p = prob_3pl(theta, item)?;
            Ok(vec![1.0 - p, p])
        }
        ModelKind::Gpc => prob_gpc(theta, item),
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("theta must be finite, got {theta}")))
    }
}

/// A scored response: `category` is `None` when the item was not administered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoredResponse {
    pub item_id: String,
    pub category: Option<usize>,
}

impl ScoredResponse {
    pub fn new(item_id: impl Into<String>, category: usize) -> Self {
        Self {
            item_id: item_id.into(),
            category: Some(category),
        }
    }

    pub fn missing(item_id: impl Into<String>) -> Self {
        Self {
            item_id: item_id.into(),
            category: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponsePattern {
    pub taker_id: String,
    pub responses: Vec<ScoredResponse>,
}

impl ResponsePattern {
    /// Builds a pattern, rejecting duplicate item ids.
    pub fn new(taker_id: impl Into<String>, responses: Vec<ScoredResponse>) -> Result<Self> {
        let taker_id = taker_id.into();
        let mut seen = std::collections::HashSet::with_capacity(responses.len());
        for r in &responses {
            if !seen.insert(r.item_id.as_str()) {
                return Err(Error::contract(format!(
                    "pattern for {taker_id} has more than one response to item {}",
                    r.item_id
                )));
            }
        }
        Ok(Self { taker_id, responses })
    }

    pub fn observed_count(&self) -> usize {
        self.responses.iter().filter(|r| r.category.is_some()).count()
    }
}

/// An indexed, id-unique collection of items.
#[derive(Debug, Clone, Default)]
pub struct ItemSet {
    items: Vec<ItemParameters>,
    index: HashMap<String, usize>,
}

impl ItemSet {
    pub fn new(items: Vec<ItemParameters>) -> Result<Self> {
        let mut index = HashMap::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            if index.insert(item.item_id.clone(), i).is_some() {
                return Err(Error::validation(
                    format!("items[{i}].item_id"),
                    format!("duplicate item id {}", item.item_id),
                ));
            }
        }
        Ok(Self { items, index })
    }

    pub fn get(&self, item_id: &str) -> Option<&ItemParameters> {
        self.index.get(item_id).map(|&i| &self.items[i])
    }

    pub fn position(&self, item_id: &str) -> Option<usize> {
        self.index.get(item_id).copied()
    }

    pub fn items(&self) -> &[ItemParameters] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ItemParameters> {
        self.items.iter()
    }
}

/// A pattern whose observed responses have been resolved against an item set.
#[derive(Debug, Clone)]
pub struct ResolvedPattern<'a> {
    pub taker_id: &'a str,
    pub observed: Vec<(&'a ItemParameters, usize)>,
}

impl<'a> ResolvedPattern<'a> {
    /// Resolves item references, dropping missing responses. Fails on unknown
    /// items, out-of-range categories, or a pattern with no observed response.
    pub fn new(pattern: &'a ResponsePattern, items: &'a ItemSet) -> Result<Self> {
        let mut observed = Vec::with_capacity(pattern.responses.len());
        for r in &pattern.responses {
            let Some(category) = r.category else { continue };
            let item = items.get(&r.item_id).ok_or_else(|| {
                Error::contract(format!(
                    "pattern for {} references unknown item {}",
                    pattern.taker_id, r.item_id
                ))
            })?;
            if category >= item.num_categories {
                return Err(Error::contract(format!(
                    "category {category} out of range for item {} with {} categories",
                    item.item_id, item.num_categories
                )));
            }
            observed.push((item, category));
        }
        // Sums run in a canonical order so that patterns differing only by a
        // permutation of interchangeable items give bit-identical results.
        observed.sort_by(|(x, i), (y, j)| {
            (x.kind as u8)
                .cmp(&(y.kind as u8))
                .then(x.a.total_cmp(&y.a))
                .then(x.b.total_cmp(&y.b))
                .then(x.c.total_cmp(&y.c))
                .then_with(|| x.d.iter().zip(&y.d).map(|(p, q)| p.total_cmp(q)).find(|o| o.is_ne()).unwrap_or(x.d.len().cmp(&y.d.len())))
                .then(i.cmp(j))
        });
        if observed.is_empty() {
            return Err(Error::contract(format!(
                "pattern for {} has no observed responses",
                pattern.taker_id
            )));
        }
        Ok(Self {
            taker_id: &pattern.taker_id,
            observed,
        })
    }

    pub fn log_likelihood(&self, theta: f64) -> f64 {
        let mut acc = CompensatedSum::new();
        for (item, category) in &self.observed {
            acc.add(item.log_probs(theta)[*category]);
        }
        acc.value()
    }

    /// `(ln L, d ln L / dθ, −d² ln L / dθ²)`.
    pub fn derivatives(&self, theta: f64) -> (f64, f64, f64) {
        let (mut ll, mut d1, mut d2) = (0.0, 0.0, 0.0);
        for (item, category) in &self.observed {
            let (l, g, h) = item.category_derivatives(theta, *category);
            ll += l;
            d1 += g;
            d2 += h;
        }
        (ll, d1, -d2)
    }

    pub fn expected_information(&self, theta: f64) -> f64 {
        self.observed.iter().map(|(item, _)| item.information(theta)).sum()
    }

    /// True when every observed response is in the lowest category.
    pub fn all_lowest(&self) -> bool {
        self.observed.iter().all(|(_, c)| *c == 0)
    }

    /// True when every observed response is in the highest category.
    pub fn all_highest(&self) -> bool {
        self.observed.iter().all(|(item, c)| *c == item.max_score())
    }
}

/// Log-likelihood of a response pattern at `theta`; missing responses are skipped.
pub fn pattern_log_likelihood(pattern: &ResponsePattern, items: &ItemSet, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(ResolvedPattern::new(pattern, items)?.log_likelihood(theta))
}

/// First derivative of the pattern log-likelihood and the observed information
/// (negated second derivative) at `theta`.
pub fn score_and_information(
    pattern: &ResponsePattern,
    items: &ItemSet,
    theta: f64,
) -> Result<(f64, f64)> {
    check_theta(theta)?;
    let (_, score, info) = ResolvedPattern::new(pattern, items)?.derivatives(theta);
    Ok((score, info))
}

/// Expected Fisher information of a set of items at `theta`.
pub fn test_information(items: &[ItemParameters], theta: f64) -> Result<f64> {
    check_theta(theta)?;
    if items.is_empty() {
        return Err(Error::contract("test information of an empty item set"));
    }
    Ok(items.iter().map(|i| i.information(theta)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn logistic_midpoint_and_asymptote() {
        let item = ItemParameters::two_pl("i", 1.3, 0.4).unwrap();
        assert!(close(prob_3pl(0.4, &item).unwrap(), 0.5, 1e-15));
        let item = ItemParameters::three_pl("i", 1.0, 0.0, 0.25).unwrap();
        assert!(close(prob_3pl(-50.0, &item).unwrap(), 0.25, 1e-12));
    }

    #[test]
    fn three_pl_reference_value() {
        // 0.2 + 0.8 / (1 + e^-1.7), evaluated independently in extended precision.
        let item = ItemParameters::three_pl("i", 1.0, 0.0, 0.2).unwrap();
        let p = prob_3pl(1.0, &item).unwrap();
        assert!(close(p, 0.876_427_787_933_172_2, 1e-12), "{p}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let item = ItemParameters::two_pl("i", 1.0, 0.0).unwrap();
        assert!(matches!(prob_3pl(f64::NAN, &item), Err(Error::Domain(_))));
        assert!(matches!(prob_3pl(f64::INFINITY, &item), Err(Error::Domain(_))));
        let gpc = ItemParameters::gpc("g", 1.0, 0.0, vec![0.5, -0.5]).unwrap();
        assert!(matches!(prob_3pl(0.0, &gpc), Err(Error::Contract(_))));
        assert!(matches!(prob_gpc(0.0, &item), Err(Error::Contract(_))));
        assert!(ItemParameters::gpc("g", 1.0, 0.0, vec![0.5, -0.4]).is_err());
        assert!(ItemParameters::gpc("g", 1.0, 0.0, vec![]).is_err());
        assert!(ItemParameters::three_pl("t", 1.0, 0.0, 1.0).is_err());
        assert!(ItemParameters::three_pl("t", 1.0, 0.0, -0.1).is_err());
        assert!(ItemParameters::two_pl("t", f64::NAN, 0.0).is_err());
    }

    #[test]
    fn gpc_three_category_reference() {
        // Exponents 0, 0.85, 0 by hand.
        let item = ItemParameters::gpc("g", 1.0, 0.0, vec![0.5, -0.5]).unwrap();
        let p = prob_gpc(0.0, &item).unwrap();
        let e = 0.85f64.exp();
        let denom = 2.0 + e;
        assert!(close(p[0], 1.0 / denom, 1e-15));
        assert!(close(p[1], e / denom, 1e-15));
        assert!(close(p[2], 1.0 / denom, 1e-15));
        assert!(p[1] > p[0] && p[1] > p[2]);
    }

    #[test]
    fn prob_category_dispatch() {
        let three = ItemParameters::three_pl("t", 1.2, 0.3, 0.0).unwrap();
        let two = ItemParameters::two_pl("t", 1.2, 0.3).unwrap();
        for &theta in &[-2.0, 0.0, 1.7] {
            let p = prob_3pl(theta, &three).unwrap();
            assert_eq!(prob_category(theta, &three).unwrap(), vec![1.0 - p, p]);
            assert_eq!(
                prob_category(theta, &three).unwrap(),
                prob_category(theta, &two).unwrap()
            );
        }
        let gpc = ItemParameters::gpc("g", 0.8, 0.1, vec![1.0, 0.0, -1.0]).unwrap();
        assert_eq!(prob_category(0.3, &gpc).unwrap(), prob_gpc(0.3, &gpc).unwrap());
    }

    #[test]
    fn information_peaks_at_difficulty() {
        let item = ItemParameters::two_pl("i", 1.4, 0.7).unwrap();
        let at_b = item.information(0.7);
        for &t in &[-1.0, 0.0, 0.6, 0.8, 2.0] {
            assert!(item.information(t) < at_b);
        }
        let other = ItemParameters::three_pl("j", 0.9, -0.3, 0.2).unwrap();
        let both = test_information(&[item.clone(), other.clone()], 0.1).unwrap();
        let sum = test_information(&[item], 0.1).unwrap() + test_information(&[other], 0.1).unwrap();
        assert!(close(both, sum, 1e-15));
        assert!(test_information(&[], 0.0).is_err());
    }

    #[test]
    fn pattern_likelihood_single_item() {
        let items = ItemSet::new(vec![ItemParameters::three_pl("i", 1.0, 0.0, 0.2).unwrap()]).unwrap();
        let pat = ResponsePattern::new("t", vec![ScoredResponse::new("i", 1)]).unwrap();
        let ll = pattern_log_likelihood(&pat, &items, 1.0).unwrap();
        let p = prob_3pl(1.0, &items.items()[0]).unwrap();
        assert!(close(ll, p.ln(), 1e-14));
    }

    #[test]
    fn missing_responses_are_skipped_and_empty_patterns_rejected() {
        let items = ItemSet::new(vec![
            ItemParameters::two_pl("i", 1.0, 0.0).unwrap(),
            ItemParameters::two_pl("j", 1.0, 1.0).unwrap(),
        ])
        .unwrap();
        let with_missing = ResponsePattern::new(
            "t",
            vec![ScoredResponse::new("i", 1), ScoredResponse::missing("j")],
        )
        .unwrap();
        let only = ResponsePattern::new("t", vec![ScoredResponse::new("i", 1)]).unwrap();
        assert_eq!(
            pattern_log_likelihood(&with_missing, &items, 0.3).unwrap(),
            pattern_log_likelihood(&only, &items, 0.3).unwrap()
        );
        let empty = ResponsePattern::new("t", vec![ScoredResponse::missing("i")]).unwrap();
        assert!(matches!(
            pattern_log_likelihood(&empty, &items, 0.0),
            Err(Error::Contract(_))
        ));
        let unknown = ResponsePattern::new("t", vec![ScoredResponse::new("zz", 1)]).unwrap();
        assert!(pattern_log_likelihood(&unknown, &items, 0.0).is_err());
        let out_of_range = ResponsePattern::new("t", vec![ScoredResponse::new("i", 2)]).unwrap();
        assert!(pattern_log_likelihood(&out_of_range, &items, 0.0).is_err());
        assert!(ResponsePattern::new(
            "t",
            vec![ScoredResponse::new("i", 1), ScoredResponse::new("i", 0)]
        )
        .is_err());
    }

    #[test]
    fn likelihood_stays_finite_for_long_patterns() {
        let items: Vec<_> = (0..400)
            .map(|i| ItemParameters::two_pl(format!("i{i}"), 2.0, 3.0).unwrap())
            .collect();
        let set = ItemSet::new(items).unwrap();
        let pat = ResponsePattern::new(
            "t",
            set.iter().map(|i| ScoredResponse::new(i.item_id(), 1)).collect(),
        )
        .unwrap();
        let ll = pattern_log_likelihood(&pat, &set, -6.0).unwrap();
        assert!(ll.is_finite() && ll < -1000.0);
    }
}
