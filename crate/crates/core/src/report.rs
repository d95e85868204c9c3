//! Population and model comparisons under percent-correct and IRT scoring.
//!
//! Conventions written into every emitted manifest:
//! - quantiles interpolate linearly between order statistics (position `p·(n−1)`);
//! - mean intervals are Wald intervals `mean ± 1.96·se`;
//! - a model's distribution is its set of prompt-variant estimates;
//! - two populations differ significantly when their intervals are disjoint;
//! - rank ties are broken by ascending population id.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::Z_95;
use crate::harness::PipelineOutput;
use crate::numeric::{compensated_sum, quantile_sorted};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMethod {
    PercentCorrect,
    Irt,
}

impl ScoreMethod {
    pub fn file_stem(self) -> &'static str {
        match self {
            ScoreMethod::PercentCorrect => "percent_correct",
            ScoreMethod::Irt => "irt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSummary {
    pub population_id: String,
    pub method: ScoreMethod,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p5: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
    pub n: usize,
}

impl PopulationSummary {
    pub fn validate(&self) -> Result<()> {
        let p = [self.p5, self.p25, self.p50, self.p75, self.p95];
        if p.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::validation(
                &self.population_id,
                "percentiles must be non-decreasing",
            ));
        }
        if !(self.ci_low <= self.mean && self.mean <= self.ci_high) {
            return Err(Error::validation(&self.population_id, "mean must lie inside its interval"));
        }
        if self.n == 0 {
            return Err(Error::validation(&self.population_id, "n must be positive"));
        }
        Ok(())
    }
}

/// Input to [`summarize_population`].
#[derive(Debug, Clone, PartialEq)]
pub enum PopulationInput {
    /// A combined estimate (mean and se already pooled) with its component
    /// distribution, e.g. a model's variant-level estimates.
    Weighted { values: Vec<f64>, mean: f64, se: f64 },
    /// Individual scores. `se` overrides the sample standard error `sd/√n`.
    Sample { values: Vec<f64>, se: Option<f64> },
}

pub fn summarize_population(
    population_id: &str,
    input: &PopulationInput,
    method: ScoreMethod,
) -> Result<PopulationSummary> {
    let values = match input {
        PopulationInput::Weighted { values, .. } | PopulationInput::Sample { values, .. } => values,
    };
    if values.is_empty() {
        return Err(Error::contract(format!("population {population_id} has no estimates")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::contract(format!("population {population_id} has non-finite scores")));
    }
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let (mean, se) = match input {
        PopulationInput::Weighted { mean, se, .. } => (*mean, *se),
        PopulationInput::Sample { se, .. } => {
            let n = values.len() as f64;
            let mean = compensated_sum(values.iter().copied()) / n;
            let se = se.unwrap_or_else(|| {
                if values.len() < 2 {
                    0.0
                } else {
                    let ss = compensated_sum(values.iter().map(|v| (v - mean).powi(2)));
                    (ss / (n - 1.0)).sqrt() / n.sqrt()
                }
            });
            (mean, se)
        }
    };
    if !(se >= 0.0 && se.is_finite() && mean.is_finite()) {
        return Err(Error::contract(format!("population {population_id} has invalid mean or se")));
    }
    Ok(PopulationSummary {
        population_id: population_id.to_owned(),
        method,
        mean,
        ci_low: mean - Z_95 * se,
        ci_high: mean + Z_95 * se,
        p5: quantile_sorted(&sorted, 0.05),
        p25: quantile_sorted(&sorted, 0.25),
        p50: quantile_sorted(&sorted, 0.50),
        p75: quantile_sorted(&sorted, 0.75),
        p95: quantile_sorted(&sorted, 0.95),
        n: values.len(),
    })
}

/// True when the two intervals are disjoint.
pub fn ci_significant(a: &PopulationSummary, b: &PopulationSummary) -> bool {
    a.ci_high < b.ci_low || b.ci_high < a.ci_low
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignificanceFlag {
    pub method: ScoreMethod,
    pub a: String,
    pub b: String,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankDivergence {
    pub population_id: String,
    /// 1-based ranks.
    pub rank_percent_correct: usize,
    pub rank_irt: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    /// Sorted by mean, descending.
    pub percent_correct: Vec<PopulationSummary>,
    pub irt: Vec<PopulationSummary>,
    /// Every unordered pair under each method.
    pub significance: Vec<SignificanceFlag>,
    pub divergence: Vec<RankDivergence>,
}

impl RankingReport {
    pub fn ranked(&self, method: ScoreMethod) -> &[PopulationSummary] {
        match method {
            ScoreMethod::PercentCorrect => &self.percent_correct,
            ScoreMethod::Irt => &self.irt,
        }
    }

    pub fn rank_of(&self, method: ScoreMethod, population_id: &str) -> Option<usize> {
        self.ranked(method)
            .iter()
            .position(|s| s.population_id == population_id)
            .map(|i| i + 1)
    }
}

fn sort_descending(list: &mut [PopulationSummary]) {
    list.sort_by(|x, y| y.mean.total_cmp(&x.mean).then_with(|| x.population_id.cmp(&y.population_id)));
}

/// Orders both score lists and compares them.
pub fn build_ranking(
    mut percent_correct: Vec<PopulationSummary>,
    mut irt: Vec<PopulationSummary>,
) -> Result<RankingReport> {
    if percent_correct.is_empty() {
        return Err(Error::contract("ranking needs at least one population"));
    }
    for (method, list) in [(ScoreMethod::PercentCorrect, &percent_correct), (ScoreMethod::Irt, &irt)] {
        let mut ids = BTreeSet::new();
        for s in list {
            if s.method != method {
                return Err(Error::contract(format!(
                    "summary for {} has method {:?} in the {:?} list",
                    s.population_id, s.method, method
                )));
            }
            if !ids.insert(s.population_id.as_str()) {
                return Err(Error::contract(format!("population {} listed twice", s.population_id)));
            }
            s.validate()?;
        }
    }
    let ids_pc: BTreeSet<&str> = percent_correct.iter().map(|s| s.population_id.as_str()).collect();
    let ids_irt: BTreeSet<&str> = irt.iter().map(|s| s.population_id.as_str()).collect();
    if ids_pc != ids_irt {
        return Err(Error::contract(
            "percent-correct and IRT summaries cover different populations",
        ));
    }
    sort_descending(&mut percent_correct);
    sort_descending(&mut irt);

    let mut significance = Vec::new();
    for (method, list) in [(ScoreMethod::PercentCorrect, &percent_correct), (ScoreMethod::Irt, &irt)] {
        for i in 0..list.len() {
            for j in i + 1..list.len() {
                significance.push(SignificanceFlag {
                    method,
                    a: list[i].population_id.clone(),
                    b: list[j].population_id.clone(),
                    significant: ci_significant(&list[i], &list[j]),
                });
            }
        }
    }
    let irt_rank: BTreeMap<&str, usize> = irt
        .iter()
        .enumerate()
        .map(|(i, s)| (s.population_id.as_str(), i + 1))
        .collect();
    let divergence = percent_correct
        .iter()
        .enumerate()
        .filter_map(|(i, s)| {
            let r = irt_rank[s.population_id.as_str()];
            (r != i + 1).then(|| RankDivergence {
                population_id: s.population_id.clone(),
                rank_percent_correct: i + 1,
                rank_irt: r,
            })
        })
        .collect();
    Ok(RankingReport {
        percent_correct,
        irt,
        significance,
        divergence,
    })
}

/// Where a taker belongs: the part of its id before `separator`, or the whole
/// id when no separator is configured or present.
pub fn population_of(taker_id: &str, separator: Option<char>) -> &str {
    match separator.and_then(|s| taker_id.find(s)) {
        Some(i) => &taker_id[..i],
        None => taker_id,
    }
}

/// Builds per-population summaries (percent-correct in percent, IRT on the
/// pipeline's θ scale) from pipeline output.
///
/// A population with a single taker (an AI model) is described by that taker's
/// variant-level scores: the IRT mean and se are the inverse-variance combination
/// and the percent-correct se is the standard error of the variant mean (binomial
/// over the first variant's score points when there is only one variant).
/// Populations of several takers use one score per taker and the sample standard
/// error. Takers whose variants were all excluded are left out of the IRT summary.
pub fn summaries_from_pipeline(
    output: &PipelineOutput,
    separator: Option<char>,
    max_points: Option<usize>,
) -> Result<(Vec<PopulationSummary>, Vec<PopulationSummary>)> {
    let mut groups: BTreeMap<&str, Vec<&crate::harness::TakerResult>> = BTreeMap::new();
    for t in &output.takers {
        groups.entry(population_of(&t.taker_id, separator)).or_default().push(t);
    }
    let mut pc = Vec::new();
    let mut irt = Vec::new();
    for (pop, takers) in groups {
        if takers.len() == 1 {
            let t = takers[0];
            let values: Vec<f64> = t.variants.percent_correct.values().map(|v| 100.0 * v).collect();
            let se = if values.len() >= 2 {
                None
            } else {
                let p = values.first().copied().unwrap_or(0.0) / 100.0;
                let n = max_points.unwrap_or(1).max(1) as f64;
                Some(100.0 * (p * (1.0 - p) / n).sqrt())
            };
            pc.push(summarize_population(pop, &PopulationInput::Sample { values, se }, ScoreMethod::PercentCorrect)?);
            let w = t.weighted.as_ref().ok_or_else(|| Error::Pipeline {
                taker_id: t.taker_id.clone(),
                message: "no weighted estimate available for the IRT summary".into(),
            })?;
            let values = t.variants.included.iter().map(|v| v.estimate.theta).collect();
            irt.push(summarize_population(
                pop,
                &PopulationInput::Weighted {
                    values,
                    mean: w.theta,
                    se: w.se,
                },
                ScoreMethod::Irt,
            )?);
        } else {
            let pcs: Vec<f64> = takers
                .iter()
                .map(|t| {
                    let v = &t.variants.percent_correct;
                    100.0 * v.values().sum::<f64>() / v.len().max(1) as f64
                })
                .collect();
            pc.push(summarize_population(
                pop,
                &PopulationInput::Sample { values: pcs, se: None },
                ScoreMethod::PercentCorrect,
            )?);
            let thetas: Vec<f64> = takers.iter().filter_map(|t| t.weighted.as_ref().map(|w| w.theta)).collect();
            irt.push(summarize_population(
                pop,
                &PopulationInput::Sample { values: thetas, se: None },
                ScoreMethod::Irt,
            )?);
        }
    }
    Ok((pc, irt))
}

const PLOT_HEADER: [&str; 10] = ["population_id", "mean", "ci_low", "ci_high", "p5", "p25", "p50", "p75", "p95", "n"];

/// Writes one method's summaries as CSV in the given order.
pub fn write_summary_csv<W: Write>(summaries: &[PopulationSummary], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(PLOT_HEADER)?;
    for s in summaries {
        // `{}` on f64 prints the shortest string that parses back to the same value.
        w.write_record([
            s.population_id.clone(),
            s.mean.to_string(),
            s.ci_low.to_string(),
            s.ci_high.to_string(),
            s.p5.to_string(),
            s.p25.to_string(),
            s.p50.to_string(),
            s.p75.to_string(),
            s.p95.to_string(),
            s.n.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn read_summary_csv<R: Read>(reader: R, method: ScoreMethod) -> Result<Vec<PopulationSummary>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != PLOT_HEADER {
        return Err(Error::validation("header", format!("expected {}", PLOT_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> {
            rec[k].parse().map_err(|_| {
                Error::validation(format!("line {}, {}", i + 2, PLOT_HEADER[k]), format!("not a number: {:?}", &rec[k]))
            })
        };
        out.push(PopulationSummary {
            population_id: rec[0].to_owned(),
            method,
            mean: num(1)?,
            ci_low: num(2)?,
            ci_high: num(3)?,
            p5: num(4)?,
            p25: num(5)?,
            p50: num(6)?,
            p75: num(7)?,
            p95: num(8)?,
            n: rec[9]
                .parse()
                .map_err(|_| Error::validation(format!("line {}, n", i + 2), "not an integer"))?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub method: ScoreMethod,
    pub file: String,
    pub populations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotManifest {
    pub methods: Vec<ManifestEntry>,
    pub quantile_method: String,
    pub ci_method: String,
    pub model_distribution: String,
    pub tie_break: String,
    pub divergence: Vec<RankDivergence>,
    pub significance: Vec<SignificanceFlag>,
}

/// Files written by [`emit_plot_data`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlotFiles {
    pub percent_correct: PathBuf,
    pub irt: PathBuf,
    pub manifest: PathBuf,
}

/// Writes `percent_correct.csv`, `irt.csv` (rows in ranking order) and
/// `manifest.json` into `dir`.
pub fn emit_plot_data(report: &RankingReport, dir: &Path) -> Result<PlotFiles> {
    if report.percent_correct.is_empty() || report.irt.is_empty() {
        return Err(Error::contract("cannot emit plot data for an empty report"));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::new();
    let mut paths = Vec::new();
    for method in [ScoreMethod::PercentCorrect, ScoreMethod::Irt] {
        let file = format!("{}.csv", method.file_stem());
        let path = dir.join(&file);
        let mut buf = Vec::new();
        write_summary_csv(report.ranked(method), &mut buf)?;
        std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
        entries.push(ManifestEntry {
            method,
            file,
            populations: report.ranked(method).len(),
        });
        paths.push(path);
    }
    let manifest = PlotManifest {
        methods: entries,
        quantile_method: "linear interpolation between order statistics, position p*(n-1)".into(),
        ci_method: "Wald: mean +/- 1.96 * se".into(),
        model_distribution: "single-taker populations use prompt-variant estimates".into(),
        tie_break: "ascending population_id".into(),
        divergence: report.divergence.clone(),
        significance: report.significance.clone(),
    };
    let manifest_path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(PlotFiles {
        percent_correct: paths[0].clone(),
        irt: paths[1].clone(),
        manifest: manifest_path,
    })
}
