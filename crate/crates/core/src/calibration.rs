//! Item calibration by marginal maximum likelihood with the EM algorithm.
//!
//! The latent trait is integrated out against a fixed N(0, 1) prior on a
//! quadrature rule. Each cycle:
//!
//! 1. E-step (parallel over respondents): posterior weights of every respondent
//!    over the quadrature nodes, plus the log marginal likelihood.
//! 2. Expected category counts per item and node (parallel over items).
//! 3. M-step (parallel over items): Fisher-scoring Newton steps with a
//!    backtracking line search on each item's expected complete-data
//!    log-likelihood.
//!
//! All reductions run in respondent index order with compensated summation, so
//! results do not depend on the number of threads.
//!
//! The 3PL lower asymptote is bounded to `[0, c_max]` and carries a Beta-shaped
//! penalty; the quantity EM increases every cycle is therefore the penalized
//! log marginal likelihood, recorded in [`CalibrationResult::objective_trace`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::matrix::ResponseMatrix;
use crate::model::{dichotomous_log_probs, ItemParameters, ModelKind, SCALING_CONSTANT};
use crate::numeric::{log_sum_exp, logistic, CompensatedSum};
use crate::quadrature::{QuadratureRule, QuadratureSpec};

/// Neutral starting slope on the 1.7-scaled metric (1/1.175).
pub const START_SLOPE: f64 = 0.851;
/// Starting lower asymptote for multiple-choice (3PL) items.
pub const START_GUESSING: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPrior {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaPrior {
    fn log_density(&self, c: f64) -> f64 {
        (self.alpha - 1.0) * c.ln() + (self.beta - 1.0) * (-c).ln_1p()
    }
    fn gradient(&self, c: f64) -> f64 {
        (self.alpha - 1.0) / c - (self.beta - 1.0) / (1.0 - c)
    }
    fn curvature(&self, c: f64) -> f64 {
        (self.alpha - 1.0) / (c * c) + (self.beta - 1.0) / ((1.0 - c) * (1.0 - c))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub quadrature: QuadratureSpec,
    pub max_cycles: usize,
    /// Convergence when the largest absolute parameter change in a cycle falls below this.
    pub tolerance: f64,
    /// Penalty on the 3PL lower asymptote; `None` disables it.
    pub guessing_prior: Option<BetaPrior>,
    pub guessing_max: f64,
    pub slope_min: f64,
    /// Slopes reaching this bound are flagged as divergent.
    pub slope_max: f64,
    pub location_bound: f64,
    pub m_step_iterations: usize,
    pub execution: Execution,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            quadrature: QuadratureSpec::default(),
            max_cycles: 500,
            tolerance: 1e-4,
            guessing_prior: Some(BetaPrior {
                alpha: 2.0,
                beta: 8.0,
            }),
            guessing_max: 0.5,
            slope_min: 0.05,
            slope_max: 10.0,
            location_bound: 10.0,
            m_step_iterations: 10,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ItemStandardErrors {
    pub a: Option<f64>,
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub d: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedItem {
    pub params: ItemParameters,
    pub se: ItemStandardErrors,
    /// Slope ran into the upper bound.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub items: Vec<CalibratedItem>,
    /// Log marginal likelihood at the final parameters (without the asymptote penalty).
    pub log_marginal_likelihood: f64,
    /// Penalized log marginal likelihood at the start of each cycle and at the end.
    pub objective_trace: Vec<f64>,
    pub n_cycles: usize,
    pub converged: bool,
    pub quadrature: QuadratureSpec,
    /// Posterior mean and SD of θ for every respondent at the final parameters.
    pub eap: Vec<(f64, f64)>,
}

impl CalibrationResult {
    pub fn parameters(&self) -> Vec<ItemParameters> {
        self.items.iter().map(|i| i.params.clone()).collect()
    }
}

/// Working representation of one item's parameters during calibration.
#[derive(Debug, Clone, PartialEq)]
struct ItemState {
    kind: ModelKind,
    a: f64,
    b: f64,
    c: f64,
    d: Vec<f64>,
}

impl ItemState {
    fn from_params(p: &ItemParameters) -> Self {
        Self {
            kind: p.kind(),
            a: p.a(),
            b: p.b(),
            c: p.c(),
            d: p.d().to_vec(),
        }
    }

    fn num_categories(&self) -> usize {
        match self.kind {
            ModelKind::Gpc => self.d.len() + 1,
            _ => 2,
        }
    }

    /// Free parameter vector: `[a, b]`, `[a, b, c]` or `[a, b, d_1..d_{m-2}]`.
    fn free(&self) -> Vec<f64> {
        let mut v = vec![self.a, self.b];
        match self.kind {
            ModelKind::ThreePL => v.push(self.c),
            ModelKind::TwoPL => {}
            ModelKind::Gpc => v.extend_from_slice(&self.d[..self.d.len() - 1]),
        }
        v
    }

    fn with_free(&self, eta: &[f64]) -> Self {
        let mut next = self.clone();
        next.a = eta[0];
        next.b = eta[1];
        match self.kind {
            ModelKind::ThreePL => next.c = eta[2],
            ModelKind::TwoPL => {}
            ModelKind::Gpc => {
                let k = self.d.len() - 1;
                next.d[..k].copy_from_slice(&eta[2..2 + k]);
                next.d[k] = -eta[2..2 + k].iter().sum::<f64>();
            }
        }
        next
    }

    /// All stored parameters, for the convergence check.
    fn flat(&self) -> Vec<f64> {
        let mut v = vec![self.a, self.b, self.c];
        v.extend_from_slice(&self.d);
        v
    }

    fn log_probs(&self, theta: f64) -> Vec<f64> {
        match self.kind {
            ModelKind::ThreePL | ModelKind::TwoPL => {
                let (l0, l1) = dichotomous_log_probs(self.a, self.b, self.c, theta);
                vec![l0, l1]
            }
            ModelKind::Gpc => {
                let z = self.gpc_exponents(theta);
                let lse = log_sum_exp(&z);
                z.into_iter().map(|v| v - lse).collect()
            }
        }
    }

    fn gpc_exponents(&self, theta: f64) -> Vec<f64> {
        let da = SCALING_CONSTANT * self.a;
        let mut z = Vec::with_capacity(self.d.len() + 1);
        z.push(0.0);
        let mut acc = 0.0;
        for dv in &self.d {
            acc += theta - self.b + dv;
            z.push(da * acc);
        }
        z
    }

    /// Gradient of `ln P(category | θ)` with respect to the free parameters.
    fn log_prob_gradient(&self, theta: f64, category: usize) -> Vec<f64> {
        match self.kind {
            ModelKind::ThreePL | ModelKind::TwoPL => {
                let z = SCALING_CONSTANT * self.a * (theta - self.b);
                let s = logistic(z);
                let g = [SCALING_CONSTANT * (theta - self.b), -SCALING_CONSTANT * self.a];
                let mut out = Vec::with_capacity(3);
                if category == 1 {
                    let factor = if self.c == 0.0 {
                        1.0 - s
                    } else {
                        let p = self.c + (1.0 - self.c) * s;
                        (1.0 - self.c) * s * (1.0 - s) / p
                    };
                    out.extend(g.iter().map(|v| v * factor));
                    if self.kind == ModelKind::ThreePL {
                        out.push((1.0 - s) / (self.c + (1.0 - self.c) * s));
                    }
                } else {
                    out.extend(g.iter().map(|v| -v * s));
                    if self.kind == ModelKind::ThreePL {
                        out.push(-1.0 / (1.0 - self.c));
                    }
                }
                out
            }
            ModelKind::Gpc => {
                let grads = self.gpc_exponent_gradients(theta);
                let probs: Vec<f64> = self.log_probs(theta).into_iter().map(f64::exp).collect();
                let k = grads[0].len();
                let mut mean = vec![0.0; k];
                for (p, g) in probs.iter().zip(&grads) {
                    for (m, gv) in mean.iter_mut().zip(g) {
                        *m += p * gv;
                    }
                }
                grads[category].iter().zip(&mean).map(|(g, m)| g - m).collect()
            }
        }
    }

    /// `∂z_l/∂η` for every GPC category `l`.
    fn gpc_exponent_gradients(&self, theta: f64) -> Vec<Vec<f64>> {
        let m = self.d.len() + 1;
        let n_free = 2 + m - 2;
        let da = SCALING_CONSTANT * self.a;
        let mut out = Vec::with_capacity(m);
        let mut cum_d = 0.0;
        for l in 0..m {
            if l > 0 {
                cum_d += self.d[l - 1];
            }
            let lf = l as f64;
            let mut g = vec![0.0; n_free];
            g[0] = SCALING_CONSTANT * (lf * (theta - self.b) + cum_d);
            g[1] = -da * lf;
            for j in 1..=m - 2 {
                let hit = (l >= j) as i32 - (l >= m - 1) as i32;
                g[1 + j] = da * f64::from(hit);
            }
            out.push(g);
        }
        out
    }

    fn to_params(&self, item_id: &str) -> Result<ItemParameters> {
        match self.kind {
            ModelKind::ThreePL => ItemParameters::three_pl(item_id, self.a, self.b, self.c),
            ModelKind::TwoPL => ItemParameters::two_pl(item_id, self.a, self.b),
            ModelKind::Gpc => ItemParameters::gpc(item_id, self.a, self.b, self.d.clone()),
        }
    }
}

/// Expected category counts of one item: `counts[q * m + l]`.
struct ItemCounts {
    m: usize,
    counts: Vec<f64>,
}

struct EStep {
    /// Row-major `respondents × nodes`.
    posterior: Vec<f64>,
    log_likelihood: f64,
}

/// Initial parameters from marginal proportions.
pub fn starting_values(matrix: &ResponseMatrix) -> Result<Vec<ItemParameters>> {
    let normal = Normal::standard();
    let quantile = |p: f64| normal.inverse_cdf(p.clamp(0.005, 0.995));
    matrix
        .items()
        .iter()
        .enumerate()
        .map(|(j, desc)| {
            let m = desc.num_categories;
            let mut at_least = vec![0usize; m];
            let mut n = 0usize;
            for r in 0..matrix.n_respondents() {
                if let Some(c) = matrix.cell(r, j) {
                    n += 1;
                    for slot in at_least.iter_mut().take(usize::from(c) + 1) {
                        *slot += 1;
                    }
                }
            }
            let n = n.max(1) as f64;
            match desc.kind {
                ModelKind::ThreePL | ModelKind::TwoPL => {
                    let b = -quantile(at_least[1] as f64 / n);
                    if desc.kind == ModelKind::ThreePL {
                        ItemParameters::three_pl(&desc.item_id, START_SLOPE, b, START_GUESSING)
                    } else {
                        ItemParameters::two_pl(&desc.item_id, START_SLOPE, b)
                    }
                }
                ModelKind::Gpc => {
                    let steps: Vec<f64> = (1..m).map(|v| -quantile(at_least[v] as f64 / n)).collect();
                    let b = steps.iter().sum::<f64>() / steps.len() as f64;
                    let mut d: Vec<f64> = steps.iter().map(|s| b - s).collect();
                    let last = d.len() - 1;
                    d[last] = -d[..last].iter().sum::<f64>();
                    ItemParameters::gpc(&desc.item_id, START_SLOPE, b, d)
                }
            }
        })
        .collect()
}

/// Normalized posterior over quadrature nodes for one set of item responses.
///
/// `responses` pairs each observed item with its category.
pub fn posterior_weights(responses: &[(&ItemParameters, usize)], rule: &QuadratureRule) -> Vec<f64> {
    let log_post: Vec<f64> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&theta, &w)| {
            let ll: f64 = responses.iter().map(|(item, c)| item.log_probs(theta)[*c]).sum();
            ll + w.ln()
        })
        .collect();
    let norm = log_sum_exp(&log_post);
    log_post.into_iter().map(|lp| (lp - norm).exp()).collect()
}

/// Calibrates every item of `matrix` by MML-EM.
pub fn calibrate_mml_em(matrix: &ResponseMatrix, config: &CalibrationConfig) -> Result<CalibrationResult> {
    let start = starting_values(matrix)?;
    calibrate_from(matrix, &start, config)
}

/// MML-EM from explicit starting parameters (one per matrix column, in order).
pub fn calibrate_from(
    matrix: &ResponseMatrix,
    start: &[ItemParameters],
    config: &CalibrationConfig,
) -> Result<CalibrationResult> {
    if matrix.n_items() < 2 {
        return Err(Error::contract("calibration needs at least two items"));
    }
    matrix.validate()?;
    if start.len() != matrix.n_items() {
        return Err(Error::contract("one starting item per matrix column is required"));
    }
    for (desc, p) in matrix.items().iter().zip(start) {
        if desc.kind != p.kind() || desc.num_categories != p.num_categories() {
            return Err(Error::contract(format!(
                "starting values for {} do not match its descriptor",
                desc.item_id
            )));
        }
    }
    let rule = QuadratureRule::from_spec(&config.quadrature)?;
    let mut states: Vec<ItemState> = start.iter().map(ItemState::from_params).collect();
    for s in &mut states {
        project(s, config);
    }

    let mut trace = Vec::new();
    let mut converged = false;
    let mut cycles = 0;
    while cycles < config.max_cycles {
        let e = e_step(matrix, &states, &rule, config.execution);
        trace.push(e.log_likelihood + penalty(&states, config));
        let counts = expected_counts(matrix, &e.posterior, rule.len(), config.execution);
        let updated: Vec<ItemState> = config
            .execution
            .map_indexed(states.len(), |j| m_step_item(&states[j], &counts[j], &rule, config));
        let change = states
            .iter()
            .zip(&updated)
            .flat_map(|(old, new)| old.flat().into_iter().zip(new.flat()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        states = updated;
        cycles += 1;
        if change < config.tolerance {
            converged = true;
            break;
        }
    }

    let e = e_step(matrix, &states, &rule, config.execution);
    trace.push(e.log_likelihood + penalty(&states, config));
    let se = standard_errors(matrix, &states, &e.posterior, &rule);
    let eap = (0..matrix.n_respondents())
        .map(|r| {
            let post = &e.posterior[r * rule.len()..(r + 1) * rule.len()];
            let mean: f64 = post.iter().zip(&rule.nodes).map(|(w, x)| w * x).sum();
            let var: f64 = post.iter().zip(&rule.nodes).map(|(w, x)| w * (x - mean).powi(2)).sum();
            (mean, var.sqrt())
        })
        .collect();

    let items = states
        .iter()
        .zip(matrix.items())
        .zip(se)
        .map(|((s, desc), se)| {
            Ok(CalibratedItem {
                params: s.to_params(&desc.item_id)?,
                se,
                flagged: s.a >= config.slope_max,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for item in items.iter().filter(|i| i.flagged) {
        log::warn!(
            "item {} slope reached the bound {}; estimate is unreliable",
            item.params.item_id(),
            config.slope_max
        );
    }
    Ok(CalibrationResult {
        items,
        log_marginal_likelihood: e.log_likelihood,
        objective_trace: trace,
        n_cycles: cycles,
        converged,
        quadrature: config.quadrature,
        eap,
    })
}

fn penalty(states: &[ItemState], config: &CalibrationConfig) -> f64 {
    let Some(prior) = config.guessing_prior else { return 0.0 };
    states
        .iter()
        .filter(|s| s.kind == ModelKind::ThreePL)
        .map(|s| prior.log_density(s.c))
        .sum()
}

/// Log-probability table `[q * m + l]` for one item.
fn log_prob_table(state: &ItemState, rule: &QuadratureRule) -> Vec<f64> {
    rule.nodes.iter().flat_map(|&t| state.log_probs(t)).collect()
}

fn e_step(matrix: &ResponseMatrix, states: &[ItemState], rule: &QuadratureRule, exec: Execution) -> EStep {
    let n_q = rule.len();
    let tables: Vec<Vec<f64>> = states.iter().map(|s| log_prob_table(s, rule)).collect();
    let ms: Vec<usize> = states.iter().map(ItemState::num_categories).collect();
    let log_w = rule.log_weights();
    let rows: Vec<(Vec<f64>, f64)> = exec.map_indexed(matrix.n_respondents(), |r| {
        let mut acc = vec![CompensatedSum::new(); n_q];
        for (j, cell) in matrix.row(r).iter().enumerate() {
            let Some(c) = *cell else { continue };
            let m = ms[j];
            let table = &tables[j];
            for (q, a) in acc.iter_mut().enumerate() {
                a.add(table[q * m + usize::from(c)]);
            }
        }
        let lp: Vec<f64> = acc.iter().zip(&log_w).map(|(a, w)| a.value() + w).collect();
        let norm = log_sum_exp(&lp);
        (lp.into_iter().map(|v| (v - norm).exp()).collect(), norm)
    });
    let mut posterior = Vec::with_capacity(matrix.n_respondents() * n_q);
    let mut ll = CompensatedSum::new();
    for (post, norm) in rows {
        posterior.extend(post);
        ll.add(norm);
    }
    EStep {
        posterior,
        log_likelihood: ll.value(),
    }
}

fn expected_counts(matrix: &ResponseMatrix, posterior: &[f64], n_q: usize, exec: Execution) -> Vec<ItemCounts> {
    exec.map_indexed(matrix.n_items(), |j| {
        let m = matrix.items()[j].num_categories;
        let mut acc = vec![CompensatedSum::new(); n_q * m];
        for r in 0..matrix.n_respondents() {
            let Some(c) = matrix.cell(r, j) else { continue };
            let post = &posterior[r * n_q..(r + 1) * n_q];
            for (q, w) in post.iter().enumerate() {
                acc[q * m + usize::from(c)].add(*w);
            }
        }
        ItemCounts {
            m,
            counts: acc.iter().map(CompensatedSum::value).collect(),
        }
    })
}

/// Expected complete-data log-likelihood of one item (plus penalty), its
/// gradient, and the expected information matrix, all in free parameters.
fn item_objective(
    state: &ItemState,
    counts: &ItemCounts,
    rule: &QuadratureRule,
    prior: Option<BetaPrior>,
) -> (f64, DVector<f64>, DMatrix<f64>) {
    let k = state.free().len();
    let m = counts.m;
    let mut value = CompensatedSum::new();
    let mut grad = DVector::<f64>::zeros(k);
    let mut info = DMatrix::<f64>::zeros(k, k);
    for (q, &theta) in rule.nodes.iter().enumerate() {
        let n = &counts.counts[q * m..(q + 1) * m];
        let total: f64 = n.iter().sum();
        if total <= 0.0 {
            continue;
        }
        let lp = state.log_probs(theta);
        for (l, nl) in n.iter().enumerate() {
            if *nl > 0.0 {
                value.add(nl * lp[l]);
            }
        }
        match state.kind {
            ModelKind::ThreePL | ModelKind::TwoPL => {
                let s = logistic(SCALING_CONSTANT * state.a * (theta - state.b));
                let p = lp[1].exp();
                let p_q = (1.0 - state.c) * (1.0 - s);
                // u = (∂P/∂η) / (P(1−P)), written to stay finite in the tails.
                let g = [SCALING_CONSTANT * (theta - state.b), -SCALING_CONSTANT * state.a];
                let mut u = Vec::with_capacity(3);
                if state.kind == ModelKind::TwoPL {
                    u.extend_from_slice(&g);
                } else {
                    u.extend(g.iter().map(|v| s * v / p));
                    u.push(1.0 / (p * (1.0 - state.c)));
                }
                let resid = n[1] - total * p;
                let w = total * p * p_q;
                for i in 0..k {
                    grad[i] += resid * u[i];
                    for j in 0..k {
                        info[(i, j)] += w * u[i] * u[j];
                    }
                }
            }
            ModelKind::Gpc => {
                let grads = state.gpc_exponent_gradients(theta);
                let probs: Vec<f64> = lp.iter().map(|v| v.exp()).collect();
                let mut mean = vec![0.0; k];
                for (p, g) in probs.iter().zip(&grads) {
                    for i in 0..k {
                        mean[i] += p * g[i];
                    }
                }
                for l in 0..m {
                    for i in 0..k {
                        let dev_i = grads[l][i] - mean[i];
                        grad[i] += n[l] * dev_i;
                        for j in 0..k {
                            info[(i, j)] += total * probs[l] * dev_i * (grads[l][j] - mean[j]);
                        }
                    }
                }
            }
        }
    }
    let mut value = value.value();
    if state.kind == ModelKind::ThreePL {
        if let Some(prior) = prior {
            value += prior.log_density(state.c);
            grad[2] += prior.gradient(state.c);
            info[(2, 2)] += prior.curvature(state.c);
        }
    }
    (value, grad, info)
}

fn project(state: &mut ItemState, config: &CalibrationConfig) {
    state.a = state.a.clamp(config.slope_min, config.slope_max);
    state.b = state.b.clamp(-config.location_bound, config.location_bound);
    if state.kind == ModelKind::ThreePL {
        state.c = state.c.clamp(1e-6, config.guessing_max);
    }
    if state.kind == ModelKind::Gpc {
        let k = state.d.len() - 1;
        for v in &mut state.d[..k] {
            *v = v.clamp(-config.location_bound, config.location_bound);
        }
        state.d[k] = -state.d[..k].iter().sum::<f64>();
    }
}

fn solve_spd(info: &DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let n = info.nrows();
    let scale = (0..n).map(|i| info[(i, i)].abs()).fold(0.0, f64::max).max(1e-12);
    let mut ridge = 0.0;
    for _ in 0..8 {
        let mut m = info.clone();
        for i in 0..n {
            m[(i, i)] += ridge;
        }
        if let Some(ch) = m.cholesky() {
            return Some(ch.solve(grad));
        }
        ridge = if ridge == 0.0 { 1e-10 * scale } else { ridge * 100.0 };
    }
    None
}

/// Fisher-scoring steps with backtracking; never decreases the item objective.
fn m_step_item(state: &ItemState, counts: &ItemCounts, rule: &QuadratureRule, config: &CalibrationConfig) -> ItemState {
    let prior = config.guessing_prior;
    let mut current = state.clone();
    let (mut value, mut grad, mut info) = item_objective(&current, counts, rule, prior);
    for _ in 0..config.m_step_iterations {
        let Some(direction) = solve_spd(&info, &grad) else { break };
        let eta = current.free();
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = eta.iter().zip(direction.iter()).map(|(x, d)| x + step * d).collect();
            let mut candidate = current.with_free(&trial);
            project(&mut candidate, config);
            let (v, g, h) = item_objective(&candidate, counts, rule, prior);
            if v.is_finite() && v >= value {
                accepted = Some((candidate, v, g, h));
                break;
            }
            step *= 0.5;
        }
        let Some((candidate, v, g, h)) = accepted else { break };
        let moved = candidate
            .flat()
            .iter()
            .zip(current.flat())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        current = candidate;
        value = v;
        grad = g;
        info = h;
        if moved < 1e-10 {
            break;
        }
    }
    current
}

/// Standard errors from the cross-product (outer product of per-respondent
/// gradients) approximation to the information matrix of all free parameters.
fn standard_errors(
    matrix: &ResponseMatrix,
    states: &[ItemState],
    posterior: &[f64],
    rule: &QuadratureRule,
) -> Vec<ItemStandardErrors> {
    let n_q = rule.len();
    let offsets: Vec<usize> = states
        .iter()
        .scan(0, |acc, s| {
            let o = *acc;
            *acc += s.free().len();
            Some(o)
        })
        .collect();
    let total = offsets.last().copied().unwrap_or(0) + states.last().map_or(0, |s| s.free().len());

    // Per item, per node, per category gradients of ln P.
    let grad_tables: Vec<Vec<Vec<Vec<f64>>>> = states
        .iter()
        .map(|s| {
            rule.nodes
                .iter()
                .map(|&t| (0..s.num_categories()).map(|c| s.log_prob_gradient(t, c)).collect())
                .collect()
        })
        .collect();

    let mut xpd = DMatrix::<f64>::zeros(total, total);
    let mut score = vec![0.0; total];
    for r in 0..matrix.n_respondents() {
        score.iter_mut().for_each(|v| *v = 0.0);
        let post = &posterior[r * n_q..(r + 1) * n_q];
        for (j, cell) in matrix.row(r).iter().enumerate() {
            let Some(c) = *cell else { continue };
            for (q, w) in post.iter().enumerate() {
                for (i, g) in grad_tables[j][q][usize::from(c)].iter().enumerate() {
                    score[offsets[j] + i] += w * g;
                }
            }
        }
        let nz: Vec<usize> = (0..total).filter(|&i| score[i] != 0.0).collect();
        for &i in &nz {
            for &k in &nz {
                xpd[(i, k)] += score[i] * score[k];
            }
        }
    }

    let covariance = xpd.clone().try_inverse();
    states
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let k = s.free().len();
            let o = offsets[j];
            let cov_block = match &covariance {
                Some(cov) => Some(cov.view((o, o), (k, k)).into_owned()),
                None => xpd.view((o, o), (k, k)).into_owned().try_inverse(),
            };
            let Some(cov) = cov_block else {
                return ItemStandardErrors::default();
            };
            let sd = |i: usize| {
                let v = cov[(i, i)];
                (v > 0.0 && v.is_finite()).then(|| v.sqrt())
            };
            let mut se = ItemStandardErrors {
                a: sd(0),
                b: sd(1),
                ..Default::default()
            };
            match s.kind {
                ModelKind::ThreePL => se.c = sd(2),
                ModelKind::TwoPL => {}
                ModelKind::Gpc => {
                    let free_d = k - 2;
                    se.d = (0..free_d).map(|i| sd(2 + i)).collect();
                    // Last offset is minus the sum of the free ones.
                    let mut var = 0.0;
                    for i in 0..free_d {
                        for l in 0..free_d {
                            var += cov[(2 + i, 2 + l)];
                        }
                    }
                    se.d.push((var > 0.0 && var.is_finite()).then(|| var.sqrt()));
                }
            }
            se
        })
        .collect()
}
