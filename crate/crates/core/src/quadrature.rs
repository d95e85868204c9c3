//! Quadrature rules for integrating over a standard-normal latent trait.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a [`QuadratureRule`] is constructed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuadratureSpec {
    /// Gauss–Hermite rule for the N(0, 1) weight, nodes restricted to `[lo, hi]`
    /// and weights renormalized.
    GaussHermite { nodes: usize, lo: f64, hi: f64 },
    /// Equally spaced nodes on `[lo, hi]` with normal-density weights.
    Rectangular { nodes: usize, lo: f64, hi: f64 },
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec::GaussHermite {
            nodes: 41,
            lo: -6.0,
            hi: 6.0,
        }
    }
}

/// Nodes and weights for `E[f(θ)]` with θ ~ N(0, 1); weights sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn from_spec(spec: &QuadratureSpec) -> Result<Self> {
        match *spec {
            QuadratureSpec::GaussHermite { nodes, lo, hi } => {
                let full = Self::gauss_hermite(nodes)?;
                full.restricted(lo, hi)
            }
            QuadratureSpec::Rectangular { nodes, lo, hi } => Self::rectangular(nodes, lo, hi),
        }
    }

    /// Gauss–Hermite rule for the standard normal weight via the Golub–Welsch
    /// eigenvalue method on the probabilists' Hermite Jacobi matrix.
    pub fn gauss_hermite(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::contract("quadrature needs at least one node"));
        }
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let off = (k as f64).sqrt();
            jacobi[(k - 1, k)] = off;
            jacobi[(k, k - 1)] = off;
        }
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], v0 * v0)
            })
            .collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        // Symmetrize to remove eigen-solver noise.
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (pairs[j].0 - pairs[i].0);
            let w = 0.5 * (pairs[i].1 + pairs[j].1);
            pairs[i] = (-x, w);
            pairs[j] = (x, w);
        }
        if n % 2 == 1 {
            pairs[n / 2].0 = 0.0;
        }
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        Ok(Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
        })
    }

    pub fn rectangular(n: usize, lo: f64, hi: f64) -> Result<Self> {
        if n < 2 || lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::contract("rectangular quadrature needs n >= 2 and lo < hi"));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        let dens: Vec<f64> = nodes.iter().map(|x| (-0.5 * x * x).exp()).collect();
        let total: f64 = dens.iter().sum();
        Ok(Self {
            nodes,
            weights: dens.into_iter().map(|d| d / total).collect(),
        })
    }

    /// Drops nodes outside `[lo, hi]` and renormalizes the remaining weights.
    fn restricted(self, lo: f64, hi: f64) -> Result<Self> {
        let (nodes, weights): (Vec<f64>, Vec<f64>) = self
            .nodes
            .into_iter()
            .zip(self.weights)
            .filter(|(x, _)| (lo..=hi).contains(x))
            .unzip();
        if nodes.is_empty() {
            return Err(Error::contract(format!("no quadrature nodes inside [{lo}, {hi}]")));
        }
        let total: f64 = weights.iter().sum();
        Ok(Self {
            nodes,
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn log_weights(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.ln()).collect()
    }
}
