//! Gaussian mixtures with fixed reference components.
//!
//! Continuous beliefs are tied to categorical nodes through per-label Gaussian
//! components. A categorical PMF weights the components into a prior mixture,
//! and EM maps a gridded belief back to a weight vector over the same labels.
//!
//! Every component is truncated to the grid and renormalized on its own, so a
//! mixture built from weights `w` and the EM fit of that mixture agree.

use serde::{Deserialize, Serialize};

use crate::belief::{normalize, CategoricalBelief, ContinuousBelief, Grid, DENSITY_FLOOR};
use crate::error::{Error, Result};

pub const EM_TOLERANCE: f64 = 1e-8;
pub const EM_MAX_ITERATIONS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub mean: f64,
    pub sd: f64,
}

impl Component {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() || !sd.is_finite() || sd <= 0.0 {
            return Err(Error::validation(
                "component",
                format!("need finite mean and sd > 0, got ({mean}, {sd})"),
            ));
        }
        Ok(Self { mean, sd })
    }

    fn log_pdf(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sd;
        -0.5 * z * z - self.sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }
}

/// Reference components indexed by the labels of a categorical node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledComponents {
    pub labels: Vec<String>,
    pub components: Vec<Component>,
}

impl LabeledComponents {
    pub fn new(labels: Vec<String>, components: Vec<Component>) -> Result<Self> {
        if labels.len() != components.len() || labels.is_empty() {
            return Err(Error::Dimension(format!(
                "{} labels for {} components",
                labels.len(),
                components.len()
            )));
        }
        Ok(Self { labels, components })
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub components: Vec<Component>,
    pub weights: Vec<f64>,
}

impl GaussianMixture {
    pub fn new(components: Vec<Component>, weights: Vec<f64>) -> Result<Self> {
        if components.len() != weights.len() || components.is_empty() {
            return Err(Error::Dimension(format!(
                "{} components for {} weights",
                components.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::validation("weights", "must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::validation("weights", format!("sum is {total}, expected 1")));
        }
        Ok(Self { components, weights })
    }

    /// Weights that are not negligible, with their components.
    pub fn effective_components(&self) -> Vec<(Component, f64)> {
        self.components
            .iter()
            .zip(&self.weights)
            .filter(|(_, w)| **w > 1e-12)
            .map(|(c, w)| (*c, *w))
            .collect()
    }
}

/// Weights the reference components by a PMF over the same labels.
pub fn mixture_from_pmf(pmf: &CategoricalBelief, components: &LabeledComponents) -> Result<GaussianMixture> {
    if pmf.labels() != components.labels.as_slice() {
        return Err(Error::LabelMismatch {
            expected: components.labels.clone(),
            got: pmf.labels().to_vec(),
        });
    }
    GaussianMixture::new(components.components.clone(), pmf.probs().to_vec())
}

/// Evaluates a mixture on the grid, truncating each component to the grid.
pub fn discretize(gmm: &GaussianMixture, grid: &Grid) -> Result<ContinuousBelief> {
    let basis = ComponentBasis::new(*grid, &gmm.components);
    let values = basis.mixture_values(&gmm.weights)?;
    ContinuousBelief::from_values(*grid, &values)
}

/// Per-component densities on a grid, each normalized to unit mass on the grid.
/// Components with no mass on the grid are `None`.
#[derive(Debug, Clone)]
pub struct ComponentBasis {
    grid: Grid,
    columns: Vec<Option<Vec<f64>>>,
}

impl ComponentBasis {
    pub fn new(grid: Grid, components: &[Component]) -> Self {
        let h = grid.bin_width();
        let columns = components
            .iter()
            .map(|c| {
                let mut col: Vec<f64> = grid
                    .centers()
                    .map(|x| {
                        let v = c.log_pdf(x).exp();
                        if v < DENSITY_FLOOR {
                            0.0
                        } else {
                            v
                        }
                    })
                    .collect();
                let mass = col.iter().sum::<f64>() * h;
                if mass > 0.0 {
                    for v in &mut col {
                        *v /= mass;
                    }
                    Some(col)
                } else {
                    None
                }
            })
            .collect();
        Self { grid, columns }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn has_support(&self, component: usize) -> bool {
        self.columns[component].is_some()
    }

    /// Unnormalized mixture density `sum_m w_m f_m(x)` at the bin centers.
    pub fn mixture_values(&self, weights: &[f64]) -> Result<Vec<f64>> {
        if weights.len() != self.columns.len() {
            return Err(Error::Dimension(format!(
                "{} weights for {} components",
                weights.len(),
                self.columns.len()
            )));
        }
        let mut values = vec![0.0; self.grid.bins()];
        let mut covered = 0.0;
        for (col, &w) in self.columns.iter().zip(weights) {
            if let (Some(col), true) = (col, w > 0.0) {
                covered += w;
                for (v, c) in values.iter_mut().zip(col) {
                    *v += w * c;
                }
            }
        }
        if covered.is_nan() || covered <= 0.0 || values.iter().all(|v| *v == 0.0) {
            return Err(Error::GridDoesNotCoverMixture);
        }
        Ok(values)
    }

    /// Maximum-likelihood mixture weights for the belief, treating bin
    /// centers as samples weighted by bin mass. Components stay fixed.
    pub fn estimate_weights(&self, pdf: &ContinuousBelief) -> Result<Vec<f64>> {
        if pdf.grid() != &self.grid {
            return Err(Error::Dimension("belief and components use different grids".into()));
        }
        let active: Vec<usize> = (0..self.columns.len()).filter(|&m| self.has_support(m)).collect();
        if active.is_empty() {
            return Err(Error::GridDoesNotCoverMixture);
        }
        let mut weights = vec![0.0; self.columns.len()];
        if active.len() == 1 {
            weights[active[0]] = 1.0;
            return Ok(weights);
        }
        for &m in &active {
            weights[m] = 1.0 / active.len() as f64;
        }

        let masses = pdf.masses();
        let cols: Vec<&[f64]> = active
            .iter()
            .map(|&m| self.columns[m].as_deref().unwrap_or_default())
            .collect();
        let mut mix = vec![0.0; self.grid.bins()];
        let mut next = vec![0.0; active.len()];
        for _ in 0..EM_MAX_ITERATIONS {
            mix.iter_mut().for_each(|v| *v = 0.0);
            for (col, &m) in cols.iter().zip(&active) {
                let w = weights[m];
                for (v, c) in mix.iter_mut().zip(col.iter()) {
                    *v += w * c;
                }
            }
            // responsibilities summed over bins: w_m * sum_b p_b f_m(b) / mix(b)
            for (slot, (col, &m)) in next.iter_mut().zip(cols.iter().zip(&active)) {
                let mut acc = 0.0;
                for ((p, c), v) in masses.iter().zip(col.iter()).zip(&mix) {
                    if *v > 0.0 {
                        acc += p * c / v;
                    }
                }
                *slot = weights[m] * acc;
            }
            let updated = normalize(&next).ok_or_else(|| {
                Error::validation("mixture weights", "belief has no mass under any component")
            })?;
            let mut delta: f64 = 0.0;
            for (u, &m) in updated.iter().zip(&active) {
                delta = delta.max((u - weights[m]).abs());
                weights[m] = *u;
            }
            if delta < EM_TOLERANCE {
                break;
            }
        }
        Ok(weights)
    }
}

/// EM estimate of the mixture weights of fixed components for a gridded belief.
pub fn estimate_mixture_weights(pdf: &ContinuousBelief, components: &LabeledComponents) -> Result<Vec<f64>> {
    ComponentBasis::new(*pdf.grid(), &components.components).estimate_weights(pdf)
}
