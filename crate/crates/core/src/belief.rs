//! Categorical (PMF) and gridded continuous (PDF) beliefs.
//!
//! Entropies are in bits. Continuous beliefs live on a uniform grid and are
//! represented by their density at bin centers, so `sum(density) * width == 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Densities below this are stored as exact zeros.
pub const DENSITY_FLOOR: f64 = 1e-300;

const PMF_TOLERANCE: f64 = 1e-9;

/// Minimum number of bins a grid may have.
pub const MIN_BINS: usize = 64;

/// Probability mass function over an ordered label set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalBelief {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl CategoricalBelief {
    /// Builds a PMF from probabilities that already sum to one.
    pub fn new(labels: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        check_labels(&labels)?;
        if labels.len() != probs.len() {
            return Err(Error::Dimension(format!(
                "{} labels but {} probabilities",
                labels.len(),
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::validation("probs", format!("entry {p} is not a probability")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PMF_TOLERANCE {
            return Err(Error::validation("probs", format!("sum is {total}, expected 1")));
        }
        Ok(Self { labels, probs })
    }

    /// Builds a PMF by normalizing non-negative weights.
    pub fn from_weights(labels: Vec<String>, weights: &[f64]) -> Result<Self> {
        check_labels(&labels)?;
        if labels.len() != weights.len() {
            return Err(Error::Dimension(format!(
                "{} labels but {} weights",
                labels.len(),
                weights.len()
            )));
        }
        let probs = normalize(weights).ok_or(Error::IncompatibleMeasurement)?;
        Ok(Self { labels, probs })
    }

    pub fn uniform(labels: Vec<String>) -> Result<Self> {
        check_labels(&labels)?;
        let k = labels.len();
        Ok(Self {
            labels,
            probs: vec![1.0 / k as f64; k],
        })
    }

    pub fn one_hot(labels: Vec<String>, index: usize) -> Result<Self> {
        check_labels(&labels)?;
        if index >= labels.len() {
            return Err(Error::Dimension(format!(
                "index {index} out of range for {} labels",
                labels.len()
            )));
        }
        let mut probs = vec![0.0; labels.len()];
        probs[index] = 1.0;
        Ok(Self { labels, probs })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn prob_of(&self, label: &str) -> Option<f64> {
        self.index_of(label).map(|i| self.probs[i])
    }

    pub fn entropy(&self) -> f64 {
        discrete_entropy(self)
    }

    /// Labels with the `k` largest probabilities, highest first. Ties keep label order.
    pub fn top(&self, k: usize) -> Vec<(String, f64)> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.probs[b].total_cmp(&self.probs[a]));
        order
            .into_iter()
            .take(k)
            .map(|i| (self.labels[i].clone(), self.probs[i]))
            .collect()
    }

    /// Pointwise product with a non-negative factor, renormalized.
    pub fn multiply(&self, factor: &[f64]) -> Result<Self> {
        if factor.len() != self.len() {
            return Err(Error::Dimension(format!(
                "factor of length {} for {} labels",
                factor.len(),
                self.len()
            )));
        }
        if factor.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(Error::validation("factor", "entries must be finite and non-negative"));
        }
        let product: Vec<f64> = self.probs.iter().zip(factor).map(|(p, f)| p * f).collect();
        let probs = normalize(&product).ok_or(Error::IncompatibleMeasurement)?;
        Ok(Self {
            labels: self.labels.clone(),
            probs,
        })
    }
}

fn check_labels(labels: &[String]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::validation("labels", "label list is empty"));
    }
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(Error::validation("labels", format!("duplicate label {l:?}")));
        }
    }
    Ok(())
}

/// Normalizes non-negative weights to unit sum; `None` when the sum is zero.
pub(crate) fn normalize(weights: &[f64]) -> Option<Vec<f64>> {
    let total: f64 = weights.iter().sum();
    if !total.is_finite() || total <= 0.0 {
        return None;
    }
    Some(weights.iter().map(|w| w / total).collect())
}

/// A uniform PMF over `labels`.
pub fn uniform_categorical(labels: Vec<String>) -> Result<CategoricalBelief> {
    CategoricalBelief::uniform(labels)
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn discrete_entropy(pmf: &CategoricalBelief) -> f64 {
    entropy_bits(pmf.probs())
}

pub(crate) fn entropy_bits(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| p * p.log2())
        .sum::<f64>()
}

/// Uniform discretization of `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    lower: f64,
    upper: f64,
    bins: usize,
}

impl Grid {
    pub fn new(lower: f64, upper: f64, bins: usize) -> Result<Self> {
        if !lower.is_finite() || !upper.is_finite() || lower < 0.0 || upper <= lower {
            return Err(Error::validation(
                "grid",
                format!("need upper > lower >= 0, got [{lower}, {upper}]"),
            ));
        }
        if bins < MIN_BINS {
            return Err(Error::validation(
                "grid",
                format!("need at least {MIN_BINS} bins, got {bins}"),
            ));
        }
        Ok(Self { lower, upper, bins })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn bin_width(&self) -> f64 {
        (self.upper - self.lower) / self.bins as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lower + (i as f64 + 0.5) * self.bin_width()
    }

    pub fn lower_edge(&self, i: usize) -> f64 {
        self.lower + i as f64 * self.bin_width()
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.bins).map(|i| self.center(i))
    }

    /// Index of the bin containing `x`, clamped to the grid.
    pub fn bin_of(&self, x: f64) -> usize {
        let i = ((x - self.lower) / self.bin_width()).floor();
        (i.max(0.0) as usize).min(self.bins - 1)
    }
}

/// Gridded probability density with the product of the measurement
/// likelihoods it has absorbed so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousBelief {
    grid: Grid,
    density: Vec<f64>,
    likelihood_product: Vec<f64>,
}

impl ContinuousBelief {
    /// Normalizes non-negative bin values into a density with a fresh
    /// (all-ones) likelihood product.
    pub fn from_values(grid: Grid, values: &[f64]) -> Result<Self> {
        let density = normalize_density(&grid, values)?;
        Ok(Self {
            grid,
            density,
            likelihood_product: vec![1.0; grid.bins()],
        })
    }

    /// Same as [`from_values`](Self::from_values) but keeps an existing
    /// likelihood product.
    pub(crate) fn with_likelihood(
        grid: Grid,
        values: &[f64],
        likelihood_product: Vec<f64>,
    ) -> Result<Self> {
        let density = normalize_density(&grid, values)?;
        Ok(Self {
            grid,
            density,
            likelihood_product,
        })
    }

    pub fn uniform(grid: Grid) -> Self {
        let h = grid.bin_width();
        Self {
            grid,
            density: vec![1.0 / (h * grid.bins() as f64); grid.bins()],
            likelihood_product: vec![1.0; grid.bins()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn likelihood_product(&self) -> &[f64] {
        &self.likelihood_product
    }

    /// Probability mass of each bin.
    pub fn masses(&self) -> Vec<f64> {
        let h = self.grid.bin_width();
        self.density.iter().map(|d| d * h).collect()
    }

    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.grid.bin_width()
    }

    pub fn mean(&self) -> f64 {
        let h = self.grid.bin_width();
        self.grid
            .centers()
            .zip(&self.density)
            .map(|(x, d)| x * d * h)
            .sum()
    }

    pub fn sd(&self) -> f64 {
        let h = self.grid.bin_width();
        let mean = self.mean();
        let var: f64 = self
            .grid
            .centers()
            .zip(&self.density)
            .map(|(x, d)| (x - mean).powi(2) * d * h)
            .sum();
        var.max(0.0).sqrt()
    }

    /// Center of the highest-density bin.
    pub fn mode(&self) -> f64 {
        let (i, _) = self
            .density
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
        self.grid.center(i)
    }

    /// Probability mass in bins lying entirely below `x`.
    pub fn mass_below(&self, x: f64) -> f64 {
        let h = self.grid.bin_width();
        (0..self.grid.bins())
            .filter(|&i| self.grid.lower_edge(i) + h <= x)
            .map(|i| self.density[i] * h)
            .sum()
    }

    pub fn entropy(&self) -> f64 {
        differential_entropy(self)
    }
}

fn normalize_density(grid: &Grid, values: &[f64]) -> Result<Vec<f64>> {
    if values.len() != grid.bins() {
        return Err(Error::Dimension(format!(
            "{} values for a {}-bin grid",
            values.len(),
            grid.bins()
        )));
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::validation("density", "values must be finite and non-negative"));
    }
    let mass = values.iter().sum::<f64>() * grid.bin_width();
    if mass.is_nan() || mass <= 0.0 {
        return Err(Error::IncompatibleMeasurement);
    }
    Ok(values
        .iter()
        .map(|v| {
            let d = v / mass;
            if d < DENSITY_FLOOR {
                0.0
            } else {
                d
            }
        })
        .collect())
}

/// `-sum h * p(x) * log2 p(x)` over the grid. May be negative.
pub fn differential_entropy(pdf: &ContinuousBelief) -> f64 {
    let h = pdf.grid.bin_width();
    -pdf.density
        .iter()
        .filter(|d| **d > 0.0)
        .map(|d| h * d * d.log2())
        .sum::<f64>()
}

/// Pointwise product of a belief with a likelihood on the same grid.
///
/// The stored likelihood product absorbs the same factor, rescaled so its
/// maximum is one.
pub fn multiply_likelihood(pdf: &ContinuousBelief, likelihood: &[f64]) -> Result<ContinuousBelief> {
    if likelihood.len() != pdf.grid.bins() {
        return Err(Error::Dimension(format!(
            "likelihood of length {} for a {}-bin grid",
            likelihood.len(),
            pdf.grid.bins()
        )));
    }
    if likelihood.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::validation("likelihood", "values must be finite and non-negative"));
    }
    let product: Vec<f64> = pdf.density.iter().zip(likelihood).map(|(d, l)| d * l).collect();
    let density = normalize_density(&pdf.grid, &product)?;
    let accumulated: Vec<f64> = pdf
        .likelihood_product
        .iter()
        .zip(likelihood)
        .map(|(a, l)| a * l)
        .collect();
    Ok(ContinuousBelief {
        grid: pdf.grid,
        density,
        likelihood_product: rescale_to_unit_max(accumulated),
    })
}

pub(crate) fn rescale_to_unit_max(mut values: Vec<f64>) -> Vec<f64> {
    let max = values.iter().copied().fold(0.0, f64::max);
    if max > 0.0 && max.is_finite() {
        for v in &mut values {
            *v /= max;
        }
    }
    values
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("l{i}")).collect()
    }

    fn gaussian(grid: Grid, mean: f64, sd: f64) -> ContinuousBelief {
        let values: Vec<f64> = grid
            .centers()
            .map(|x| (-0.5 * ((x - mean) / sd).powi(2)).exp())
            .collect();
        ContinuousBelief::from_values(grid, &values).unwrap()
    }

    #[test]
    fn uniform_pmfs() {
        let cat = uniform_categorical(labels(10)).unwrap();
        assert!(cat.probs().iter().all(|p| *p == 0.1));
        assert!((cat.entropy() - 10f64.log2()).abs() < 1e-12);
        let mat = uniform_categorical(labels(8)).unwrap();
        assert!(mat.probs().iter().all(|p| *p == 0.125));
        assert!(uniform_categorical(vec![]).is_err());
    }

    #[test]
    fn discrete_entropy_examples() {
        let one_hot = CategoricalBelief::one_hot(labels(4), 2).unwrap();
        assert_eq!(one_hot.entropy(), 0.0);
        let half = CategoricalBelief::new(labels(2), vec![0.5, 0.5]).unwrap();
        assert!((half.entropy() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_pmfs() {
        assert!(CategoricalBelief::new(labels(2), vec![0.5, 0.4]).is_err());
        assert!(CategoricalBelief::new(labels(2), vec![1.5, -0.5]).is_err());
        assert!(CategoricalBelief::new(vec!["a".into(), "a".into()], vec![0.5, 0.5]).is_err());
        assert!(matches!(
            CategoricalBelief::from_weights(labels(3), &[0.0; 3]),
            Err(Error::IncompatibleMeasurement)
        ));
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(0.0, 200.0, 1024).is_ok());
        assert!(Grid::new(10.0, 10.0, 1024).is_err());
        assert!(Grid::new(-1.0, 10.0, 1024).is_err());
        assert!(Grid::new(0.0, 10.0, 63).is_err());
        let g = Grid::new(0.0, 200.0, 1000).unwrap();
        assert_eq!(g.bin_width(), 0.2);
        assert_eq!(g.bin_of(100.05), 500);
        assert_eq!(g.bin_of(-3.0), 0);
        assert_eq!(g.bin_of(500.0), 999);
    }

    #[test]
    fn gaussian_differential_entropy_matches_analytic() {
        let grid = Grid::new(0.0, 200.0, 4096).unwrap();
        for (sd, expected) in [(10.0, 5.369_0), (200f64.sqrt(), 5.869_0)] {
            let pdf = gaussian(grid, 100.0, sd);
            let analytic = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * sd * sd).log2();
            assert!((analytic - expected).abs() < 1e-4);
            assert!((pdf.entropy() - analytic).abs() < 0.02, "{}", pdf.entropy());
        }
    }

    #[test]
    fn uniform_density_entropy_is_log_width() {
        let grid = Grid::new(0.0, 64.0, 256).unwrap();
        let pdf = ContinuousBelief::uniform(grid);
        assert!((pdf.integral() - 1.0).abs() < 1e-12);
        assert!((pdf.entropy() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn product_of_gaussians_is_precision_weighted() {
        let grid = Grid::new(0.0, 200.0, 2048).unwrap();
        let prior = gaussian(grid, 80.0, 20.0);
        let lik: Vec<f64> = grid
            .centers()
            .map(|x| (-0.5 * ((x - 120.0) / 10.0).powi(2)).exp())
            .collect();
        let post = multiply_likelihood(&prior, &lik).unwrap();
        let (p1, p2) = (1.0 / 400.0, 1.0 / 100.0);
        let mean = (80.0 * p1 + 120.0 * p2) / (p1 + p2);
        let sd = (1.0f64 / (p1 + p2)).sqrt();
        assert!((post.mean() - mean).abs() < 1e-3);
        assert!((post.sd() - sd).abs() < 1e-3);
        assert!((post.integral() - 1.0).abs() < 1e-9);
        assert!(post.likelihood_product().contains(&1.0));
    }

    #[test]
    fn uniform_prior_times_gaussian_is_gaussian() {
        let grid = Grid::new(0.0, 200.0, 1024).unwrap();
        let lik: Vec<f64> = grid
            .centers()
            .map(|x| (-0.5 * ((x - 70.0) / 8.0).powi(2)).exp())
            .collect();
        let post = multiply_likelihood(&ContinuousBelief::uniform(grid), &lik).unwrap();
        let direct = ContinuousBelief::from_values(grid, &lik).unwrap();
        for (a, b) in post.density().iter().zip(direct.density()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn disjoint_support_is_incompatible() {
        let grid = Grid::new(0.0, 200.0, 1000).unwrap();
        let prior: Vec<f64> = grid.centers().map(|x| if x < 100.0 { 1.0 } else { 0.0 }).collect();
        let prior = ContinuousBelief::from_values(grid, &prior).unwrap();
        let lik: Vec<f64> = grid
            .centers()
            .map(|x| if (150.0..=200.0).contains(&x) { 1.0 } else { 0.0 })
            .collect();
        let err = multiply_likelihood(&prior, &lik).unwrap_err();
        assert_eq!(err.to_string(), "measurement incompatible with belief");
    }

    fn pmf_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, 2..12).prop_filter("nonzero", |w| w.iter().sum::<f64>() > 1e-6)
    }

    proptest! {
        #[test]
        fn uniform_maximizes_entropy(weights in pmf_strategy()) {
            let k = weights.len();
            let pmf = CategoricalBelief::from_weights(labels(k), &weights).unwrap();
            prop_assert!((pmf.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(pmf.entropy() <= (k as f64).log2() + 1e-12);
        }

        #[test]
        fn likelihood_products_commute(
            m1 in 20.0f64..180.0, s1 in 5.0f64..40.0,
            m2 in 20.0f64..180.0, s2 in 5.0f64..40.0,
        ) {
            let grid = Grid::new(0.0, 200.0, 512).unwrap();
            let prior = ContinuousBelief::uniform(grid);
            let l1: Vec<f64> = grid.centers().map(|x| (-0.5 * ((x - m1) / s1).powi(2)).exp()).collect();
            let l2: Vec<f64> = grid.centers().map(|x| (-0.5 * ((x - m2) / s2).powi(2)).exp()).collect();
            let a = multiply_likelihood(&multiply_likelihood(&prior, &l1).unwrap(), &l2);
            let b = multiply_likelihood(&multiply_likelihood(&prior, &l2).unwrap(), &l1);
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    prop_assert!((a.integral() - 1.0).abs() < 1e-6);
                    for (x, y) in a.density().iter().zip(b.density()) {
                        prop_assert!((x - y).abs() < 1e-9);
                    }
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "order changed compatibility"),
            }
        }
    }
}
