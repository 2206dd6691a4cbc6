//! Expected and experimental information gain.
//!
//! Before acting, the posterior of the action's target node is emulated: a
//! continuous belief is blurred by the sensor noise, a categorical belief is
//! replaced by the expected measurement distribution. The emulated node then
//! sends messages through a copy of the network, and the entropy drop over the
//! target set is the expected gain.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::belief::{entropy_bits, normalize, CategoricalBelief, ContinuousBelief};
use crate::error::{Error, Result};
use crate::network::{validate_target_set, NetworkState};
use crate::node::Node;
use crate::reference::{ActionKind, ActionSpec, ConfusionMatrix};

/// Kernel half-width in standard deviations.
const KERNEL_SPAN: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionEvaluation {
    pub action: String,
    pub expected_ig: f64,
    /// Entropy of every node after emulation. The action's own node holds its
    /// expected posterior entropy.
    pub per_node_expected_entropy: BTreeMap<Node, f64>,
}

/// Convolves a gridded belief with a zero-mean Gaussian of SD `sigma`
/// (kernel truncated at 5 sigma) and renormalizes.
pub fn emulate_continuous_posterior(pdf: &ContinuousBelief, sigma: f64) -> Result<ContinuousBelief> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::validation("sigma", format!("must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(pdf.clone());
    }
    let grid = pdf.grid();
    let h = grid.bin_width();
    let half = ((KERNEL_SPAN * sigma / h).ceil() as usize).min(grid.bins() - 1);
    let kernel: Vec<f64> = (0..=half)
        .map(|j| {
            let z = j as f64 * h / sigma;
            (-0.5 * z * z).exp()
        })
        .collect();
    let src = pdf.density();
    let n = src.len();
    let mut out = vec![0.0; n];
    for (i, &d) in src.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(n - 1);
        for (k, o) in out[lo..=hi].iter_mut().enumerate() {
            let offset = (lo + k).abs_diff(i);
            *o += d * kernel[offset];
        }
    }
    ContinuousBelief::with_likelihood(*grid, &out, pdf.likelihood_product().to_vec())
}

/// Entropy of each row of a confusion matrix, in bits.
pub fn sample_entropy_vector(confusion: &ConfusionMatrix) -> Vec<f64> {
    (0..confusion.rows()).map(|i| entropy_bits(confusion.row(i))).collect()
}

/// Expected entropy of the measurement vector, weighted by the expected
/// outcome distribution `C^T nu`.
pub fn expected_categorical_entropy(pmf: &CategoricalBelief, confusion: &ConfusionMatrix) -> Result<f64> {
    if confusion.rows() != pmf.len() || confusion.cols() != pmf.len() {
        return Err(Error::Dimension(format!(
            "{}x{} confusion for {} labels",
            confusion.rows(),
            confusion.cols(),
            pmf.len()
        )));
    }
    let expected = confusion.push_forward(pmf.probs())?;
    Ok(expected.iter().zip(sample_entropy_vector(confusion)).map(|(q, h)| q * h).sum())
}

/// Network entropy over `target_set` now, minus its expected value after the action.
pub fn expected_information_gain(state: &NetworkState, action: &ActionSpec, target_set: &[Node]) -> Result<ActionEvaluation> {
    validate_target_set(target_set)?;
    let node = action.target;
    let mut emulated = state.clone();
    let own_entropy = match &action.kind {
        ActionKind::Categorical { confusion } => {
            let pmf = state
                .categorical(node)
                .ok_or_else(|| Error::validation("action target", format!("{node} is not categorical")))?;
            let own = expected_categorical_entropy(pmf, confusion)?;
            let q = normalize(&confusion.push_forward(pmf.probs())?).ok_or(Error::IncompatibleMeasurement)?;
            emulated.set_categorical(node, CategoricalBelief::new(pmf.labels().to_vec(), q)?)?;
            own
        }
        ActionKind::Continuous { sigma, .. } => {
            let pdf = state
                .continuous(node)
                .ok_or_else(|| Error::validation("action target", format!("{node} is not continuous")))?;
            let blurred = emulate_continuous_posterior(pdf, *sigma)?;
            let own = blurred.entropy();
            emulated.set_continuous(node, blurred)?;
            own
        }
    };
    emulated.propagate_from(node)?;

    let per_node: BTreeMap<Node, f64> = Node::ALL
        .iter()
        .map(|&n| (n, if n == node { own_entropy } else { emulated.node_entropy(n) }))
        .collect();
    let before = state.entropy(target_set)?;
    let after: f64 = target_set.iter().map(|n| per_node[n]).sum();
    Ok(ActionEvaluation {
        action: action.name.clone(),
        expected_ig: before - after,
        per_node_expected_entropy: per_node,
    })
}

/// Entropy drop over `target_set` between two states. Negative when a
/// measurement added uncertainty.
pub fn experimental_information_gain(before: &NetworkState, after: &NetworkState, target_set: &[Node]) -> Result<f64> {
    Ok(before.entropy(target_set)? - after.entropy(target_set)?)
}
