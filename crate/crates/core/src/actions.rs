//! The action repertoire, a seeded measurement simulator, and conversion of
//! raw outcomes into network updates.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Message, NetworkState};
use crate::node::Node;
use crate::reference::{
    parse_action_specs, ActionKind, ActionSpec, ConfusionMatrix, GroundTruthObject, ReferenceTables, Sensor,
    DEFAULT_ACTIONS,
};

/// A raw reading: a label for categorical actions, a value in `unit` for
/// continuous ones. Censored readings store the threshold as their value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementOutcome {
    pub action: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default)]
    pub censored: bool,
}

impl MeasurementOutcome {
    pub fn label(action: &ActionSpec, label: impl Into<String>) -> Self {
        Self {
            action: action.name.clone(),
            label: Some(label.into()),
            value: None,
            unit: None,
            censored: false,
        }
    }

    /// A reading in the action's canonical unit (grams for mass sensors).
    pub fn value(action: &ActionSpec, value: f64) -> Self {
        Self {
            action: action.name.clone(),
            label: None,
            value: Some(value),
            unit: Some(reading_unit(action).to_string()),
            censored: false,
        }
    }

    pub fn censored(action: &ActionSpec) -> Result<Self> {
        let threshold = action
            .censor_threshold()
            .ok_or_else(|| Error::validation("outcome", format!("{} has no censor threshold", action.name)))?;
        Ok(Self {
            censored: true,
            ..Self::value(action, threshold)
        })
    }

    pub fn validate(&self, action: &ActionSpec) -> Result<()> {
        let field = format!("outcome of {}", self.action);
        if self.action != action.name {
            return Err(Error::validation(field, format!("recorded for a different action than {}", action.name)));
        }
        match (&self.label, self.value, action.is_categorical()) {
            (Some(_), None, true) if !self.censored => Ok(()),
            (None, Some(v), false) if v.is_finite() => {
                if self.censored && action.censor_threshold().is_none() {
                    return Err(Error::validation(field, "censored reading from an uncensored sensor"));
                }
                Ok(())
            }
            _ => Err(Error::validation(field, "needs exactly one of a label or a finite value matching the action kind")),
        }
    }
}

/// Unit a continuous action reports in.
pub fn reading_unit(action: &ActionSpec) -> &'static str {
    match action.kind {
        ActionKind::Continuous { sensor: Sensor::Mass { .. }, .. } => "g",
        _ => action.target.unit(),
    }
}

/// The five shipped actions in canonical order.
pub fn default_action_set(tables: &ReferenceTables) -> Result<Vec<ActionSpec>> {
    parse_action_specs(DEFAULT_ACTIONS, Path::new("<default actions.toml>"), tables)
}

/// Draws an outcome for `action` on an object with known properties.
pub fn simulate_measurement<R: Rng + ?Sized>(
    action: &ActionSpec,
    truth: &GroundTruthObject,
    tables: &ReferenceTables,
    rng: &mut R,
) -> Result<MeasurementOutcome> {
    match &action.kind {
        ActionKind::Categorical { confusion } => {
            let labels = tables.labels(action.target);
            let truth_label = truth.label(action.target).expect("categorical target");
            let row = labels.iter().position(|l| l == truth_label).ok_or_else(|| Error::UnknownLabel {
                node: action.target.to_string(),
                label: truth_label.to_string(),
            })?;
            let u: f64 = rng.random();
            let probs = confusion.row(row);
            let mut acc = 0.0;
            let mut pick = probs.iter().rposition(|p| *p > 0.0).unwrap_or(0);
            for (i, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            Ok(MeasurementOutcome::label(action, labels[pick].clone()))
        }
        ActionKind::Continuous {
            sigma,
            sensor,
            censor_threshold,
        } => {
            let z: f64 = rng.sample(StandardNormal);
            match sensor {
                Sensor::Mass { sigma_g } => Ok(MeasurementOutcome::value(action, truth.mass + sigma_g * z)),
                Sensor::Direct => {
                    let true_value = truth.property(action.target).expect("continuous target");
                    let reading = (true_value + sigma * z).max(0.0);
                    match censor_threshold {
                        Some(t) if reading > *t => MeasurementOutcome::censored(action),
                        _ => Ok(MeasurementOutcome::value(action, reading)),
                    }
                }
            }
        }
    }
}

/// What an outcome does to the network.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeUpdate {
    Categorical {
        node: Node,
        measurement: Vec<f64>,
        confusion: ConfusionMatrix,
    },
    Continuous { node: Node, likelihood: Vec<f64> },
}

impl NodeUpdate {
    pub fn node(&self) -> Node {
        match self {
            NodeUpdate::Categorical { node, .. } | NodeUpdate::Continuous { node, .. } => *node,
        }
    }

    pub fn apply(&self, state: &mut NetworkState) -> Result<Vec<Message>> {
        match self {
            NodeUpdate::Categorical {
                node,
                measurement,
                confusion,
            } => state.apply_categorical(*node, measurement, confusion),
            NodeUpdate::Continuous { node, likelihood } => state.apply_continuous(*node, likelihood),
        }
    }
}

/// Gaussian likelihood on the grid computed in the log domain and scaled so
/// its maximum is one; never identically zero.
fn gaussian_likelihood(centers: impl Iterator<Item = f64>, mean: f64, sd: f64) -> Vec<f64> {
    let logs: Vec<f64> = centers.map(|x| -0.5 * ((x - mean) / sd).powi(2)).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    logs.iter().map(|l| (l - max).exp()).collect()
}

/// Converts an outcome into a likelihood or measurement vector for the
/// action's target node. Mass readings become a density likelihood centered
/// at mass / (current mean volume).
pub fn outcome_to_update(outcome: &MeasurementOutcome, action: &ActionSpec, state: &NetworkState) -> Result<NodeUpdate> {
    outcome.validate(action)?;
    let node = action.target;
    match &action.kind {
        ActionKind::Categorical { confusion } => {
            let label = outcome.label.as_deref().expect("validated");
            let labels = state.model().tables().labels(node);
            let i = labels.iter().position(|l| l == label).ok_or_else(|| Error::UnknownLabel {
                node: node.to_string(),
                label: label.to_string(),
            })?;
            let mut measurement = vec![0.0; labels.len()];
            measurement[i] = 1.0;
            Ok(NodeUpdate::Categorical {
                node,
                measurement,
                confusion: confusion.clone(),
            })
        }
        ActionKind::Continuous { sigma, sensor, .. } => {
            let value = outcome.value.expect("validated");
            let grid = *state.continuous(node).expect("continuous target").grid();
            let likelihood = if outcome.censored {
                let threshold = value;
                let step: Vec<f64> = (0..grid.bins())
                    .map(|i| if grid.lower_edge(i) >= threshold { 1.0 } else { 0.0 })
                    .collect();
                if step.iter().all(|v| *v == 0.0) {
                    return Err(Error::validation("censor threshold", format!("{threshold} is beyond the {node} grid")));
                }
                step
            } else {
                let center = match sensor {
                    Sensor::Direct => value,
                    Sensor::Mass { .. } => {
                        let volume = state.volume().mean();
                        if volume.is_nan() || volume <= 0.0 {
                            return Err(Error::validation("volume belief", format!("mean {volume} cm^3 must be > 0")));
                        }
                        value / volume * 1000.0
                    }
                };
                gaussian_likelihood(grid.centers(), center, *sigma)
            };
            Ok(NodeUpdate::Continuous { node, likelihood })
        }
    }
}

/// Parses a human-entered reading: a label, a number with optional unit, or `censored`.
pub fn parse_outcome(action: &ActionSpec, input: &str, tables: &ReferenceTables) -> Result<MeasurementOutcome> {
    let text = input.trim();
    if action.is_categorical() {
        let labels = tables.labels(action.target);
        return labels
            .iter()
            .find(|l| l.eq_ignore_ascii_case(text))
            .map(|l| MeasurementOutcome::label(action, l.clone()))
            .ok_or_else(|| Error::UnknownLabel {
                node: action.target.to_string(),
                label: text.to_string(),
            });
    }
    if text.eq_ignore_ascii_case("censored") {
        return MeasurementOutcome::censored(action);
    }
    let split = text
        .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
        .unwrap_or(text.len());
    let (number, unit) = text.split_at(split);
    let number: f64 = number
        .trim()
        .parse()
        .map_err(|_| Error::validation("reading", format!("cannot parse {text:?} as a number")))?;
    let unit = unit.trim().to_ascii_lowercase().replace(['·', '*', ' '], "").replace('³', "3");
    let canonical = reading_unit(action);
    let factor = unit_factor(canonical, &unit)
        .ok_or_else(|| Error::validation("reading", format!("unit {unit:?} cannot be read as {canonical}")))?;
    let value = number * factor;
    if !value.is_finite() {
        return Err(Error::validation("reading", "not finite"));
    }
    Ok(MeasurementOutcome::value(action, value))
}

/// Multiplier from `unit` to `canonical`. An empty unit means canonical.
fn unit_factor(canonical: &str, unit: &str) -> Option<f64> {
    if unit.is_empty() {
        return Some(1.0);
    }
    let table: &[(&str, f64)] = match canonical {
        "kPa" => &[("kpa", 1.0), ("pa", 1e-3), ("mpa", 1e3)],
        "kg/m^3" => &[("kg/m3", 1.0), ("kg/m^3", 1.0), ("kgm-3", 1.0), ("g/cm3", 1e3), ("g/cm^3", 1e3), ("g/ml", 1e3)],
        "cm^3" => &[("cm3", 1.0), ("cm^3", 1.0), ("ml", 1.0), ("l", 1e3), ("m3", 1e6), ("m^3", 1e6)],
        "g" => &[("g", 1.0), ("kg", 1e3), ("mg", 1e-3)],
        _ => &[],
    };
    table.iter().find(|(u, _)| *u == unit).map(|(_, f)| *f)
}
