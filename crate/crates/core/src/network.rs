//! Network state, measurement updates and tree message passing.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::belief::{multiply_likelihood, normalize, CategoricalBelief, ContinuousBelief};
use crate::error::{Error, Result};
use crate::mixture::ComponentBasis;
use crate::node::Node;
use crate::reference::{ConfusionMatrix, EdgeTranslation, GridConfig, ReferenceData, ReferenceTables};

/// Immutable parts of a network shared by every state derived from it.
#[derive(Debug)]
pub struct NetworkModel {
    tables: ReferenceTables,
    translations: Vec<EdgeTranslation>,
    grids: GridConfig,
    elasticity: ComponentBasis,
    density: ComponentBasis,
    volume: ComponentBasis,
}

impl NetworkModel {
    pub fn new(tables: ReferenceTables, translations: Vec<EdgeTranslation>, grids: GridConfig) -> Result<Self> {
        for (a, b) in crate::node::TREE_EDGES {
            for (from, to) in [(a, b), (b, a)] {
                let t = translations
                    .iter()
                    .find(|t| t.from == from && t.to == to)
                    .ok_or_else(|| Error::validation(format!("edge {from}->{to}"), "missing edge"))?;
                let shape = (tables.cardinality(from), tables.cardinality(to));
                if (t.matrix.rows(), t.matrix.cols()) != shape {
                    return Err(Error::Dimension(format!("edge {from}->{to} matrix shape")));
                }
            }
        }
        let basis = |node: Node| {
            let comps = tables.components(node).expect("continuous node");
            ComponentBasis::new(grids.get(node).expect("continuous node"), &comps.components)
        };
        Ok(Self {
            elasticity: basis(Node::Elasticity),
            density: basis(Node::Density),
            volume: basis(Node::Volume),
            tables,
            translations,
            grids,
        })
    }

    pub fn tables(&self) -> &ReferenceTables {
        &self.tables
    }

    pub fn grids(&self) -> &GridConfig {
        &self.grids
    }

    pub fn translation(&self, from: Node, to: Node) -> Option<&ConfusionMatrix> {
        self.translations
            .iter()
            .find(|t| t.from == from && t.to == to)
            .map(|t| &t.matrix)
    }

    pub fn basis(&self, node: Node) -> Option<&ComponentBasis> {
        match node {
            Node::Elasticity => Some(&self.elasticity),
            Node::Density => Some(&self.density),
            Node::Volume => Some(&self.volume),
            _ => None,
        }
    }
}

/// A message sent across one edge during propagation. `vector` is indexed by
/// the label space of `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub origin: Node,
    pub target: Node,
    pub vector: Vec<f64>,
}

/// Beliefs of all five nodes. Cheap to clone apart from the gridded densities.
#[derive(Debug, Clone)]
pub struct NetworkState {
    model: Arc<NetworkModel>,
    category: CategoricalBelief,
    material: CategoricalBelief,
    elasticity: ContinuousBelief,
    density: ContinuousBelief,
    volume: ContinuousBelief,
}

/// Builds a fresh network: uniform PMFs and uniform-weight prior mixtures.
pub fn init_network(tables: &ReferenceTables, translations: &[EdgeTranslation], grids: &GridConfig) -> Result<NetworkState> {
    let model = NetworkModel::new(tables.clone(), translations.to_vec(), *grids)?;
    NetworkState::new(Arc::new(model))
}

impl NetworkState {
    pub fn new(model: Arc<NetworkModel>) -> Result<Self> {
        let category = CategoricalBelief::uniform(model.tables.category_labels().to_vec())?;
        let material = CategoricalBelief::uniform(model.tables.material_labels().to_vec())?;
        let prior = |node: Node, pmf: &CategoricalBelief| -> Result<ContinuousBelief> {
            let basis = model.basis(node).expect("continuous node");
            ContinuousBelief::from_values(*basis.grid(), &basis.mixture_values(pmf.probs())?)
        };
        Ok(Self {
            elasticity: prior(Node::Elasticity, &material)?,
            density: prior(Node::Density, &material)?,
            volume: prior(Node::Volume, &category)?,
            category,
            material,
            model,
        })
    }

    pub fn from_reference(data: &ReferenceData) -> Result<Self> {
        init_network(&data.tables, &data.translations, &data.grids)
    }

    pub fn model(&self) -> &Arc<NetworkModel> {
        &self.model
    }

    pub fn category(&self) -> &CategoricalBelief {
        &self.category
    }

    pub fn material(&self) -> &CategoricalBelief {
        &self.material
    }

    pub fn elasticity(&self) -> &ContinuousBelief {
        &self.elasticity
    }

    pub fn density(&self) -> &ContinuousBelief {
        &self.density
    }

    pub fn volume(&self) -> &ContinuousBelief {
        &self.volume
    }

    pub fn categorical(&self, node: Node) -> Option<&CategoricalBelief> {
        match node {
            Node::Category => Some(&self.category),
            Node::Material => Some(&self.material),
            _ => None,
        }
    }

    pub fn continuous(&self, node: Node) -> Option<&ContinuousBelief> {
        match node {
            Node::Elasticity => Some(&self.elasticity),
            Node::Density => Some(&self.density),
            Node::Volume => Some(&self.volume),
            _ => None,
        }
    }

    fn categorical_mut(&mut self, node: Node) -> Result<&mut CategoricalBelief> {
        match node {
            Node::Category => Ok(&mut self.category),
            Node::Material => Ok(&mut self.material),
            n => Err(Error::validation("node", format!("{n} is not categorical"))),
        }
    }

    fn continuous_mut(&mut self, node: Node) -> Result<&mut ContinuousBelief> {
        match node {
            Node::Elasticity => Ok(&mut self.elasticity),
            Node::Density => Ok(&mut self.density),
            Node::Volume => Ok(&mut self.volume),
            n => Err(Error::validation("node", format!("{n} is not continuous"))),
        }
    }

    /// Replaces a node belief without propagating.
    pub fn set_categorical(&mut self, node: Node, belief: CategoricalBelief) -> Result<()> {
        let slot = self.categorical_mut(node)?;
        if slot.labels() != belief.labels() {
            return Err(Error::LabelMismatch {
                expected: slot.labels().to_vec(),
                got: belief.labels().to_vec(),
            });
        }
        *slot = belief;
        Ok(())
    }

    /// Replaces a node belief without propagating.
    pub fn set_continuous(&mut self, node: Node, belief: ContinuousBelief) -> Result<()> {
        let slot = self.continuous_mut(node)?;
        if slot.grid() != belief.grid() {
            return Err(Error::Dimension(format!("grid of {node} does not match")));
        }
        *slot = belief;
        Ok(())
    }

    /// EM mixture weights of a continuous node over its parent's labels.
    pub fn mixture_weights(&self, node: Node) -> Result<Vec<f64>> {
        let basis = self
            .model
            .basis(node)
            .ok_or_else(|| Error::validation("node", format!("{node} is not continuous")))?;
        basis.estimate_weights(self.continuous(node).expect("continuous node"))
    }

    /// The belief of `node` expressed over its label space.
    fn source_vector(&self, node: Node) -> Result<Vec<f64>> {
        match self.categorical(node) {
            Some(pmf) => Ok(pmf.probs().to_vec()),
            None => self.mixture_weights(node),
        }
    }

    fn receive(&mut self, node: Node, vector: &[f64]) -> Result<()> {
        if node.is_categorical() {
            let slot = self.categorical_mut(node)?;
            *slot = slot.multiply(vector)?;
        } else {
            let basis = self.model.basis(node).expect("continuous node");
            let prior = basis.mixture_values(vector)?;
            let slot = self.continuous_mut(node)?;
            let values: Vec<f64> = prior.iter().zip(slot.likelihood_product()).map(|(p, l)| p * l).collect();
            *slot = ContinuousBelief::with_likelihood(*slot.grid(), &values, slot.likelihood_product().to_vec())?;
        }
        Ok(())
    }

    /// Single breadth-first pass from `origin`; every other node is updated
    /// exactly once. Returns the messages in the order they were applied.
    pub fn propagate_from(&mut self, origin: Node) -> Result<Vec<Message>> {
        let mut visited = vec![origin];
        let mut queue = VecDeque::from([origin]);
        let mut messages = Vec::with_capacity(4);
        while let Some(source) = queue.pop_front() {
            let pending: Vec<Node> = source.neighbors().iter().copied().filter(|n| !visited.contains(n)).collect();
            if pending.is_empty() {
                continue;
            }
            let vector = self.source_vector(source)?;
            for target in pending {
                let matrix = self.model.translation(source, target).expect("complete edge set");
                let msg = matrix.push_forward(&vector)?;
                let msg = normalize(&msg).ok_or(Error::IncompatibleMeasurement)?;
                self.receive(target, &msg)?;
                messages.push(Message {
                    origin: source,
                    target,
                    vector: msg,
                });
                visited.push(target);
                queue.push_back(target);
            }
        }
        Ok(messages)
    }

    /// Multiplies a categorical node by `C m` (the confusion likelihood of a
    /// possibly soft outcome vector) and propagates.
    pub fn apply_categorical(&mut self, node: Node, measurement: &[f64], confusion: &ConfusionMatrix) -> Result<Vec<Message>> {
        let likelihood = confusion.likelihood(measurement)?;
        let slot = self.categorical_mut(node)?;
        if likelihood.len() != slot.len() {
            return Err(Error::Dimension(format!("confusion has {} rows for {} labels", likelihood.len(), slot.len())));
        }
        *slot = slot.multiply(&likelihood)?;
        self.propagate_from(node)
    }

    /// Multiplies a continuous node by a gridded likelihood and propagates.
    pub fn apply_continuous(&mut self, node: Node, likelihood: &[f64]) -> Result<Vec<Message>> {
        let slot = self.continuous_mut(node)?;
        *slot = multiply_likelihood(slot, likelihood)?;
        self.propagate_from(node)
    }

    /// Summed entropy of the target nodes, in bits.
    pub fn entropy(&self, target_set: &[Node]) -> Result<f64> {
        validate_target_set(target_set)?;
        Ok(target_set.iter().map(|&n| self.node_entropy(n)).sum())
    }

    pub fn node_entropy(&self, node: Node) -> f64 {
        match self.categorical(node) {
            Some(pmf) => pmf.entropy(),
            None => self.continuous(node).expect("continuous node").entropy(),
        }
    }

    pub fn snapshot(&self) -> NetworkSnapshot {
        NetworkSnapshot {
            nodes: Node::ALL
                .iter()
                .map(|&node| match self.categorical(node) {
                    Some(pmf) => NodeSummary::Categorical {
                        node,
                        entropy: pmf.entropy(),
                        probs: pmf.probs().to_vec(),
                        top: pmf.top(3),
                    },
                    None => {
                        let pdf = self.continuous(node).expect("continuous node");
                        NodeSummary::Continuous {
                            node,
                            entropy: pdf.entropy(),
                            mean: pdf.mean(),
                            sd: pdf.sd(),
                            integral: pdf.integral(),
                        }
                    }
                })
                .collect(),
        }
    }
}

/// Rejects empty sets and sets mixing categorical and continuous nodes.
pub fn validate_target_set(target_set: &[Node]) -> Result<()> {
    if target_set.is_empty() {
        return Err(Error::validation("target_set", "empty"));
    }
    let first = target_set[0].is_categorical();
    if target_set.iter().any(|n| n.is_categorical() != first) {
        return Err(Error::MixedEntropy);
    }
    Ok(())
}

pub fn apply_categorical_measurement(
    state: &NetworkState,
    node: Node,
    measurement: &CategoricalBelief,
    confusion: &ConfusionMatrix,
) -> Result<NetworkState> {
    let mut next = state.clone();
    next.apply_categorical(node, measurement.probs(), confusion)?;
    Ok(next)
}

pub fn apply_continuous_measurement(state: &NetworkState, node: Node, likelihood: &[f64]) -> Result<NetworkState> {
    let mut next = state.clone();
    next.apply_continuous(node, likelihood)?;
    Ok(next)
}

pub fn propagate_messages(state: &NetworkState, origin: Node) -> Result<NetworkState> {
    let mut next = state.clone();
    next.propagate_from(origin)?;
    Ok(next)
}

pub fn network_entropy(state: &NetworkState, target_set: &[Node]) -> Result<f64> {
    state.entropy(target_set)
}

/// Serializable per-node summary, in canonical node order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSnapshot {
    pub nodes: Vec<NodeSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NodeSummary {
    Categorical {
        node: Node,
        entropy: f64,
        probs: Vec<f64>,
        top: Vec<(String, f64)>,
    },
    Continuous {
        node: Node,
        entropy: f64,
        mean: f64,
        sd: f64,
        integral: f64,
    },
}

impl NodeSummary {
    pub fn node(&self) -> Node {
        match self {
            NodeSummary::Categorical { node, .. } | NodeSummary::Continuous { node, .. } => *node,
        }
    }

    pub fn entropy(&self) -> f64 {
        match self {
            NodeSummary::Categorical { entropy, .. } | NodeSummary::Continuous { entropy, .. } => *entropy,
        }
    }
}

impl NetworkSnapshot {
    pub fn node(&self, node: Node) -> Option<&NodeSummary> {
        self.nodes.iter().find(|s| s.node() == node)
    }

    pub fn entropy(&self, target_set: &[Node]) -> Result<f64> {
        validate_target_set(target_set)?;
        target_set
            .iter()
            .map(|&n| self.node(n).map(NodeSummary::entropy).ok_or(Error::validation("snapshot", format!("missing {n}"))))
            .sum()
    }
}
