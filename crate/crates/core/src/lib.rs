//! Active property estimation for household objects.
//!
//! A five-node Bayesian network (category, material, elasticity, density,
//! volume) holds beliefs about an object. Measurement actions update those
//! beliefs, messages carry evidence across the tree, and a planner picks the
//! action with the highest expected information gain.

pub mod actions;
pub mod belief;
pub mod error;
pub mod experiment;
pub mod export;
pub mod info_gain;
pub mod interactive;
pub mod mixture;
pub mod network;
pub mod node;
pub mod planner;
pub mod reference;

pub use actions::{MeasurementOutcome, NodeUpdate};
pub use belief::{CategoricalBelief, ContinuousBelief, Grid};
pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentResult, MetricsTable, RunTrace};
pub use info_gain::{expected_information_gain, experimental_information_gain, ActionEvaluation};
pub use mixture::{Component, GaussianMixture, LabeledComponents};
pub use network::{init_network, NetworkSnapshot, NetworkState};
pub use node::{Node, NodeKind};
pub use planner::{run_episode, EpisodeConfig, EpisodeTrace, OptimizationMode, Policy};
pub use reference::{ActionKind, ActionSpec, ConfusionMatrix, GroundTruthObject, ReferenceData, ReferenceTables, Sensor};
