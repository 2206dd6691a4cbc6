//! Action selection and the episode loop.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::actions::{outcome_to_update, simulate_measurement, MeasurementOutcome};
use crate::error::{Error, Result};
use crate::experiment::cross_entropy;
use crate::info_gain::{expected_information_gain, ActionEvaluation};
use crate::network::{validate_target_set, NetworkSnapshot, NetworkState};
use crate::node::Node;
use crate::reference::{ActionSpec, GroundTruthObject};

pub const DEFAULT_MAX_STEPS: usize = 5;

/// Which node entropies the planner tries to reduce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OptimizationMode {
    #[serde(rename = "category")]
    Category,
    #[serde(rename = "material")]
    Material,
    #[serde(rename = "elasticity")]
    Elasticity,
    #[serde(rename = "density")]
    Density,
    #[serde(rename = "volume")]
    Volume,
    #[serde(rename = "category+material")]
    CategoryMaterial,
    #[serde(rename = "all-continuous")]
    AllContinuous,
}

impl OptimizationMode {
    pub const ALL: [OptimizationMode; 7] = [
        OptimizationMode::Category,
        OptimizationMode::Material,
        OptimizationMode::Elasticity,
        OptimizationMode::Density,
        OptimizationMode::Volume,
        OptimizationMode::CategoryMaterial,
        OptimizationMode::AllContinuous,
    ];

    pub fn target_set(self) -> &'static [Node] {
        match self {
            OptimizationMode::Category => &[Node::Category],
            OptimizationMode::Material => &[Node::Material],
            OptimizationMode::Elasticity => &[Node::Elasticity],
            OptimizationMode::Density => &[Node::Density],
            OptimizationMode::Volume => &[Node::Volume],
            OptimizationMode::CategoryMaterial => &[Node::Category, Node::Material],
            OptimizationMode::AllContinuous => &Node::CONTINUOUS,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OptimizationMode::Category => "category",
            OptimizationMode::Material => "material",
            OptimizationMode::Elasticity => "elasticity",
            OptimizationMode::Density => "density",
            OptimizationMode::Volume => "volume",
            OptimizationMode::CategoryMaterial => "category+material",
            OptimizationMode::AllContinuous => "all-continuous",
        }
    }
}

impl fmt::Display for OptimizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OptimizationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['_', ' '], "-");
        let key = match key.as_str() {
            "category-material" | "categorymaterial" => "category+material",
            "allcontinuous" | "continuous" => "all-continuous",
            k => k,
        }
        .to_string();
        OptimizationMode::ALL
            .into_iter()
            .find(|m| m.as_str() == key)
            .ok_or_else(|| Error::validation("mode", format!("unknown optimization mode {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Highest expected information gain.
    ActSel,
    /// Uniformly random among the remaining actions.
    Rand,
}

impl Policy {
    pub fn as_str(self) -> &'static str {
        match self {
            Policy::ActSel => "actsel",
            Policy::Rand => "rand",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "actsel" | "act-sel" | "greedy" => Ok(Policy::ActSel),
            "rand" | "random" => Ok(Policy::Rand),
            _ => Err(Error::validation("policy", format!("unknown policy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub mode: OptimizationMode,
    pub policy: Policy,
    pub terminate_on_nonpositive_ig: bool,
    pub max_steps: usize,
    pub seed: u64,
}

impl EpisodeConfig {
    pub fn new(mode: OptimizationMode, policy: Policy, seed: u64) -> Self {
        Self {
            mode,
            policy,
            terminate_on_nonpositive_ig: false,
            max_steps: DEFAULT_MAX_STEPS,
            seed,
        }
    }

    pub fn validate(&self, action_count: usize) -> Result<()> {
        if self.max_steps == 0 || self.max_steps > action_count {
            return Err(Error::validation(
                "max_steps",
                format!("must be in 1..={action_count} (actions are not repeated), got {}", self.max_steps),
            ));
        }
        validate_target_set(self.mode.target_set())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Choice {
    /// Index into the available list.
    Action(usize),
    Terminate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub evaluations: Vec<ActionEvaluation>,
    pub choice: Choice,
}

/// Scores every available action and picks one. ACTSEL takes the first
/// maximum in list order and, if `terminate` is set, stops once no action
/// promises a positive gain. RAND never stops early.
pub fn select_action<R: Rng + ?Sized>(
    state: &NetworkState,
    available: &[&ActionSpec],
    target_set: &[Node],
    policy: Policy,
    terminate: bool,
    rng: &mut R,
) -> Result<Selection> {
    if available.is_empty() {
        return Err(Error::validation("available actions", "empty"));
    }
    let evaluations = available
        .iter()
        .map(|a| expected_information_gain(state, a, target_set))
        .collect::<Result<Vec<_>>>()?;
    let choice = match policy {
        Policy::ActSel => {
            let mut best = 0;
            for (i, e) in evaluations.iter().enumerate() {
                if e.expected_ig > evaluations[best].expected_ig {
                    best = i;
                }
            }
            if terminate && evaluations.iter().all(|e| e.expected_ig <= 0.0) {
                Choice::Terminate
            } else {
                Choice::Action(best)
            }
        }
        Policy::Rand => Choice::Action(rng.random_range(0..available.len())),
    };
    Ok(Selection { evaluations, choice })
}

/// One iteration of an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub available: Vec<String>,
    pub evaluations: Vec<ActionEvaluation>,
    /// `None` when the planner terminated instead of acting.
    pub chosen: Option<String>,
    pub outcome: Option<MeasurementOutcome>,
    pub experimental_ig: Option<f64>,
    /// Target-set entropy after the step (unchanged on termination).
    pub target_entropy: f64,
    /// Absent when the true object is unknown (interactive sessions).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_cross_entropy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material_cross_entropy: Option<f64>,
    pub snapshot: NetworkSnapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub object: String,
    pub config: EpisodeConfig,
    pub initial_entropy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_category_cross_entropy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_material_cross_entropy: Option<f64>,
    pub initial: NetworkSnapshot,
    pub steps: Vec<StepRecord>,
    pub terminated: bool,
}

impl EpisodeTrace {
    pub fn actions(&self) -> Vec<&str> {
        self.steps.iter().filter_map(|s| s.chosen.as_deref()).collect()
    }
}

fn cross_entropies(state: &NetworkState, object: &GroundTruthObject) -> Result<(Option<f64>, Option<f64>)> {
    Ok((
        Some(cross_entropy(state.category(), &object.category)?),
        Some(cross_entropy(state.material(), &object.material)?),
    ))
}

/// Seeded generator for the measurement noise of one action. Streams are
/// keyed by the action's position in the full action list, so an action
/// sees the same noise regardless of when it is chosen.
fn measurement_rng(seed: u64, action_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 + action_index as u64);
    rng
}

/// Runs the select / measure / update loop on a simulated object until the
/// step budget is used up or the planner terminates.
pub fn run_episode(
    object: &GroundTruthObject,
    config: &EpisodeConfig,
    initial: &NetworkState,
    actions: &[ActionSpec],
) -> Result<EpisodeTrace> {
    config.validate(actions.len())?;
    let target_set = config.mode.target_set();
    let tables = initial.model().tables().clone();
    let mut policy_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut noise: Vec<ChaCha8Rng> = (0..actions.len()).map(|i| measurement_rng(config.seed, i)).collect();

    let mut state = initial.clone();
    let mut remaining: Vec<usize> = (0..actions.len()).collect();
    let (ce_cat, ce_mat) = cross_entropies(&state, object)?;
    let mut trace = EpisodeTrace {
        object: object.name.clone(),
        config: *config,
        initial_entropy: state.entropy(target_set)?,
        initial_category_cross_entropy: ce_cat,
        initial_material_cross_entropy: ce_mat,
        initial: state.snapshot(),
        steps: Vec::with_capacity(config.max_steps),
        terminated: false,
    };

    for step in 1..=config.max_steps {
        let available: Vec<&ActionSpec> = remaining.iter().map(|&i| &actions[i]).collect();
        let selection = select_action(
            &state,
            &available,
            target_set,
            config.policy,
            config.terminate_on_nonpositive_ig,
            &mut policy_rng,
        )?;
        let names = available.iter().map(|a| a.name.clone()).collect();
        let before = state.entropy(target_set)?;
        let Choice::Action(pick) = selection.choice else {
            let (ce_cat, ce_mat) = cross_entropies(&state, object)?;
            trace.steps.push(StepRecord {
                step,
                available: names,
                evaluations: selection.evaluations,
                chosen: None,
                outcome: None,
                experimental_ig: None,
                target_entropy: before,
                category_cross_entropy: ce_cat,
                material_cross_entropy: ce_mat,
                snapshot: state.snapshot(),
            });
            trace.terminated = true;
            break;
        };
        let index = remaining.remove(pick);
        let action = &actions[index];
        let outcome = simulate_measurement(action, object, &tables, &mut noise[index])?;
        outcome_to_update(&outcome, action, &state)?.apply(&mut state)?;
        let after = state.entropy(target_set)?;
        let (ce_cat, ce_mat) = cross_entropies(&state, object)?;
        trace.steps.push(StepRecord {
            step,
            available: names,
            evaluations: selection.evaluations,
            chosen: Some(action.name.clone()),
            outcome: Some(outcome),
            experimental_ig: Some(before - after),
            target_entropy: after,
            category_cross_entropy: ce_cat,
            material_cross_entropy: ce_mat,
            snapshot: state.snapshot(),
        });
    }
    Ok(trace)
}
