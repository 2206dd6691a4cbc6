//! A planning session where a person performs the recommended actions and
//! types in what they observed.

use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::actions::{outcome_to_update, parse_outcome, reading_unit};
use crate::error::{Error, Result};
use crate::network::NetworkState;
use crate::node::Node;
use crate::planner::{select_action, Choice, EpisodeConfig, EpisodeTrace, Policy, StepRecord};
use crate::reference::{ActionSpec, ReferenceData};

fn io_err(e: std::io::Error) -> Error {
    Error::io("<terminal>", e)
}

fn print_state<W: Write>(out: &mut W, state: &NetworkState) -> Result<()> {
    for node in [Node::Category, Node::Material] {
        let top: Vec<String> = state
            .categorical(node)
            .expect("categorical")
            .top(3)
            .iter()
            .map(|(l, p)| format!("{l} {p:.3}"))
            .collect();
        writeln!(out, "  {node:<10} {}", top.join(", ")).map_err(io_err)?;
    }
    for node in Node::CONTINUOUS {
        let pdf = state.continuous(node).expect("continuous");
        writeln!(out, "  {node:<10} mean {:.1} sd {:.1} {}", pdf.mean(), pdf.sd(), node.unit()).map_err(io_err)?;
    }
    Ok(())
}

fn prompt_hint(action: &ActionSpec) -> String {
    if action.is_categorical() {
        format!("{} label", action.target)
    } else if action.censor_threshold().is_some() {
        format!("value in {} or `censored`", reading_unit(action))
    } else {
        format!("value in {}", reading_unit(action))
    }
}

/// Runs ACTSEL with a person in place of the simulator. Reads one line per
/// prompt; `quit` or end of input finishes the session at the current step.
pub fn interactive_session<R: BufRead, W: Write>(
    data: &ReferenceData,
    config: &EpisodeConfig,
    input: &mut R,
    out: &mut W,
) -> Result<EpisodeTrace> {
    let config = EpisodeConfig {
        policy: Policy::ActSel,
        ..*config
    };
    config.validate(data.actions.len())?;
    let target_set = config.mode.target_set();
    let mut state = NetworkState::from_reference(data)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut remaining: Vec<usize> = (0..data.actions.len()).collect();
    let mut trace = EpisodeTrace {
        object: "interactive".into(),
        config,
        initial_entropy: state.entropy(target_set)?,
        initial_category_cross_entropy: None,
        initial_material_cross_entropy: None,
        initial: state.snapshot(),
        steps: Vec::new(),
        terminated: false,
    };
    writeln!(out, "optimizing {} (entropy {:.4} bits)", config.mode, trace.initial_entropy).map_err(io_err)?;

    'steps: for step in 1..=config.max_steps {
        let available: Vec<&ActionSpec> = remaining.iter().map(|&i| &data.actions[i]).collect();
        let selection = select_action(&state, &available, target_set, Policy::ActSel, config.terminate_on_nonpositive_ig, &mut rng)?;
        let mut ranked: Vec<_> = selection.evaluations.iter().collect();
        ranked.sort_by(|a, b| b.expected_ig.total_cmp(&a.expected_ig));
        writeln!(out, "step {step}: expected information gain").map_err(io_err)?;
        for e in &ranked {
            writeln!(out, "  {:<12} {:+.4} bits", e.action, e.expected_ig).map_err(io_err)?;
        }
        let names: Vec<String> = available.iter().map(|a| a.name.clone()).collect();
        let before = state.entropy(target_set)?;
        let Choice::Action(pick) = selection.choice else {
            writeln!(out, "no action promises a positive gain; stopping").map_err(io_err)?;
            trace.steps.push(StepRecord {
                step,
                available: names,
                evaluations: selection.evaluations,
                chosen: None,
                outcome: None,
                experimental_ig: None,
                target_entropy: before,
                category_cross_entropy: None,
                material_cross_entropy: None,
                snapshot: state.snapshot(),
            });
            trace.terminated = true;
            break;
        };
        let action = available[pick];
        writeln!(out, "recommended: {}", action.name).map_err(io_err)?;
        let outcome = loop {
            write!(out, "{} outcome ({}, or `quit`): ", action.name, prompt_hint(action)).map_err(io_err)?;
            out.flush().map_err(io_err)?;
            let mut line = String::new();
            if input.read_line(&mut line).map_err(io_err)? == 0 || line.trim().eq_ignore_ascii_case("quit") {
                writeln!(out).map_err(io_err)?;
                break 'steps;
            }
            let parsed = parse_outcome(action, &line, &data.tables)
                .and_then(|o| outcome_to_update(&o, action, &state).map(|u| (o, u)));
            match parsed {
                Ok((o, update)) => {
                    let mut next = state.clone();
                    match update.apply(&mut next) {
                        Ok(_) => {
                            state = next;
                            break o;
                        }
                        Err(e) => writeln!(out, "cannot use that reading: {e}").map_err(io_err)?,
                    }
                }
                Err(e) => writeln!(out, "cannot use that reading: {e}").map_err(io_err)?,
            }
        };
        remaining.remove(pick);
        let after = state.entropy(target_set)?;
        writeln!(out, "information gain {:+.4} bits; posteriors:", before - after).map_err(io_err)?;
        print_state(out, &state)?;
        trace.steps.push(StepRecord {
            step,
            available: names,
            evaluations: selection.evaluations,
            chosen: Some(action.name.clone()),
            outcome: Some(outcome),
            experimental_ig: Some(before - after),
            target_entropy: after,
            category_cross_entropy: None,
            material_cross_entropy: None,
            snapshot: state.snapshot(),
        });
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NodeSummary;
    use crate::planner::OptimizationMode;

    fn session(input: &str) -> (EpisodeTrace, String) {
        let data = ReferenceData::defaults();
        let config = EpisodeConfig::new(OptimizationMode::Category, Policy::ActSel, 1);
        let mut out = Vec::new();
        let trace = interactive_session(&data, &config, &mut input.as_bytes(), &mut out).unwrap();
        (trace, String::from_utf8(out).unwrap())
    }

    #[test]
    fn label_concentrates_category() {
        let (trace, out) = session("wineglass\nquit\n");
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.steps[0].chosen.as_deref(), Some("cat-vision"));
        let Some(NodeSummary::Categorical { top, .. }) = trace.steps[0].snapshot.node(Node::Category) else {
            panic!()
        };
        assert_eq!(top[0].0, "wineglass");
        assert!(top[0].1 > 0.5);
        assert!(out.contains("recommended: cat-vision"));
    }

    #[test]
    fn quit_finalizes_immediately() {
        let (trace, _) = session("quit\n");
        assert!(trace.steps.is_empty());
    }

    #[test]
    fn bad_label_reprompts() {
        let (trace, out) = session("banana\nmug\n");
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.steps[0].outcome.as_ref().unwrap().label.as_deref(), Some("mug"));
        assert!(out.contains("cannot use that reading"));
        assert_eq!(out.matches("cat-vision outcome").count(), 2);
    }
}
