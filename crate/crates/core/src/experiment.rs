//! Batch experiments over the object catalog, metric aggregation and result files.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belief::CategoricalBelief;
use crate::error::{Error, Result};
use crate::network::NetworkState;
use crate::planner::{run_episode, EpisodeConfig, EpisodeTrace, OptimizationMode, Policy, DEFAULT_MAX_STEPS};
use crate::reference::ReferenceData;

/// Probability floor that keeps cross-entropy finite.
pub const CROSS_ENTROPY_FLOOR: f64 = 1e-12;
pub const DEFAULT_SEED: u64 = 20240607;
pub const TRACES_FILE: &str = "traces.jsonl";
pub const METRICS_FILE: &str = "metrics.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// `-log2 p(truth)` with the probability floored at 1e-12.
pub fn cross_entropy(pmf: &CategoricalBelief, truth_label: &str) -> Result<f64> {
    let p = pmf.prob_of(truth_label).ok_or_else(|| Error::UnknownLabel {
        node: "pmf".into(),
        label: truth_label.to_string(),
    })?;
    Ok(-p.max(CROSS_ENTROPY_FLOOR).log2())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Object names; empty selects the whole catalog.
    pub objects: Vec<String>,
    pub repetitions: usize,
    pub modes: Vec<OptimizationMode>,
    pub policies: Vec<Policy>,
    pub termination: bool,
    pub max_steps: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            objects: Vec::new(),
            repetitions: 5,
            modes: vec![OptimizationMode::Category],
            policies: vec![Policy::ActSel, Policy::Rand],
            termination: false,
            max_steps: DEFAULT_MAX_STEPS,
            seed: DEFAULT_SEED,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self, data: &ReferenceData) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::validation("repetitions", "must be >= 1"));
        }
        if self.modes.is_empty() {
            return Err(Error::validation("modes", "empty"));
        }
        if self.policies.is_empty() {
            return Err(Error::validation("policies", "empty"));
        }
        for name in &self.objects {
            if data.object(name).is_none() {
                return Err(Error::validation("objects", format!("unknown object {name:?}")));
            }
        }
        Ok(())
    }
}

/// A finished episode with its position in the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub run_index: usize,
    pub rep: usize,
    #[serde(flatten)]
    pub trace: EpisodeTrace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub runs: Vec<RunTrace>,
    pub metrics: MetricsTable,
}

/// Runs every (mode, policy, object, repetition) episode. Run `i` of an
/// object uses seed `base ^ i` under every mode and policy, so policies face
/// the same measurement noise.
pub fn run_experiment(config: &ExperimentConfig, data: &ReferenceData) -> Result<ExperimentResult> {
    config.validate(data)?;
    let initial = NetworkState::from_reference(data)?;
    let objects: Vec<_> = if config.objects.is_empty() {
        data.catalog.iter().collect()
    } else {
        config.objects.iter().filter_map(|n| data.object(n)).collect()
    };
    let mut jobs = Vec::new();
    for &mode in &config.modes {
        for &policy in &config.policies {
            for (o, object) in objects.iter().enumerate() {
                for rep in 0..config.repetitions {
                    let run_index = o * config.repetitions + rep;
                    let episode = EpisodeConfig {
                        mode,
                        policy,
                        terminate_on_nonpositive_ig: config.termination,
                        max_steps: config.max_steps,
                        seed: config.seed ^ run_index as u64,
                    };
                    jobs.push((run_index, rep, *object, episode));
                }
            }
        }
    }
    let runs = jobs
        .par_iter()
        .map(|(run_index, rep, object, episode)| {
            run_episode(object, episode, &initial, &data.actions).map(|trace| RunTrace {
                run_index: *run_index,
                rep: *rep,
                trace,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let action_names: Vec<String> = data.actions.iter().map(|a| a.name.clone()).collect();
    let metrics = aggregate_metrics(&runs, &action_names, config.max_steps)?;
    Ok(ExperimentResult { runs, metrics })
}

/// Statistics over the runs of one (mode, policy) pair at one step. Step 0
/// is the fresh network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub mode: OptimizationMode,
    pub policy: Policy,
    pub step: usize,
    pub runs: usize,
    /// Runs that executed an action at this step.
    pub acting_runs: usize,
    pub target_entropy_mean: f64,
    pub target_entropy_sd: f64,
    pub category_cross_entropy_mean: f64,
    pub category_cross_entropy_sd: f64,
    pub material_cross_entropy_mean: f64,
    pub material_cross_entropy_sd: f64,
    /// Times each action was chosen at this step, in action-list order.
    pub action_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub actions: Vec<String>,
    pub rows: Vec<MetricsRow>,
}

impl MetricsTable {
    pub fn row(&self, mode: OptimizationMode, policy: Policy, step: usize) -> Option<&MetricsRow> {
        self.rows
            .iter()
            .find(|r| r.mode == mode && r.policy == policy && r.step == step)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = [
            "mode",
            "policy",
            "step",
            "runs",
            "acting_runs",
            "target_entropy_mean_bits",
            "target_entropy_sd_bits",
            "category_cross_entropy_mean_bits",
            "category_cross_entropy_sd_bits",
            "material_cross_entropy_mean_bits",
            "material_cross_entropy_sd_bits",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend(self.actions.iter().map(|a| format!("count_{a}")));
        let csv_err = |e: csv::Error| Error::Serialize(e.to_string());
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![
                r.mode.to_string(),
                r.policy.to_string(),
                r.step.to_string(),
                r.runs.to_string(),
                r.acting_runs.to_string(),
                r.target_entropy_mean.to_string(),
                r.target_entropy_sd.to_string(),
                r.category_cross_entropy_mean.to_string(),
                r.category_cross_entropy_sd.to_string(),
                r.material_cross_entropy_mean.to_string(),
                r.material_cross_entropy_sd.to_string(),
            ];
            rec.extend(r.action_counts.iter().map(usize::to_string));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Serialize(e.to_string()))?;
        Ok(())
    }
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-step means and population SDs for each (mode, policy). Runs that
/// stopped early carry their last values forward and stop counting as acting.
pub fn aggregate_metrics(runs: &[RunTrace], actions: &[String], max_steps: usize) -> Result<MetricsTable> {
    if runs.is_empty() {
        return Err(Error::validation("traces", "nothing to aggregate"));
    }
    let mut groups: BTreeMap<(OptimizationMode, Policy), Vec<&EpisodeTrace>> = BTreeMap::new();
    for r in runs {
        groups.entry((r.trace.config.mode, r.trace.config.policy)).or_default().push(&r.trace);
    }
    let missing = |what: &str| Error::validation("traces", format!("missing {what}"));
    let mut rows = Vec::new();
    for ((mode, policy), traces) in groups {
        for step in 0..=max_steps {
            let mut entropy = Vec::with_capacity(traces.len());
            let mut ce_cat = Vec::with_capacity(traces.len());
            let mut ce_mat = Vec::with_capacity(traces.len());
            let mut counts = vec![0usize; actions.len()];
            for t in &traces {
                let last = step.min(t.steps.len());
                if last == 0 {
                    entropy.push(t.initial_entropy);
                    ce_cat.push(t.initial_category_cross_entropy.ok_or_else(|| missing("cross-entropy"))?);
                    ce_mat.push(t.initial_material_cross_entropy.ok_or_else(|| missing("cross-entropy"))?);
                } else {
                    let s = &t.steps[last - 1];
                    entropy.push(s.target_entropy);
                    ce_cat.push(s.category_cross_entropy.ok_or_else(|| missing("cross-entropy"))?);
                    ce_mat.push(s.material_cross_entropy.ok_or_else(|| missing("cross-entropy"))?);
                }
                if step >= 1 && step <= t.steps.len() {
                    if let Some(name) = &t.steps[step - 1].chosen {
                        let i = actions.iter().position(|a| a == name).ok_or_else(|| missing(name))?;
                        counts[i] += 1;
                    }
                }
            }
            let (em, es) = mean_sd(&entropy);
            let (cm, cs) = mean_sd(&ce_cat);
            let (mm, ms) = mean_sd(&ce_mat);
            rows.push(MetricsRow {
                mode,
                policy,
                step,
                runs: traces.len(),
                acting_runs: counts.iter().sum(),
                target_entropy_mean: em,
                target_entropy_sd: es,
                category_cross_entropy_mean: cm,
                category_cross_entropy_sd: cs,
                material_cross_entropy_mean: mm,
                material_cross_entropy_sd: ms,
                action_counts: counts,
            });
        }
    }
    Ok(MetricsTable {
        actions: actions.to_vec(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: ExperimentConfig,
    pub objects: Vec<String>,
    pub actions: Vec<String>,
    pub runs: usize,
    pub files: Vec<String>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

/// Writes traces, metrics and a manifest into `dir`, returning their paths.
pub fn write_results(result: &ExperimentResult, config: &ExperimentConfig, data: &ReferenceData, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let traces_path = dir.join(TRACES_FILE);
    let mut w = create(&traces_path)?;
    for run in &result.runs {
        serde_json::to_writer(&mut w, run).map_err(|e| Error::Serialize(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(&traces_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&traces_path, e))?;

    let metrics_path = dir.join(METRICS_FILE);
    let mut w = create(&metrics_path)?;
    result.metrics.write_csv(&mut w)?;
    w.flush().map_err(|e| Error::io(&metrics_path, e))?;

    let manifest_path = dir.join(MANIFEST_FILE);
    let objects = if config.objects.is_empty() {
        data.catalog.iter().map(|o| o.name.clone()).collect()
    } else {
        config.objects.clone()
    };
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        objects,
        actions: data.actions.iter().map(|a| a.name.clone()).collect(),
        runs: result.runs.len(),
        files: vec![TRACES_FILE.into(), METRICS_FILE.into()],
    };
    let mut w = create(&manifest_path)?;
    serde_json::to_writer_pretty(&mut w, &manifest).map_err(|e| Error::Serialize(e.to_string()))?;
    w.write_all(b"\n").map_err(|e| Error::io(&manifest_path, e))?;
    w.flush().map_err(|e| Error::io(&manifest_path, e))?;
    Ok(vec![traces_path, metrics_path, manifest_path])
}

/// Reads a traces file written by [`write_results`].
pub fn read_traces(path: &Path) -> Result<Vec<RunTrace>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                message: format!("line {}: {e}", i + 1),
            })
        })
        .collect()
}
