//! Per-measurement record files.
//!
//! Layout: `<dir>/<object>/<mode>-<policy>-rep<k>/step_<n>_<action>.toml`,
//! plus `<dir>/manifest.toml` listing every record.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::actions::MeasurementOutcome;
use crate::error::{Error, Result};
use crate::experiment::RunTrace;
use crate::node::Node;
use crate::planner::{OptimizationMode, Policy};
use crate::reference::{ActionKind, ActionSpec, Sensor};

pub const LOG_MANIFEST_FILE: &str = "manifest.toml";

/// Sensor configuration at the time of a measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetupMetadata {
    pub target: Node,
    pub sensor: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub censor_threshold: Option<f64>,
}

impl SetupMetadata {
    pub fn from_action(action: &ActionSpec) -> Self {
        let (sensor, accuracy) = match &action.kind {
            ActionKind::Categorical { confusion } => {
                let k = confusion.rows();
                let mean_diag = (0..k).map(|i| confusion.get(i, i)).sum::<f64>() / k as f64;
                ("classifier".to_string(), Some(mean_diag))
            }
            ActionKind::Continuous { sensor: Sensor::Mass { .. }, .. } => ("mass".to_string(), None),
            ActionKind::Continuous { .. } => ("direct".to_string(), None),
        };
        Self {
            target: action.target,
            sensor,
            accuracy,
            sigma: action.sigma(),
            censor_threshold: action.censor_threshold(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub object: String,
    pub mode: OptimizationMode,
    pub policy: Policy,
    pub rep: usize,
    pub step: usize,
    pub seed: u64,
    /// Milliseconds since the Unix epoch when the record was written.
    pub timestamp_ms: u64,
    pub action: String,
    pub setup: SetupMetadata,
    pub outcome: MeasurementOutcome,
}

impl MeasurementRecord {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogManifest {
    pub version: String,
    pub records: Vec<String>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Relative directory of one run.
pub fn run_dir(run: &RunTrace) -> PathBuf {
    let c = &run.trace.config;
    Path::new(&run.trace.object).join(format!("{}-{}-rep{}", c.mode, c.policy, run.rep))
}

/// Writes one record per executed measurement and a manifest. Returns the
/// manifest.
pub fn export_measurement_log(runs: &[RunTrace], actions: &[ActionSpec], dir: &Path) -> Result<LogManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut records = Vec::new();
    for run in runs {
        for step in &run.trace.steps {
            let (Some(name), Some(outcome)) = (&step.chosen, &step.outcome) else {
                continue;
            };
            let action = actions
                .iter()
                .find(|a| &a.name == name)
                .ok_or_else(|| Error::validation("trace", format!("unknown action {name:?}")))?;
            let record = MeasurementRecord {
                object: run.trace.object.clone(),
                mode: run.trace.config.mode,
                policy: run.trace.config.policy,
                rep: run.rep,
                step: step.step,
                seed: run.trace.config.seed,
                timestamp_ms: now_ms(),
                action: name.clone(),
                setup: SetupMetadata::from_action(action),
                outcome: outcome.clone(),
            };
            let rel = run_dir(run).join(format!("step_{}_{}.toml", step.step, name));
            let path = dir.join(&rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            fs::write(&path, record.to_toml()?).map_err(|e| Error::io(&path, e))?;
            records.push(rel.to_string_lossy().replace('\\', "/"));
        }
    }
    let manifest = LogManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        records,
    };
    let path = dir.join(LOG_MANIFEST_FILE);
    let text = toml::to_string(&manifest).map_err(|e| Error::Serialize(e.to_string()))?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Reads every record listed in a log manifest.
pub fn read_measurement_log(dir: &Path) -> Result<Vec<MeasurementRecord>> {
    let path = dir.join(LOG_MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: LogManifest = toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.clone(),
        message: e.to_string(),
    })?;
    manifest
        .records
        .iter()
        .map(|rel| {
            let p = dir.join(rel);
            let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            MeasurementRecord::parse(&text, &p)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{run_experiment, ExperimentConfig};
    use crate::reference::ReferenceData;

    #[test]
    fn one_run_gives_five_records_that_round_trip() {
        let data = ReferenceData::defaults();
        let config = ExperimentConfig {
            objects: vec!["sponge_hard".into()],
            repetitions: 1,
            policies: vec![Policy::ActSel],
            ..ExperimentConfig::default()
        };
        let result = run_experiment(&config, &data).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest = export_measurement_log(&result.runs, &data.actions, dir.path()).unwrap();
        assert_eq!(manifest.records.len(), 5);
        assert!(manifest.records[0].starts_with("sponge_hard/category-actsel-rep0/step_1_"));
        let back = read_measurement_log(dir.path()).unwrap();
        assert_eq!(back.len(), 5);
        for (record, step) in back.iter().zip(&result.runs[0].trace.steps) {
            assert_eq!(Some(&record.outcome), step.outcome.as_ref());
            assert_eq!(record.seed, config.seed);
            let again = MeasurementRecord::parse(&record.to_toml().unwrap(), Path::new("<mem>")).unwrap();
            assert_eq!(&again, record);
        }
    }

    #[test]
    fn empty_log_has_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = export_measurement_log(&[], &[], dir.path()).unwrap();
        assert!(manifest.records.is_empty());
        assert!(dir.path().join(LOG_MANIFEST_FILE).exists());
        assert!(read_measurement_log(dir.path()).unwrap().is_empty());
    }
}
