//! Static inputs: reference priors, action specifications, edge translations,
//! discretization grids and the ground-truth object catalog.
//!
//! Every table lives in its own TOML file. Numeric keys carry their unit as a
//! suffix (`density_mean_kg_m3`, `volume_cm3`, `mass_g`, ...). Values are
//! converted to the canonical units (kPa, kg/m^3, cm^3, g) on load. Default
//! files are compiled into the crate and used for anything a config directory
//! does not override.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::belief::Grid;
use crate::error::{Error, Result};
use crate::mixture::{Component, LabeledComponents};
use crate::node::{Node, TREE_EDGES};

pub const CATEGORY_COUNT: usize = 10;
pub const MATERIAL_COUNT: usize = 8;

const STOCHASTIC_TOLERANCE: f64 = 1e-9;
const MASS_TOLERANCE: f64 = 1e-3;

pub const PRIORS_FILE: &str = "priors.toml";
pub const ACTIONS_FILE: &str = "actions.toml";
pub const EDGES_FILE: &str = "edges.toml";
pub const CATALOG_FILE: &str = "catalog.toml";
pub const GRIDS_FILE: &str = "grids.toml";

pub const DEFAULT_PRIORS: &str = include_str!("../data/priors.toml");
pub const DEFAULT_ACTIONS: &str = include_str!("../data/actions.toml");
pub const DEFAULT_EDGES: &str = include_str!("../data/edges.toml");
pub const DEFAULT_CATALOG: &str = include_str!("../data/catalog.toml");
pub const DEFAULT_GRIDS: &str = include_str!("../data/grids.toml");

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse<T: DeserializeOwned>(text: &str, origin: &Path) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })
}

fn positive(field: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::validation(field, format!("must be > 0, got {value}")))
    }
}

fn finite(field: &str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::validation(field, format!("must be finite, got {value}")))
    }
}

/// Picks exactly one of two unit variants of a key, converting the second.
fn one_of(field: &str, primary: Option<f64>, alt: Option<f64>, alt_factor: f64, alt_key: &str) -> Result<f64> {
    match (primary, alt) {
        (Some(v), None) => Ok(v),
        (None, Some(v)) => Ok(v * alt_factor),
        (None, None) => Err(Error::validation(field, "missing")),
        (Some(_), Some(_)) => Err(Error::validation(field, format!("given together with {alt_key}"))),
    }
}

// ---------------------------------------------------------------------------
// Confusion matrices

/// Row-stochastic matrix. Row = true (or source) label, column = reported
/// (or target) label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct ConfusionMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ConfusionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if n == 0 || m == 0 {
            return Err(Error::validation("matrix", "empty"));
        }
        let mut data = Vec::with_capacity(n * m);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::validation("matrix", format!("row {i} has {} entries, expected {m}", row.len())));
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::validation("matrix", format!("row {i} has a negative or non-finite entry")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > STOCHASTIC_TOLERANCE {
                return Err(Error::validation("matrix", format!("row {i} sums to {total}, expected 1")));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { rows: n, cols: m, data })
    }

    pub fn identity(k: usize) -> Self {
        let mut data = vec![0.0; k * k];
        for i in 0..k {
            data[i * k + i] = 1.0;
        }
        Self { rows: k, cols: k, data }
    }

    pub fn uniform(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![1.0 / cols as f64; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    /// `v^T C`: pushes a distribution over row labels to column labels.
    pub fn push_forward(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::Dimension(format!("vector of length {} for {} rows", v.len(), self.rows)));
        }
        let mut out = vec![0.0; self.cols];
        for (i, vi) in v.iter().enumerate() {
            if *vi == 0.0 {
                continue;
            }
            for (o, c) in out.iter_mut().zip(self.row(i)) {
                *o += vi * c;
            }
        }
        Ok(out)
    }

    /// `C m`: likelihood of a (soft) reported-label vector for each true label.
    pub fn likelihood(&self, measurement: &[f64]) -> Result<Vec<f64>> {
        if measurement.len() != self.cols {
            return Err(Error::Dimension(format!(
                "measurement of length {} for {} columns",
                measurement.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(measurement).map(|(c, m)| c * m).sum())
            .collect())
    }

    /// Transpose with each row rescaled to unit sum. All-zero rows become uniform.
    pub fn row_normalized_transpose(&self) -> Self {
        let (rows, cols) = (self.cols, self.rows);
        let mut data = vec![0.0; rows * cols];
        for r in 0..rows {
            let total: f64 = (0..cols).map(|c| self.get(c, r)).sum();
            for c in 0..cols {
                data[r * cols + c] = if total > 0.0 { self.get(c, r) / total } else { 1.0 / cols as f64 };
            }
        }
        Self { rows, cols, data }
    }
}

impl TryFrom<Vec<Vec<f64>>> for ConfusionMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        ConfusionMatrix::new(rows)
    }
}

impl From<ConfusionMatrix> for Vec<Vec<f64>> {
    fn from(m: ConfusionMatrix) -> Self {
        m.to_rows()
    }
}

/// Confusion matrix with `accuracy` on the diagonal and the remaining mass
/// spread evenly over the other labels.
pub fn build_default_confusion(accuracy: f64, cardinality: usize) -> Result<ConfusionMatrix> {
    if !(0.0..=1.0).contains(&accuracy) {
        return Err(Error::validation("accuracy", format!("must be in [0, 1], got {accuracy}")));
    }
    if cardinality < 2 {
        return Err(Error::validation("cardinality", format!("must be >= 2, got {cardinality}")));
    }
    let off = (1.0 - accuracy) / (cardinality - 1) as f64;
    let mut data = vec![off; cardinality * cardinality];
    for i in 0..cardinality {
        data[i * cardinality + i] = accuracy;
    }
    Ok(ConfusionMatrix {
        rows: cardinality,
        cols: cardinality,
        data,
    })
}

// ---------------------------------------------------------------------------
// Reference priors

/// Per-label reference components for the three continuous properties.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTables {
    category_labels: Vec<String>,
    material_labels: Vec<String>,
    volume_by_category: Vec<Component>,
    density_by_material: Vec<Component>,
    elasticity_by_material: Vec<Component>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PriorsFile {
    category: Vec<CategoryRow>,
    material: Vec<MaterialRow>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CategoryRow {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    volume_mean_cm3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    volume_sd_cm3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    volume_mean_m3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    volume_sd_m3: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialRow {
    name: String,
    density_mean_kg_m3: Option<f64>,
    density_sd_kg_m3: Option<f64>,
    elasticity_mean_kpa: Option<f64>,
    elasticity_sd_kpa: Option<f64>,
}

const CM3_PER_M3: f64 = 1e6;

impl ReferenceTables {
    pub fn new(
        category_labels: Vec<String>,
        material_labels: Vec<String>,
        volume_by_category: Vec<Component>,
        density_by_material: Vec<Component>,
        elasticity_by_material: Vec<Component>,
    ) -> Result<Self> {
        if category_labels.len() != CATEGORY_COUNT {
            return Err(Error::validation(
                "category",
                format!("expected {CATEGORY_COUNT} categories, got {}", category_labels.len()),
            ));
        }
        if material_labels.len() != MATERIAL_COUNT {
            return Err(Error::validation(
                "material",
                format!("expected {MATERIAL_COUNT} materials, got {}", material_labels.len()),
            ));
        }
        for (field, labels) in [("category", &category_labels), ("material", &material_labels)] {
            for (i, l) in labels.iter().enumerate() {
                if l.trim().is_empty() {
                    return Err(Error::validation(format!("{field}[{i}].name"), "missing label"));
                }
                if labels[..i].contains(l) {
                    return Err(Error::validation(format!("{field}[{i}].name"), format!("duplicate label {l:?}")));
                }
            }
        }
        if volume_by_category.len() != CATEGORY_COUNT
            || density_by_material.len() != MATERIAL_COUNT
            || elasticity_by_material.len() != MATERIAL_COUNT
        {
            return Err(Error::Dimension("component count does not match label count".into()));
        }
        Ok(Self {
            category_labels,
            material_labels,
            volume_by_category,
            density_by_material,
            elasticity_by_material,
        })
    }

    pub fn category_labels(&self) -> &[String] {
        &self.category_labels
    }

    pub fn material_labels(&self) -> &[String] {
        &self.material_labels
    }

    pub fn labels(&self, node: Node) -> &[String] {
        match node.label_space() {
            Node::Category => &self.category_labels,
            _ => &self.material_labels,
        }
    }

    pub fn cardinality(&self, node: Node) -> usize {
        self.labels(node).len()
    }

    /// Reference components of a continuous node, labeled by its parent.
    pub fn components(&self, node: Node) -> Option<LabeledComponents> {
        let comps = match node {
            Node::Volume => &self.volume_by_category,
            Node::Density => &self.density_by_material,
            Node::Elasticity => &self.elasticity_by_material,
            _ => return None,
        };
        Some(LabeledComponents {
            labels: self.labels(node).to_vec(),
            components: comps.clone(),
        })
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let file: PriorsFile = parse(text, origin)?;
        let mut categories = Vec::new();
        let mut volumes = Vec::new();
        for (i, row) in file.category.into_iter().enumerate() {
            let f = |k: &str| format!("category[{i}].{k}");
            let mean = one_of(&f("volume_mean_cm3"), row.volume_mean_cm3, row.volume_mean_m3, CM3_PER_M3, "volume_mean_m3")?;
            let sd = one_of(&f("volume_sd_cm3"), row.volume_sd_cm3, row.volume_sd_m3, CM3_PER_M3, "volume_sd_m3")?;
            volumes.push(Component {
                mean: finite(&f("volume_mean_cm3"), mean)?,
                sd: positive(&f("volume_sd_cm3"), sd)?,
            });
            categories.push(row.name);
        }
        let mut materials = Vec::new();
        let mut densities = Vec::new();
        let mut elasticities = Vec::new();
        for (i, row) in file.material.into_iter().enumerate() {
            let f = |k: &str| format!("material[{i}].{k}");
            let req = |k: &str, v: Option<f64>| v.ok_or_else(|| Error::validation(f(k), "missing"));
            densities.push(Component {
                mean: finite(&f("density_mean_kg_m3"), req("density_mean_kg_m3", row.density_mean_kg_m3)?)?,
                sd: positive(&f("density_sd_kg_m3"), req("density_sd_kg_m3", row.density_sd_kg_m3)?)?,
            });
            elasticities.push(Component {
                mean: finite(&f("elasticity_mean_kpa"), req("elasticity_mean_kpa", row.elasticity_mean_kpa)?)?,
                sd: positive(&f("elasticity_sd_kpa"), req("elasticity_sd_kpa", row.elasticity_sd_kpa)?)?,
            });
            materials.push(row.name);
        }
        Self::new(categories, materials, volumes, densities, elasticities)
    }

    /// Serializes to the priors file format (canonical units).
    pub fn to_toml(&self) -> Result<String> {
        let file = PriorsFile {
            category: self
                .category_labels
                .iter()
                .zip(&self.volume_by_category)
                .map(|(name, c)| CategoryRow {
                    name: name.clone(),
                    volume_mean_cm3: Some(c.mean),
                    volume_sd_cm3: Some(c.sd),
                    volume_mean_m3: None,
                    volume_sd_m3: None,
                })
                .collect(),
            material: self
                .material_labels
                .iter()
                .enumerate()
                .map(|(i, name)| MaterialRow {
                    name: name.clone(),
                    density_mean_kg_m3: Some(self.density_by_material[i].mean),
                    density_sd_kg_m3: Some(self.density_by_material[i].sd),
                    elasticity_mean_kpa: Some(self.elasticity_by_material[i].mean),
                    elasticity_sd_kpa: Some(self.elasticity_by_material[i].sd),
                })
                .collect(),
        };
        toml::to_string(&file).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn defaults() -> Self {
        Self::parse(DEFAULT_PRIORS, Path::new("<default priors.toml>")).expect("shipped priors are valid")
    }
}

pub fn load_reference_tables(path: &Path) -> Result<ReferenceTables> {
    ReferenceTables::parse(&read(path)?, path)
}

// ---------------------------------------------------------------------------
// Actions

/// How a continuous action observes its target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Sensor {
    /// Reads the target property directly.
    Direct,
    /// Reads a mass in grams; converted to density through the volume belief.
    Mass { sigma_g: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ActionKind {
    Categorical {
        confusion: ConfusionMatrix,
    },
    Continuous {
        /// Measurement SD in target-node units.
        sigma: f64,
        sensor: Sensor,
        /// Readings above this (target-node units) are censored.
        censor_threshold: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpec {
    pub name: String,
    pub target: Node,
    #[serde(flatten)]
    pub kind: ActionKind,
}

impl ActionSpec {
    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, ActionKind::Categorical { .. })
    }

    pub fn confusion(&self) -> Option<&ConfusionMatrix> {
        match &self.kind {
            ActionKind::Categorical { confusion } => Some(confusion),
            ActionKind::Continuous { .. } => None,
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match self.kind {
            ActionKind::Continuous { sigma, .. } => Some(sigma),
            ActionKind::Categorical { .. } => None,
        }
    }

    pub fn censor_threshold(&self) -> Option<f64> {
        match self.kind {
            ActionKind::Continuous { censor_threshold, .. } => censor_threshold,
            ActionKind::Categorical { .. } => None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActionsFile {
    action: Vec<ActionRow>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActionRow {
    name: String,
    target: String,
    kind: String,
    accuracy: Option<f64>,
    confusion: Option<Vec<Vec<f64>>>,
    sensor: Option<String>,
    sigma_kpa: Option<f64>,
    sigma_kg_m3: Option<f64>,
    sigma_cm3: Option<f64>,
    mass_sigma_g: Option<f64>,
    censor_threshold_kpa: Option<f64>,
    censor_threshold_kg_m3: Option<f64>,
    censor_threshold_cm3: Option<f64>,
}

impl ActionRow {
    fn by_unit(&self, base: &str, node: Node) -> Result<Option<f64>> {
        let [kpa, kg, cm3] = match base {
            "sigma" => [self.sigma_kpa, self.sigma_kg_m3, self.sigma_cm3],
            _ => [self.censor_threshold_kpa, self.censor_threshold_kg_m3, self.censor_threshold_cm3],
        };
        let suffix = node.unit_suffix().unwrap_or_default();
        let mut found = None;
        for (unit, value) in [("kpa", kpa), ("kg_m3", kg), ("cm3", cm3)] {
            if let Some(v) = value {
                if unit != suffix {
                    return Err(Error::validation(
                        format!("action {}.{base}_{unit}", self.name),
                        format!("{} is measured in {}", node, node.unit()),
                    ));
                }
                found = Some(v);
            }
        }
        Ok(found)
    }
}

pub fn parse_action_specs(text: &str, origin: &Path, tables: &ReferenceTables) -> Result<Vec<ActionSpec>> {
    let file: ActionsFile = parse(text, origin)?;
    let mut actions: Vec<ActionSpec> = Vec::new();
    for row in file.action {
        let field = |k: &str| format!("action {}.{k}", row.name);
        if actions.iter().any(|a| a.name == row.name) {
            return Err(Error::validation(field("name"), "duplicate action name"));
        }
        let target: Node = row.target.parse()?;
        let kind = match row.kind.as_str() {
            "categorical" => {
                if !target.is_categorical() {
                    return Err(Error::validation(field("target"), format!("{target} is not categorical")));
                }
                let k = tables.cardinality(target);
                let confusion = match (row.accuracy, &row.confusion) {
                    (Some(acc), None) => build_default_confusion(acc, k)?,
                    (None, Some(rows)) => ConfusionMatrix::new(rows.clone())
                        .map_err(|e| Error::validation(field("confusion"), e.to_string()))?,
                    _ => return Err(Error::validation(field("confusion"), "give exactly one of accuracy or confusion")),
                };
                if confusion.rows() != k || confusion.cols() != k {
                    return Err(Error::validation(
                        field("confusion"),
                        format!("expected {k}x{k} for {target}, got {}x{}", confusion.rows(), confusion.cols()),
                    ));
                }
                ActionKind::Categorical { confusion }
            }
            "continuous" => {
                if target.is_categorical() {
                    return Err(Error::validation(field("target"), format!("{target} is not continuous")));
                }
                let sigma = row
                    .by_unit("sigma", target)?
                    .ok_or_else(|| Error::validation(field(&format!("sigma_{}", target.unit_suffix().unwrap_or(""))), "missing"))?;
                let sigma = positive(&field("sigma"), sigma)?;
                let sensor = match row.sensor.as_deref().unwrap_or("direct") {
                    "direct" => Sensor::Direct,
                    "mass" => {
                        if target != Node::Density {
                            return Err(Error::validation(field("sensor"), "mass sensor must target density"));
                        }
                        let sigma_g = row.mass_sigma_g.ok_or_else(|| Error::validation(field("mass_sigma_g"), "missing"))?;
                        Sensor::Mass {
                            sigma_g: positive(&field("mass_sigma_g"), sigma_g)?,
                        }
                    }
                    other => return Err(Error::validation(field("sensor"), format!("unknown sensor {other:?}"))),
                };
                let censor_threshold = row
                    .by_unit("censor_threshold", target)?
                    .map(|t| positive(&field("censor_threshold"), t))
                    .transpose()?;
                ActionKind::Continuous {
                    sigma,
                    sensor,
                    censor_threshold,
                }
            }
            other => return Err(Error::validation(field("kind"), format!("unknown kind {other:?}"))),
        };
        actions.push(ActionSpec {
            name: row.name,
            target,
            kind,
        });
    }
    if actions.is_empty() {
        return Err(Error::validation("action", "no actions defined"));
    }
    Ok(actions)
}

pub fn load_action_specs(path: &Path, tables: &ReferenceTables) -> Result<Vec<ActionSpec>> {
    parse_action_specs(&read(path)?, path, tables)
}

// ---------------------------------------------------------------------------
// Ground truth

/// An object the simulator can measure. Units: kPa, kg/m^3, cm^3, g.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthObject {
    pub name: String,
    pub category: String,
    pub material: String,
    pub elasticity: f64,
    pub density: f64,
    pub volume: f64,
    pub mass: f64,
}

impl GroundTruthObject {
    pub fn validate(&self, tables: &ReferenceTables) -> Result<()> {
        let field = |k: &str| format!("object {}.{k}", self.name);
        if !tables.category_labels().contains(&self.category) {
            return Err(Error::UnknownLabel {
                node: "category".into(),
                label: self.category.clone(),
            });
        }
        if !tables.material_labels().contains(&self.material) {
            return Err(Error::UnknownLabel {
                node: "material".into(),
                label: self.material.clone(),
            });
        }
        positive(&field("elasticity_kpa"), self.elasticity)?;
        positive(&field("density_kg_m3"), self.density)?;
        positive(&field("volume_cm3"), self.volume)?;
        positive(&field("mass_g"), self.mass)?;
        let expected = self.density * self.volume / 1000.0;
        if (self.mass - expected).abs() > MASS_TOLERANCE * expected {
            return Err(Error::validation(
                field("mass_g"),
                format!("{} g is inconsistent with density x volume = {expected} g", self.mass),
            ));
        }
        Ok(())
    }

    /// True value of a continuous property in canonical units.
    pub fn property(&self, node: Node) -> Option<f64> {
        match node {
            Node::Elasticity => Some(self.elasticity),
            Node::Density => Some(self.density),
            Node::Volume => Some(self.volume),
            _ => None,
        }
    }

    pub fn label(&self, node: Node) -> Option<&str> {
        match node {
            Node::Category => Some(&self.category),
            Node::Material => Some(&self.material),
            _ => None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    object: Vec<ObjectRow>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectRow {
    name: String,
    category: String,
    material: String,
    elasticity_kpa: f64,
    density_kg_m3: f64,
    volume_cm3: Option<f64>,
    volume_m3: Option<f64>,
    mass_g: Option<f64>,
    mass_kg: Option<f64>,
}

pub fn parse_object_catalog(text: &str, origin: &Path, tables: &ReferenceTables) -> Result<Vec<GroundTruthObject>> {
    let file: CatalogFile = parse(text, origin)?;
    let mut catalog: Vec<GroundTruthObject> = Vec::new();
    for row in file.object {
        let field = |k: &str| format!("object {}.{k}", row.name);
        let obj = GroundTruthObject {
            volume: one_of(&field("volume_cm3"), row.volume_cm3, row.volume_m3, CM3_PER_M3, "volume_m3")?,
            mass: one_of(&field("mass_g"), row.mass_g, row.mass_kg, 1000.0, "mass_kg")?,
            name: row.name,
            category: row.category,
            material: row.material,
            elasticity: row.elasticity_kpa,
            density: row.density_kg_m3,
        };
        if catalog.iter().any(|o| o.name == obj.name) {
            return Err(Error::validation(format!("object {}", obj.name), "duplicate name"));
        }
        obj.validate(tables)?;
        catalog.push(obj);
    }
    Ok(catalog)
}

pub fn load_object_catalog(path: &Path, tables: &ReferenceTables) -> Result<Vec<GroundTruthObject>> {
    parse_object_catalog(&read(path)?, path, tables)
}

// ---------------------------------------------------------------------------
// Edge translations

/// Directed translation between the label spaces of two adjacent nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeTranslation {
    pub from: Node,
    pub to: Node,
    pub matrix: ConfusionMatrix,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgesFile {
    edge: Vec<EdgeRow>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRow {
    from: String,
    to: String,
    matrix: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    identity: bool,
    reverse: Option<Vec<Vec<f64>>>,
}

/// Parses edge translations and completes them to both directions of every
/// tree edge. A missing reverse direction is the row-normalized transpose.
pub fn parse_edge_translations(text: &str, origin: &Path, tables: &ReferenceTables) -> Result<Vec<EdgeTranslation>> {
    let file: EdgesFile = parse(text, origin)?;
    let mut given: Vec<EdgeTranslation> = Vec::new();
    let mut push = |t: EdgeTranslation| -> Result<()> {
        let field = format!("edge {}->{}", t.from, t.to);
        if !t.from.is_adjacent(t.to) {
            return Err(Error::validation(field, "not an edge of the network"));
        }
        let (r, c) = (tables.cardinality(t.from), tables.cardinality(t.to));
        if t.matrix.rows() != r || t.matrix.cols() != c {
            return Err(Error::validation(
                field,
                format!("expected {r}x{c}, got {}x{}", t.matrix.rows(), t.matrix.cols()),
            ));
        }
        if given.iter().any(|g| g.from == t.from && g.to == t.to) {
            return Err(Error::validation(field, "given twice"));
        }
        given.push(t);
        Ok(())
    };
    for row in file.edge {
        let from: Node = row.from.parse()?;
        let to: Node = row.to.parse()?;
        let field = format!("edge {from}->{to}");
        let matrix = match (row.matrix, row.identity) {
            (Some(m), false) => ConfusionMatrix::new(m).map_err(|e| Error::validation(&field, e.to_string()))?,
            (None, true) => {
                let k = tables.cardinality(from);
                if k != tables.cardinality(to) {
                    return Err(Error::validation(field, "identity needs equal cardinalities"));
                }
                ConfusionMatrix::identity(k)
            }
            _ => return Err(Error::validation(field, "give exactly one of matrix or identity = true")),
        };
        push(EdgeTranslation { from, to, matrix })?;
        if let Some(rev) = row.reverse {
            let matrix = ConfusionMatrix::new(rev).map_err(|e| Error::validation(format!("edge {to}->{from}"), e.to_string()))?;
            push(EdgeTranslation { from: to, to: from, matrix })?;
        }
    }

    let mut complete = Vec::with_capacity(2 * TREE_EDGES.len());
    for (a, b) in TREE_EDGES {
        let forward = given.iter().find(|t| t.from == a && t.to == b).cloned();
        let backward = given.iter().find(|t| t.from == b && t.to == a).cloned();
        let (forward, backward) = match (forward, backward) {
            (Some(f), Some(r)) => (f, r),
            (Some(f), None) => {
                let r = EdgeTranslation {
                    from: b,
                    to: a,
                    matrix: f.matrix.row_normalized_transpose(),
                };
                (f, r)
            }
            (None, Some(r)) => {
                let f = EdgeTranslation {
                    from: a,
                    to: b,
                    matrix: r.matrix.row_normalized_transpose(),
                };
                (f, r)
            }
            (None, None) => {
                return Err(Error::validation(format!("edge {a}-{b}"), "missing edge"));
            }
        };
        complete.push(forward);
        complete.push(backward);
    }
    Ok(complete)
}

pub fn load_edge_translations(path: &Path, tables: &ReferenceTables) -> Result<Vec<EdgeTranslation>> {
    parse_edge_translations(&read(path)?, path, tables)
}

// ---------------------------------------------------------------------------
// Grids

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub elasticity: Grid,
    pub density: Grid,
    pub volume: Grid,
}

impl GridConfig {
    pub fn get(&self, node: Node) -> Option<Grid> {
        match node {
            Node::Elasticity => Some(self.elasticity),
            Node::Density => Some(self.density),
            Node::Volume => Some(self.volume),
            _ => None,
        }
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let file: GridsFile = parse(text, origin)?;
        Ok(Self {
            elasticity: Grid::new(file.elasticity.lower_kpa, file.elasticity.upper_kpa, file.elasticity.bins)?,
            density: Grid::new(file.density.lower_kg_m3, file.density.upper_kg_m3, file.density.bins)?,
            volume: Grid::new(file.volume.lower_cm3, file.volume.upper_cm3, file.volume.bins)?,
        })
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self::parse(DEFAULT_GRIDS, Path::new("<default grids.toml>")).expect("shipped grids are valid")
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridsFile {
    elasticity: ElasticityGridRow,
    density: DensityGridRow,
    volume: VolumeGridRow,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ElasticityGridRow {
    lower_kpa: f64,
    upper_kpa: f64,
    bins: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityGridRow {
    lower_kg_m3: f64,
    upper_kg_m3: f64,
    bins: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VolumeGridRow {
    lower_cm3: f64,
    upper_cm3: f64,
    bins: usize,
}

// ---------------------------------------------------------------------------
// Bundle

/// Everything needed to build networks and run experiments. Immutable once loaded.
#[derive(Debug, Clone)]
pub struct ReferenceData {
    pub tables: ReferenceTables,
    pub actions: Vec<ActionSpec>,
    pub translations: Vec<EdgeTranslation>,
    pub catalog: Vec<GroundTruthObject>,
    pub grids: GridConfig,
}

impl ReferenceData {
    /// The data files shipped with the crate.
    pub fn defaults() -> Self {
        Self::from_texts(DEFAULT_PRIORS, DEFAULT_ACTIONS, DEFAULT_EDGES, DEFAULT_CATALOG, DEFAULT_GRIDS, Path::new("<defaults>"))
            .expect("shipped data files are valid")
    }

    /// Loads from a directory; any of the five files that is absent falls
    /// back to the shipped default.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let text = |name: &str, default: &str| -> Result<(String, PathBuf)> {
            let path = dir.join(name);
            if path.exists() {
                Ok((read(&path)?, path))
            } else {
                Ok((default.to_string(), PathBuf::from(format!("<default {name}>"))))
            }
        };
        let (priors, p_path) = text(PRIORS_FILE, DEFAULT_PRIORS)?;
        let (actions, a_path) = text(ACTIONS_FILE, DEFAULT_ACTIONS)?;
        let (edges, e_path) = text(EDGES_FILE, DEFAULT_EDGES)?;
        let (catalog, c_path) = text(CATALOG_FILE, DEFAULT_CATALOG)?;
        let (grids, g_path) = text(GRIDS_FILE, DEFAULT_GRIDS)?;
        let tables = ReferenceTables::parse(&priors, &p_path)?;
        Ok(Self {
            actions: parse_action_specs(&actions, &a_path, &tables)?,
            translations: parse_edge_translations(&edges, &e_path, &tables)?,
            catalog: parse_object_catalog(&catalog, &c_path, &tables)?,
            grids: GridConfig::parse(&grids, &g_path)?,
            tables,
        })
    }

    fn from_texts(priors: &str, actions: &str, edges: &str, catalog: &str, grids: &str, origin: &Path) -> Result<Self> {
        let tables = ReferenceTables::parse(priors, origin)?;
        Ok(Self {
            actions: parse_action_specs(actions, origin, &tables)?,
            translations: parse_edge_translations(edges, origin, &tables)?,
            catalog: parse_object_catalog(catalog, origin, &tables)?,
            grids: GridConfig::parse(grids, origin)?,
            tables,
        })
    }

    pub fn object(&self, name: &str) -> Option<&GroundTruthObject> {
        self.catalog.iter().find(|o| o.name == name)
    }
}
