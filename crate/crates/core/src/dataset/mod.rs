//! Data model: model catalog, concept schema, labeled query records,
//! dataset files, cost vectors, complexity-label derivation, and splits.
//!
//! A dataset on disk is a directory holding two files:
//!
//! - `header.json` — the [`ConceptSchema`] and [`ModelCatalog`] the records
//!   were labeled against, so datasets are self-describing;
//! - `records.jsonl` — one JSON [`QueryRecord`] per line.

mod generator;

pub use generator::{
    synthesize_dataset, Activation, Affinity, EmbeddingMap, GeneratorSpec, GroupSpec, ModelSpec,
    PlantedTruth, SyntheticDataset,
};

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HEADER_FILE: &str = "header.json";
pub const RECORDS_FILE: &str = "records.jsonl";

// ---------------------------------------------------------------------------
// Model catalog
// ---------------------------------------------------------------------------

/// One routable model: pricing, average response length, and whether it is
/// a reasoning model (used when deriving complexity labels).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub name: String,
    /// Currency per 1M input tokens.
    pub input_price: f64,
    /// Currency per 1M output tokens.
    pub output_price: f64,
    pub avg_output_tokens: f64,
    pub is_reasoning: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCatalog {
    pub models: Vec<ModelEntry>,
}

impl ModelCatalog {
    pub fn new(models: Vec<ModelEntry>) -> Result<Self> {
        let catalog = Self { models };
        catalog.validate()?;
        Ok(catalog)
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::Config("catalog has no models".into()));
        }
        let mut names = HashSet::new();
        for entry in &self.models {
            if !names.insert(entry.name.as_str()) {
                return Err(Error::Config(format!(
                    "duplicate model name '{}' in catalog",
                    entry.name
                )));
            }
            if entry.input_price <= 0.0 || entry.output_price <= 0.0 {
                return Err(Error::Config(format!(
                    "model '{}' has non-positive pricing",
                    entry.name
                )));
            }
            if entry.avg_output_tokens <= 0.0 {
                return Err(Error::Config(format!(
                    "model '{}' has non-positive avg_output_tokens",
                    entry.name
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.models.iter().map(|m| m.name.as_str()).collect()
    }

    pub fn reasoning_indices(&self) -> Vec<usize> {
        self.models
            .iter()
            .enumerate()
            .filter(|(_, m)| m.is_reasoning)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn non_reasoning_indices(&self) -> Vec<usize> {
        self.models
            .iter()
            .enumerate()
            .filter(|(_, m)| !m.is_reasoning)
            .map(|(i, _)| i)
            .collect()
    }

    /// Raw per-model cost of answering a query with `input_tokens` tokens:
    /// `input_tokens * input_price / 1e6 + avg_output_tokens * output_price / 1e6`.
    pub fn raw_costs(&self, input_tokens: u64) -> Vec<f64> {
        self.models
            .iter()
            .map(|m| {
                input_tokens as f64 * m.input_price / 1e6
                    + m.avg_output_tokens * m.output_price / 1e6
            })
            .collect()
    }

    /// Index of the model with the lowest raw cost for a typical query
    /// (tie broken by catalog order).
    pub fn cheapest_index(&self, input_tokens: u64) -> usize {
        argmin(&self.raw_costs(input_tokens))
    }
}

pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Concept schema
// ---------------------------------------------------------------------------

/// The six recognized concept groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupName {
    Tasks,
    Domains,
    Libraries,
    NaturalLanguages,
    ProgrammingLanguages,
    Complexity,
}

impl GroupName {
    pub const ALL: [GroupName; 6] = [
        GroupName::Tasks,
        GroupName::Domains,
        GroupName::Libraries,
        GroupName::NaturalLanguages,
        GroupName::ProgrammingLanguages,
        GroupName::Complexity,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            GroupName::Tasks => "tasks",
            GroupName::Domains => "domains",
            GroupName::Libraries => "libraries",
            GroupName::NaturalLanguages => "natural_languages",
            GroupName::ProgrammingLanguages => "programming_languages",
            GroupName::Complexity => "complexity",
        }
    }
}

impl fmt::Display for GroupName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GroupName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GroupName::ALL
            .iter()
            .find(|g| g.as_str() == s)
            .copied()
            .ok_or_else(|| Error::Schema(format!("unknown concept group '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    Binary,
    Continuous,
}

/// A named, contiguous slice of the concept vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptGroup {
    pub name: GroupName,
    pub labels: Vec<String>,
    pub kind: GroupKind,
}

/// Ordered concept groups; index ranges are contiguous, disjoint, and cover
/// `[0, width)` in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptSchema {
    pub groups: Vec<ConceptGroup>,
}

/// Label names of the continuous complexity group, in storage order.
pub const COMPLEXITY_LABELS: [&str; 3] = ["reasoning", "general", "total"];

impl ConceptSchema {
    pub fn new(groups: Vec<ConceptGroup>) -> Result<Self> {
        let schema = Self { groups };
        schema.validate()?;
        Ok(schema)
    }

    /// Structural checks that hold for any schema, including ablated ones
    /// (which may lack the complexity group).
    pub fn validate(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::Schema("schema has no concept groups".into()));
        }
        let mut seen = HashSet::new();
        for group in &self.groups {
            if !seen.insert(group.name) {
                return Err(Error::Schema(format!(
                    "duplicate concept group '{}'",
                    group.name
                )));
            }
            if group.labels.is_empty() {
                return Err(Error::Schema(format!(
                    "concept group '{}' has no labels",
                    group.name
                )));
            }
            let is_complexity = group.name == GroupName::Complexity;
            let is_continuous = group.kind == GroupKind::Continuous;
            if is_complexity != is_continuous {
                return Err(Error::Schema(format!(
                    "group '{}': exactly the complexity group is continuous",
                    group.name
                )));
            }
            if is_complexity {
                let expected: Vec<&str> = COMPLEXITY_LABELS.to_vec();
                let got: Vec<&str> = group.labels.iter().map(String::as_str).collect();
                if got != expected {
                    return Err(Error::Schema(format!(
                        "complexity group labels must be {expected:?}, got {got:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// As [`Self::validate`], but additionally requires the complexity
    /// group to be present. Full datasets must satisfy this.
    pub fn validate_full(&self) -> Result<()> {
        self.validate()?;
        if self.group_range(GroupName::Complexity).is_none() {
            return Err(Error::Schema(
                "schema is missing the complexity group".into(),
            ));
        }
        Ok(())
    }

    /// Total concept-vector width.
    pub fn width(&self) -> usize {
        self.groups.iter().map(|g| g.labels.len()).sum()
    }

    /// Index range of `name` within the concept vector.
    pub fn group_range(&self, name: GroupName) -> Option<Range<usize>> {
        let mut offset = 0;
        for group in &self.groups {
            let next = offset + group.labels.len();
            if group.name == name {
                return Some(offset..next);
            }
            offset = next;
        }
        None
    }

    pub fn group(&self, name: GroupName) -> Option<&ConceptGroup> {
        self.groups.iter().find(|g| g.name == name)
    }

    pub fn binary_groups(&self) -> impl Iterator<Item = &ConceptGroup> {
        self.groups.iter().filter(|g| g.kind == GroupKind::Binary)
    }

    /// Index of `label` within `group`, relative to the whole vector.
    pub fn label_index(&self, name: GroupName, label: &str) -> Option<usize> {
        let range = self.group_range(name)?;
        let group = self.group(name)?;
        group
            .labels
            .iter()
            .position(|l| l == label)
            .map(|i| range.start + i)
    }

    /// A copy of the schema with `name` removed. Errors if the group is
    /// absent or if removing it would empty the schema.
    pub fn without_group(&self, name: GroupName) -> Result<ConceptSchema> {
        if self.group_range(name).is_none() {
            return Err(Error::Schema(format!("schema has no group '{name}'")));
        }
        let groups: Vec<ConceptGroup> = self
            .groups
            .iter()
            .filter(|g| g.name != name)
            .cloned()
            .collect();
        if groups.is_empty() {
            return Err(Error::Config(
                "cannot remove the only remaining concept group".into(),
            ));
        }
        ConceptSchema::new(groups)
    }
}

// ---------------------------------------------------------------------------
// Query records
// ---------------------------------------------------------------------------

/// One labeled routing example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub id: String,
    /// Pre-computed d-dimensional query embedding.
    pub embedding: Vec<f64>,
    /// Concept vector of schema width: binary groups in {0,1},
    /// complexity ratios in [0,1].
    pub concepts: Vec<f64>,
    /// Per-model correctness bits.
    pub correctness: Vec<u8>,
    pub input_tokens: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<String>,
}

impl QueryRecord {
    pub fn validate_against(&self, schema: &ConceptSchema, catalog: &ModelCatalog) -> Result<()> {
        if self.concepts.len() != schema.width() {
            return Err(Error::Schema(format!(
                "record '{}': {} concepts but schema width is {}",
                self.id,
                self.concepts.len(),
                schema.width()
            )));
        }
        if self.correctness.len() != catalog.len() {
            return Err(Error::Schema(format!(
                "record '{}': {} correctness bits but catalog has {} models",
                self.id,
                self.correctness.len(),
                catalog.len()
            )));
        }
        if self.input_tokens == 0 {
            return Err(Error::Value(format!(
                "record '{}': input_tokens must be at least 1",
                self.id
            )));
        }
        for &bit in &self.correctness {
            if bit > 1 {
                return Err(Error::Value(format!(
                    "record '{}': correctness entries must be 0 or 1",
                    self.id
                )));
            }
        }
        for group in &schema.groups {
            let range = schema.group_range(group.name).expect("group exists");
            for idx in range {
                let v = self.concepts[idx];
                match group.kind {
                    GroupKind::Binary if v != 0.0 && v != 1.0 => {
                        return Err(Error::Value(format!(
                            "record '{}': binary concept {idx} is {v}, expected 0 or 1",
                            self.id
                        )));
                    }
                    GroupKind::Continuous if !(0.0..=1.0).contains(&v) => {
                        return Err(Error::Value(format!(
                            "record '{}': complexity concept {idx} is {v}, outside [0,1]",
                            self.id
                        )));
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Label derivation and costs
// ---------------------------------------------------------------------------

/// Complexity ratios derived from correctness: fraction of reasoning models
/// that failed, fraction of non-reasoning models that failed, and fraction
/// of all models that failed — in that order.
pub fn derive_complexity_labels(correctness: &[u8], catalog: &ModelCatalog) -> Result<[f64; 3]> {
    if correctness.len() != catalog.len() {
        return Err(Error::Shape(format!(
            "{} correctness bits vs {} catalog models",
            correctness.len(),
            catalog.len()
        )));
    }
    let reasoning = catalog.reasoning_indices();
    let general = catalog.non_reasoning_indices();
    if reasoning.is_empty() || general.is_empty() {
        return Err(Error::Config(
            "complexity labels need at least one reasoning and one non-reasoning model".into(),
        ));
    }
    let failure_rate = |indices: &[usize]| {
        indices.iter().filter(|&&i| correctness[i] == 0).count() as f64 / indices.len() as f64
    };
    let total =
        correctness.iter().filter(|&&c| c == 0).count() as f64 / correctness.len() as f64;
    Ok([failure_rate(&reasoning), failure_rate(&general), total])
}

/// Raw per-model cost vector for one record.
pub fn cost_vector(record: &QueryRecord, catalog: &ModelCatalog) -> Vec<f64> {
    catalog.raw_costs(record.input_tokens)
}

/// Per-query max-normalization: each entry divided by the vector maximum,
/// so the costliest model maps to exactly 1.
pub fn normalize_costs(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(Error::Value("cannot normalize an empty cost vector".into()));
    }
    if raw.iter().any(|&c| c <= 0.0 || !c.is_finite()) {
        return Err(Error::Value(
            "cost entries must be positive and finite".into(),
        ));
    }
    let max = raw.iter().cloned().fold(f64::MIN, f64::max);
    Ok(raw.iter().map(|&c| c / max).collect())
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

/// Disjoint train/validation/test index lists covering a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// Deterministic 80/10/10 split. Validation and test sizes are
/// `floor(n/10)` each; the remainder goes to train.
pub fn split_dataset(n_records: usize, seed: u64) -> Result<DatasetSplit> {
    if n_records < 10 {
        return Err(Error::Size(format!(
            "need at least 10 records to split, got {n_records}"
        )));
    }
    let mut indices: Vec<usize> = (0..n_records).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);

    let n_val = n_records / 10;
    let n_test = n_records / 10;
    let n_train = n_records - n_val - n_test;

    let train = indices[..n_train].to_vec();
    let validation = indices[n_train..n_train + n_val].to_vec();
    let test = indices[n_train + n_val..].to_vec();
    Ok(DatasetSplit {
        train,
        validation,
        test,
        seed,
    })
}

// ---------------------------------------------------------------------------
// Dataset container and file IO
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub schema: ConceptSchema,
    pub catalog: ModelCatalog,
}

/// A fully validated in-memory dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub schema: ConceptSchema,
    pub catalog: ModelCatalog,
    pub records: Vec<QueryRecord>,
}

impl Dataset {
    pub fn new(
        schema: ConceptSchema,
        catalog: ModelCatalog,
        records: Vec<QueryRecord>,
    ) -> Result<Self> {
        schema.validate_full()?;
        catalog.validate()?;
        let mut ids = HashSet::new();
        let embedding_dim = records.first().map(|r| r.embedding.len());
        for record in &records {
            record.validate_against(&schema, &catalog)?;
            if Some(record.embedding.len()) != embedding_dim {
                return Err(Error::Schema(format!(
                    "record '{}': embedding has {} dims, dataset uses {}",
                    record.id,
                    record.embedding.len(),
                    embedding_dim.unwrap_or(0)
                )));
            }
            if !ids.insert(record.id.as_str()) {
                return Err(Error::Integrity(format!(
                    "duplicate record id '{}'",
                    record.id
                )));
            }
        }
        Ok(Self {
            schema,
            catalog,
            records,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn embedding_dim(&self) -> usize {
        self.records.first().map_or(0, |r| r.embedding.len())
    }

    /// A copy of the dataset with one concept group's indices stripped from
    /// the schema and every record. Used by ablation studies; the result may
    /// lack the complexity group, so it skips the full-schema check.
    pub fn without_group(&self, group: GroupName) -> Result<Dataset> {
        let reduced = self.schema.without_group(group)?;
        let range = self.schema.group_range(group).expect("checked above");
        let records = self
            .records
            .iter()
            .map(|r| {
                let mut record = r.clone();
                record.concepts = r
                    .concepts
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !range.contains(i))
                    .map(|(_, &v)| v)
                    .collect();
                record
            })
            .collect();
        Ok(Dataset {
            schema: reduced,
            catalog: self.catalog.clone(),
            records,
        })
    }

    /// Writes `header.json` and `records.jsonl` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let header = DatasetHeader {
            schema: self.schema.clone(),
            catalog: self.catalog.clone(),
        };
        let mut header_out = BufWriter::new(fs::File::create(dir.join(HEADER_FILE))?);
        serde_json::to_writer_pretty(&mut header_out, &header)?;
        header_out.write_all(b"\n")?;
        header_out.flush()?;

        let mut records_out = BufWriter::new(fs::File::create(dir.join(RECORDS_FILE))?);
        for record in &self.records {
            serde_json::to_writer(&mut records_out, record)?;
            records_out.write_all(b"\n")?;
        }
        records_out.flush()?;
        Ok(())
    }

    /// Loads and validates a dataset directory. Record order follows file
    /// position; malformed lines report their line number.
    pub fn load(dir: &Path) -> Result<Self> {
        let header_path = dir.join(HEADER_FILE);
        let header: DatasetHeader = serde_json::from_reader(BufReader::new(
            fs::File::open(&header_path).map_err(|e| {
                Error::Io(std::io::Error::new(
                    e.kind(),
                    format!("{}: {e}", header_path.display()),
                ))
            })?,
        ))?;
        let records = load_records(&dir.join(RECORDS_FILE))?;
        Dataset::new(header.schema, header.catalog, records)
    }
}

/// Parses a line-delimited record file. Does not validate against a schema;
/// [`Dataset::new`] does that.
pub fn load_records(path: &Path) -> Result<Vec<QueryRecord>> {
    let file = fs::File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: QueryRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn small_catalog() -> ModelCatalog {
        ModelCatalog::new(vec![
            ModelEntry {
                name: "deliberate-xl".into(),
                input_price: 15.0,
                output_price: 60.0,
                avg_output_tokens: 150.0,
                is_reasoning: true,
            },
            ModelEntry {
                name: "swift-mini".into(),
                input_price: 0.1,
                output_price: 0.4,
                avg_output_tokens: 200.0,
                is_reasoning: false,
            },
            ModelEntry {
                name: "steady-med".into(),
                input_price: 2.0,
                output_price: 8.0,
                avg_output_tokens: 190.0,
                is_reasoning: false,
            },
        ])
        .unwrap()
    }

    pub(crate) fn small_schema() -> ConceptSchema {
        ConceptSchema::new(vec![
            ConceptGroup {
                name: GroupName::Tasks,
                labels: vec!["generate".into(), "repair".into()],
                kind: GroupKind::Binary,
            },
            ConceptGroup {
                name: GroupName::ProgrammingLanguages,
                labels: vec!["rust".into(), "python".into()],
                kind: GroupKind::Binary,
            },
            ConceptGroup {
                name: GroupName::Complexity,
                labels: COMPLEXITY_LABELS.iter().map(|s| s.to_string()).collect(),
                kind: GroupKind::Continuous,
            },
        ])
        .unwrap()
    }

    fn record(id: &str) -> QueryRecord {
        QueryRecord {
            id: id.into(),
            embedding: vec![0.1, 0.2, 0.3],
            concepts: vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.5, 1.0 / 3.0],
            correctness: vec![1, 0, 1],
            input_tokens: 120,
            task: Some("generate".into()),
        }
    }

    #[test]
    fn schema_ranges_are_contiguous_and_cover_width() {
        let schema = small_schema();
        assert_eq!(schema.width(), 7);
        assert_eq!(schema.group_range(GroupName::Tasks), Some(0..2));
        assert_eq!(schema.group_range(GroupName::ProgrammingLanguages), Some(2..4));
        assert_eq!(schema.group_range(GroupName::Complexity), Some(4..7));
        assert_eq!(schema.group_range(GroupName::Domains), None);
    }

    #[test]
    fn schema_rejects_binary_complexity() {
        let result = ConceptSchema::new(vec![ConceptGroup {
            name: GroupName::Complexity,
            labels: COMPLEXITY_LABELS.iter().map(|s| s.to_string()).collect(),
            kind: GroupKind::Binary,
        }]);
        assert!(matches!(result, Err(Error::Schema(_))));
    }

    #[test]
    fn without_group_shrinks_width_and_keeps_order() {
        let schema = small_schema();
        let reduced = schema.without_group(GroupName::Tasks).unwrap();
        assert_eq!(reduced.width(), 5);
        assert_eq!(reduced.group_range(GroupName::ProgrammingLanguages), Some(0..2));
        assert!(schema.without_group(GroupName::Domains).is_err());
    }

    #[test]
    fn complexity_all_correct_is_zero() {
        let catalog = small_catalog();
        assert_eq!(
            derive_complexity_labels(&[1, 1, 1], &catalog).unwrap(),
            [0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn complexity_all_fail_is_one() {
        let catalog = small_catalog();
        assert_eq!(
            derive_complexity_labels(&[0, 0, 0], &catalog).unwrap(),
            [1.0, 1.0, 1.0]
        );
    }

    #[test]
    fn complexity_stated_ratios() {
        // 4 reasoning models with 1 failure, 12 non-reasoning with 6 failures.
        let mut models = Vec::new();
        for i in 0..16 {
            models.push(ModelEntry {
                name: format!("m{i}"),
                input_price: 1.0,
                output_price: 1.0,
                avg_output_tokens: 100.0,
                is_reasoning: i < 4,
            });
        }
        let catalog = ModelCatalog::new(models).unwrap();
        let mut correctness = vec![1u8; 16];
        correctness[0] = 0; // one reasoning failure
        for bit in correctness.iter_mut().take(10).skip(4) {
            *bit = 0; // six non-reasoning failures
        }
        let labels = derive_complexity_labels(&correctness, &catalog).unwrap();
        assert_eq!(labels, [0.25, 0.5, 0.4375]);
    }

    #[test]
    fn complexity_without_reasoning_stratum_is_config_error() {
        let catalog = ModelCatalog::new(vec![ModelEntry {
            name: "only".into(),
            input_price: 1.0,
            output_price: 1.0,
            avg_output_tokens: 1.0,
            is_reasoning: false,
        }])
        .unwrap();
        assert!(matches!(
            derive_complexity_labels(&[1], &catalog),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn cost_vector_matches_published_pricing_shape() {
        // 1M input tokens at 2.00/8.00 with avg output 188.71 tokens:
        // 2.00 + 188.71 * 8.00 / 1e6 = 2.0015097.
        let catalog = ModelCatalog::new(vec![ModelEntry {
            name: "mid".into(),
            input_price: 2.0,
            output_price: 8.0,
            avg_output_tokens: 188.71,
            is_reasoning: false,
        }])
        .unwrap();
        let costs = catalog.raw_costs(1_000_000);
        assert!((costs[0] - 2.00150968).abs() < 1e-6);
    }

    #[test]
    fn cost_with_one_input_token_is_output_dominated() {
        let catalog = small_catalog();
        let costs = catalog.raw_costs(1);
        for (m, &cost) in catalog.models.iter().zip(&costs) {
            let output_term = m.avg_output_tokens * m.output_price / 1e6;
            let input_term = m.input_price / 1e6;
            assert!((cost - output_term - input_term).abs() < 1e-15);
            assert!(output_term > input_term * 10.0);
        }
    }

    #[test]
    fn identical_pricing_yields_equal_costs() {
        let catalog = ModelCatalog::new(vec![
            ModelEntry {
                name: "a".into(),
                input_price: 1.5,
                output_price: 3.0,
                avg_output_tokens: 120.0,
                is_reasoning: false,
            },
            ModelEntry {
                name: "b".into(),
                input_price: 1.5,
                output_price: 3.0,
                avg_output_tokens: 120.0,
                is_reasoning: true,
            },
        ])
        .unwrap();
        let costs = catalog.raw_costs(777);
        assert_eq!(costs[0], costs[1]);
    }

    #[test]
    fn normalize_costs_examples() {
        assert_eq!(
            normalize_costs(&[2.0, 4.0, 8.0]).unwrap(),
            vec![0.25, 0.5, 1.0]
        );
        assert_eq!(normalize_costs(&[3.0, 3.0]).unwrap(), vec![1.0, 1.0]);
        assert_eq!(normalize_costs(&[5.0]).unwrap(), vec![1.0]);
        assert!(matches!(
            normalize_costs(&[1.0, -2.0]),
            Err(Error::Value(_))
        ));
    }

    #[test]
    fn split_ten_records_is_8_1_1() {
        let split = split_dataset(10, 0).unwrap();
        assert_eq!(split.train.len(), 8);
        assert_eq!(split.validation.len(), 1);
        assert_eq!(split.test.len(), 1);
    }

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let a = split_dataset(103, 42).unwrap();
        let b = split_dataset(103, 42).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<usize> = a
            .train
            .iter()
            .chain(&a.validation)
            .chain(&a.test)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..103).collect::<Vec<_>>());
    }

    #[test]
    fn split_full_scale_proportions() {
        let split = split_dataset(38_685, 7).unwrap();
        assert_eq!(split.validation.len(), 3_868);
        assert_eq!(split.test.len(), 3_868);
        assert_eq!(split.train.len(), 30_949);
        // Proportions within one record of 80/10/10.
        assert!((split.test.len() as f64 - 3_868.5).abs() <= 1.0);
    }

    #[test]
    fn split_too_small_is_size_error() {
        assert!(matches!(split_dataset(9, 0), Err(Error::Size(_))));
    }

    #[test]
    fn dataset_roundtrip_is_value_identical() {
        let dir = tempfile::tempdir().unwrap();
        let dataset = Dataset::new(
            small_schema(),
            small_catalog(),
            vec![record("a"), record("b")],
        )
        .unwrap();
        dataset.save(dir.path()).unwrap();
        let loaded = Dataset::load(dir.path()).unwrap();
        assert_eq!(loaded.schema, dataset.schema);
        assert_eq!(loaded.catalog, dataset.catalog);
        assert_eq!(loaded.records, dataset.records);
    }

    #[test]
    fn empty_record_file_loads_as_empty_list() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(RECORDS_FILE), "").unwrap();
        let records = load_records(&dir.path().join(RECORDS_FILE)).unwrap();
        assert!(records.is_empty());
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let good = serde_json::to_string(&record("a")).unwrap();
        fs::write(
            dir.path().join(RECORDS_FILE),
            format!("{good}\n{{not json}}\n"),
        )
        .unwrap();
        match load_records(&dir.path().join(RECORDS_FILE)) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn narrow_concepts_is_schema_error_naming_record() {
        let mut bad = record("bad-one");
        bad.concepts.pop();
        let err = Dataset::new(small_schema(), small_catalog(), vec![bad]).unwrap_err();
        match err {
            Error::Schema(msg) => assert!(msg.contains("bad-one")),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_id_is_integrity_error() {
        let err =
            Dataset::new(small_schema(), small_catalog(), vec![record("x"), record("x")])
                .unwrap_err();
        assert!(matches!(err, Error::Integrity(_)));
    }

    #[test]
    fn inconsistent_embedding_width_is_schema_error() {
        let mut second = record("y");
        second.embedding.push(0.0);
        let err = Dataset::new(small_schema(), small_catalog(), vec![record("x"), second])
            .unwrap_err();
        match err {
            Error::Schema(msg) => assert!(msg.contains("embedding")),
            other => panic!("expected schema error, got {other:?}"),
        }
    }
}
