//! Synthetic dataset generator with planted structure.
//!
//! Records are built concepts-first: binary concepts are sampled, a latent
//! difficulty is drawn, per-model success probabilities follow from planted
//! base rates, concept affinities, and difficulty sensitivity, correctness
//! is sampled from those probabilities, and the complexity concepts are then
//! *derived* from the sampled correctness (never planted independently).
//! Embeddings are noisy linear images of the final concept vector, so
//! concepts are recoverable by a trained head.
//!
//! The generator returns the planted ground truth (true per-record success
//! probabilities, the difficulty latent, and the affinity table) so tests
//! can check empirical behavior against an oracle.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{
    derive_complexity_labels, ConceptGroup, ConceptSchema, Dataset, GroupKind, GroupName,
    ModelCatalog, ModelEntry, QueryRecord, COMPLEXITY_LABELS,
};
use crate::error::{Error, Result};

/// How a binary group's labels activate per record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// Exactly one label active, chosen uniformly.
    OneHot,
    /// Each label active independently with probability `p`.
    Bernoulli { p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub name: GroupName,
    pub labels: Vec<String>,
    pub activation: Activation,
}

/// A planted success-probability adjustment: when this concept is active,
/// the model's success probability shifts by `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Affinity {
    pub group: GroupName,
    pub label: String,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    pub input_price: f64,
    pub output_price: f64,
    pub avg_output_tokens: f64,
    pub is_reasoning: bool,
    /// Success probability before adjustments.
    pub base_success: f64,
    /// How strongly the per-record difficulty latent subtracts from success.
    pub difficulty_sensitivity: f64,
    #[serde(default)]
    pub affinities: Vec<Affinity>,
}

/// How concept vectors map into embedding space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingMap {
    /// Embedding = concept vector (requires `embedding_dim == width`).
    Identity,
    /// A fixed seeded Gaussian matrix `(embedding_dim, width)`.
    RandomLinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n_records: usize,
    pub embedding_dim: usize,
    pub embedding_map: EmbeddingMap,
    /// Isotropic Gaussian noise added to every embedding dimension.
    pub embedding_noise: f64,
    /// Extra Gaussian noise applied to the complexity entries of the concept
    /// vector before mapping. Corrupts the embedding's complexity signal
    /// while leaving the stored gold labels intact.
    pub complexity_noise: f64,
    /// Input token counts are drawn log-uniformly from this range.
    pub input_token_range: (u64, u64),
    pub groups: Vec<GroupSpec>,
    pub models: Vec<ModelSpec>,
}

/// Oracle-side ground truth for a synthetic dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedTruth {
    /// True success probability of each model on each record.
    pub success_probs: Vec<Vec<f64>>,
    /// Per-record difficulty latent in [0, 1).
    pub difficulty: Vec<f64>,
    /// Planted affinities: (model index, group, label, delta).
    pub affinities: Vec<(usize, GroupName, String, f64)>,
}

impl PlantedTruth {
    /// Model with the largest planted boost on `(group, label)`, if any.
    pub fn top_specialist(&self, group: GroupName, label: &str) -> Option<usize> {
        self.affinities
            .iter()
            .filter(|(_, g, l, delta)| *g == group && l == label && *delta > 0.0)
            .max_by(|a, b| a.3.partial_cmp(&b.3).expect("finite deltas"))
            .map(|(model, _, _, _)| *model)
    }

    /// Every model with a positive planted boost on `(group, label)`,
    /// strongest first.
    pub fn specialists(&self, group: GroupName, label: &str) -> Vec<usize> {
        let mut boosted: Vec<(usize, f64)> = self
            .affinities
            .iter()
            .filter(|(_, g, l, delta)| *g == group && l == label && *delta > 0.0)
            .map(|(model, _, _, delta)| (*model, *delta))
            .collect();
        boosted.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite deltas"));
        boosted.into_iter().map(|(model, _)| model).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub dataset: Dataset,
    pub truth: PlantedTruth,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_records == 0 {
            return Err(Error::Config("n_records must be positive".into()));
        }
        if self.groups.is_empty() {
            return Err(Error::Config("generator needs at least one concept group".into()));
        }
        if self.models.len() < 2 {
            return Err(Error::Config("generator needs at least two models".into()));
        }
        if self.groups.iter().any(|g| g.name == GroupName::Complexity) {
            return Err(Error::Config(
                "complexity is derived from correctness and cannot be declared as a group".into(),
            ));
        }
        if !self.models.iter().any(|m| m.is_reasoning)
            || !self.models.iter().any(|m| !m.is_reasoning)
        {
            return Err(Error::Config(
                "generator needs at least one reasoning and one non-reasoning model".into(),
            ));
        }
        let (lo, hi) = self.input_token_range;
        if lo == 0 || hi < lo {
            return Err(Error::Config(format!(
                "invalid input token range ({lo}, {hi})"
            )));
        }
        if self.embedding_noise < 0.0 || self.complexity_noise < 0.0 {
            return Err(Error::Config("noise levels must be non-negative".into()));
        }
        let schema = self.schema()?;
        if self.embedding_map == EmbeddingMap::Identity && self.embedding_dim != schema.width() {
            return Err(Error::Config(format!(
                "identity embedding map needs embedding_dim == schema width ({} != {})",
                self.embedding_dim,
                schema.width()
            )));
        }
        for group in &self.groups {
            if let Activation::Bernoulli { p } = group.activation {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::Config(format!(
                        "group '{}': Bernoulli p {p} outside [0,1]",
                        group.name
                    )));
                }
            }
        }
        for model in &self.models {
            if !(0.0..=1.0).contains(&model.base_success) {
                return Err(Error::Config(format!(
                    "model '{}': base_success outside [0,1]",
                    model.name
                )));
            }
            for affinity in &model.affinities {
                if affinity.group == GroupName::Complexity {
                    return Err(Error::Config(format!(
                        "model '{}': affinities on the complexity group are not allowed",
                        model.name
                    )));
                }
                if schema.label_index(affinity.group, &affinity.label).is_none() {
                    return Err(Error::Config(format!(
                        "model '{}': affinity on unknown concept {}/{}",
                        model.name, affinity.group, affinity.label
                    )));
                }
            }
        }
        Ok(())
    }

    /// The concept schema this spec generates: declared binary groups in
    /// order, with the derived complexity group appended.
    pub fn schema(&self) -> Result<ConceptSchema> {
        let mut groups: Vec<ConceptGroup> = self
            .groups
            .iter()
            .map(|g| ConceptGroup {
                name: g.name,
                labels: g.labels.clone(),
                kind: GroupKind::Binary,
            })
            .collect();
        groups.push(ConceptGroup {
            name: GroupName::Complexity,
            labels: COMPLEXITY_LABELS.iter().map(|s| s.to_string()).collect(),
            kind: GroupKind::Continuous,
        });
        ConceptSchema::new(groups)
    }

    pub fn catalog(&self) -> Result<ModelCatalog> {
        ModelCatalog::new(
            self.models
                .iter()
                .map(|m| ModelEntry {
                    name: m.name.clone(),
                    input_price: m.input_price,
                    output_price: m.output_price,
                    avg_output_tokens: m.avg_output_tokens,
                    is_reasoning: m.is_reasoning,
                })
                .collect(),
        )
    }

    /// Returns a copy with the complexity embedding channels corrupted by
    /// `noise`. Used to study intervention on poorly predicted complexity.
    pub fn with_complexity_noise(mut self, noise: f64) -> Self {
        self.complexity_noise = noise;
        self
    }

    /// The bundled six-model spec: four programming-language specialists,
    /// one expensive difficulty-robust reasoning model, one cheap
    /// generalist. The `domains` group has no planted effect on any model.
    pub fn standard(n_records: usize) -> Self {
        let spec_price = (1.5, 6.0);
        let specialist = |name: &str, language: &str| ModelSpec {
            name: name.into(),
            input_price: spec_price.0,
            output_price: spec_price.1,
            avg_output_tokens: 250.0,
            is_reasoning: false,
            base_success: 0.30,
            difficulty_sensitivity: 0.55,
            affinities: vec![Affinity {
                group: GroupName::ProgrammingLanguages,
                label: language.into(),
                delta: 0.62,
            }],
        };
        GeneratorSpec {
            n_records,
            embedding_dim: 64,
            embedding_map: EmbeddingMap::RandomLinear,
            embedding_noise: 0.05,
            complexity_noise: 0.0,
            input_token_range: (50, 2000),
            groups: vec![
                GroupSpec {
                    name: GroupName::Tasks,
                    labels: vec![
                        "generate".into(),
                        "repair".into(),
                        "explain".into(),
                        "predict".into(),
                    ],
                    activation: Activation::OneHot,
                },
                GroupSpec {
                    name: GroupName::Domains,
                    labels: vec![
                        "general".into(),
                        "data".into(),
                        "systems".into(),
                        "web".into(),
                    ],
                    activation: Activation::OneHot,
                },
                GroupSpec {
                    name: GroupName::Libraries,
                    labels: vec![
                        "stdlib".into(),
                        "numerics".into(),
                        "network".into(),
                        "crypto".into(),
                        "graphics".into(),
                    ],
                    activation: Activation::Bernoulli { p: 0.25 },
                },
                GroupSpec {
                    name: GroupName::NaturalLanguages,
                    labels: vec!["english".into(), "spanish".into(), "mandarin".into()],
                    activation: Activation::OneHot,
                },
                GroupSpec {
                    name: GroupName::ProgrammingLanguages,
                    labels: vec![
                        "rust".into(),
                        "python".into(),
                        "typescript".into(),
                        "julia".into(),
                        "php".into(),
                    ],
                    activation: Activation::OneHot,
                },
            ],
            models: vec![
                ModelSpec {
                    name: "apex-reasoner".into(),
                    input_price: 15.0,
                    output_price: 60.0,
                    avg_output_tokens: 150.0,
                    is_reasoning: true,
                    base_success: 0.62,
                    difficulty_sensitivity: 0.12,
                    affinities: vec![Affinity {
                        group: GroupName::Libraries,
                        label: "crypto".into(),
                        delta: 0.06,
                    }],
                },
                specialist("ferris-coder", "rust"),
                specialist("serpent-coder", "python"),
                specialist("gradual-coder", "typescript"),
                specialist("fresse-coder", "julia"),
                ModelSpec {
                    name: "frugal-generalist".into(),
                    input_price: 0.10,
                    output_price: 0.40,
                    avg_output_tokens: 220.0,
                    is_reasoning: false,
                    base_success: 0.55,
                    difficulty_sensitivity: 0.45,
                    affinities: vec![Affinity {
                        group: GroupName::NaturalLanguages,
                        label: "mandarin".into(),
                        delta: -0.08,
                    }],
                },
            ],
        }
    }

    /// A small spec built for counterfactual language-flip studies: three
    /// languages with two sharply separated specialists each, plus one
    /// difficulty-driven reasoning model. Flipping the language concept
    /// moves probability mass decisively toward the target language's
    /// specialist pair.
    pub fn language_specialists(n_records: usize) -> Self {
        let specialist = |name: &str, language: &str, price: f64| ModelSpec {
            name: name.into(),
            input_price: price,
            output_price: 4.0 * price,
            avg_output_tokens: 200.0,
            is_reasoning: false,
            base_success: 0.02,
            difficulty_sensitivity: 0.0,
            affinities: vec![Affinity {
                group: GroupName::ProgrammingLanguages,
                label: language.into(),
                delta: 0.95,
            }],
        };
        GeneratorSpec {
            n_records,
            embedding_dim: 16,
            embedding_map: EmbeddingMap::RandomLinear,
            embedding_noise: 0.02,
            complexity_noise: 0.0,
            input_token_range: (50, 2000),
            groups: vec![
                GroupSpec {
                    name: GroupName::Tasks,
                    labels: vec!["generate".into(), "repair".into()],
                    activation: Activation::OneHot,
                },
                GroupSpec {
                    name: GroupName::NaturalLanguages,
                    labels: vec!["english".into(), "spanish".into()],
                    activation: Activation::OneHot,
                },
                GroupSpec {
                    name: GroupName::Libraries,
                    labels: vec!["stdlib".into(), "network".into()],
                    activation: Activation::Bernoulli { p: 0.2 },
                },
                GroupSpec {
                    name: GroupName::ProgrammingLanguages,
                    labels: vec!["rust".into(), "python".into(), "php".into()],
                    activation: Activation::OneHot,
                },
            ],
            models: vec![
                ModelSpec {
                    name: "patient-thinker".into(),
                    input_price: 10.0,
                    output_price: 40.0,
                    avg_output_tokens: 160.0,
                    is_reasoning: true,
                    base_success: 0.90,
                    difficulty_sensitivity: 0.85,
                    affinities: vec![],
                },
                specialist("rust-expert", "rust", 2.0),
                specialist("rust-sidekick", "rust", 1.5),
                specialist("python-expert", "python", 2.0),
                specialist("python-sidekick", "python", 1.5),
                specialist("php-expert", "php", 2.0),
                specialist("php-sidekick", "php", 1.5),
            ],
        }
    }
}

/// Generates a dataset plus its planted ground truth. Deterministic given
/// `(spec, seed)`.
pub fn synthesize_dataset(spec: &GeneratorSpec, seed: u64) -> Result<SyntheticDataset> {
    spec.validate()?;
    let schema = spec.schema()?;
    let catalog = spec.catalog()?;
    let width = schema.width();
    let complexity_range = schema
        .group_range(GroupName::Complexity)
        .expect("generator schema always has complexity");

    // Separate streams: the embedding map must not depend on n_records.
    let mut map_rng = ChaCha8Rng::seed_from_u64(seed);
    map_rng.set_stream(1);
    let map = match spec.embedding_map {
        EmbeddingMap::Identity => None,
        EmbeddingMap::RandomLinear => {
            let scale = 1.0 / (width as f64).sqrt();
            let mut matrix = vec![0.0; spec.embedding_dim * width];
            for entry in matrix.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut map_rng);
                *entry = z * scale;
            }
            Some(matrix)
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (token_lo, token_hi) = spec.input_token_range;
    let ln_lo = (token_lo as f64).ln();
    let ln_hi = (token_hi as f64).ln();

    let mut records = Vec::with_capacity(spec.n_records);
    let mut success_probs = Vec::with_capacity(spec.n_records);
    let mut difficulty = Vec::with_capacity(spec.n_records);

    for idx in 0..spec.n_records {
        // 1. Binary concepts.
        let mut concepts = vec![0.0; width];
        let mut task_tag = None;
        for group in &spec.groups {
            let range = schema.group_range(group.name).expect("declared group");
            match group.activation {
                Activation::OneHot => {
                    let pick = rng.random_range(0..group.labels.len());
                    concepts[range.start + pick] = 1.0;
                    if group.name == GroupName::Tasks {
                        task_tag = Some(group.labels[pick].clone());
                    }
                }
                Activation::Bernoulli { p } => {
                    for offset in 0..group.labels.len() {
                        if rng.random::<f64>() < p {
                            concepts[range.start + offset] = 1.0;
                        }
                    }
                }
            }
        }

        // 2. Difficulty latent and true success probabilities.
        let u: f64 = rng.random::<f64>();
        let probs: Vec<f64> = spec
            .models
            .iter()
            .map(|model| {
                let mut p = model.base_success - model.difficulty_sensitivity * u;
                for affinity in &model.affinities {
                    let concept_idx = schema
                        .label_index(affinity.group, &affinity.label)
                        .expect("validated affinity");
                    if concepts[concept_idx] == 1.0 {
                        p += affinity.delta;
                    }
                }
                p.clamp(0.0, 1.0)
            })
            .collect();

        // 3. Correctness sampled from the planted probabilities.
        let correctness: Vec<u8> = probs
            .iter()
            .map(|&p| u8::from(rng.random::<f64>() < p))
            .collect();

        // 4. Complexity derived from correctness, never planted.
        let complexity = derive_complexity_labels(&correctness, &catalog)?;
        concepts[complexity_range.clone()].copy_from_slice(&complexity);

        // 5. Embedding from a noisy copy of the concept vector.
        let mut noisy = concepts.clone();
        if spec.complexity_noise > 0.0 {
            for value in &mut noisy[complexity_range.clone()] {
                let z: f64 = StandardNormal.sample(&mut rng);
                *value += spec.complexity_noise * z;
            }
        }
        let mut embedding = match &map {
            None => noisy.clone(),
            Some(matrix) => {
                let mut out = vec![0.0; spec.embedding_dim];
                for (d, out_d) in out.iter_mut().enumerate() {
                    let row = d * width;
                    let mut acc = 0.0;
                    for (k, &c) in noisy.iter().enumerate() {
                        acc += matrix[row + k] * c;
                    }
                    *out_d = acc;
                }
                out
            }
        };
        if spec.embedding_noise > 0.0 {
            for value in embedding.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *value += spec.embedding_noise * z;
            }
        }

        // 6. Plausible token count, log-uniform.
        let input_tokens = (ln_lo + rng.random::<f64>() * (ln_hi - ln_lo)).exp().round() as u64;
        let input_tokens = input_tokens.clamp(token_lo, token_hi);

        records.push(QueryRecord {
            id: format!("q{idx:06}"),
            embedding,
            concepts,
            correctness,
            input_tokens,
            task: task_tag,
        });
        success_probs.push(probs);
        difficulty.push(u);
    }

    let affinities = spec
        .models
        .iter()
        .enumerate()
        .flat_map(|(m, model)| {
            model
                .affinities
                .iter()
                .map(move |a| (m, a.group, a.label.clone(), a.delta))
        })
        .collect();

    let dataset = Dataset::new(schema, catalog, records)?;
    Ok(SyntheticDataset {
        dataset,
        truth: PlantedTruth {
            success_probs,
            difficulty,
            affinities,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec() -> GeneratorSpec {
        GeneratorSpec {
            n_records: 200,
            embedding_dim: 8,
            embedding_map: EmbeddingMap::Identity,
            embedding_noise: 0.0,
            complexity_noise: 0.0,
            input_token_range: (50, 500),
            groups: vec![
                GroupSpec {
                    name: GroupName::Tasks,
                    labels: vec!["generate".into(), "repair".into()],
                    activation: Activation::OneHot,
                },
                GroupSpec {
                    name: GroupName::ProgrammingLanguages,
                    labels: vec!["rust".into(), "python".into(), "php".into()],
                    activation: Activation::OneHot,
                },
            ],
            models: vec![
                ModelSpec {
                    name: "thinker".into(),
                    input_price: 5.0,
                    output_price: 20.0,
                    avg_output_tokens: 100.0,
                    is_reasoning: true,
                    base_success: 0.8,
                    difficulty_sensitivity: 0.1,
                    affinities: vec![],
                },
                ModelSpec {
                    name: "rustacean".into(),
                    input_price: 1.0,
                    output_price: 2.0,
                    avg_output_tokens: 150.0,
                    is_reasoning: false,
                    base_success: 0.3,
                    difficulty_sensitivity: 0.4,
                    affinities: vec![Affinity {
                        group: GroupName::ProgrammingLanguages,
                        label: "rust".into(),
                        delta: 0.6,
                    }],
                },
            ],
        }
    }

    #[test]
    fn identity_map_without_noise_recovers_concepts_exactly() {
        let synth = synthesize_dataset(&tiny_spec(), 9).unwrap();
        for record in &synth.dataset.records {
            assert_eq!(record.embedding, record.concepts);
        }
    }

    #[test]
    fn always_correct_model_has_all_ones() {
        let mut spec = tiny_spec();
        spec.models[0].base_success = 1.0;
        spec.models[0].difficulty_sensitivity = 0.0;
        let synth = synthesize_dataset(&spec, 3).unwrap();
        assert!(synth.dataset.records.iter().all(|r| r.correctness[0] == 1));
    }

    #[test]
    fn stored_complexity_equals_recomputation_from_correctness() {
        let synth = synthesize_dataset(&tiny_spec(), 21).unwrap();
        let schema = &synth.dataset.schema;
        let range = schema.group_range(GroupName::Complexity).unwrap();
        for record in &synth.dataset.records {
            let expected =
                derive_complexity_labels(&record.correctness, &synth.dataset.catalog).unwrap();
            assert_eq!(&record.concepts[range.clone()], &expected);
        }
    }

    #[test]
    fn empirical_accuracy_tracks_planted_probabilities() {
        // Binomial oracle on the bundled six-model spec.
        let spec = GeneratorSpec::standard(5000);
        let synth = synthesize_dataset(&spec, 4).unwrap();
        for model in 0..spec.models.len() {
            let expected: f64 = synth.truth.success_probs.iter().map(|p| p[model]).sum::<f64>()
                / spec.n_records as f64;
            let observed: f64 = synth
                .dataset
                .records
                .iter()
                .map(|r| r.correctness[model] as f64)
                .sum::<f64>()
                / spec.n_records as f64;
            // Binomial oracle: 3 sigma around the planted mean.
            let variance: f64 = synth
                .truth
                .success_probs
                .iter()
                .map(|p| p[model] * (1.0 - p[model]))
                .sum::<f64>()
                / (spec.n_records as f64).powi(2);
            let sigma = variance.sqrt();
            assert!(
                (observed - expected).abs() <= 3.0 * sigma,
                "model {model}: observed {observed}, planted {expected}, 3sigma {}",
                3.0 * sigma
            );
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = synthesize_dataset(&tiny_spec(), 77).unwrap();
        let b = synthesize_dataset(&tiny_spec(), 77).unwrap();
        assert_eq!(a.dataset.records, b.dataset.records);
        assert_eq!(a.truth.success_probs, b.truth.success_probs);
    }

    #[test]
    fn affinity_outside_schema_is_config_error() {
        let mut spec = tiny_spec();
        spec.models[1].affinities[0].label = "cobol".into();
        assert!(matches!(
            synthesize_dataset(&spec, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn identity_map_requires_matching_dimension() {
        let mut spec = tiny_spec();
        spec.embedding_dim = 4;
        assert!(matches!(
            synthesize_dataset(&spec, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn bundled_specs_validate() {
        GeneratorSpec::standard(100).validate().unwrap();
        GeneratorSpec::language_specialists(100).validate().unwrap();
        assert_eq!(GeneratorSpec::standard(1).schema().unwrap().width(), 24);
    }

    #[test]
    fn top_specialist_follows_largest_delta() {
        let synth = synthesize_dataset(&tiny_spec(), 1).unwrap();
        assert_eq!(
            synth
                .truth
                .top_specialist(GroupName::ProgrammingLanguages, "rust"),
            Some(1)
        );
        assert_eq!(
            synth
                .truth
                .top_specialist(GroupName::ProgrammingLanguages, "php"),
            None
        );
    }
}
