//! Trained models and their JSON file format.
//!
//! ```text
//! {"format_version": 1, "field_mode": "...", "mode": "duet", "seed": 1,
//!  "topics": {"<topic>": {"products": [...], "alpha": [...], "rewards": {"<entity>": r}}}}
//! ```
//!
//! Maps are ordered, and floats use shortest round-trip formatting, so the
//! same model always serializes to the same bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::belief::DirichletBelief;
use crate::corpus::{FieldMode, TopicIndex};
use crate::error::{Error, Result};
use crate::trainer::{SplitConfig, TrainingMode};

pub const FORMAT_VERSION: u32 = 1;

/// Trained belief and per-entity question rewards for one topic.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    topic_id: String,
    products: Vec<String>,
    labels: Vec<String>,
    alpha: DirichletBelief,
    rewards: Vec<f64>,
    train_count: usize,
}

impl TopicModel {
    /// `rewards` is aligned with the index's entity pool.
    pub fn new(index: &TopicIndex, alpha: DirichletBelief, rewards: Vec<f64>, train_count: usize) -> Result<Self> {
        if alpha.len() != index.len() {
            return Err(Error::LengthMismatch {
                expected: index.len(),
                actual: alpha.len(),
            });
        }
        if rewards.len() != index.pool_len() {
            return Err(Error::LengthMismatch {
                expected: index.pool_len(),
                actual: rewards.len(),
            });
        }
        Ok(TopicModel {
            topic_id: index.topic_id().to_string(),
            products: index.product_ids().to_vec(),
            labels: index.labels().to_vec(),
            alpha,
            rewards,
            train_count,
        })
    }

    /// Uniform belief, zero rewards.
    pub fn untrained(index: &TopicIndex) -> Self {
        TopicModel {
            topic_id: index.topic_id().to_string(),
            products: index.product_ids().to_vec(),
            labels: index.labels().to_vec(),
            alpha: DirichletBelief::uniform(index.len().max(1)).expect("non-empty"),
            rewards: vec![0.0; index.pool_len()],
            train_count: 0,
        }
    }

    pub fn topic_id(&self) -> &str {
        &self.topic_id
    }

    pub fn products(&self) -> &[String] {
        &self.products
    }

    pub fn alpha(&self) -> &DirichletBelief {
        &self.alpha
    }

    /// Rewards in this model's own entity order (see [`TopicModel::labels`]).
    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn train_count(&self) -> usize {
        self.train_count
    }

    pub fn reward_of(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.rewards[i])
    }

    /// Rewards reordered to `index`'s pool. Fails unless the model was built
    /// for the same topic, products and entity pool.
    pub fn rewards_for(&self, index: &TopicIndex) -> Result<Vec<f64>> {
        if self.topic_id != index.topic_id() {
            return Err(Error::Model(format!(
                "model is for topic `{}`, index is for `{}`",
                self.topic_id,
                index.topic_id()
            )));
        }
        if self.products != index.product_ids() {
            return Err(Error::Model(format!(
                "product list of topic `{}` does not match the corpus",
                self.topic_id
            )));
        }
        if self.labels == index.labels() {
            return Ok(self.rewards.clone());
        }
        if self.labels.len() != index.pool_len() {
            return Err(Error::Model(format!(
                "topic `{}`: model has {} entities, corpus pool has {}",
                self.topic_id,
                self.labels.len(),
                index.pool_len()
            )));
        }
        let by_label: BTreeMap<&str, f64> = self
            .labels
            .iter()
            .map(String::as_str)
            .zip(self.rewards.iter().copied())
            .collect();
        index
            .labels()
            .iter()
            .map(|l| {
                by_label
                    .get(l.as_str())
                    .copied()
                    .ok_or_else(|| Error::Model(format!("topic `{}`: entity `{l}` missing from model", self.topic_id)))
            })
            .collect()
    }
}

/// Models for every trained topic plus training metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet {
    pub field_mode: FieldMode,
    pub mode: TrainingMode,
    pub seed: u64,
    /// Corpus file the model was trained on, as given on the command line.
    pub corpus: Option<String>,
    pub split: Option<SplitConfig>,
    topics: BTreeMap<String, TopicModel>,
}

impl ModelSet {
    pub fn new(field_mode: FieldMode, mode: TrainingMode, seed: u64) -> Self {
        ModelSet {
            field_mode,
            mode,
            seed,
            corpus: None,
            split: None,
            topics: BTreeMap::new(),
        }
    }

    /// Untrained models for the given topics.
    pub fn untrained(indexes: &[TopicIndex]) -> Self {
        let field_mode = indexes.first().map(|i| i.field_mode()).unwrap_or_default();
        let mut set = ModelSet::new(field_mode, TrainingMode::None, 0);
        for idx in indexes {
            set.insert(TopicModel::untrained(idx));
        }
        set
    }

    pub fn insert(&mut self, model: TopicModel) {
        self.topics.insert(model.topic_id.clone(), model);
    }

    pub fn get(&self, topic_id: &str) -> Option<&TopicModel> {
        self.topics.get(topic_id)
    }

    pub fn topics(&self) -> impl Iterator<Item = &TopicModel> {
        self.topics.values()
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format_version: FORMAT_VERSION,
            field_mode: self.field_mode,
            mode: self.mode,
            seed: self.seed,
            corpus: self.corpus.clone(),
            split: self.split,
            topics: self
                .topics
                .iter()
                .map(|(id, m)| {
                    (
                        id.clone(),
                        TopicFile {
                            products: m.products.clone(),
                            alpha: m.alpha.alpha().to_vec(),
                            rewards: m.labels.iter().cloned().zip(m.rewards.iter().copied()).collect(),
                            train_count: m.train_count,
                        },
                    )
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported format_version {}",
                file.format_version
            )));
        }
        let mut set = ModelSet::new(file.field_mode, file.mode, file.seed);
        set.corpus = file.corpus;
        set.split = file.split;
        for (topic_id, t) in file.topics {
            if t.alpha.len() != t.products.len() {
                return Err(Error::Model(format!(
                    "topic `{topic_id}`: {} alpha entries for {} products",
                    t.alpha.len(),
                    t.products.len()
                )));
            }
            let alpha =
                DirichletBelief::from_alpha(t.alpha).map_err(|e| Error::Model(format!("topic `{topic_id}`: {e}")))?;
            if let Some((l, r)) = t.rewards.iter().find(|(_, r)| !r.is_finite() || r.abs() > 1.0) {
                return Err(Error::Model(format!(
                    "topic `{topic_id}`: reward {r} for `{l}` outside [-1, 1]"
                )));
            }
            let (labels, rewards) = t.rewards.into_iter().unzip();
            set.insert(TopicModel {
                topic_id,
                products: t.products,
                labels,
                alpha,
                rewards,
                train_count: t.train_count,
            });
        }
        Ok(set)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ModelSet::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    field_mode: FieldMode,
    mode: TrainingMode,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    corpus: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<SplitConfig>,
    topics: BTreeMap<String, TopicFile>,
}

#[derive(Serialize, Deserialize)]
struct TopicFile {
    products: Vec<String>,
    alpha: Vec<f64>,
    rewards: BTreeMap<String, f64>,
    #[serde(default)]
    train_count: usize,
}
