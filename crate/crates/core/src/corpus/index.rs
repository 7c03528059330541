use std::collections::BTreeMap;

use crate::bitmap::Bitmap;
use crate::error::{Error, Result};

use super::{Corpus, EntityId, FieldMode, Topic};

/// Question pool and entity incidence for one topic.
///
/// Products are addressed by their position in the topic (`0..len()`), and
/// entities by their position in the pool (`0..pool_len()`). Pool positions
/// follow ascending [`EntityId`], so "smallest pool position" and "smallest
/// entity id" select the same entity.
#[derive(Debug, Clone)]
pub struct TopicIndex {
    topic_id: String,
    field_mode: FieldMode,
    product_ids: Vec<String>,
    purchases: Vec<u32>,
    entities: Vec<EntityId>,
    labels: Vec<String>,
    incidence: Vec<Bitmap>,
    tf_avg: Vec<f64>,
}

impl TopicIndex {
    pub(super) fn build(corpus: &Corpus, topic: &Topic, field_mode: FieldMode) -> Result<Self> {
        let n = topic.products.len();
        // entity -> (incidence, total occurrences)
        let mut acc: BTreeMap<EntityId, (Bitmap, u64)> = BTreeMap::new();
        let mut product_ids = Vec::with_capacity(n);
        let mut purchases = Vec::with_capacity(n);
        for (pos, &pi) in topic.products.iter().enumerate() {
            let product = &corpus.products[pi];
            product_ids.push(product.id.clone());
            purchases.push(product.purchases);
            for (e, c) in product.entity_counts(field_mode) {
                let slot = acc.entry(e).or_insert_with(|| (Bitmap::zeros(n), 0));
                slot.0.insert(pos);
                slot.1 += u64::from(c);
            }
        }
        let mut entities = Vec::with_capacity(acc.len());
        let mut labels = Vec::with_capacity(acc.len());
        let mut incidence = Vec::with_capacity(acc.len());
        let mut tf_avg = Vec::with_capacity(acc.len());
        for (e, (bits, total)) in acc {
            entities.push(e);
            labels.push(corpus.vocab.name(e).to_string());
            incidence.push(bits);
            tf_avg.push(total as f64 / n as f64);
        }
        Ok(TopicIndex {
            topic_id: topic.id.clone(),
            field_mode,
            product_ids,
            purchases,
            entities,
            labels,
            incidence,
            tf_avg,
        })
    }

    /// Assembles an index from explicit parts. Entity ids are taken to be
    /// the pool positions. Each row must have at least one set bit.
    pub fn from_parts(
        topic_id: impl Into<String>,
        product_ids: Vec<String>,
        labels: Vec<String>,
        incidence: Vec<Bitmap>,
        tf_avg: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = product_ids.len();
        if n == 0 {
            return Err(Error::invalid("topic has no products"));
        }
        if labels.len() != incidence.len() {
            return Err(Error::LengthMismatch {
                expected: labels.len(),
                actual: incidence.len(),
            });
        }
        for row in &incidence {
            if row.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
            if row.none() {
                return Err(Error::invalid("incidence row without any product"));
            }
        }
        let tf_avg = match tf_avg {
            Some(tf) if tf.len() != incidence.len() => {
                return Err(Error::LengthMismatch {
                    expected: incidence.len(),
                    actual: tf.len(),
                })
            }
            Some(tf) if tf.iter().any(|&t| !t.is_finite() || t < 0.0) => {
                return Err(Error::invalid("term frequencies must be finite and non-negative"))
            }
            Some(tf) => tf,
            None => incidence.iter().map(|r| r.count_ones() as f64 / n as f64).collect(),
        };
        Ok(TopicIndex {
            topic_id: topic_id.into(),
            field_mode: FieldMode::MetadataOnly,
            purchases: vec![1; n],
            product_ids,
            entities: (0..labels.len() as u32).map(EntityId).collect(),
            labels,
            incidence,
            tf_avg,
        })
    }

    /// Convenience constructor from `0`/`1` strings, one per entity.
    pub fn from_bit_rows(topic_id: impl Into<String>, rows: &[(&str, &str)]) -> Result<Self> {
        let n = rows.first().map(|(_, r)| r.len()).unwrap_or(0);
        let product_ids = (0..n).map(|i| format!("d{i}")).collect();
        let mut labels = Vec::with_capacity(rows.len());
        let mut incidence = Vec::with_capacity(rows.len());
        for (label, bits) in rows {
            labels.push(label.to_string());
            incidence.push(Bitmap::from_bit_str(bits).ok_or_else(|| Error::invalid(format!("bad bit row `{bits}`")))?);
        }
        TopicIndex::from_parts(topic_id, product_ids, labels, incidence, None)
    }

    pub fn topic_id(&self) -> &str {
        &self.topic_id
    }

    pub fn field_mode(&self) -> FieldMode {
        self.field_mode
    }

    /// Number of products in the topic.
    pub fn len(&self) -> usize {
        self.product_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.product_ids.is_empty()
    }

    pub fn product_ids(&self) -> &[String] {
        &self.product_ids
    }

    pub fn product_position(&self, product_id: &str) -> Option<usize> {
        self.product_ids.iter().position(|p| p == product_id)
    }

    pub fn purchases(&self) -> &[u32] {
        &self.purchases
    }

    pub fn pool_len(&self) -> usize {
        self.entities.len()
    }

    pub fn entity_ids(&self) -> &[EntityId] {
        &self.entities
    }

    pub fn label(&self, entity: usize) -> &str {
        &self.labels[entity]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn entity_position(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn incidence(&self, entity: usize) -> &Bitmap {
        &self.incidence[entity]
    }

    /// Mean occurrence count of the entity over the topic's products.
    pub fn tf_avg(&self, entity: usize) -> f64 {
        self.tf_avg[entity]
    }

    /// Products whose documents agree with `present` on `entity`.
    pub fn consistent_with(&self, entity: usize, present: bool) -> Bitmap {
        if present {
            self.incidence[entity].clone()
        } else {
            self.incidence[entity].complement()
        }
    }
}
