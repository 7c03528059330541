//! Product corpora: loading, validation, entity interning and topics.
//!
//! A corpus file is line-delimited JSON with one product per line:
//!
//! ```text
//! {"product_id": "p1", "topics": ["kettles"], "description_entities": ["steel", "kettle"], "review_entities": ["whistle"]}
//! ```
//!
//! Entity lists are multisets: repeating an entity records a higher term
//! frequency. An optional `purchases` count (default 1) says how many
//! purchase events the product contributes to its topics' splits.

mod index;
mod split;
mod synthetic;
mod tokenize;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use index::TopicIndex;
pub use split::{split_corpus, split_topic, Split, SplitPart, SplitRatios};
pub use synthetic::{generate_synthetic, synthetic_records, SyntheticSpec};
pub use tokenize::{convert_raw, EntityDictionary, RawProduct};

/// Dense corpus-wide entity identifier. Ids are assigned in ascending
/// lexicographic order of the entity strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityId(pub u32);

/// Which product documents contribute entities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldMode {
    MetadataOnly,
    #[default]
    MetadataAndReviews,
}

impl FieldMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldMode::MetadataOnly => "metadata_only",
            FieldMode::MetadataAndReviews => "metadata_and_reviews",
        }
    }
}

impl fmt::Display for FieldMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FieldMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "metadata_only" | "metadata" | "m" => Ok(FieldMode::MetadataOnly),
            "metadata_and_reviews" | "reviews" | "mr" => Ok(FieldMode::MetadataAndReviews),
            _ => Err(Error::invalid(format!("unknown field mode `{s}`"))),
        }
    }
}

/// One line of a corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductRecord {
    pub product_id: String,
    pub topics: Vec<String>,
    #[serde(default)]
    pub description_entities: Vec<String>,
    #[serde(default)]
    pub review_entities: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purchases: Option<u32>,
}

#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    names: Vec<String>,
    ids: HashMap<String, EntityId>,
}

impl Vocabulary {
    fn from_sorted(names: BTreeSet<String>) -> Self {
        let names: Vec<String> = names.into_iter().collect();
        let ids = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), EntityId(i as u32)))
            .collect();
        Vocabulary { names, ids }
    }

    pub fn id(&self, name: &str) -> Option<EntityId> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: EntityId) -> &str {
        &self.names[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Product {
    pub id: String,
    pub topics: Vec<String>,
    /// (entity, occurrence count) pairs, ascending by entity id.
    pub description: Vec<(EntityId, u32)>,
    pub reviews: Vec<(EntityId, u32)>,
    pub purchases: u32,
}

impl Product {
    /// Entity occurrence counts under `mode`, ascending by entity id.
    pub fn entity_counts(&self, mode: FieldMode) -> Vec<(EntityId, u32)> {
        match mode {
            FieldMode::MetadataOnly => self.description.clone(),
            FieldMode::MetadataAndReviews => {
                let mut merged: BTreeMap<EntityId, u32> = self.description.iter().copied().collect();
                for &(e, c) in &self.reviews {
                    *merged.entry(e).or_default() += c;
                }
                merged.into_iter().collect()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Topic {
    pub id: String,
    pub title: String,
    /// Corpus product indices, in file order.
    pub products: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    vocab: Vocabulary,
    products: Vec<Product>,
    lookup: HashMap<String, usize>,
    topics: Vec<Topic>,
    field_mode: FieldMode,
}

impl Corpus {
    /// Validates records, interns entities, groups products into topics and
    /// drops topics with a single product.
    pub fn from_records(records: Vec<ProductRecord>, field_mode: FieldMode) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::NoProducts);
        }
        let mut names = BTreeSet::new();
        for r in &records {
            names.extend(r.description_entities.iter().filter(|e| !e.is_empty()).cloned());
            names.extend(r.review_entities.iter().filter(|e| !e.is_empty()).cloned());
        }
        let vocab = Vocabulary::from_sorted(names);

        let mut products = Vec::with_capacity(records.len());
        let mut lookup = HashMap::with_capacity(records.len());
        let mut members: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for r in records {
            let mut topics: Vec<String> = Vec::with_capacity(r.topics.len());
            for t in r.topics {
                if !t.is_empty() && !topics.contains(&t) {
                    topics.push(t);
                }
            }
            if topics.is_empty() {
                return Err(Error::ProductWithoutTopic(r.product_id));
            }
            let idx = products.len();
            if lookup.insert(r.product_id.clone(), idx).is_some() {
                return Err(Error::DuplicateProduct(r.product_id));
            }
            for t in &topics {
                members.entry(t.clone()).or_default().push(idx);
            }
            products.push(Product {
                description: count_entities(&vocab, &r.description_entities),
                reviews: count_entities(&vocab, &r.review_entities),
                purchases: r.purchases.unwrap_or(1),
                id: r.product_id,
                topics,
            });
        }

        let topics = members
            .into_iter()
            .filter(|(_, ps)| ps.len() >= 2)
            .map(|(id, products)| Topic {
                title: id.clone(),
                id,
                products,
            })
            .collect();

        Ok(Corpus {
            vocab,
            products,
            lookup,
            topics,
            field_mode,
        })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn products(&self) -> &[Product] {
        &self.products
    }

    pub fn product(&self, id: &str) -> Option<&Product> {
        self.lookup.get(id).map(|&i| &self.products[i])
    }

    /// Topics with at least two products, sorted by id.
    pub fn topics(&self) -> &[Topic] {
        &self.topics
    }

    pub fn topic(&self, id: &str) -> Option<&Topic> {
        self.topics
            .binary_search_by(|t| t.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.topics[i])
    }

    pub fn field_mode(&self) -> FieldMode {
        self.field_mode
    }

    /// Index for `topic_id` under the corpus' own field mode.
    pub fn index(&self, topic_id: &str) -> Result<TopicIndex> {
        self.index_with(topic_id, self.field_mode)
    }

    pub fn index_with(&self, topic_id: &str, field_mode: FieldMode) -> Result<TopicIndex> {
        build_topic_index(self, topic_id, field_mode)
    }
}

fn count_entities(vocab: &Vocabulary, names: &[String]) -> Vec<(EntityId, u32)> {
    let mut counts: BTreeMap<EntityId, u32> = BTreeMap::new();
    for n in names.iter().filter(|n| !n.is_empty()) {
        let id = vocab.id(n).expect("vocabulary built from the same records");
        *counts.entry(id).or_default() += 1;
    }
    counts.into_iter().collect()
}

/// Reads a corpus file. Blank lines are ignored.
pub fn load_corpus(path: impl AsRef<Path>, field_mode: FieldMode) -> Result<Corpus> {
    Corpus::from_records(read_json_lines(path)?, field_mode)
}

/// One JSON value per non-blank line; parse errors carry the line number.
pub fn read_json_lines<T: serde::de::DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_records(path: impl AsRef<Path>, records: &[ProductRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Builds the question pool and incidence bitmaps for one topic.
pub fn build_topic_index(corpus: &Corpus, topic_id: &str, field_mode: FieldMode) -> Result<TopicIndex> {
    let topic = corpus
        .topic(topic_id)
        .ok_or_else(|| Error::UnknownTopic(topic_id.to_string()))?;
    TopicIndex::build(corpus, topic, field_mode)
}
