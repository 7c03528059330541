//! Fallback entity extraction from raw product text.
//!
//! Lowercases the text, splits it into alphanumeric words and keeps every
//! word unigram and bigram found in a user-supplied dictionary. This is a
//! dictionary lookup, not entity linking.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::ProductRecord;

/// A raw product with free-text fields, as accepted by `ingest`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawProduct {
    pub product_id: String,
    pub topics: Vec<String>,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub reviews: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purchases: Option<u32>,
}

#[derive(Debug, Clone, Default)]
pub struct EntityDictionary {
    entries: HashSet<String>,
}

impl EntityDictionary {
    /// One entry per non-empty line; entries are normalized the same way as text.
    pub fn from_lines(text: &str) -> Self {
        let entries = text
            .lines()
            .map(|l| words(l).join(" "))
            .filter(|l| !l.is_empty())
            .collect();
        EntityDictionary { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Dictionary hits in reading order, unigrams before the bigram that
    /// starts at the same word. Repeated mentions are kept.
    pub fn extract(&self, text: &str) -> Vec<String> {
        let ws = words(text);
        let mut out = Vec::new();
        for i in 0..ws.len() {
            if self.entries.contains(&ws[i]) {
                out.push(ws[i].clone());
            }
            if i + 1 < ws.len() {
                let bigram = format!("{} {}", ws[i], ws[i + 1]);
                if self.entries.contains(&bigram) {
                    out.push(bigram);
                }
            }
        }
        out
    }
}

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn convert_raw(raw: RawProduct, dict: &EntityDictionary) -> ProductRecord {
    let review_entities = raw.reviews.iter().flat_map(|r| dict.extract(r)).collect();
    ProductRecord {
        description_entities: dict.extract(&raw.description),
        review_entities,
        product_id: raw.product_id,
        topics: raw.topics,
        purchases: raw.purchases,
    }
}
