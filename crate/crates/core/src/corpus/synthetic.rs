//! Synthetic corpora with a known binary-code structure.
//!
//! Product `i` of each topic contains bit-entity `b` iff bit `b` of `i` is
//! set, so the bit-entities identify every product in `n_bit_entities`
//! perfectly bisecting questions. Distractor entities are scattered at
//! random densities on top.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

use super::{Corpus, FieldMode, ProductRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_products: usize,
    pub n_bit_entities: u32,
    pub n_distractors: usize,
    pub n_topics: usize,
    /// Per-distractor inclusion probability is drawn uniformly from this range.
    pub distractor_density: (f64, f64),
    /// Each (topic, entity) pair gets an occurrence multiplicity drawn
    /// uniformly from `1..=max_tf`; 1 gives every entity unit frequency.
    pub max_tf: u32,
    /// Probability that a distractor occurrence lands in the reviews rather
    /// than the description.
    pub review_fraction: f64,
    /// Zipf exponent for purchase popularity. `None` gives one purchase per
    /// product.
    pub purchase_skew: Option<f64>,
    /// Purchase events sampled per topic when `purchase_skew` is set.
    pub purchases_per_topic: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_products: 8,
            n_bit_entities: 3,
            n_distractors: 0,
            n_topics: 1,
            distractor_density: (0.1, 0.5),
            max_tf: 1,
            review_fraction: 0.0,
            purchase_skew: None,
            purchases_per_topic: 0,
            seed: 42,
        }
    }
}

impl SyntheticSpec {
    pub fn binary(n_bit_entities: u32, n_distractors: usize, seed: u64) -> Self {
        SyntheticSpec {
            n_products: 1 << n_bit_entities,
            n_bit_entities,
            n_distractors,
            seed,
            ..SyntheticSpec::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_products == 0 || self.n_topics == 0 {
            return Err(Error::invalid("n_products and n_topics must be positive"));
        }
        let fits = self.n_bit_entities >= 64 || (self.n_products as u64) <= 1u64 << self.n_bit_entities;
        if !fits {
            return Err(Error::invalid(format!(
                "{} products exceed the capacity of {} bit entities",
                self.n_products, self.n_bit_entities
            )));
        }
        let (lo, hi) = self.distractor_density;
        if !(0.0..=1.0).contains(&lo) || !(lo..=1.0).contains(&hi) {
            return Err(Error::invalid("distractor_density must satisfy 0 <= lo <= hi <= 1"));
        }
        if self.max_tf == 0 {
            return Err(Error::invalid("max_tf must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.review_fraction) {
            return Err(Error::invalid("review_fraction must lie in [0, 1]"));
        }
        if let Some(s) = self.purchase_skew {
            if !s.is_finite() || s < 0.0 {
                return Err(Error::invalid("purchase_skew must be finite and non-negative"));
            }
            if self.purchases_per_topic == 0 {
                return Err(Error::invalid(
                    "purchases_per_topic must be positive with purchase_skew",
                ));
            }
        }
        Ok(())
    }
}

pub fn bit_entity(b: u32) -> String {
    format!("bit_{b:02}")
}

pub fn distractor_entity(j: usize) -> String {
    format!("dist_{j:04}")
}

fn topic_name(spec: &SyntheticSpec, t: usize) -> String {
    if spec.n_topics == 1 {
        "synthetic".to_string()
    } else {
        format!("synthetic-{t:03}")
    }
}

fn product_name(spec: &SyntheticSpec, t: usize, i: usize) -> String {
    if spec.n_topics == 1 {
        format!("p{i:05}")
    } else {
        format!("t{t:03}-p{i:05}")
    }
}

/// Generates the product records of a synthetic corpus.
pub fn synthetic_records(spec: &SyntheticSpec) -> Result<Vec<ProductRecord>> {
    spec.validate()?;
    let mut records = Vec::with_capacity(spec.n_products * spec.n_topics);
    for t in 0..spec.n_topics {
        let topic = topic_name(spec, t);
        let mut topic_rng = rng::stream(&[spec.seed, 1, t as u64]);
        let (lo, hi) = spec.distractor_density;
        let densities: Vec<f64> = (0..spec.n_distractors)
            .map(|_| if hi > lo { topic_rng.random_range(lo..=hi) } else { lo })
            .collect();
        let mut tf = |_: usize| -> u32 {
            if spec.max_tf > 1 {
                topic_rng.random_range(1..=spec.max_tf)
            } else {
                1
            }
        };
        let bit_tf: Vec<u32> = (0..spec.n_bit_entities as usize).map(&mut tf).collect();
        let dist_tf: Vec<u32> = (0..spec.n_distractors).map(&mut tf).collect();
        let purchases = sample_purchases(spec, t)?;

        for i in 0..spec.n_products {
            let mut rng = rng::stream(&[spec.seed, 2, t as u64, i as u64]);
            let mut description = Vec::new();
            let mut reviews = Vec::new();
            for b in 0..spec.n_bit_entities {
                if b < 64 && (i as u64) >> b & 1 == 1 {
                    let name = bit_entity(b);
                    description.extend(std::iter::repeat_n(name, bit_tf[b as usize] as usize));
                }
            }
            for (j, &p) in densities.iter().enumerate() {
                if rng.random_bool(p) {
                    let name = distractor_entity(j);
                    for _ in 0..dist_tf[j] {
                        if spec.review_fraction > 0.0 && rng.random_bool(spec.review_fraction) {
                            reviews.push(name.clone());
                        } else {
                            description.push(name.clone());
                        }
                    }
                }
            }
            records.push(ProductRecord {
                product_id: product_name(spec, t, i),
                topics: vec![topic.clone()],
                description_entities: description,
                review_entities: reviews,
                purchases: purchases.as_ref().map(|p| p[i]),
            });
        }
    }
    Ok(records)
}

/// Zipf-weighted purchase counts over a random popularity order.
fn sample_purchases(spec: &SyntheticSpec, t: usize) -> Result<Option<Vec<u32>>> {
    let Some(s) = spec.purchase_skew else {
        return Ok(None);
    };
    let mut rng = rng::stream(&[spec.seed, 3, t as u64]);
    let mut order: Vec<usize> = (0..spec.n_products).collect();
    order.shuffle(&mut rng);
    let weights: Vec<f64> = (0..spec.n_products).map(|r| (r as f64 + 1.0).powf(-s)).collect();
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::invalid(e.to_string()))?;
    let mut counts = vec![0u32; spec.n_products];
    for _ in 0..spec.purchases_per_topic {
        counts[order[dist.sample(&mut rng)]] += 1;
    }
    Ok(Some(counts))
}

pub fn generate_synthetic(spec: &SyntheticSpec, field_mode: FieldMode) -> Result<Corpus> {
    Corpus::from_records(synthetic_records(spec)?, field_mode)
}
