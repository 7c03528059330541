//! Offline cross-user training.
//!
//! For every topic, purchases from the training split are replayed against
//! a belief that starts uniform. Before each purchase is counted, every
//! pooled entity is scored by how far asking it would lift the purchased
//! product in the worst-index ranking:
//!
//! ```text
//! R_d(e) = (rank_before − rank_after) / N
//! ```
//!
//! All entities are scored from the same belief state, then the purchase
//! adds one count. The topic's reward for `e` is the mean of `R_d(e)` over
//! its training purchases, and the final counts become the trained prior.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belief::{worst_rank, DirichletBelief};
use crate::bitmap::Bitmap;
use crate::corpus::{Corpus, FieldMode, Split, SplitRatios, TopicIndex};
use crate::error::{Error, Result};
use crate::model::{ModelSet, TopicModel};
use crate::rng;

/// Which trained components a model keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingMode {
    /// Trained belief and trained rewards.
    #[default]
    Duet,
    /// Trained rewards over a uniform belief.
    QuestionOnly,
    /// Trained belief with zero rewards.
    ProductOnly,
    /// Uniform belief and zero rewards.
    None,
}

impl TrainingMode {
    pub const ALL: [TrainingMode; 4] = [
        TrainingMode::None,
        TrainingMode::QuestionOnly,
        TrainingMode::ProductOnly,
        TrainingMode::Duet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TrainingMode::Duet => "duet",
            TrainingMode::QuestionOnly => "question_only",
            TrainingMode::ProductOnly => "product_only",
            TrainingMode::None => "none",
        }
    }

    fn keeps_belief(self) -> bool {
        matches!(self, TrainingMode::Duet | TrainingMode::ProductOnly)
    }

    fn keeps_rewards(self) -> bool {
        matches!(self, TrainingMode::Duet | TrainingMode::QuestionOnly)
    }
}

impl fmt::Display for TrainingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrainingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "duet" => Ok(TrainingMode::Duet),
            "question_only" | "q-train" | "question" => Ok(TrainingMode::QuestionOnly),
            "product_only" | "p-train" | "product" => Ok(TrainingMode::ProductOnly),
            "none" | "no-train" => Ok(TrainingMode::None),
            _ => Err(Error::invalid(format!("unknown training mode `{s}`"))),
        }
    }
}

/// Rank gain `rank_before − rank_after` of `target` for every pooled entity,
/// when the truthful answer about that entity is observed on `base`.
pub fn rank_gains(base: &DirichletBelief, index: &TopicIndex, target: usize) -> Vec<i64> {
    let alpha = base.alpha();
    let n = alpha.len();
    let before = worst_rank(alpha, target) as i64;
    // The target always agrees with its own answer, so it gains one count.
    // A product agreeing with the target ties or beats it afterwards iff
    // alpha(d) + 1 >= alpha(t) + 1; one disagreeing iff alpha(d) >= alpha(t) + 1.
    let lifted = alpha[target] + 1.0;
    let agree_ge = Bitmap::from_bools(alpha.iter().map(|&a| a + 1.0 >= lifted));
    let disagree_ge = Bitmap::from_bools(alpha.iter().map(|&a| a >= lifted));
    let n_agree_ge = agree_ge.count_ones() as i64;
    let n_disagree_ge = disagree_ge.count_ones() as i64;
    debug_assert_eq!(n, index.len());

    (0..index.pool_len())
        .map(|e| {
            let inc = index.incidence(e);
            let g = inc.count_and(&agree_ge) as i64;
            let h = inc.count_and(&disagree_ge) as i64;
            let after = if inc.contains(target) {
                g + (n_disagree_ge - h)
            } else {
                (n_agree_ge - g) + h
            };
            before - after
        })
        .collect()
}

/// `(rank_before − rank_after) / N` for one entity and one target.
pub fn entity_reward(base: &DirichletBelief, index: &TopicIndex, entity: usize, target: usize) -> f64 {
    let gains = rank_gains(base, index, target);
    gains[entity] as f64 / index.len() as f64
}

/// Trains one topic on a list of purchase events (topic product positions,
/// repeats allowed).
pub fn train_topic(index: &TopicIndex, train: &[usize], mode: TrainingMode, seed: u64) -> Result<TopicModel> {
    if train.is_empty() {
        return Err(Error::invalid(format!(
            "topic `{}` has an empty training set",
            index.topic_id()
        )));
    }
    let n = index.len();
    if let Some(&bad) = train.iter().find(|&&d| d >= n) {
        return Err(Error::ProductOutOfRange { index: bad, len: n });
    }

    let mut order = train.to_vec();
    order.shuffle(&mut rng::stream(&[seed, rng::stable_hash(index.topic_id())]));

    let mut belief = DirichletBelief::uniform(n)?;
    let mut gain_sums = vec![0i64; index.pool_len()];
    for &d in &order {
        if mode.keeps_rewards() {
            for (sum, g) in gain_sums.iter_mut().zip(rank_gains(&belief, index, d)) {
                *sum += g;
            }
        }
        belief.observe_purchase(d)?;
    }

    // Integer gain sums make the mean exact up to one rounding.
    let denom = (n * order.len()) as f64;
    let rewards = if mode.keeps_rewards() {
        gain_sums.iter().map(|&s| s as f64 / denom).collect()
    } else {
        vec![0.0; index.pool_len()]
    };
    let alpha = if mode.keeps_belief() {
        belief
    } else {
        DirichletBelief::uniform(n)?
    };
    TopicModel::new(index, alpha, rewards, order.len())
}

/// Trains every topic that has a split, in parallel over topics.
pub fn train_indexes(indexes: &[TopicIndex], splits: &[Split], mode: TrainingMode, seed: u64) -> Result<ModelSet> {
    let by_topic: BTreeMap<&str, &TopicIndex> = indexes.iter().map(|i| (i.topic_id(), i)).collect();
    let jobs: Vec<(&TopicIndex, &Split)> = splits
        .iter()
        .map(|s| {
            by_topic
                .get(s.topic_id.as_str())
                .map(|&i| (i, s))
                .ok_or_else(|| Error::UnknownTopic(s.topic_id.clone()))
        })
        .collect::<Result<_>>()?;
    let models: Vec<TopicModel> = jobs
        .par_iter()
        .map(|(idx, split)| train_topic(idx, &split.train, mode, seed))
        .collect::<Result<_>>()?;
    let field_mode = indexes.first().map(|i| i.field_mode()).unwrap_or_default();
    let mut set = ModelSet::new(field_mode, mode, seed);
    for m in models {
        set.insert(m);
    }
    Ok(set)
}

/// Indexes the split topics of `corpus` under `field_mode` and trains them.
pub fn train_all(
    corpus: &Corpus,
    splits: &[Split],
    mode: TrainingMode,
    field_mode: FieldMode,
    seed: u64,
) -> Result<ModelSet> {
    let indexes: Vec<TopicIndex> = splits
        .iter()
        .map(|s| corpus.index_with(&s.topic_id, field_mode))
        .collect::<Result<_>>()?;
    let mut set = train_indexes(&indexes, splits, mode, seed)?;
    set.field_mode = field_mode;
    Ok(set)
}

/// How the training split was produced; stored in model files so later
/// evaluation can rebuild the same split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub ratios: SplitRatios,
    pub seed: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Literal reading of the update: clone, observe, re-rank.
    fn reward_oracle(base: &DirichletBelief, index: &TopicIndex, e: usize, target: usize) -> f64 {
        let before = base.preference().rank_of(target) as f64;
        let mut after = base.clone();
        after
            .observe_answer(&index.consistent_with(e, index.incidence(e).contains(target)))
            .unwrap();
        let after = after.preference().rank_of(target) as f64;
        (before - after) / index.len() as f64
    }

    fn binary_topic(bits: u32, extra: &[(&str, &str)]) -> TopicIndex {
        let n = 1usize << bits;
        let rows: Vec<(String, String)> = (0..bits)
            .map(|b| {
                (
                    format!("bit_{b}"),
                    (0..n).map(|i| if i >> b & 1 == 1 { '1' } else { '0' }).collect(),
                )
            })
            .collect();
        let mut named: Vec<(&str, &str)> = rows.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        named.extend_from_slice(extra);
        TopicIndex::from_bit_rows("t", &named).unwrap()
    }

    #[test]
    fn reward_examples() {
        // target matches only itself: rank 8 -> 1
        let idx = TopicIndex::from_bit_rows("t", &[("only", "00100000"), ("all", "11111111")]).unwrap();
        let uniform = DirichletBelief::uniform(8).unwrap();
        assert_eq!(entity_reward(&uniform, &idx, 0, 2), 7.0 / 8.0);
        assert_eq!(entity_reward(&uniform, &idx, 1, 2), 0.0);
        // rank 10 -> 2 over 10 products
        let idx = TopicIndex::from_bit_rows("t", &[("x", "1000000000")]).unwrap();
        let mut alpha = vec![1.5; 10];
        alpha[0] = 1.0;
        alpha[1] = 3.0;
        let belief = DirichletBelief::from_alpha(alpha).unwrap();
        assert_eq!(belief.rank_of(0), 10);
        assert!((entity_reward(&belief, &idx, 0, 0) - 0.8).abs() < 1e-15);
        assert_eq!(reward_oracle(&belief, &idx, 0, 0), entity_reward(&belief, &idx, 0, 0));
    }

    #[test]
    fn fast_gains_match_oracle() {
        let idx = binary_topic(3, &[("d1", "10110010"), ("d2", "01000001"), ("all", "11111111")]);
        let mut belief = DirichletBelief::uniform(8).unwrap();
        for (step, p) in [3usize, 3, 5, 0, 7, 3, 1].into_iter().enumerate() {
            for target in 0..8 {
                let gains = rank_gains(&belief, &idx, target);
                for (e, &g) in gains.iter().enumerate() {
                    let want = reward_oracle(&belief, &idx, e, target);
                    assert_eq!(g as f64 / 8.0, want, "step {step} target {target} entity {e}");
                }
            }
            belief.observe_purchase(p).unwrap();
        }
    }

    #[test]
    fn two_bit_topic_hand_computed() {
        let idx = binary_topic(2, &[("const", "1111")]);
        // fixed order 0,1,2,3: bit gains (2,2), (1,2), (1,0), (0,0) -> 4/16 each
        let mut belief = DirichletBelief::uniform(4).unwrap();
        let mut sums = [0i64; 3];
        for d in 0..4 {
            for (s, g) in sums.iter_mut().zip(rank_gains(&belief, &idx, d)) {
                *s += g;
            }
            belief.observe_purchase(d).unwrap();
        }
        assert_eq!(sums, [4, 4, 0]);

        for seed in 0..20 {
            let m = train_topic(&idx, &[0, 1, 2, 3], TrainingMode::Duet, seed).unwrap();
            assert!(m.rewards()[0] > 0.0 && m.rewards()[1] > 0.0);
            assert_eq!(m.rewards()[2], 0.0);
            assert_eq!(m.alpha().alpha(), &[2.0; 4]);
        }
        let m = train_topic(&idx, &[0, 1, 2, 3], TrainingMode::Duet, 0).unwrap();
        let oracle = literal_training(&idx, &shuffled(&idx, &[0, 1, 2, 3], 0));
        assert_eq!(m.rewards(), oracle.as_slice());
    }

    fn shuffled(idx: &TopicIndex, train: &[usize], seed: u64) -> Vec<usize> {
        let mut order = train.to_vec();
        order.shuffle(&mut rng::stream(&[seed, rng::stable_hash(idx.topic_id())]));
        order
    }

    /// Straightforward re-implementation on preference vectors.
    fn literal_training(idx: &TopicIndex, order: &[usize]) -> Vec<f64> {
        let mut belief = DirichletBelief::uniform(idx.len()).unwrap();
        let mut sums = vec![0.0; idx.pool_len()];
        for &d in order {
            for (e, s) in sums.iter_mut().enumerate() {
                *s += reward_oracle(&belief, idx, e, d);
            }
            belief.observe_purchase(d).unwrap();
        }
        sums.iter().map(|s| s / order.len() as f64).collect()
    }

    #[test]
    fn training_matches_literal_implementation() {
        let idx = binary_topic(4, &[("x", "1011001011110000"), ("y", "0000000000000001")]);
        let train = [0, 5, 5, 9, 12, 3, 3, 3, 15];
        for seed in [1, 2, 3] {
            let m = train_topic(&idx, &train, TrainingMode::Duet, seed).unwrap();
            let oracle = literal_training(&idx, &shuffled(&idx, &train, seed));
            for (a, b) in m.rewards().iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn modes_filter_outputs() {
        let idx = binary_topic(3, &[]);
        let train = [1, 1, 6];
        let duet = train_topic(&idx, &train, TrainingMode::Duet, 5).unwrap();
        let q = train_topic(&idx, &train, TrainingMode::QuestionOnly, 5).unwrap();
        let p = train_topic(&idx, &train, TrainingMode::ProductOnly, 5).unwrap();
        let none = train_topic(&idx, &train, TrainingMode::None, 5).unwrap();
        assert_eq!(duet.alpha().alpha(), &[1.0, 3.0, 1.0, 1.0, 1.0, 1.0, 2.0, 1.0]);
        assert_eq!(q.alpha().alpha(), &[1.0; 8]);
        assert_eq!(q.rewards(), duet.rewards());
        assert_eq!(p.alpha(), duet.alpha());
        assert!(p.rewards().iter().all(|&r| r == 0.0));
        assert_eq!(none.alpha().alpha(), &[1.0; 8]);
        assert!(none.rewards().iter().all(|&r| r == 0.0));
        assert_ne!(duet.rewards(), p.rewards());
        assert_ne!(duet.alpha(), q.alpha());
    }

    #[test]
    fn single_purchase_counts() {
        let idx = TopicIndex::from_bit_rows("t", &[("a", "10")]).unwrap();
        let m = train_topic(&idx, &[0], TrainingMode::Duet, 0).unwrap();
        assert_eq!(m.alpha().alpha(), &[2.0, 1.0]);
        assert!(train_topic(&idx, &[], TrainingMode::Duet, 0).is_err());
        assert!(train_topic(&idx, &[2], TrainingMode::Duet, 0).is_err());
    }

    #[test]
    fn mode_names() {
        for m in TrainingMode::ALL {
            assert_eq!(m.as_str().parse::<TrainingMode>().unwrap(), m);
        }
        assert_eq!("p-train".parse::<TrainingMode>().unwrap(), TrainingMode::ProductOnly);
        assert!("both".parse::<TrainingMode>().is_err());
    }
}
