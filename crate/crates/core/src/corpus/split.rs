use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

use super::TopicIndex;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.6,
            validation: 0.1,
            test: 0.3,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self> {
        let r = SplitRatios {
            train,
            validation,
            test,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(Error::invalid("split ratios must be positive"));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("split ratios must sum to 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitPart {
    Train,
    Validation,
    Test,
    /// Every purchase event of the topic, ignoring the split.
    All,
}

/// Per-topic assignment of purchase events to train/validation/test.
///
/// Each product contributes as many events as its purchase count, so the
/// parts are lists of topic product positions. With one purchase per
/// product (the default) the parts are disjoint product sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub topic_id: String,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn part(&self, part: SplitPart) -> Vec<usize> {
        match part {
            SplitPart::Train => self.train.clone(),
            SplitPart::Validation => self.validation.clone(),
            SplitPart::Test => self.test.clone(),
            SplitPart::All => {
                let mut all = self.train.clone();
                all.extend(&self.validation);
                all.extend(&self.test);
                all.sort_unstable();
                all
            }
        }
    }
}

/// Sizes for `n` events: validation and test are floored, train takes the
/// remainder, then empty parts borrow one item from the largest part.
fn part_sizes(n: usize, ratios: &SplitRatios) -> [usize; 3] {
    let floor = |r: f64| ((n as f64) * r + 1e-9).floor() as usize;
    let validation = floor(ratios.validation).min(n);
    let test = floor(ratios.test).min(n - validation);
    let mut sizes = [n - validation - test, validation, test];
    for i in 0..3 {
        if sizes[i] == 0 {
            let largest = (0..3).max_by_key(|&j| (sizes[j], std::cmp::Reverse(j))).unwrap();
            sizes[largest] -= 1;
            sizes[i] += 1;
        }
    }
    sizes
}

pub fn split_topic(index: &TopicIndex, ratios: SplitRatios, seed: u64) -> Result<Split> {
    ratios.validate()?;
    let mut events: Vec<usize> = index
        .purchases()
        .iter()
        .enumerate()
        .flat_map(|(pos, &count)| std::iter::repeat_n(pos, count as usize))
        .collect();
    if events.len() < 3 {
        return Err(Error::invalid(format!(
            "topic `{}` has {} purchase events; at least 3 are needed to split",
            index.topic_id(),
            events.len()
        )));
    }
    let mut rng = rng::stream(&[seed, rng::stable_hash(index.topic_id())]);
    events.shuffle(&mut rng);
    let [n_train, n_val, _] = part_sizes(events.len(), &ratios);
    let test = events.split_off(n_train + n_val);
    let validation = events.split_off(n_train);
    Ok(Split {
        topic_id: index.topic_id().to_string(),
        train: events,
        validation,
        test,
    })
}

/// Splits every topic that has at least three purchase events. Topics that
/// cannot be split are skipped.
pub fn split_corpus(indexes: &[TopicIndex], ratios: SplitRatios, seed: u64) -> Result<Vec<Split>> {
    ratios.validate()?;
    let mut out = Vec::with_capacity(indexes.len());
    for idx in indexes {
        let events: u64 = idx.purchases().iter().map(|&p| u64::from(p)).sum();
        if events >= 3 {
            out.push(split_topic(idx, ratios, seed)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn topic(n: usize) -> TopicIndex {
        let row: String = (0..n).map(|i| if i % 2 == 0 { '1' } else { '0' }).collect();
        TopicIndex::from_bit_rows("t", &[("a", &row)]).unwrap()
    }

    #[test]
    fn sizes_follow_rounding_rule() {
        let r = SplitRatios::default();
        let s = split_topic(&topic(10), r, 7).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (6, 1, 3));
        let s = split_topic(&topic(3), r, 7).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (1, 1, 1));
    }

    #[test]
    fn deterministic_under_seed() {
        let r = SplitRatios::default();
        assert_eq!(
            split_topic(&topic(25), r, 3).unwrap(),
            split_topic(&topic(25), r, 3).unwrap()
        );
        assert_ne!(
            split_topic(&topic(25), r, 3).unwrap(),
            split_topic(&topic(25), r, 4).unwrap()
        );
    }

    #[test]
    fn rejects_small_topics_and_bad_ratios() {
        assert!(split_topic(&topic(2), SplitRatios::default(), 1).is_err());
        assert!(SplitRatios::new(0.5, 0.5, 0.5).is_err());
        assert!(SplitRatios::new(1.0, 0.0, 0.0).is_err());
        assert_eq!(
            split_corpus(&[topic(2), topic(4)], SplitRatios::default(), 1)
                .unwrap()
                .len(),
            1
        );
    }

    proptest! {
        #[test]
        fn parts_are_disjoint_and_exhaustive(n in 3usize..200, seed in any::<u64>(),
                                             v in 0.01f64..0.4, t in 0.01f64..0.4) {
            let r = SplitRatios::new(1.0 - v - t, v, t).unwrap();
            let s = split_topic(&topic(n), r, seed).unwrap();
            prop_assert!(!s.train.is_empty() && !s.validation.is_empty() && !s.test.is_empty());
            let mut all = s.part(SplitPart::All);
            all.dedup();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }
}
