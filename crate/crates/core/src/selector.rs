//! Question selection.
//!
//! The objective for entity `e` over candidate set `U` is
//!
//! ```text
//! | sum_{d in U} (2·[e(d) = 1] − 1) · pi(d) |  +  2·beta·h(e)  −  gamma·R(e)
//! ```
//!
//! and the selected entity is its argmin over the unasked pool, ties going
//! to the smallest entity id. The first term is the generalized binary
//! search split: zero when `e` halves the preference mass inside `U`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::belief::DirichletBelief;
use crate::bitmap::Bitmap;
use crate::corpus::TopicIndex;
use crate::error::{Error, Result};

/// How likely a user is to answer a question about an entity wrongly.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorModel {
    #[default]
    NoNoise,
    /// The same error rate for every entity, in `[0, 0.5]`.
    Fixed(f64),
    /// `h(e) = 1 / (2·(1 + tf_avg(e)))`.
    TfBased,
}

impl ErrorModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ErrorModel::Fixed(eps) if !(0.0..=0.5).contains(&eps) => {
                Err(Error::invalid(format!("fixed error rate {eps} outside [0, 0.5]")))
            }
            _ => Ok(()),
        }
    }

    /// Noisy sessions keep the full candidate set instead of pruning it.
    pub fn is_noisy(&self) -> bool {
        !matches!(self, ErrorModel::NoNoise)
    }

    pub fn rate(&self, index: &TopicIndex, entity: usize) -> f64 {
        match *self {
            ErrorModel::NoNoise => 0.0,
            ErrorModel::Fixed(eps) => eps,
            ErrorModel::TfBased => 1.0 / (2.0 * (1.0 + index.tf_avg(entity))),
        }
    }
}

impl fmt::Display for ErrorModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrorModel::NoNoise => f.write_str("none"),
            ErrorModel::Fixed(eps) => write!(f, "fixed:{eps}"),
            ErrorModel::TfBased => f.write_str("tf"),
        }
    }
}

impl FromStr for ErrorModel {
    type Err = Error;

    /// Accepts `none`, `tf` and `fixed:<eps>`.
    fn from_str(s: &str) -> Result<Self> {
        let model = match s {
            "none" | "no_noise" => ErrorModel::NoNoise,
            "tf" | "tf_based" => ErrorModel::TfBased,
            _ => {
                let eps = s
                    .strip_prefix("fixed:")
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| Error::invalid(format!("unknown error model `{s}`")))?;
                ErrorModel::Fixed(eps)
            }
        };
        model.validate()?;
        Ok(model)
    }
}

pub fn error_rate(entity: usize, index: &TopicIndex, model: ErrorModel) -> f64 {
    model.rate(index, entity)
}

/// Weights of the reward (`gamma`) and noise (`beta`) terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionParams {
    pub gamma: f64,
    pub beta: f64,
}

impl Default for SelectionParams {
    fn default() -> Self {
        SelectionParams { gamma: 0.0, beta: 0.0 }
    }
}

impl SelectionParams {
    pub fn new(gamma: f64, beta: f64) -> Result<Self> {
        let p = SelectionParams { gamma, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err(Error::invalid("gamma must be finite and non-negative"));
        }
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(Error::invalid("beta must be finite and non-negative"));
        }
        Ok(())
    }
}

/// `|sum_{d in U} (2·[e(d) = 1] − 1)·pi(d)|` for a preference vector `pi`.
pub fn split_score(incidence: &Bitmap, candidates: &Bitmap, pi: &[f64]) -> f64 {
    candidates
        .iter_ones()
        .map(|d| if incidence.contains(d) { pi[d] } else { -pi[d] })
        .sum::<f64>()
        .abs()
}

/// The full selection objective with fixed weights and error model.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Objective {
    pub params: SelectionParams,
    pub error_model: ErrorModel,
}

impl Objective {
    pub fn new(params: SelectionParams, error_model: ErrorModel) -> Self {
        Objective { params, error_model }
    }

    /// Scores one entity. `mass_u` is the alpha mass inside `candidates`.
    ///
    /// The split term is computed on pseudo-counts and divided by the total
    /// once, so integer-valued counts give exactly tied scores for exactly
    /// balanced splits.
    #[allow(clippy::too_many_arguments)]
    fn score_with(
        &self,
        index: &TopicIndex,
        rewards: &[f64],
        entity: usize,
        candidates: &Bitmap,
        alpha: &[f64],
        mass_u: f64,
        total: f64,
    ) -> f64 {
        let mass_e = index.incidence(entity).masked_sum(candidates, alpha);
        let split = (2.0 * mass_e - mass_u).abs() / total;
        let noise = if self.error_model.is_noisy() {
            2.0 * self.params.beta * self.error_model.rate(index, entity)
        } else {
            0.0
        };
        let reward = rewards.get(entity).copied().unwrap_or(0.0);
        split + noise - self.params.gamma * reward
    }

    pub fn score(
        &self,
        index: &TopicIndex,
        rewards: &[f64],
        entity: usize,
        candidates: &Bitmap,
        belief: &DirichletBelief,
    ) -> f64 {
        let alpha = belief.alpha();
        let mass_u = candidates.masked_sum(candidates, alpha);
        self.score_with(index, rewards, entity, candidates, alpha, mass_u, belief.total())
    }

    /// Argmin of the objective over `pool` (entity positions, ascending).
    /// Returns `None` for an empty pool.
    pub fn select<I>(
        &self,
        index: &TopicIndex,
        rewards: &[f64],
        pool: I,
        candidates: &Bitmap,
        belief: &DirichletBelief,
    ) -> Option<usize>
    where
        I: IntoIterator<Item = usize>,
    {
        let alpha = belief.alpha();
        let total = belief.total();
        let mass_u = candidates.masked_sum(candidates, alpha);
        let mut best: Option<(usize, f64)> = None;
        for e in pool {
            let s = self.score_with(index, rewards, e, candidates, alpha, mass_u, total);
            match best {
                Some((be, bs)) if s > bs || (s == bs && e > be) => {}
                _ => best = Some((e, s)),
            }
        }
        best.map(|(e, _)| e)
    }
}

/// Free-function form of [`Objective::select`].
pub fn select_entity(
    index: &TopicIndex,
    pool: &[usize],
    candidates: &Bitmap,
    belief: &DirichletBelief,
    rewards: &[f64],
    params: SelectionParams,
    error_model: ErrorModel,
) -> Result<usize> {
    Objective::new(params, error_model)
        .select(index, rewards, pool.iter().copied(), candidates, belief)
        .ok_or(Error::EmptyPool)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(s: &str) -> Bitmap {
        Bitmap::from_bit_str(s).unwrap()
    }

    #[test]
    fn split_scores() {
        let all = Bitmap::ones(4);
        let uniform = [0.25; 4];
        assert_eq!(split_score(&bits("1100"), &all, &uniform), 0.0);
        assert_eq!(split_score(&bits("1000"), &all, &uniform), 0.5);
        let skewed = [0.7, 0.1, 0.1, 0.1];
        assert!((split_score(&bits("1100"), &all, &skewed) - 0.6).abs() < 1e-12);
        // restricted candidate set
        assert!((split_score(&bits("1100"), &bits("0111"), &skewed) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn error_rates() {
        let idx = TopicIndex::from_parts(
            "t",
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
            vec![bits("10"), bits("11")],
            Some(vec![0.0, 1.0]),
        )
        .unwrap();
        assert_eq!(error_rate(0, &idx, ErrorModel::TfBased), 0.5);
        assert_eq!(error_rate(1, &idx, ErrorModel::TfBased), 0.25);
        assert_eq!(error_rate(0, &idx, ErrorModel::Fixed(0.2)), 0.2);
        assert_eq!(error_rate(1, &idx, ErrorModel::Fixed(0.2)), 0.2);
        assert_eq!(error_rate(1, &idx, ErrorModel::NoNoise), 0.0);
    }

    #[test]
    fn error_model_parsing() {
        assert_eq!("none".parse::<ErrorModel>().unwrap(), ErrorModel::NoNoise);
        assert_eq!("tf".parse::<ErrorModel>().unwrap(), ErrorModel::TfBased);
        assert_eq!("fixed:0.1".parse::<ErrorModel>().unwrap(), ErrorModel::Fixed(0.1));
        assert!("fixed:0.6".parse::<ErrorModel>().is_err());
        assert!("loud".parse::<ErrorModel>().is_err());
        assert_eq!(ErrorModel::Fixed(0.3).to_string(), "fixed:0.3");
    }

    fn two_entity_topic(tf: Option<Vec<f64>>) -> TopicIndex {
        TopicIndex::from_parts(
            "t",
            (0..4).map(|i| format!("d{i}")).collect(),
            vec!["A".into(), "B".into()],
            vec![bits("1100"), bits("1000")],
            tf,
        )
        .unwrap()
    }

    #[test]
    fn gbs_prefers_bisection_and_reward_flips_it() {
        let idx = two_entity_topic(None);
        let belief = DirichletBelief::uniform(4).unwrap();
        let all = Bitmap::ones(4);
        let pick = |gamma: f64, beta: f64, model: ErrorModel, rewards: &[f64]| {
            select_entity(
                &idx,
                &[0, 1],
                &all,
                &belief,
                rewards,
                SelectionParams::new(gamma, beta).unwrap(),
                model,
            )
            .unwrap()
        };
        assert_eq!(pick(0.0, 0.0, ErrorModel::NoNoise, &[0.0, 0.0]), 0);
        assert_eq!(pick(1.0, 0.0, ErrorModel::NoNoise, &[0.0, 0.6]), 1);
        assert_eq!(pick(0.0, 1.0, ErrorModel::Fixed(0.3), &[0.0, 0.0]), 0);
        assert!(matches!(
            select_entity(
                &idx,
                &[],
                &all,
                &belief,
                &[],
                SelectionParams::default(),
                ErrorModel::NoNoise
            ),
            Err(Error::EmptyPool)
        ));
    }

    #[test]
    fn noise_term_prefers_reliable_entities() {
        // h(A) = 0.5 needs tf 0; h(B) = 0.1 needs tf 4.
        let idx = two_entity_topic(Some(vec![0.0, 4.0]));
        let belief = DirichletBelief::uniform(4).unwrap();
        let all = Bitmap::ones(4);
        let obj = Objective::new(SelectionParams::new(0.0, 1.0).unwrap(), ErrorModel::TfBased);
        assert!((obj.score(&idx, &[], 0, &all, &belief) - 1.0).abs() < 1e-12);
        assert!((obj.score(&idx, &[], 1, &all, &belief) - 0.7).abs() < 1e-12);
        assert_eq!(obj.select(&idx, &[], [0, 1], &all, &belief), Some(1));
    }

    #[test]
    fn bit_entities_tie_and_smallest_wins() {
        let rows: Vec<String> = (0..3)
            .map(|b| (0..8).map(|i| if i >> b & 1 == 1 { '1' } else { '0' }).collect())
            .collect();
        let named: Vec<(&str, &str)> = vec![("b0", &rows[0]), ("b1", &rows[1]), ("b2", &rows[2])];
        let idx = TopicIndex::from_bit_rows("t", &named).unwrap();
        let belief = DirichletBelief::uniform(8).unwrap();
        let obj = Objective::default();
        let all = Bitmap::ones(8);
        for e in 0..3 {
            assert_eq!(obj.score(&idx, &[], e, &all, &belief), 0.0);
        }
        assert_eq!(obj.select(&idx, &[], [0, 1, 2], &all, &belief), Some(0));
        assert_eq!(obj.select(&idx, &[], [2, 1], &all, &belief), Some(1));
    }

    #[test]
    fn score_matches_preference_form() {
        let idx = two_entity_topic(None);
        let belief = DirichletBelief::from_alpha(vec![7.0, 1.0, 1.0, 1.0]).unwrap();
        let all = Bitmap::ones(4);
        let pi = belief.preference();
        let obj = Objective::default();
        let direct = split_score(idx.incidence(0), &all, pi.probs());
        assert!((obj.score(&idx, &[], 0, &all, &belief) - direct).abs() < 1e-12);
    }

    fn arb_instance() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<bool>>, Vec<f64>, Vec<f64>)> {
        (2usize..10, 1usize..8).prop_flat_map(|(n, m)| {
            (
                prop::collection::vec(1u32..5, n).prop_map(|v| v.into_iter().map(f64::from).collect()),
                prop::collection::vec(
                    prop::collection::vec(any::<bool>(), n).prop_filter("non-empty", |r| r.iter().any(|b| *b)),
                    m,
                ),
                prop::collection::vec(-1.0f64..1.0, m),
                prop::collection::vec(0.0f64..3.0, m),
            )
        })
    }

    proptest! {
        #[test]
        fn argmin_invariant_under_constant_shifts(
            (alpha, rows, rewards, tf) in arb_instance(),
            shift in -0.5f64..0.5,
        ) {
            let n = alpha.len();
            let incidence: Vec<Bitmap> = rows.into_iter().map(Bitmap::from_bools).collect();
            let m = incidence.len();
            let labels: Vec<String> = (0..m).map(|e| format!("e{e}")).collect();
            let products: Vec<String> = (0..n).map(|d| format!("d{d}")).collect();
            let idx = TopicIndex::from_parts("t", products.clone(), labels.clone(), incidence.clone(), Some(tf.clone())).unwrap();
            let belief = DirichletBelief::from_alpha(alpha).unwrap();
            let all = Bitmap::ones(n);
            // rewards on a dyadic grid so the shifted values stay exact
            let rewards: Vec<f64> = rewards.iter().map(|r| (r * 64.0).round() / 64.0).collect();
            let shift = (shift * 64.0).round() / 64.0;
            let shifted: Vec<f64> = rewards.iter().map(|r| r + shift).collect();
            let obj = Objective::new(SelectionParams::new(1.0, 0.0).unwrap(), ErrorModel::NoNoise);
            let a = obj.select(&idx, &rewards, 0..m, &all, &belief);
            let b = obj.select(&idx, &shifted, 0..m, &all, &belief);
            let sa = obj.score(&idx, &rewards, a.unwrap(), &all, &belief);
            let sb = obj.score(&idx, &rewards, b.unwrap(), &all, &belief);
            prop_assert!((sa - sb).abs() < 1e-9);

            // constant error rate: Fixed(eps) behaves like NoNoise up to a constant
            let noisy = Objective::new(SelectionParams::new(1.0, 1.0).unwrap(), ErrorModel::Fixed(0.25));
            let c = noisy.select(&idx, &rewards, 0..m, &all, &belief);
            let sc = obj.score(&idx, &rewards, c.unwrap(), &all, &belief);
            prop_assert!((sa - sc).abs() < 1e-9);
        }

        #[test]
        fn error_rate_in_range(tf in 0.0f64..1e6, eps in 0.0f64..=0.5) {
            let idx = TopicIndex::from_parts("t", vec!["d".into()], vec!["e".into()],
                vec![Bitmap::ones(1)], Some(vec![tf])).unwrap();
            for model in [ErrorModel::NoNoise, ErrorModel::Fixed(eps), ErrorModel::TfBased] {
                let h = error_rate(0, &idx, model);
                prop_assert!((0.0..=0.5).contains(&h));
            }
            prop_assert!(error_rate(0, &idx, ErrorModel::TfBased) > 0.0);
        }
    }
}
