//! The online question/answer loop.
//!
//! A session starts from a trained topic model, asks the selected entity,
//! and folds each answer into the belief. Without answer noise, the
//! candidate set is also intersected with the products consistent with the
//! answer. The loop stops when the question budget is spent, when a single
//! candidate is left, or when every entity has been asked.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::belief::DirichletBelief;
use crate::bitmap::Bitmap;
use crate::corpus::TopicIndex;
use crate::error::{Error, Result};
use crate::model::TopicModel;
use crate::rng;
use crate::selector::{ErrorModel, Objective, SelectionParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Yes,
    No,
    /// "Not sure": the entity is consumed without updating anything.
    Skip,
}

impl Answer {
    pub fn from_presence(present: bool) -> Self {
        if present {
            Answer::Yes
        } else {
            Answer::No
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Answer::Yes => "yes",
            Answer::No => "no",
            Answer::Skip => "skip",
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Answer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "yes" | "y" => Ok(Answer::Yes),
            "no" | "n" => Ok(Answer::No),
            "skip" | "s" | "not sure" | "?" => Ok(Answer::Skip),
            other => Err(Error::invalid(format!("unknown answer `{other}`"))),
        }
    }
}

/// How the next entity is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionPolicy {
    /// Argmin of the selection objective.
    #[default]
    Qsbps,
    /// Uniformly random unasked entity; the baseline.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub params: SelectionParams,
    pub error_model: ErrorModel,
    pub n_q_limit: usize,
    #[serde(default)]
    pub policy: QuestionPolicy,
}

impl SessionConfig {
    pub fn new(params: SelectionParams, error_model: ErrorModel, n_q_limit: usize) -> Self {
        SessionConfig {
            params,
            error_model,
            n_q_limit,
            policy: QuestionPolicy::Qsbps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.error_model.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    BudgetExhausted,
    Identified,
    PoolExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    AwaitingAnswer,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    /// 1-based question number within the session.
    pub number: usize,
    /// Position of the entity in the topic pool.
    pub entity: usize,
    pub label: String,
    pub prompt: String,
}

pub fn prompt_for(label: &str) -> String {
    format!("Are you interested in {label}?")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedProduct {
    pub product_id: String,
    pub score: f64,
}

/// One answered question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub entity: String,
    pub answer: Answer,
    pub top1_before: String,
    pub u_size_after: usize,
    pub top1_after: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Exportable record of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub topic_id: String,
    pub params: SessionConfig,
    pub questions: Vec<Turn>,
    pub final_ranking_topk: Vec<RankedProduct>,
}

pub const TRANSCRIPT_TOP_K: usize = 10;

#[derive(Debug, Clone)]
pub struct Session {
    index: Arc<TopicIndex>,
    rewards: Vec<f64>,
    belief: DirichletBelief,
    candidates: Bitmap,
    open: Bitmap,
    history: Vec<Turn>,
    config: SessionConfig,
    pending: Option<usize>,
    finish: Option<FinishReason>,
}

impl Session {
    /// Initializes the belief from the model, puts every product in the
    /// candidate set and selects the first question.
    pub fn start(index: Arc<TopicIndex>, model: &TopicModel, config: SessionConfig) -> Result<Self> {
        config.validate()?;
        let rewards = model.rewards_for(&index)?;
        if index.pool_len() == 0 {
            return Err(Error::EmptyPool);
        }
        let n = index.len();
        let mut session = Session {
            rewards,
            belief: model.alpha().clone(),
            candidates: Bitmap::ones(n),
            open: Bitmap::ones(index.pool_len()),
            history: Vec::new(),
            config,
            pending: None,
            finish: None,
            index,
        };
        session.advance();
        Ok(session)
    }

    /// Starts a session and feeds it a recorded answer sequence.
    pub fn replay(
        index: Arc<TopicIndex>,
        model: &TopicModel,
        config: SessionConfig,
        answers: &[Answer],
    ) -> Result<Self> {
        let mut s = Session::start(index, model, config)?;
        for &a in answers {
            s.submit(a)?;
        }
        Ok(s)
    }

    pub fn status(&self) -> SessionStatus {
        if self.pending.is_some() {
            SessionStatus::AwaitingAnswer
        } else {
            SessionStatus::Finished
        }
    }

    pub fn finish_reason(&self) -> Option<FinishReason> {
        self.finish
    }

    pub fn current_question(&self) -> Option<Question> {
        self.pending.map(|e| {
            let label = self.index.label(e).to_string();
            Question {
                number: self.history.len() + 1,
                entity: e,
                prompt: prompt_for(&label),
                label,
            }
        })
    }

    /// Applies an answer to the pending question and selects the next one.
    /// Returns the next question, or `None` once the session is finished.
    pub fn submit(&mut self, answer: Answer) -> Result<Option<Question>> {
        let entity = self.pending.take().ok_or(Error::SessionFinished)?;
        self.open.remove(entity);
        let top1_before = self.top1();
        let mut warning = None;
        if answer != Answer::Skip {
            let consistent = self.index.consistent_with(entity, answer == Answer::Yes);
            self.belief.observe_answer(&consistent)?;
            if !self.config.error_model.is_noisy() {
                let narrowed = self.candidates.and(&consistent);
                if narrowed.none() {
                    warning = Some("answer contradicts earlier answers; candidate set kept".to_string());
                } else {
                    self.candidates = narrowed;
                }
            }
        }
        self.history.push(Turn {
            entity: self.index.label(entity).to_string(),
            answer,
            top1_before,
            u_size_after: self.candidates.count_ones(),
            top1_after: self.top1(),
            warning,
        });
        self.advance();
        Ok(self.current_question())
    }

    fn advance(&mut self) {
        let asked = self.history.len();
        let reason = if asked >= self.config.n_q_limit {
            Some(FinishReason::BudgetExhausted)
        } else if self.candidates.count_ones() <= 1 {
            Some(FinishReason::Identified)
        } else if self.open.none() {
            Some(FinishReason::PoolExhausted)
        } else {
            None
        };
        if let Some(r) = reason {
            self.finish = Some(r);
            self.pending = None;
            return;
        }
        self.pending = match self.config.policy {
            QuestionPolicy::Qsbps => Objective::new(self.config.params, self.config.error_model).select(
                &self.index,
                &self.rewards,
                self.open.iter_ones(),
                &self.candidates,
                &self.belief,
            ),
            QuestionPolicy::Random { seed } => {
                let k = self.open.count_ones();
                let pick = rng::stream(&[seed, asked as u64]).random_range(0..k);
                self.open.iter_ones().nth(pick)
            }
        };
    }

    pub fn index(&self) -> &Arc<TopicIndex> {
        &self.index
    }

    pub fn belief(&self) -> &DirichletBelief {
        &self.belief
    }

    pub fn candidates(&self) -> &Bitmap {
        &self.candidates
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn history(&self) -> &[Turn] {
        &self.history
    }

    pub fn question_count(&self) -> usize {
        self.history.len()
    }

    /// Entities not yet asked, as pool positions.
    pub fn unasked(&self) -> impl Iterator<Item = usize> + '_ {
        self.open.iter_ones()
    }

    /// Worst-index rank of a product (topic position) under the belief.
    pub fn rank_of(&self, product: usize) -> usize {
        self.belief.rank_of(product)
    }

    /// Products by descending preference, ties in product order; at most `k`.
    pub fn ranking(&self, k: usize) -> Vec<RankedProduct> {
        let pi = self.belief.preference();
        let probs = pi.probs();
        let alpha = self.belief.alpha();
        let mut order: Vec<usize> = (0..alpha.len()).collect();
        order.sort_by(|&a, &b| alpha[b].total_cmp(&alpha[a]).then(a.cmp(&b)));
        order
            .into_iter()
            .take(k)
            .map(|d| RankedProduct {
                product_id: self.index.product_ids()[d].clone(),
                score: probs[d],
            })
            .collect()
    }

    fn top1(&self) -> String {
        let alpha = self.belief.alpha();
        let mut best = 0;
        for (d, a) in alpha.iter().enumerate() {
            if *a > alpha[best] {
                best = d;
            }
        }
        self.index.product_ids()[best].clone()
    }

    pub fn transcript(&self) -> Transcript {
        Transcript {
            topic_id: self.index.topic_id().to_string(),
            params: self.config,
            questions: self.history.clone(),
            final_ranking_topk: self.ranking(TRANSCRIPT_TOP_K),
        }
    }
}
