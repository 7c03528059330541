//! Simulated users.
//!
//! A simulated user has a target product in mind and answers "yes" when
//! the asked entity occurs in the target's documents. The noisy variant
//! flips each truthful answer independently with the entity's error rate.
//! Flip decisions come from a stream keyed by (oracle seed, question
//! number), so a trace is reproducible no matter how sessions are batched.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::TopicIndex;
use crate::error::{Error, Result};
use crate::model::TopicModel;
use crate::rng;
use crate::selector::ErrorModel;
use crate::session::{Answer, Session, SessionConfig, Transcript};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Oracle {
    Perfect,
    Noisy { error_model: ErrorModel, seed: u64 },
}

impl Oracle {
    /// Perfect for [`ErrorModel::NoNoise`], noisy otherwise.
    pub fn for_model(error_model: ErrorModel, seed: u64) -> Self {
        if error_model.is_noisy() {
            Oracle::Noisy { error_model, seed }
        } else {
            Oracle::Perfect
        }
    }

    pub fn truthful(index: &TopicIndex, entity: usize, target: usize) -> bool {
        index.incidence(entity).contains(target)
    }

    /// The user's reply to question number `question` (1-based) about `entity`.
    pub fn answer(&self, index: &TopicIndex, entity: usize, target: usize, question: usize) -> Answer {
        let truth = Oracle::truthful(index, entity, target);
        let emitted = match *self {
            Oracle::Perfect => truth,
            Oracle::Noisy { error_model, seed } => {
                let h = error_model.rate(index, entity);
                let flip = rng::stream(&[seed, question as u64]).random::<f64>() < h;
                truth != flip
            }
        };
        Answer::from_presence(emitted)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedTurn {
    pub entity: String,
    pub truthful: Answer,
    pub emitted: Answer,
    pub target_rank_after: usize,
    pub u_size_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub topic_id: String,
    pub target: String,
    pub initial_rank: usize,
    pub final_rank: usize,
    pub turns: Vec<SimulatedTurn>,
    pub transcript: Transcript,
}

fn check_target(index: &TopicIndex, target: usize) -> Result<()> {
    if target >= index.len() {
        return Err(Error::ProductOutOfRange {
            index: target,
            len: index.len(),
        });
    }
    Ok(())
}

/// Drives a session to completion against a simulated user.
pub fn run_session(
    model: &TopicModel,
    index: Arc<TopicIndex>,
    target: usize,
    config: SessionConfig,
    oracle: Oracle,
) -> Result<SimulationTrace> {
    check_target(&index, target)?;
    let mut session = Session::start(index.clone(), model, config)?;
    let initial_rank = session.rank_of(target);
    let mut turns = Vec::new();
    while let Some(q) = session.current_question() {
        let truthful = Answer::from_presence(Oracle::truthful(&index, q.entity, target));
        let emitted = oracle.answer(&index, q.entity, target, q.number);
        session.submit(emitted)?;
        turns.push(SimulatedTurn {
            entity: q.label,
            truthful,
            emitted,
            target_rank_after: session.rank_of(target),
            u_size_after: session.candidates().count_ones(),
        });
    }
    Ok(SimulationTrace {
        topic_id: index.topic_id().to_string(),
        target: index.product_ids()[target].clone(),
        initial_rank,
        final_rank: session.rank_of(target),
        turns,
        transcript: session.transcript(),
    })
}

/// Target rank before any question and after each answered question.
/// Entry `i` is the rank after `i` answers; the vector is shorter than
/// `n_q_limit + 1` when the session stops early.
pub fn rank_trajectory(
    model: &TopicModel,
    index: Arc<TopicIndex>,
    target: usize,
    config: SessionConfig,
    oracle: Oracle,
) -> Result<Vec<usize>> {
    check_target(&index, target)?;
    let mut session = Session::start(index.clone(), model, config)?;
    let mut ranks = vec![session.rank_of(target)];
    while let Some(q) = session.current_question() {
        session.submit(oracle.answer(&index, q.entity, target, q.number))?;
        ranks.push(session.rank_of(target));
    }
    Ok(ranks)
}
