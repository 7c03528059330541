//! Ranking metrics and the experiment harness.
//!
//! Each evaluated session has a single relevant product (the target), so
//! per-session metrics depend only on its 1-based rank `r`:
//! reciprocal rank `1/r`, hit@5 `[r <= 5]` and NDCG `1/log2(1 + r)`, with
//! no rank cutoff. Ranks use the worst-index tie convention.
//!
//! One session runs per (topic, target event, trial) up to the largest
//! question budget in the grid; the rank after `n` answers is read off the
//! trajectory, which is valid because question choice never depends on
//! the budget.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{split_corpus, Corpus, FieldMode, Split, SplitPart, SplitRatios, TopicIndex};
use crate::error::{Error, Result};
use crate::model::{ModelSet, TopicModel};
use crate::rng;
use crate::selector::{ErrorModel, SelectionParams};
use crate::session::{QuestionPolicy, SessionConfig};
use crate::simulator::{rank_trajectory, Oracle};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionMetrics {
    pub rr: f64,
    pub hit5: f64,
    pub ndcg: f64,
}

/// Metrics for one session whose target ended at `rank` among `n` products.
pub fn session_metrics(rank: usize, n: usize) -> Result<SessionMetrics> {
    if rank == 0 || rank > n {
        return Err(Error::invalid(format!("rank {rank} outside 1..={n}")));
    }
    Ok(SessionMetrics {
        rr: 1.0 / rank as f64,
        hit5: if rank <= 5 { 1.0 } else { 0.0 },
        ndcg: 1.0 / (1.0 + rank as f64).log2(),
    })
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn of(values: &[f64]) -> Estimate {
        let n = values.len() as f64;
        if values.is_empty() {
            return Estimate { mean: 0.0, stderr: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n;
        let stderr = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Estimate { mean, stderr }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    #[default]
    Qsbps,
    Random,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Qsbps => "qsbps",
            PolicyKind::Random => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Question budgets to report; sessions run to the largest.
    pub n_q: Vec<usize>,
    pub params: SelectionParams,
    /// Error model used both by the selector and by the simulated user.
    pub error_model: ErrorModel,
    /// Sessions per target event. Deterministic configurations (perfect
    /// answers with the objective-driven policy) always run one.
    pub trials: usize,
    pub seed: u64,
    pub part: SplitPart,
    pub policy: PolicyKind,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            n_q: vec![5],
            params: SelectionParams::default(),
            error_model: ErrorModel::NoNoise,
            trials: 1,
            seed: 42,
            part: SplitPart::Test,
            policy: PolicyKind::Qsbps,
        }
    }
}

impl EvalConfig {
    fn effective_trials(&self) -> usize {
        if !self.error_model.is_noisy() && self.policy == PolicyKind::Qsbps {
            1
        } else {
            self.trials.max(1)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_q: usize,
    pub gamma: f64,
    pub beta: f64,
    pub error_model: String,
    pub mode: String,
    pub field_mode: String,
    pub policy: String,
    pub n_sessions: usize,
    pub mrr: Estimate,
    pub recall_at_5: Estimate,
    pub ndcg: Estimate,
}

/// Ranks of one simulated session after each answered question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionOutcome {
    pub topic_id: String,
    pub target: usize,
    pub trial: usize,
    pub n_products: usize,
    pub ranks: Vec<usize>,
}

impl SessionOutcome {
    /// Rank after `n_q` questions, or the final rank if the session stopped earlier.
    pub fn rank_at(&self, n_q: usize) -> usize {
        self.ranks[n_q.min(self.ranks.len() - 1)]
    }
}

struct Job<'a> {
    index: &'a Arc<TopicIndex>,
    model: &'a TopicModel,
    position: usize,
    target: usize,
    trial: usize,
}

/// Runs every session of the configuration and returns their rank
/// trajectories in a fixed order (topic, target event, trial).
pub fn simulate_sessions(
    models: &ModelSet,
    indexes: &[Arc<TopicIndex>],
    splits: &[Split],
    cfg: &EvalConfig,
) -> Result<Vec<SessionOutcome>> {
    cfg.params.validate()?;
    cfg.error_model.validate()?;
    if cfg.n_q.is_empty() {
        return Err(Error::invalid("empty question-budget list"));
    }
    let max_q = *cfg.n_q.iter().max().unwrap();
    let by_topic: BTreeMap<&str, &Arc<TopicIndex>> = indexes.iter().map(|i| (i.topic_id(), i)).collect();
    let mut sorted: Vec<&Split> = splits.iter().collect();
    sorted.sort_by(|a, b| a.topic_id.cmp(&b.topic_id));

    let trials = cfg.effective_trials();
    let mut jobs = Vec::new();
    for split in sorted {
        let index = by_topic
            .get(split.topic_id.as_str())
            .ok_or_else(|| Error::UnknownTopic(split.topic_id.clone()))?;
        let model = models
            .get(&split.topic_id)
            .ok_or_else(|| Error::Model(format!("no model for topic `{}`", split.topic_id)))?;
        for (position, target) in split.part(cfg.part).into_iter().enumerate() {
            for trial in 0..trials {
                jobs.push(Job {
                    index,
                    model,
                    position,
                    target,
                    trial,
                });
            }
        }
    }

    jobs.par_iter()
        .map(|job| {
            let key = rng::derive_seed(&[
                cfg.seed,
                rng::stable_hash(job.index.topic_id()),
                job.position as u64,
                job.trial as u64,
            ]);
            let policy = match cfg.policy {
                PolicyKind::Qsbps => QuestionPolicy::Qsbps,
                PolicyKind::Random => QuestionPolicy::Random {
                    seed: rng::derive_seed(&[key, 2]),
                },
            };
            let config = SessionConfig {
                params: cfg.params,
                error_model: cfg.error_model,
                n_q_limit: max_q,
                policy,
            };
            let oracle = Oracle::for_model(cfg.error_model, rng::derive_seed(&[key, 1]));
            let ranks = rank_trajectory(job.model, job.index.clone(), job.target, config, oracle)?;
            Ok(SessionOutcome {
                topic_id: job.index.topic_id().to_string(),
                target: job.target,
                trial: job.trial,
                n_products: job.index.len(),
                ranks,
            })
        })
        .collect()
}

/// Aggregates outcomes into one report per question budget.
pub fn aggregate(outcomes: &[SessionOutcome], models: &ModelSet, cfg: &EvalConfig) -> Result<Vec<MetricsReport>> {
    if outcomes.is_empty() {
        return Err(Error::invalid("no sessions to evaluate"));
    }
    cfg.n_q
        .iter()
        .map(|&n_q| {
            let mut rr = Vec::with_capacity(outcomes.len());
            let mut hit = Vec::with_capacity(outcomes.len());
            let mut ndcg = Vec::with_capacity(outcomes.len());
            for o in outcomes {
                let m = session_metrics(o.rank_at(n_q), o.n_products)?;
                rr.push(m.rr);
                hit.push(m.hit5);
                ndcg.push(m.ndcg);
            }
            Ok(MetricsReport {
                n_q,
                gamma: cfg.params.gamma,
                beta: cfg.params.beta,
                error_model: cfg.error_model.to_string(),
                mode: models.mode.to_string(),
                field_mode: models.field_mode.to_string(),
                policy: cfg.policy.as_str().to_string(),
                n_sessions: outcomes.len(),
                mrr: Estimate::of(&rr),
                recall_at_5: Estimate::of(&hit),
                ndcg: Estimate::of(&ndcg),
            })
        })
        .collect()
}

/// Simulates and aggregates; one report per entry of `cfg.n_q`.
pub fn evaluate(
    models: &ModelSet,
    indexes: &[Arc<TopicIndex>],
    splits: &[Split],
    cfg: &EvalConfig,
) -> Result<Vec<MetricsReport>> {
    let outcomes = simulate_sessions(models, indexes, splits, cfg)?;
    aggregate(&outcomes, models, cfg)
}

/// Random question choice over an untrained model, same pipeline otherwise.
pub fn random_baseline(indexes: &[Arc<TopicIndex>], splits: &[Split], cfg: &EvalConfig) -> Result<Vec<MetricsReport>> {
    let plain: Vec<TopicIndex> = indexes.iter().map(|i| (**i).clone()).collect();
    let models = ModelSet::untrained(&plain);
    let cfg = EvalConfig {
        policy: PolicyKind::Random,
        ..cfg.clone()
    };
    evaluate(&models, indexes, splits, &cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxes {
    pub n_q: Vec<usize>,
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl SweepAxes {
    /// gamma in 0, 0.1, ..., 1.0.
    pub fn default_gammas() -> Vec<f64> {
        (0..=10).map(|i| f64::from(i) / 10.0).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalGamma {
    pub n_q: usize,
    pub beta: f64,
    pub gamma: f64,
    pub mrr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub cells: Vec<MetricsReport>,
    pub optimal: Vec<OptimalGamma>,
}

/// Evaluates the full (gamma, beta, N_q) grid on the validation part and
/// picks the best gamma for every (N_q, beta); ties go to the smaller gamma.
pub fn sweep(
    models: &ModelSet,
    indexes: &[Arc<TopicIndex>],
    splits: &[Split],
    axes: &SweepAxes,
    base: &EvalConfig,
) -> Result<SweepGrid> {
    if axes.n_q.is_empty() || axes.gammas.is_empty() || axes.betas.is_empty() {
        return Err(Error::invalid("sweep axes must be non-empty"));
    }
    if splits.iter().all(|s| s.validation.is_empty()) {
        return Err(Error::invalid("validation split is empty"));
    }
    let mut cells = Vec::new();
    for &beta in &axes.betas {
        for &gamma in &axes.gammas {
            let cfg = EvalConfig {
                n_q: axes.n_q.clone(),
                params: SelectionParams::new(gamma, beta)?,
                part: SplitPart::Validation,
                ..base.clone()
            };
            cells.extend(evaluate(models, indexes, splits, &cfg)?);
        }
    }
    Ok(SweepGrid {
        optimal: optimal_gammas(&cells),
        cells,
    })
}

pub fn optimal_gammas(cells: &[MetricsReport]) -> Vec<OptimalGamma> {
    let mut best: BTreeMap<(usize, u64), OptimalGamma> = BTreeMap::new();
    for c in cells {
        let key = (c.n_q, c.beta.to_bits());
        let better = match best.get(&key) {
            None => true,
            Some(b) => c.mrr.mean > b.mrr || (c.mrr.mean == b.mrr && c.gamma < b.gamma),
        };
        if better {
            best.insert(
                key,
                OptimalGamma {
                    n_q: c.n_q,
                    beta: c.beta,
                    gamma: c.gamma,
                    mrr: c.mrr.mean,
                },
            );
        }
    }
    let mut out: Vec<OptimalGamma> = best.into_values().collect();
    out.sort_by(|a, b| a.beta.total_cmp(&b.beta).then(a.n_q.cmp(&b.n_q)));
    out
}

const REPORT_HEADER: [&str; 15] = [
    "n_q",
    "gamma",
    "beta",
    "error_model",
    "mode",
    "field_mode",
    "policy",
    "n_sessions",
    "mrr",
    "mrr_se",
    "recall_at_5",
    "recall_at_5_se",
    "ndcg",
    "ndcg_se",
    "part",
];

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

/// One row per report, fixed column order, six decimals.
pub fn write_reports_csv<W: Write>(out: W, reports: &[MetricsReport], part: SplitPart) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    let part = serde_json::to_value(part)?.as_str().unwrap_or_default().to_string();
    for r in reports {
        w.write_record([
            r.n_q.to_string(),
            f6(r.gamma),
            f6(r.beta),
            r.error_model.clone(),
            r.mode.clone(),
            r.field_mode.clone(),
            r.policy.clone(),
            r.n_sessions.to_string(),
            f6(r.mrr.mean),
            f6(r.mrr.stderr),
            f6(r.recall_at_5.mean),
            f6(r.recall_at_5.stderr),
            f6(r.ndcg.mean),
            f6(r.ndcg.stderr),
            part.clone(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

/// `(n_q, gamma, beta, mrr)` rows for external heatmap plotting.
pub fn write_heatmap_csv<W: Write>(out: W, cells: &[MetricsReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n_q", "gamma", "beta", "mrr"])?;
    for c in cells {
        w.write_record([c.n_q.to_string(), f6(c.gamma), f6(c.beta), f6(c.mrr.mean)])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn write_optimal_csv<W: Write>(out: W, optimal: &[OptimalGamma]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n_q", "beta", "gamma", "mrr"])?;
    for o in optimal {
        w.write_record([o.n_q.to_string(), f6(o.beta), f6(o.gamma), f6(o.mrr)])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

/// Topic indexes and their splits, ready to evaluate.
#[derive(Debug, Clone)]
pub struct Workload {
    pub indexes: Vec<Arc<TopicIndex>>,
    pub splits: Vec<Split>,
}

impl Workload {
    /// Indexes every splittable corpus topic and splits it.
    pub fn build(corpus: &Corpus, field_mode: FieldMode, ratios: SplitRatios, seed: u64) -> Result<Workload> {
        let indexes: Vec<TopicIndex> = corpus
            .topics()
            .iter()
            .map(|t| corpus.index_with(&t.id, field_mode))
            .collect::<Result<_>>()?;
        let splits = split_corpus(&indexes, ratios, seed)?;
        let keep: BTreeSet<&str> = splits.iter().map(|s| s.topic_id.as_str()).collect();
        let indexes = indexes
            .iter()
            .filter(|i| keep.contains(i.topic_id()))
            .map(|i| Arc::new(i.clone()))
            .collect();
        Ok(Workload { indexes, splits })
    }

    /// Rebuilds the indexes and splits a model set was trained with.
    pub fn for_models(corpus: &Corpus, models: &ModelSet) -> Result<Workload> {
        let split = models
            .split
            .ok_or_else(|| Error::Model("model file does not record its split".to_string()))?;
        let indexes: Vec<TopicIndex> = models
            .topics()
            .map(|m| corpus.index_with(m.topic_id(), models.field_mode))
            .collect::<Result<_>>()?;
        let splits = split_corpus(&indexes, split.ratios, split.seed)?;
        if splits.len() != indexes.len() {
            return Err(Error::Model("corpus topics do not match the model".to_string()));
        }
        for (m, idx) in models.topics().zip(&indexes) {
            m.rewards_for(idx)?;
        }
        Ok(Workload {
            indexes: indexes.into_iter().map(Arc::new).collect(),
            splits,
        })
    }

    pub fn plain_indexes(&self) -> Vec<TopicIndex> {
        self.indexes.iter().map(|i| (**i).clone()).collect()
    }
}
