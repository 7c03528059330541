//! Interactive product search by sequential Bayesian questioning.
//!
//! A topic's products carry annotated entities. The engine keeps a
//! Dirichlet belief over which product the user wants and repeatedly asks
//! "Are you interested in [entity]?", choosing the entity that best splits
//! the belief's probability mass while favouring entities that historically
//! lifted purchased products in the ranking.
//!
//! The pieces, in pipeline order:
//!
//! - [`corpus`]: corpus files, topic indexes, splits, synthetic corpora
//! - [`trainer`]: offline training of topic beliefs and question rewards
//! - [`selector`]: the question-selection objective and error models
//! - [`session`]: the online question/answer loop
//! - [`simulator`]: simulated users, perfect or noisy
//! - [`evaluation`]: MRR / Recall@5 / NDCG, grids, sweeps and baselines

pub mod belief;
pub mod bitmap;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod rng;
pub mod selector;
pub mod session;
pub mod simulator;
pub mod trainer;

pub use belief::{AnswerIndicator, DirichletBelief, Preference};
pub use bitmap::Bitmap;
pub use corpus::{Corpus, FieldMode, Split, SplitPart, SplitRatios, SyntheticSpec, TopicIndex};
pub use error::{Error, Result};
pub use model::{ModelSet, TopicModel};
pub use selector::{ErrorModel, Objective, SelectionParams};
pub use session::{Answer, QuestionPolicy, Session, SessionConfig, SessionStatus};
pub use simulator::Oracle;
pub use trainer::TrainingMode;
