//! Sixteen products told apart by four binary entities.
//!
//! With a uniform belief and truthful answers, each question halves the
//! candidate set, so every product is found in exactly four questions.
//!
//! ```text
//! cargo run -p qsbps --example bisection
//! ```

use std::sync::Arc;

use qsbps::corpus::generate_synthetic;
use qsbps::simulator::run_session;
use qsbps::{ErrorModel, FieldMode, Oracle, SelectionParams, SessionConfig, SyntheticSpec, TopicModel};

fn main() -> qsbps::Result<()> {
    let corpus = generate_synthetic(&SyntheticSpec::binary(4, 0, 7), FieldMode::MetadataOnly)?;
    let index = Arc::new(corpus.index("synthetic")?);
    let model = TopicModel::untrained(&index);
    let config = SessionConfig::new(SelectionParams::default(), ErrorModel::NoNoise, 10);

    for target in [0, 5, 10, 15] {
        let trace = run_session(&model, index.clone(), target, config, Oracle::Perfect)?;
        let asked: Vec<String> = trace
            .turns
            .iter()
            .map(|t| format!("{}={}", t.entity, t.emitted))
            .collect();
        println!(
            "{}: {} (rank {} -> {})",
            trace.target,
            asked.join(" "),
            trace.initial_rank,
            trace.final_rank
        );
    }
    Ok(())
}
