//! Drives a session by hand: answer, skip, inspect the ranking, export the
//! transcript.

use std::sync::Arc;

use qsbps::corpus::generate_synthetic;
use qsbps::{Answer, ErrorModel, FieldMode, SelectionParams, Session, SessionConfig, SyntheticSpec, TopicModel};

fn main() -> qsbps::Result<()> {
    let corpus = generate_synthetic(&SyntheticSpec::binary(3, 2, 4), FieldMode::MetadataOnly)?;
    let index = Arc::new(corpus.index("synthetic")?);
    let model = TopicModel::untrained(&index);
    let config = SessionConfig::new(SelectionParams::default(), ErrorModel::NoNoise, 6);
    let mut session = Session::start(index, &model, config)?;

    let script = [Answer::Yes, Answer::Skip, Answer::No, Answer::Yes, Answer::No];
    for answer in script {
        let Some(q) = session.current_question() else { break };
        println!("Q{} {}  -> {answer}", q.number, q.prompt);
        session.submit(answer)?;
        println!("   {} candidates left", session.candidates().count_ones());
    }
    println!("finished: {:?}", session.finish_reason());
    for (i, p) in session.ranking(3).iter().enumerate() {
        println!("  #{} {} ({:.3})", i + 1, p.product_id, p.score);
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&session.transcript()).expect("transcript serializes")
    );
    Ok(())
}
