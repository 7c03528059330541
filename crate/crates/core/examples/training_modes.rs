//! Trains the four model variants on a corpus with skewed purchases and
//! compares test MRR at a few question budgets.

use qsbps::corpus::generate_synthetic;
use qsbps::evaluation::{evaluate, EvalConfig, Workload};
use qsbps::trainer::{train_indexes, TrainingMode};
use qsbps::{FieldMode, SelectionParams, SplitRatios, SyntheticSpec};

fn main() -> qsbps::Result<()> {
    let spec = SyntheticSpec {
        n_products: 64,
        n_bit_entities: 6,
        n_distractors: 60,
        n_topics: 6,
        purchase_skew: Some(1.2),
        purchases_per_topic: 120,
        seed: 3,
        ..SyntheticSpec::default()
    };
    let corpus = generate_synthetic(&spec, FieldMode::MetadataOnly)?;
    let work = Workload::build(&corpus, FieldMode::MetadataOnly, SplitRatios::default(), 1)?;

    let cfg = EvalConfig {
        n_q: vec![0, 2, 4, 6],
        params: SelectionParams::new(0.5, 0.0)?,
        ..EvalConfig::default()
    };
    println!("mode           MRR at N_q = 0, 2, 4, 6");
    for mode in [
        TrainingMode::Duet,
        TrainingMode::ProductOnly,
        TrainingMode::QuestionOnly,
        TrainingMode::None,
    ] {
        let models = train_indexes(&work.plain_indexes(), &work.splits, mode, 1)?;
        let reports = evaluate(&models, &work.indexes, &work.splits, &cfg)?;
        let cells: Vec<String> = reports.iter().map(|r| format!("{:.3}", r.mrr.mean)).collect();
        println!("{:<14} {}", mode.as_str(), cells.join("  "));
    }
    Ok(())
}
