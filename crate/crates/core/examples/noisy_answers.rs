//! Users who sometimes answer wrongly.
//!
//! Rare entities are answered less reliably under the term-frequency error
//! model. Raising `beta` steers the selector towards entities users are
//! sure about, which matters more as the budget grows.

use qsbps::corpus::generate_synthetic;
use qsbps::evaluation::{evaluate, EvalConfig, Workload};
use qsbps::{ErrorModel, FieldMode, ModelSet, SelectionParams, SplitPart, SplitRatios, SyntheticSpec};

fn main() -> qsbps::Result<()> {
    let spec = SyntheticSpec {
        n_products: 32,
        n_bit_entities: 5,
        n_distractors: 60,
        n_topics: 4,
        max_tf: 20,
        seed: 9,
        ..SyntheticSpec::default()
    };
    let corpus = generate_synthetic(&spec, FieldMode::MetadataOnly)?;
    let work = Workload::build(&corpus, FieldMode::MetadataOnly, SplitRatios::default(), 0)?;
    let models = ModelSet::untrained(&work.plain_indexes());

    for error_model in [ErrorModel::NoNoise, ErrorModel::Fixed(0.1), ErrorModel::TfBased] {
        for beta in [0.0, 1.0] {
            let cfg = EvalConfig {
                n_q: vec![5, 10],
                params: SelectionParams::new(0.0, beta)?,
                error_model,
                trials: 6,
                part: SplitPart::All,
                ..EvalConfig::default()
            };
            let r = evaluate(&models, &work.indexes, &work.splits, &cfg)?;
            println!(
                "{:<10} beta={beta:.1}  MRR@5={:.3}  MRR@10={:.3}",
                error_model.to_string(),
                r[0].mrr.mean,
                r[1].mrr.mean
            );
        }
    }
    Ok(())
}
