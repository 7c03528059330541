//! Entities mined from reviews enlarge the question pool.

use qsbps::corpus::generate_synthetic;
use qsbps::evaluation::{evaluate, EvalConfig, Workload};
use qsbps::{ErrorModel, FieldMode, ModelSet, SplitPart, SplitRatios, SyntheticSpec};

fn main() -> qsbps::Result<()> {
    // Half of the distractor mentions live only in reviews.
    let spec = SyntheticSpec {
        n_products: 16,
        n_bit_entities: 4,
        n_distractors: 30,
        n_topics: 3,
        review_fraction: 0.5,
        seed: 21,
        ..SyntheticSpec::default()
    };
    for field_mode in [FieldMode::MetadataOnly, FieldMode::MetadataAndReviews] {
        let corpus = generate_synthetic(&spec, field_mode)?;
        let work = Workload::build(&corpus, field_mode, SplitRatios::default(), 0)?;
        let pool: usize = work.indexes.iter().map(|i| i.pool_len()).sum();
        let models = ModelSet::untrained(&work.plain_indexes());
        let cfg = EvalConfig {
            n_q: vec![3],
            error_model: ErrorModel::TfBased,
            trials: 4,
            part: SplitPart::All,
            ..EvalConfig::default()
        };
        let r = &evaluate(&models, &work.indexes, &work.splits, &cfg)?[0];
        println!(
            "{:<22} pool={pool:<4} MRR@3={:.3} ± {:.3}",
            field_mode.as_str(),
            r.mrr.mean,
            r.mrr.stderr
        );
    }
    Ok(())
}
