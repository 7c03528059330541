//! Objective-driven questions against uniformly random ones.

use qsbps::corpus::generate_synthetic;
use qsbps::evaluation::{evaluate, random_baseline, EvalConfig, Workload};
use qsbps::{FieldMode, ModelSet, SplitPart, SplitRatios, SyntheticSpec};

fn main() -> qsbps::Result<()> {
    let corpus = generate_synthetic(&SyntheticSpec::binary(6, 40, 1), FieldMode::MetadataOnly)?;
    let work = Workload::build(&corpus, FieldMode::MetadataOnly, SplitRatios::default(), 0)?;
    let models = ModelSet::untrained(&work.plain_indexes());
    let cfg = EvalConfig {
        n_q: vec![2, 4, 6, 8],
        trials: 5,
        part: SplitPart::All,
        ..EvalConfig::default()
    };
    let ours = evaluate(&models, &work.indexes, &work.splits, &cfg)?;
    let random = random_baseline(&work.indexes, &work.splits, &cfg)?;
    println!("n_q  selector  random");
    for (a, b) in ours.iter().zip(&random) {
        println!("{:>3}  {:>8.3}  {:>6.3}", a.n_q, a.mrr.mean, b.mrr.mean);
    }
    Ok(())
}
