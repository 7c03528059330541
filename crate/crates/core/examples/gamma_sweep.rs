//! Sweeps the reward weight on the validation events and writes the grid
//! as CSV to stdout, followed by the best gamma for each budget.

use std::io;

use qsbps::corpus::generate_synthetic;
use qsbps::evaluation::{sweep, write_heatmap_csv, write_optimal_csv, EvalConfig, SweepAxes, Workload};
use qsbps::trainer::{train_indexes, TrainingMode};
use qsbps::{FieldMode, SplitRatios, SyntheticSpec};

fn main() -> qsbps::Result<()> {
    let spec = SyntheticSpec {
        n_products: 32,
        n_bit_entities: 5,
        n_distractors: 40,
        n_topics: 4,
        purchase_skew: Some(1.0),
        purchases_per_topic: 100,
        seed: 5,
        ..SyntheticSpec::default()
    };
    let corpus = generate_synthetic(&spec, FieldMode::MetadataOnly)?;
    let work = Workload::build(&corpus, FieldMode::MetadataOnly, SplitRatios::default(), 2)?;
    let models = train_indexes(&work.plain_indexes(), &work.splits, TrainingMode::Duet, 2)?;

    let axes = SweepAxes {
        n_q: vec![2, 4],
        gammas: vec![0.0, 0.25, 0.5, 1.0],
        betas: vec![0.0],
    };
    let grid = sweep(&models, &work.indexes, &work.splits, &axes, &EvalConfig::default())?;
    write_heatmap_csv(io::stdout(), &grid.cells)?;
    println!();
    write_optimal_csv(io::stdout(), &grid.optimal)?;
    Ok(())
}
