//! Builds a corpus from free-text products and a small entity dictionary,
//! then asks questions about it.

use std::sync::Arc;

use qsbps::corpus::{convert_raw, EntityDictionary, RawProduct};
use qsbps::simulator::run_session;
use qsbps::{Corpus, ErrorModel, FieldMode, Oracle, SelectionParams, SessionConfig, TopicModel};

const DICTIONARY: &str = "\
bluetooth
noise cancelling
over-ear
in-ear
wireless
usb-c
";

fn raw(id: &str, description: &str, reviews: &[&str]) -> RawProduct {
    RawProduct {
        product_id: id.to_string(),
        topics: vec!["headphones".to_string()],
        description: description.to_string(),
        reviews: reviews.iter().map(|r| r.to_string()).collect(),
        purchases: None,
    }
}

fn main() -> qsbps::Result<()> {
    let dict = EntityDictionary::from_lines(DICTIONARY);
    let products = [
        raw("studio-1", "Over-ear wired monitor headphones", &["great for mixing"]),
        raw(
            "commute-2",
            "Wireless noise cancelling over-ear headphones, USB-C charging",
            &[],
        ),
        raw(
            "sport-3",
            "Bluetooth in-ear buds",
            &["stay put while running", "wireless freedom"],
        ),
        raw("budget-4", "Wired in-ear earphones", &[]),
        raw(
            "travel-5",
            "Noise cancelling in-ear, bluetooth 5.3",
            &["usb-c case is handy"],
        ),
    ];
    let records = products.into_iter().map(|p| convert_raw(p, &dict)).collect();
    let corpus = Corpus::from_records(records, FieldMode::MetadataAndReviews)?;
    let index = Arc::new(corpus.index_with("headphones", FieldMode::MetadataAndReviews)?);
    println!("question pool: {}", index.labels().join(", "));

    let model = TopicModel::untrained(&index);
    let config = SessionConfig::new(SelectionParams::default(), ErrorModel::NoNoise, 5);
    let target = index.product_position("travel-5").expect("known product");
    let trace = run_session(&model, index.clone(), target, config, Oracle::Perfect)?;
    for t in &trace.turns {
        println!("{:<18} {:<4} U={}", t.entity, t.emitted, t.u_size_after);
    }
    println!("{} ends at rank {}", trace.target, trace.final_rank);
    Ok(())
}
