//! Dirichlet belief over a topic's products.
//!
//! The belief is a vector of positive pseudo-counts `alpha`, one per
//! product. Its posterior mean, the preference, is `alpha / sum(alpha)`.
//! Observing an answer adds one count to every product consistent with it;
//! observing a purchase adds one count to the purchased product.
//!
//! Updates are in place (`&mut self`); clone first to keep the old state.

use serde::{Deserialize, Serialize};

use crate::bitmap::Bitmap;
use crate::corpus::TopicIndex;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DirichletBelief {
    alpha: Vec<f64>,
}

impl DirichletBelief {
    /// All-ones prior over `n` products.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("belief needs at least one product"));
        }
        Ok(DirichletBelief { alpha: vec![1.0; n] })
    }

    /// Informative prior; every entry must be finite and strictly positive.
    pub fn from_alpha(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::invalid("belief needs at least one product"));
        }
        if alpha.iter().any(|a| !a.is_finite() || *a <= 0.0) {
            return Err(Error::invalid("alpha entries must be finite and positive"));
        }
        Ok(DirichletBelief { alpha })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.alpha.iter().sum()
    }

    pub fn preference(&self) -> Preference {
        let total = self.total();
        Preference(self.alpha.iter().map(|a| a / total).collect())
    }

    /// Adds one pseudo-count to every product in `consistent`.
    pub fn observe_answer(&mut self, consistent: &Bitmap) -> Result<()> {
        if consistent.len() != self.alpha.len() {
            return Err(Error::LengthMismatch {
                expected: self.alpha.len(),
                actual: consistent.len(),
            });
        }
        for d in consistent.iter_ones() {
            self.alpha[d] += 1.0;
        }
        Ok(())
    }

    pub fn observe_indicator(&mut self, indicator: &AnswerIndicator) -> Result<()> {
        self.observe_answer(&indicator.consistent)
    }

    pub fn observe_purchase(&mut self, product: usize) -> Result<()> {
        let len = self.alpha.len();
        let slot = self
            .alpha
            .get_mut(product)
            .ok_or(Error::ProductOutOfRange { index: product, len })?;
        *slot += 1.0;
        Ok(())
    }

    /// Worst-index rank of `product` under the preference. Compares counts
    /// directly, which orders products exactly as the preference does.
    pub fn rank_of(&self, product: usize) -> usize {
        worst_rank(&self.alpha, product)
    }
}

impl TryFrom<Vec<f64>> for DirichletBelief {
    type Error = Error;

    fn try_from(alpha: Vec<f64>) -> Result<Self> {
        DirichletBelief::from_alpha(alpha)
    }
}

impl From<DirichletBelief> for Vec<f64> {
    fn from(b: DirichletBelief) -> Self {
        b.alpha
    }
}

/// Posterior-mean preference over products; sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Preference(Vec<f64>);

impl Preference {
    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn rank_of(&self, product: usize) -> usize {
        worst_rank(&self.0, product)
    }
}

/// 1-based rank of `scores[idx]` when ties are placed last: the number of
/// entries greater than or equal to it, itself included.
pub fn worst_rank(scores: &[f64], idx: usize) -> usize {
    let s = scores[idx];
    scores.iter().filter(|&&x| x >= s).count()
}

/// The set of products consistent with one answered question.
#[derive(Debug, Clone, PartialEq)]
pub struct AnswerIndicator {
    pub entity: usize,
    pub present: bool,
    pub consistent: Bitmap,
}

impl AnswerIndicator {
    pub fn new(index: &TopicIndex, entity: usize, present: bool) -> Self {
        AnswerIndicator {
            entity,
            present,
            consistent: index.consistent_with(entity, present),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(s: &str) -> Bitmap {
        Bitmap::from_bit_str(s).unwrap()
    }

    #[test]
    fn uniform_prior() {
        let b = DirichletBelief::uniform(4).unwrap();
        assert_eq!(b.alpha(), &[1.0; 4]);
        assert_eq!(b.preference().probs(), &[0.25; 4]);
        let one = DirichletBelief::uniform(1).unwrap();
        assert_eq!(one.preference().probs(), &[1.0]);
        assert!(DirichletBelief::uniform(0).is_err());
    }

    #[test]
    fn preference_normalizes() {
        let p = DirichletBelief::from_alpha(vec![2.0, 2.0, 1.0, 1.0])
            .unwrap()
            .preference();
        let expect = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0];
        for (a, b) in p.probs().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let p = DirichletBelief::from_alpha(vec![3.0, 1.0]).unwrap().preference();
        assert_eq!(p.probs(), &[0.75, 0.25]);
        assert!(DirichletBelief::from_alpha(vec![1.0, 0.0]).is_err());
        assert!(DirichletBelief::from_alpha(vec![f64::NAN]).is_err());
    }

    #[test]
    fn answers_add_counts_to_consistent_products() {
        let mut b = DirichletBelief::uniform(4).unwrap();
        b.observe_answer(&bits("1100")).unwrap();
        assert_eq!(b.alpha(), &[2.0, 2.0, 1.0, 1.0]);

        let mut no = DirichletBelief::uniform(4).unwrap();
        no.observe_answer(&bits("1100").complement()).unwrap();
        assert_eq!(no.alpha(), &[1.0, 1.0, 2.0, 2.0]);

        b.observe_answer(&bits("1010")).unwrap();
        assert_eq!(b.alpha(), &[3.0, 2.0, 2.0, 1.0]);

        assert!(matches!(
            b.observe_answer(&bits("101")),
            Err(Error::LengthMismatch { expected: 4, actual: 3 })
        ));
    }

    #[test]
    fn purchases_add_one_count() {
        let mut b = DirichletBelief::uniform(2).unwrap();
        b.observe_purchase(0).unwrap();
        assert_eq!(b.alpha(), &[2.0, 1.0]);
        for _ in 0..4 {
            b.observe_purchase(0).unwrap();
        }
        let p = b.preference();
        assert!((p.probs()[0] - 6.0 / 7.0).abs() < 1e-15);
        assert!((p.probs()[1] - 1.0 / 7.0).abs() < 1e-15);
        assert!(b.observe_purchase(2).is_err());
    }

    #[test]
    fn worst_index_ranks() {
        let uniform = DirichletBelief::uniform(8).unwrap();
        for d in 0..8 {
            assert_eq!(uniform.rank_of(d), 8);
            assert_eq!(uniform.preference().rank_of(d), 8);
        }
        assert_eq!(worst_rank(&[0.5, 0.3, 0.2], 1), 2);
        assert_eq!(worst_rank(&[0.4, 0.4, 0.2], 0), 2);
        assert_eq!(worst_rank(&[0.4, 0.4, 0.2], 2), 3);
    }

    fn arb_case() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<bool>>)> {
        (1usize..=8).prop_flat_map(|n| {
            (
                prop::collection::vec(0.1f64..10.0, n),
                prop::collection::vec(prop::collection::vec(any::<bool>(), n), 0..6),
            )
        })
    }

    proptest! {
        #[test]
        fn total_grows_by_popcount((alpha, zs) in arb_case()) {
            let mut b = DirichletBelief::from_alpha(alpha).unwrap();
            for z in zs {
                let z = Bitmap::from_bools(z);
                let before = b.total();
                b.observe_answer(&z).unwrap();
                prop_assert!((b.total() - before - z.count_ones() as f64).abs() < 1e-9);
                if z.count_ones() > 0 {
                    prop_assert!(b.total() > before);
                }
            }
        }

        #[test]
        fn answers_commute((alpha, zs) in arb_case()) {
            let mut fwd = DirichletBelief::from_alpha(alpha.clone()).unwrap();
            let mut rev = DirichletBelief::from_alpha(alpha).unwrap();
            for z in &zs {
                fwd.observe_answer(&Bitmap::from_bools(z.clone())).unwrap();
            }
            for z in zs.iter().rev() {
                rev.observe_answer(&Bitmap::from_bools(z.clone())).unwrap();
            }
            for (a, b) in fwd.alpha().iter().zip(rev.alpha()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn rank_is_scale_invariant(counts in prop::collection::vec(1u32..6, 1..10), scale in 0.01f64..100.0) {
            let alpha: Vec<f64> = counts.iter().map(|&c| f64::from(c)).collect();
            let scaled: Vec<f64> = alpha.iter().map(|a| a * scale).collect();
            let b = DirichletBelief::from_alpha(alpha).unwrap();
            let s = DirichletBelief::from_alpha(scaled).unwrap();
            for d in 0..b.len() {
                prop_assert_eq!(b.rank_of(d), s.rank_of(d));
                prop_assert_eq!(b.rank_of(d), b.preference().rank_of(d));
            }
        }
    }
}
