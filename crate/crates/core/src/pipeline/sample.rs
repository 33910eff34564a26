//! Seeded evaluation subsets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SampleError {
    #[error("cannot sample {requested} items from {available}")]
    TooFew { requested: usize, available: usize },
}

/// `n` distinct items chosen under `seed`, kept in their original order.
pub fn sample_eval_set<T: Clone>(items: &[T], n: usize, seed: u64) -> Result<Vec<T>, SampleError> {
    if n > items.len() {
        return Err(SampleError::TooFew {
            requested: n,
            available: items.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, items.len(), n).into_vec();
    idx.sort_unstable();
    Ok(idx.into_iter().map(|i| items[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_is_ordered_and_reproducible() {
        let items: Vec<u32> = (0..100).collect();
        let a = sample_eval_set(&items, 10, 3).unwrap();
        assert_eq!(a, sample_eval_set(&items, 10, 3).unwrap());
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(sample_eval_set(&items, 100, 9).unwrap(), items);
        assert!(sample_eval_set(&items, 101, 0).is_err());
    }
}
