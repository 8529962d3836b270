use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Deterministic dev/test split. Ids are sorted, shuffled with a seeded
/// ChaCha8 Fisher-Yates pass, and the first `round(fraction * n)` become the
/// test set. Both outputs are returned sorted.
pub fn split_dataset(
    ids: &[String],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<String>, Vec<String>)> {
    if ids.is_empty() {
        return Err(Error::EmptyInput("no dialogue ids to split"));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!("test fraction must be in (0, 1), got {test_fraction}")));
    }
    let mut shuffled = ids.to_vec();
    shuffled.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..shuffled.len()).rev() {
        let j = rng.gen_range(0..=i as u64) as usize;
        shuffled.swap(i, j);
    }
    let n_test = (test_fraction * ids.len() as f64).round() as usize;
    let mut dev = shuffled.split_off(n_test);
    let mut test = shuffled;
    dev.sort();
    test.sort();
    Ok((dev, test))
}
