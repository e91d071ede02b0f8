use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, TabularError};

/// Seeded random partition into train and test sets.
///
/// The train side receives `round(N * train_fraction)` rows, clamped so that
/// both sides keep at least one row.
pub fn train_test_split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), TabularError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(TabularError::FractionOutOfRange(train_fraction));
    }
    let n = ds.len();
    if n < 2 {
        return Err(TabularError::TooSmall(format!("{n} rows; splitting needs at least 2")));
    }
    let n_train = ((n as f64 * train_fraction).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (train, test) = order.split_at(n_train);
    Ok((ds.select(train), ds.select(test)))
}
