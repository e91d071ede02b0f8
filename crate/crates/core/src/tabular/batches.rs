use serde::{Deserialize, Serialize};

use super::{Dataset, TabularError};

/// Reference batches 𝓑₁..𝓑ₘ and a one-based cursor that cycles through them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchPlan {
    pub batch_size: usize,
    pub groups: Vec<Vec<usize>>,
    cursor: usize,
}

impl BatchPlan {
    pub fn new(batch_size: usize, groups: Vec<Vec<usize>>) -> Self {
        Self {
            batch_size,
            groups,
            cursor: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// One-based position of the current batch.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn set_cursor(&mut self, cursor: usize) {
        assert!(cursor >= 1 && cursor <= self.groups.len().max(1), "cursor out of range");
        self.cursor = cursor;
    }

    pub fn current(&self) -> &[usize] {
        &self.groups[self.cursor - 1]
    }

    /// `i ← (i mod m) + 1`
    pub fn advance(&mut self) {
        self.cursor = self.cursor % self.groups.len() + 1;
    }
}

/// Consecutive slices of `batch_size` rows in dataset order. The trailing
/// partial slice is kept.
pub fn partition_batches(ds: &Dataset, batch_size: usize) -> Result<BatchPlan, TabularError> {
    if batch_size < 1 {
        return Err(TabularError::BatchSize);
    }
    let indices: Vec<usize> = (0..ds.len()).collect();
    let groups = indices.chunks(batch_size).map(<[usize]>::to_vec).collect();
    Ok(BatchPlan::new(batch_size, groups))
}

/// Class-stratified reference batches holding `batch_size / n_classes` rows of
/// every class.
///
/// Each class's rows are consumed in dataset order and wrap around, so the
/// number of batches is set by the largest class and smaller classes repeat.
/// Falls back to [`partition_batches`] when `batch_size < 2 * n_classes` or a
/// class has no rows.
pub fn stratified_batches(ds: &Dataset, batch_size: usize) -> Result<BatchPlan, TabularError> {
    if batch_size < 1 {
        return Err(TabularError::BatchSize);
    }
    let by_class = ds.indices_by_class();
    let n_classes = by_class.len();
    if batch_size < 2 * n_classes || by_class.iter().any(Vec::is_empty) {
        return partition_batches(ds, batch_size);
    }
    let per_class = batch_size / n_classes;
    let largest = by_class.iter().map(Vec::len).max().unwrap_or(0);
    let m = largest.div_ceil(per_class);
    let groups = (0..m)
        .map(|j| {
            by_class
                .iter()
                .flat_map(|rows| (0..per_class).map(move |k| rows[(j * per_class + k) % rows.len()]))
                .collect()
        })
        .collect();
    Ok(BatchPlan::new(per_class * n_classes, groups))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{AttributeSpec, Schema, Value};

    fn ds(labels: &[&str]) -> Dataset {
        let schema = Schema::new(
            vec![
                AttributeSpec::numeric("x", ""),
                AttributeSpec::categorical("y", "", ["a", "b"]),
            ],
            "y",
        )
        .unwrap();
        let rows = labels
            .iter()
            .enumerate()
            .map(|(i, l)| vec![Value::Num(i as f64), Value::Cat(l.to_string())])
            .collect();
        Dataset::new(schema, rows).unwrap()
    }

    #[test]
    fn exact_division() {
        let plan = partition_batches(&ds(&["a"; 90]), 30).unwrap();
        assert_eq!(plan.groups.iter().map(Vec::len).collect::<Vec<_>>(), vec![30, 30, 30]);
    }

    #[test]
    fn trailing_partial_batch_is_kept() {
        let plan = partition_batches(&ds(&["a"; 100]), 30).unwrap();
        assert_eq!(plan.groups.iter().map(Vec::len).collect::<Vec<_>>(), vec![30, 30, 30, 10]);
        let flat: Vec<usize> = plan.groups.concat();
        assert_eq!(flat, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn cursor_cycles() {
        let mut plan = partition_batches(&ds(&["a"; 9]), 3).unwrap();
        let mut trace = Vec::new();
        for _ in 0..7 {
            trace.push(plan.cursor());
            plan.advance();
        }
        assert_eq!(trace, vec![1, 2, 3, 1, 2, 3, 1]);
    }

    #[test]
    fn zero_batch_size_rejected() {
        assert!(matches!(partition_batches(&ds(&["a"]), 0), Err(TabularError::BatchSize)));
    }

    #[test]
    fn stratified_batches_balance_classes() {
        let mut labels = vec!["a"; 20];
        labels.extend(["b"; 5]);
        let data = ds(&labels);
        let plan = stratified_batches(&data, 6).unwrap();
        // 20 rows of "a" at 3 per batch -> 7 batches; "b" wraps around.
        assert_eq!(plan.len(), 7);
        for g in &plan.groups {
            let b = g.iter().filter(|&&i| data.rows()[i].class == 1).count();
            assert_eq!((g.len(), b), (6, 3));
        }
        let mut a_rows: Vec<usize> = plan.groups.iter().flatten().copied().filter(|&i| i < 20).collect();
        a_rows.sort();
        a_rows.dedup();
        assert_eq!(a_rows.len(), 20);
    }

    #[test]
    fn stratified_falls_back_when_batch_too_small() {
        let plan = stratified_batches(&ds(&["a", "b", "a", "b", "a"]), 3).unwrap();
        assert_eq!(plan.groups, vec![vec![0, 1, 2], vec![3, 4]]);
    }
}
