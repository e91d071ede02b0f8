use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::tabular::Row;

/// Rows held back from earlier batches, one FIFO queue per class.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CarryPool {
    pub queues: Vec<VecDeque<Row>>,
}

impl CarryPool {
    pub fn new(n_classes: usize) -> Self {
        Self {
            queues: vec![VecDeque::new(); n_classes],
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.queues.iter().map(VecDeque::len).collect()
    }

    pub fn len(&self) -> usize {
        self.queues.iter().map(VecDeque::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Adds `fresh` to the pool and takes back the same number of rows from
    /// every class: the smallest class count available. Older rows leave
    /// first. Returned rows are grouped by class in schema order.
    pub fn balance(&mut self, fresh: &[Row]) -> Vec<Row> {
        for row in fresh {
            self.queues[row.class].push_back(row.clone());
        }
        let take = self.queues.iter().map(VecDeque::len).min().unwrap_or(0);
        let mut out = Vec::with_capacity(take * self.queues.len());
        for q in &mut self.queues {
            out.extend(q.drain(..take));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::Value;

    fn rows(counts: &[usize], tag: f64) -> Vec<Row> {
        counts
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| {
                (0..n).map(move |i| Row {
                    values: vec![Value::Num(tag + i as f64)],
                    class: c,
                })
            })
            .collect()
    }

    fn per_class(rows: &[Row], n: usize) -> Vec<usize> {
        let mut out = vec![0; n];
        for r in rows {
            out[r.class] += 1;
        }
        out
    }

    #[test]
    fn min_rule() {
        let mut pool = CarryPool::new(2);
        let got = pool.balance(&rows(&[3, 2], 0.0));
        assert_eq!(per_class(&got, 2), vec![2, 2]);
        assert_eq!(pool.sizes(), vec![1, 0]);

        let mut pool = CarryPool::new(2);
        assert_eq!(pool.balance(&rows(&[2, 2], 0.0)).len(), 4);
        assert!(pool.is_empty());
    }

    #[test]
    fn surplus_drains_when_other_class_catches_up() {
        let mut pool = CarryPool::new(2);
        for b in 0..3 {
            let got = pool.balance(&rows(&[3, 1], 10.0 * b as f64));
            assert_eq!(per_class(&got, 2), vec![1, 1]);
        }
        assert_eq!(pool.sizes(), vec![6, 0]);
        let got = pool.balance(&rows(&[0, 7], 100.0));
        assert_eq!(per_class(&got, 2), vec![6, 6]);
        assert_eq!(pool.sizes(), vec![0, 1]);
        // the oldest carried A row comes out first
        assert_eq!(got[0].values[0], Value::Num(10.0));
    }

    #[test]
    fn missing_class_accepts_nothing() {
        let mut pool = CarryPool::new(3);
        assert!(pool.balance(&rows(&[4, 4, 0], 0.0)).is_empty());
        assert_eq!(pool.len(), 8);
    }
}
