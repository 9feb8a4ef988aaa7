use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug)]
struct Entry {
    eval: f64,
    g: f64,
    seq: u64,
    node: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // BinaryHeap pops the greatest entry: smaller eval is greater, then
    // larger g, then earlier insertion.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .eval
            .total_cmp(&self.eval)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Min-priority queue of node handles ordered by evaluator value, breaking
/// ties in favour of larger path loss and then insertion order.
#[derive(Debug, Default)]
pub struct Frontier {
    heap: BinaryHeap<Entry>,
    seq: u64,
}

impl Frontier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, node: usize, eval: f64, g: f64) {
        // NaN never compares sensibly; treat it as the worst value.
        let eval = if eval.is_nan() { f64::INFINITY } else { eval };
        self.heap.push(Entry {
            eval,
            g,
            seq: self.seq,
            node,
        });
        self.seq += 1;
    }

    /// Removes the entry with the smallest value: `(node, eval)`.
    pub fn pop(&mut self) -> Option<(usize, f64)> {
        self.heap.pop().map(|e| (e.node, e.eval))
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extracts_minimum_first() {
        let mut f = Frontier::new();
        f.push(0, 5.0, 0.0);
        f.push(1, 1.0, 0.0);
        f.push(2, 3.0, 0.0);
        let order: Vec<_> = std::iter::from_fn(|| f.pop().map(|p| p.0)).collect();
        assert_eq!(order, vec![1, 2, 0]);
    }

    #[test]
    fn ties_prefer_larger_g_then_fifo() {
        let mut f = Frontier::new();
        f.push(0, 2.0, 1.0);
        f.push(1, 2.0, 3.0);
        f.push(2, 2.0, 1.0);
        f.push(3, 2.0, 3.0);
        let order: Vec<_> = std::iter::from_fn(|| f.pop().map(|p| p.0)).collect();
        assert_eq!(order, vec![1, 3, 0, 2]);
    }

    #[test]
    fn infinite_values_come_last() {
        let mut f = Frontier::new();
        f.push(0, f64::INFINITY, 10.0);
        f.push(1, 1e300, 0.0);
        f.push(2, f64::NAN, 0.0);
        assert_eq!(f.pop().unwrap().0, 1);
        assert_eq!(f.pop().unwrap().0, 0);
        assert_eq!(f.pop().unwrap(), (2, f64::INFINITY));
        assert!(f.is_empty());
    }
}
