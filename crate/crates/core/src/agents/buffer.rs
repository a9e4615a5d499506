use std::collections::VecDeque;

use rand::Rng;

/// One logged interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub context: usize,
    pub action: usize,
    pub reward: f64,
    pub t: usize,
    /// 1-based index of the last-layer snapshot in effect when the action
    /// was taken (equals the history length at that moment).
    pub round: usize,
    /// `φ(context, action)`; kept so replay logs without stable context ids
    /// can be retrained on.
    pub features: Vec<f64>,
}

/// Bounded FIFO keeping the most recent `capacity` transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer capacity must be positive");
        ReplayBuffer { capacity, items: VecDeque::with_capacity(capacity.min(1 << 16)) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, item: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(item);
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.items[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// Number of leading transitions satisfying `pred`, assuming `pred` holds
    /// on a prefix (true for round-based eligibility since rounds only grow).
    pub fn prefix_len(&self, pred: impl Fn(&Transition) -> bool) -> usize {
        self.items.partition_point(pred)
    }

    /// `n` indices drawn uniformly with replacement from `0..limit`.
    pub fn sample_indices<R: Rng + ?Sized>(rng: &mut R, limit: usize, n: usize) -> Vec<usize> {
        (0..n).map(|_| rng.random_range(0..limit)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tr(t: usize) -> Transition {
        Transition { context: 0, action: 0, reward: t as f64, t, round: 1, features: vec![] }
    }

    #[test]
    fn keeps_last_k_in_order() {
        let mut b = ReplayBuffer::new(3);
        for t in 0..10 {
            b.push(tr(t));
            assert!(b.len() <= 3);
        }
        let ts: Vec<usize> = b.iter().map(|x| x.t).collect();
        assert_eq!(ts, vec![7, 8, 9]);
    }

    #[test]
    fn capacity_one_holds_latest() {
        let mut b = ReplayBuffer::new(1);
        for t in 0..5 {
            b.push(tr(t));
            assert_eq!(b.len(), 1);
            assert_eq!(b.get(0).t, t);
        }
    }
}
