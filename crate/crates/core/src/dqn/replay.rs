use rand::Rng;

/// Fixed-capacity FIFO ring of experience.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    items: Vec<T>,
    /// Slot that the next insertion overwrites once the buffer is full.
    cursor: usize,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { capacity, items: Vec::with_capacity(capacity.min(1 << 16)), cursor: 0 }
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

    pub fn push(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[self.cursor] = item;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    pub fn get(&self, index: usize) -> Option<&T> {
        self.items.get(index)
    }

    /// Stored items from oldest to newest.
    pub fn iter_in_order(&self) -> impl Iterator<Item = &T> {
        let split = if self.items.len() < self.capacity { 0 } else { self.cursor };
        self.items[split..].iter().chain(self.items[..split].iter())
    }

    /// `n` slot indices drawn uniformly with replacement.
    pub fn sample_indices(&self, n: usize, rng: &mut impl Rng) -> Vec<usize> {
        assert!(!self.items.is_empty(), "cannot sample from an empty buffer");
        (0..n).map(|_| rng.gen_range(0..self.items.len())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fills_then_evicts_oldest() {
        let mut b = ReplayBuffer::new(3);
        for i in 0..3 {
            b.push(i);
        }
        assert_eq!(b.iter_in_order().copied().collect::<Vec<_>>(), vec![0, 1, 2]);
        b.push(3);
        assert_eq!(b.len(), 3);
        assert_eq!(b.iter_in_order().copied().collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn samples_in_range() {
        let mut b = ReplayBuffer::new(10);
        for i in 0..4 {
            b.push(i);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(b.sample_indices(100, &mut rng).iter().all(|&i| i < 4));
    }

    proptest! {
        #[test]
        fn keeps_last_capacity_items(capacity in 1usize..20, extra in 0usize..50) {
            let mut b = ReplayBuffer::new(capacity);
            let total = capacity + extra;
            for i in 0..total {
                b.push(i);
                prop_assert!(b.len() <= capacity);
            }
            let kept: Vec<usize> = b.iter_in_order().copied().collect();
            prop_assert_eq!(kept, (total - capacity..total).collect::<Vec<_>>());
        }
    }
}
