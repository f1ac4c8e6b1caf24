//! Bounded FIFO experience replay with uniform minibatch sampling.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::env::{Action, CartState};
use crate::rng;

/// One stored experience: where the agent was, what was executed, the
/// reward collected, where it landed, and whether the episode ended there.
#[derive(Clone, Copy, Debug)]
pub struct Transition {
    pub state: CartState,
    pub action: Action,
    pub reward: f64,
    pub next_state: CartState,
    pub terminal: bool,
}

/// Bounded FIFO of transitions; when full, the oldest entry is evicted.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    buf: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayBuffer {
    /// # Panics
    /// Panics if `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer capacity must be positive");
        ReplayBuffer {
            buf: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// Append one transition, evicting the oldest if at capacity.
    pub fn push(&mut self, t: Transition) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(t);
    }

    pub fn get(&self, index: usize) -> &Transition {
        &self.buf[index]
    }

    /// Draw `count` uniform indices with replacement into `out`.
    ///
    /// # Panics
    /// Panics if the buffer is empty.
    pub fn sample_indices<R: RngCore + ?Sized>(
        &self,
        count: usize,
        rng: &mut R,
        out: &mut Vec<usize>,
    ) {
        assert!(!self.buf.is_empty(), "cannot sample from an empty buffer");
        out.clear();
        out.extend((0..count).map(|_| rng::uniform_index(rng, self.buf.len())));
    }
}
