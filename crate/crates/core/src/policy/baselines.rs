//! Reference policies for comparison and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Policy;
use crate::environment::{Feedback, FeedbackMode};

/// Picks a node uniformly at random every round.
#[derive(Debug, Clone)]
pub struct UniformRandom {
    d: usize,
    rng: ChaCha8Rng,
}

impl Default for UniformRandom {
    fn default() -> Self {
        Self {
            d: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }
}

impl Policy for UniformRandom {
    fn name(&self) -> &str {
        "uniform_random"
    }

    fn required_feedback(&self) -> FeedbackMode {
        FeedbackMode::CountOnly
    }

    fn reset(&mut self, d: usize, _n: u64, seed: u64) {
        self.d = d;
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    fn select(&mut self, _t: u64) -> usize {
        self.rng.gen_range(0..self.d)
    }

    fn observe(&mut self, _t: u64, _feedback: &Feedback) {}
}

/// Always plays the same node. With the most influential node this is the
/// oracle strategy that regret is measured against.
#[derive(Debug, Clone)]
pub struct FixedNode {
    node: usize,
}

impl FixedNode {
    pub fn new(node: usize) -> Self {
        Self { node }
    }
}

impl Policy for FixedNode {
    fn name(&self) -> &str {
        "fixed_oracle"
    }

    fn required_feedback(&self) -> FeedbackMode {
        FeedbackMode::CountOnly
    }

    fn reset(&mut self, d: usize, _n: u64, _seed: u64) {
        assert!(
            self.node < d,
            "fixed node {} out of range for d = {d}",
            self.node
        );
    }

    fn select(&mut self, _t: u64) -> usize {
        self.node
    }

    fn observe(&mut self, _t: u64, _feedback: &Feedback) {}
}

/// Cycles through `0..d`.
#[derive(Debug, Clone, Default)]
pub struct RoundRobin {
    d: usize,
    next: usize,
}

impl Policy for RoundRobin {
    fn name(&self) -> &str {
        "round_robin"
    }

    fn required_feedback(&self) -> FeedbackMode {
        FeedbackMode::CountOnly
    }

    fn reset(&mut self, d: usize, _n: u64, _seed: u64) {
        self.d = d;
        self.next = 0;
    }

    fn select(&mut self, _t: u64) -> usize {
        let k = self.next;
        self.next = (self.next + 1) % self.d;
        k
    }

    fn observe(&mut self, _t: u64, _feedback: &Feedback) {}
}
