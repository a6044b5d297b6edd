use super::Policy;
use crate::environment::{Feedback, FeedbackMode};
use crate::error::{Error, Result};

/// Running reward statistics of one arm. Rewards are integer counts, so
/// sums are kept exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ArmStats {
    pulls: u64,
    sum: u64,
    sum_sq: u64,
}

impl ArmStats {
    pub fn push(&mut self, reward: u64) {
        self.pulls += 1;
        self.sum += reward;
        self.sum_sq += reward * reward;
    }

    pub fn pulls(&self) -> u64 {
        self.pulls
    }

    pub fn mean(&self) -> f64 {
        if self.pulls == 0 {
            0.0
        } else {
            self.sum as f64 / self.pulls as f64
        }
    }

    /// Biased (divide by `T`) empirical variance; 0 for fewer than two pulls.
    pub fn variance(&self) -> f64 {
        if self.pulls < 2 {
            return 0.0;
        }
        let t = u128::from(self.pulls);
        let s = u128::from(self.sum);
        let centered = t * u128::from(self.sum_sq) - s * s;
        centered as f64 / (t * t) as f64
    }
}

/// Bernstein-style MOSS width
/// `2 sigma sqrt(L / T) + 2 L / T` with `L = max(ln(n / (d T)), 0)`.
pub fn graphmoss_confidence(stats: &ArmStats, n: u64, d_eff: usize) -> Result<f64> {
    if stats.pulls == 0 {
        return Err(Error::usage(
            "confidence width of an arm that was never pulled",
        ));
    }
    let pulls = stats.pulls as f64;
    let log_term = (n as f64 / (d_eff as f64 * pulls)).ln().max(0.0);
    let sigma = stats.variance().sqrt();
    Ok(2.0 * sigma * (log_term / pulls).sqrt() + 2.0 * log_term / pulls)
}

/// Lowest-index argmax of `means[k] + widths[k]`.
pub fn select_index(means: &[f64], widths: &[f64]) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (k, (m, w)) in means.iter().zip(widths).enumerate() {
        let value = m + w;
        if value > best_value {
            best = k;
            best_value = value;
        }
    }
    best
}

/// MOSS with an empirical-variance width. Every arm is first pulled twice
/// in round-robin order; after that the arm with the largest index is
/// played.
#[derive(Debug, Clone, Default)]
pub struct GraphMoss {
    arms: Vec<ArmStats>,
    horizon: u64,
    played: u64,
    last: Option<usize>,
}

impl GraphMoss {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn arms(&self) -> &[ArmStats] {
        &self.arms
    }

    fn in_initialization(&self) -> bool {
        self.played < 2 * self.arms.len() as u64
    }
}

impl Policy for GraphMoss {
    fn name(&self) -> &str {
        "graphmoss"
    }

    fn required_feedback(&self) -> FeedbackMode {
        FeedbackMode::CountOnly
    }

    fn reset(&mut self, d: usize, n: u64, _seed: u64) {
        assert!(d > 0, "GraphMOSS needs at least one arm");
        self.arms = vec![ArmStats::default(); d];
        self.horizon = n;
        self.played = 0;
        self.last = None;
    }

    fn select(&mut self, _t: u64) -> usize {
        let d = self.arms.len();
        let arm = if self.in_initialization() {
            (self.played % d as u64) as usize
        } else {
            let means: Vec<f64> = self.arms.iter().map(ArmStats::mean).collect();
            let widths: Vec<f64> = self
                .arms
                .iter()
                .map(|a| graphmoss_confidence(a, self.horizon, d).expect("all arms initialized"))
                .collect();
            select_index(&means, &widths)
        };
        self.last = Some(arm);
        arm
    }

    fn observe(&mut self, _t: u64, feedback: &Feedback) {
        let arm = self.last.take().expect("observe without select");
        self.arms[arm].push(feedback.reward() as u64);
        self.played += 1;
    }
}
