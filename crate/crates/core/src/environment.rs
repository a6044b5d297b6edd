//! The sequential influence game: sampling influenced sets and recording
//! regret along an episode.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::InfluenceMatrix;
use crate::policy::{ExplorationSummary, Policy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeedbackMode {
    /// The identities of the influenced nodes are revealed.
    FullSet,
    /// Only the number of influenced nodes is revealed.
    CountOnly,
}

impl FeedbackMode {
    /// Whether a learner that needs `self` can run under `available`.
    pub fn satisfied_by(self, available: FeedbackMode) -> bool {
        self == FeedbackMode::CountOnly || available == FeedbackMode::FullSet
    }
}

impl fmt::Display for FeedbackMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeedbackMode::FullSet => "full_set",
            FeedbackMode::CountOnly => "count_only",
        })
    }
}

impl FromStr for FeedbackMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full_set" | "full" => Ok(FeedbackMode::FullSet),
            "count_only" | "count" => Ok(FeedbackMode::CountOnly),
            other => Err(Error::config(format!("unknown feedback mode `{other}`"))),
        }
    }
}

/// One round's revealed outcome: the chosen node and the nodes it
/// influenced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfluenceSample {
    pub chosen: usize,
    pub influenced: Vec<usize>,
    pub round: u64,
}

/// What the learner sees after a round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feedback {
    Full(InfluenceSample),
    Count {
        chosen: usize,
        count: usize,
        round: u64,
    },
}

impl Feedback {
    pub fn chosen(&self) -> usize {
        match self {
            Feedback::Full(s) => s.chosen,
            Feedback::Count { chosen, .. } => *chosen,
        }
    }

    /// The reward `|S|`, identical in both modes.
    pub fn reward(&self) -> usize {
        match self {
            Feedback::Full(s) => s.influenced.len(),
            Feedback::Count { count, .. } => *count,
        }
    }

    pub fn sample(&self) -> Option<&InfluenceSample> {
        match self {
            Feedback::Full(s) => Some(s),
            Feedback::Count { .. } => None,
        }
    }
}

/// Chooses node `k` and draws its influenced set: each stored entry
/// `(j, p_kj)` of row `k` fires independently with probability `p_kj`.
/// Exactly one uniform draw is consumed per stored entry, whatever `mode`.
pub fn step<R: Rng + ?Sized>(
    matrix: &InfluenceMatrix,
    k: usize,
    round: u64,
    mode: FeedbackMode,
    rng: &mut R,
) -> Result<Feedback> {
    if k >= matrix.d() {
        return Err(Error::usage(format!(
            "node {k} out of range for d = {}",
            matrix.d()
        )));
    }
    let row = matrix.row(k);
    Ok(match mode {
        FeedbackMode::FullSet => {
            let influenced = row
                .iter()
                .filter(|&&(_, p)| rng.gen::<f64>() < p)
                .map(|&(j, _)| j)
                .collect();
            Feedback::Full(InfluenceSample {
                chosen: k,
                influenced,
                round,
            })
        }
        FeedbackMode::CountOnly => {
            let count = row.iter().filter(|&&(_, p)| rng.gen::<f64>() < p).count();
            Feedback::Count {
                chosen: k,
                count,
                round,
            }
        }
    })
}

/// Exact influence quantities of a known matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleStats {
    pub r: Vec<f64>,
    pub r_dual: Vec<f64>,
    pub r_star: f64,
    pub r_dual_star: f64,
    /// Gap between the most influential node overall and the most
    /// influential among the most influenced.
    pub eps_star: f64,
    pub best: Vec<usize>,
    pub most_influenced: Vec<usize>,
}

fn max_and_argmax(values: &[f64]) -> (f64, Vec<usize>) {
    let top = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let arg = (0..values.len()).filter(|&i| values[i] == top).collect();
    (top, arg)
}

impl OracleStats {
    pub fn new(matrix: &InfluenceMatrix) -> Self {
        let r = matrix.influence();
        let r_dual = matrix.dual_influence();
        let (r_star, best) = max_and_argmax(&r);
        let (r_dual_star, most_influenced) = max_and_argmax(&r_dual);
        let best_influenced = most_influenced
            .iter()
            .map(|&k| r[k])
            .fold(f64::NEG_INFINITY, f64::max);
        Self {
            eps_star: r_star - best_influenced,
            r,
            r_dual,
            r_star,
            r_dual_star,
            best,
            most_influenced,
        }
    }

    /// The lowest-index most influential node.
    pub fn best_node(&self) -> usize {
        self.best[0]
    }
}

/// Per-round record of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    /// `sum_{s <= t} (r_star - r_{k_s})`.
    pub pseudo_regret: Vec<f64>,
    /// `sum_{s <= t} |S_s|`.
    pub reward: Vec<u64>,
    pub chosen: Vec<usize>,
    pub seed: u64,
    pub exploration: Option<ExplorationSummary>,
}

impl RegretTrace {
    pub fn len(&self) -> usize {
        self.pseudo_regret.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pseudo_regret.is_empty()
    }

    /// `t r_star - sum_{s <= t} |S_s|` for every round.
    pub fn realized_regret(&self, r_star: f64) -> Vec<f64> {
        self.reward
            .iter()
            .enumerate()
            .map(|(t, &l)| (t + 1) as f64 * r_star - l as f64)
            .collect()
    }
}

/// A matrix paired with its oracle quantities; shared read-only between
/// trials.
#[derive(Debug, Clone)]
pub struct Environment {
    matrix: InfluenceMatrix,
    stats: OracleStats,
}

impl Environment {
    pub fn new(matrix: InfluenceMatrix) -> Self {
        let stats = OracleStats::new(&matrix);
        Self { matrix, stats }
    }

    pub fn matrix(&self) -> &InfluenceMatrix {
        &self.matrix
    }

    pub fn stats(&self) -> &OracleStats {
        &self.stats
    }

    pub fn d(&self) -> usize {
        self.matrix.d()
    }

    pub fn step<R: Rng + ?Sized>(
        &self,
        k: usize,
        round: u64,
        mode: FeedbackMode,
        rng: &mut R,
    ) -> Result<Feedback> {
        step(&self.matrix, k, round, mode, rng)
    }

    /// Plays `n` rounds of `policy`, which must already be reset for this
    /// environment and horizon.
    pub fn run_episode<R: Rng + ?Sized>(
        &self,
        policy: &mut dyn Policy,
        n: u64,
        mode: FeedbackMode,
        rng: &mut R,
        seed: u64,
    ) -> Result<RegretTrace> {
        let required = policy.required_feedback();
        if !required.satisfied_by(mode) {
            return Err(Error::usage(format!(
                "policy `{}` needs {required} feedback but the episode provides {mode}",
                policy.name()
            )));
        }
        let len = usize::try_from(n).map_err(|_| Error::usage("horizon too large"))?;
        let mut trace = RegretTrace {
            pseudo_regret: Vec::with_capacity(len),
            reward: Vec::with_capacity(len),
            chosen: Vec::with_capacity(len),
            seed,
            exploration: None,
        };
        let (mut regret, mut reward) = (0.0, 0u64);
        for t in 1..=n {
            let k = policy.select(t);
            let feedback = self.step(k, t, mode, rng)?;
            regret += self.stats.r_star - self.stats.r[k];
            reward += feedback.reward() as u64;
            policy.observe(t, &feedback);
            trace.pseudo_regret.push(regret);
            trace.reward.push(reward);
            trace.chosen.push(k);
        }
        trace.exploration = policy.exploration_summary();
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, lower_bound_symmetric, GraphKind, GraphSpec};
    use crate::policy::{FixedNode, RoundRobin, UniformRandom};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn three_node() -> InfluenceMatrix {
        InfluenceMatrix::from_rows(vec![
            vec![(1, 0.5), (2, 0.5)],
            vec![(0, 0.2)],
            vec![(1, 0.9)],
        ])
        .unwrap()
    }

    #[test]
    fn oracle_stats_of_small_matrix() {
        let s = OracleStats::new(&three_node());
        assert_eq!(s.r, vec![1.0, 0.2, 0.9]);
        assert_eq!(s.r_star, 1.0);
        assert!((s.r_dual_star - 1.4).abs() < 1e-15);
        assert_eq!(s.most_influenced, vec![1]);
        assert_eq!(s.best, vec![0]);
        assert!((s.eps_star - 0.8).abs() < 1e-15);
    }

    #[test]
    fn oracle_stats_of_symmetric_graphs() {
        let complete = generate(&GraphSpec::new(GraphKind::Complete, 3, 1.0), 0).unwrap();
        let s = OracleStats::new(&complete);
        assert_eq!(s.r, vec![2.0; 3]);
        assert_eq!(s.r_dual, vec![2.0; 3]);
        assert_eq!(s.eps_star, 0.0);

        let ba = generate(
            &GraphSpec::new(GraphKind::BarabasiAlbert { m: 3 }, 200, 0.8),
            4,
        )
        .unwrap();
        let s = OracleStats::new(&ba);
        assert_eq!(s.eps_star, 0.0);
        assert_eq!(s.best, s.most_influenced);
    }

    #[test]
    fn empty_row_gives_zero_reward() {
        let m = generate(&GraphSpec::new(GraphKind::Empty, 4, 0.8), 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for t in 1..50 {
            let fb = step(&m, 2, t, FeedbackMode::FullSet, &mut rng).unwrap();
            assert_eq!(fb.reward(), 0);
        }
    }

    #[test]
    fn sure_edges_fire_deterministically() {
        let m = generate(&GraphSpec::new(GraphKind::Star, 6, 1.0), 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let fb = step(&m, 0, 1, FeedbackMode::FullSet, &mut rng).unwrap();
        assert_eq!(fb.sample().unwrap().influenced, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn out_of_range_node_is_usage_error() {
        let m = three_node();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            step(&m, 3, 1, FeedbackMode::CountOnly, &mut rng),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn star_center_mean_within_three_standard_errors() {
        let d = 1000;
        let m = generate(&GraphSpec::new(GraphKind::Star, d, 0.8), 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let draws = 100_000;
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for t in 0..draws {
            let x = step(&m, 0, t, FeedbackMode::CountOnly, &mut rng)
                .unwrap()
                .reward() as f64;
            sum += x;
            sumsq += x * x;
        }
        let mean = sum / draws as f64;
        let var = sumsq / draws as f64 - mean * mean;
        let se = (var / draws as f64).sqrt();
        let expected = 0.8 * (d - 1) as f64;
        assert!(
            (mean - expected).abs() <= 3.0 * se,
            "mean {mean}, expected {expected}, se {se}"
        );
    }

    #[test]
    fn feedback_modes_share_reward_stream() {
        let m = generate(
            &GraphSpec::new(GraphKind::BarabasiAlbert { m: 3 }, 100, 0.5),
            2,
        )
        .unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        for t in 0..500 {
            let k = (t * 7) as usize % 100;
            let full = step(&m, k, t, FeedbackMode::FullSet, &mut a).unwrap();
            let count = step(&m, k, t, FeedbackMode::CountOnly, &mut b).unwrap();
            assert_eq!(full.reward(), count.reward());
        }
    }

    #[test]
    fn oracle_policy_has_zero_pseudo_regret() {
        let m = generate(
            &GraphSpec::new(GraphKind::BarabasiAlbert { m: 2 }, 60, 0.7),
            3,
        )
        .unwrap();
        let env = Environment::new(m);
        let mut policy = FixedNode::new(env.stats().best_node());
        policy.reset(env.d(), 300, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let trace = env
            .run_episode(&mut policy, 300, FeedbackMode::CountOnly, &mut rng, 0)
            .unwrap();
        assert_eq!(trace.len(), 300);
        assert!(trace.pseudo_regret.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn round_robin_regret_increments() {
        let env = Environment::new(three_node());
        let mut policy = RoundRobin::default();
        policy.reset(3, 6, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let trace = env
            .run_episode(&mut policy, 6, FeedbackMode::FullSet, &mut rng, 0)
            .unwrap();
        assert_eq!(trace.chosen, vec![0, 1, 2, 0, 1, 2]);
        let expected = [0.0, 0.8, 0.9, 0.9, 1.7, 1.8];
        for (got, want) in trace.pseudo_regret.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(trace.pseudo_regret.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn uniform_play_on_two_arm_lower_bound() {
        // Half the rounds land on the suboptimal node, so the expected
        // per-round pseudo-regret is sqrt(d r / n) / 2.
        let n = 1000;
        let env = Environment::new(lower_bound_symmetric(2, 1.0, n).unwrap());
        let gap = (2.0f64 / n as f64).sqrt();
        let mut total = 0.0;
        let trials = 200;
        for trial in 0..trials {
            let mut policy = UniformRandom::default();
            policy.reset(2, n, trial);
            let mut rng = ChaCha8Rng::seed_from_u64(trial);
            let trace = env
                .run_episode(&mut policy, n, FeedbackMode::CountOnly, &mut rng, trial)
                .unwrap();
            total += trace.pseudo_regret.last().unwrap() / n as f64;
        }
        let per_round = total / trials as f64;
        // Binomial(n, 1/2) pulls of the gap arm: sd of the mean is
        // gap * sqrt(1 / (4 n trials)).
        let se = gap * (1.0 / (4.0 * n as f64 * trials as f64)).sqrt();
        assert!(
            (per_round - gap / 2.0).abs() < 4.0 * se,
            "{per_round} vs {}",
            gap / 2.0
        );
    }

    #[test]
    fn realized_regret_uses_cumulative_reward() {
        let trace = RegretTrace {
            pseudo_regret: vec![0.0, 0.0],
            reward: vec![1, 3],
            chosen: vec![0, 0],
            seed: 0,
            exploration: None,
        };
        assert_eq!(trace.realized_regret(2.0), vec![1.0, 1.0]);
    }
}
