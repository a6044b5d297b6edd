use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ExplorationSummary, Policy};
use crate::environment::{Feedback, FeedbackMode, InfluenceSample};
use crate::seed;

/// State of the global exploration phase.
///
/// `round` is the 1-based index of the next exploration round, so
/// `round - 1` samples have been absorbed. The dual-influence estimate of
/// node `k` is `d * count_k / round`, which is the closed form of the
/// running update `r <- t/(t+1) r + d/(t+1) S(k)` started from zero; keeping
/// integer counts makes it exact.
///
/// The confidence scale `c` multiplies the deviation term of the stopping
/// rule, the inflation inside `sigma_star` and the whole kept-set width.
#[derive(Debug, Clone)]
pub struct RevealStats {
    d: usize,
    n: u64,
    scale: f64,
    log_nd: f64,
    round: u64,
    counts: Vec<u64>,
    /// `count_hist[c]` = number of nodes influenced in exactly `c` rounds.
    count_hist: Vec<usize>,
    max_count: u64,
    sigma_star: f64,
    width: f64,
    kept: usize,
}

impl RevealStats {
    pub fn new(d: usize, n: u64, scale: f64) -> Self {
        assert!(d > 0 && n > 0, "exploration needs d >= 1 and n >= 1");
        Self {
            d,
            n,
            scale,
            log_nd: (n as f64 * d as f64).ln(),
            round: 1,
            counts: vec![0; d],
            count_hist: vec![d],
            max_count: 0,
            sigma_star: d as f64,
            width: f64::INFINITY,
            kept: d,
        }
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// Exploration samples absorbed so far.
    pub fn samples(&self) -> u64 {
        self.round - 1
    }

    /// Number of exploration rounds in which `k` was influenced.
    pub fn count(&self, k: usize) -> u64 {
        self.counts[k]
    }

    fn estimate_from_count(&self, count: u64) -> f64 {
        self.d as f64 * count as f64 / self.round as f64
    }

    pub fn dual_estimate(&self, k: usize) -> f64 {
        self.estimate_from_count(self.counts[k])
    }

    pub fn dual_estimates(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| self.estimate_from_count(c))
            .collect()
    }

    pub fn max_dual_estimate(&self) -> f64 {
        self.estimate_from_count(self.max_count)
    }

    pub fn sigma_star(&self) -> f64 {
        self.sigma_star
    }

    /// Kept-set width; infinite before the first sample.
    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn kept_count(&self) -> usize {
        self.kept
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Whether a node whose estimate is `estimate` falls within `width` of
    /// the best estimate.
    fn within(&self, estimate: f64, width: f64) -> bool {
        self.max_dual_estimate() - estimate <= width
    }

    /// Nodes within the current width of the best dual estimate, ascending.
    pub fn kept_set(&self) -> Vec<usize> {
        self.kept_set_with_width(self.width)
    }

    pub fn kept_set_with_width(&self, width: f64) -> Vec<usize> {
        (0..self.d)
            .filter(|&k| self.within(self.dual_estimate(k), width))
            .collect()
    }

    /// Absorbs one exploration sample and advances `round`.
    pub fn update(&mut self, sample: &InfluenceSample) {
        for &k in &sample.influenced {
            let c = self.counts[k];
            self.count_hist[c as usize] -= 1;
            self.counts[k] = c + 1;
            if self.count_hist.len() <= (c + 1) as usize {
                self.count_hist.push(0);
            }
            self.count_hist[(c + 1) as usize] += 1;
            self.max_count = self.max_count.max(c + 1);
        }
        self.round += 1;

        let t = self.round as f64;
        let d = self.d as f64;
        let dlog = d * self.log_nd;
        self.sigma_star = (self.max_dual_estimate() + self.scale * 8.0 * dlog / t).sqrt();
        self.width = self.scale * (8.0 * self.sigma_star * (dlog / t).sqrt() + 40.0 * dlog / t);

        // The estimate grows with the count, so kept counts form a suffix.
        let mut kept = 0;
        for c in (0..=self.max_count).rev() {
            if !self.within(self.estimate_from_count(c), self.width) {
                break;
            }
            kept += self.count_hist[c as usize];
        }
        self.kept = kept;
    }

    /// Exploration stops once
    /// `t (sigma_star - c 4 sqrt(d log(dn) / t)) > sqrt(D_hat n)`,
    /// or when the budget is spent.
    pub fn should_stop(&self) -> bool {
        if self.samples() >= self.n {
            return true;
        }
        let t = self.round as f64;
        let deviation = self.scale * 4.0 * (self.d as f64 * self.log_nd / t).sqrt();
        t * (self.sigma_star - deviation) > (self.kept as f64 * self.n as f64).sqrt()
    }
}

pub type InnerFactory = Arc<dyn Fn() -> Box<dyn Policy> + Send + Sync>;

enum Phase {
    Idle,
    Explore(RevealStats),
    Exploit {
        kept: Vec<usize>,
        inner: Box<dyn Policy>,
        offset: u64,
    },
}

/// Bandit revelator: uniform global exploration on revealed influenced sets
/// until the stopping rule fires, then a minimax bandit policy restricted
/// to the kept nodes for the remaining rounds.
pub struct Bare {
    scale: f64,
    make_inner: InnerFactory,
    d: usize,
    n: u64,
    seed: u64,
    rng: ChaCha8Rng,
    phase: Phase,
    summary: Option<ExplorationSummary>,
}

impl Bare {
    pub fn new(scale: f64, make_inner: InnerFactory) -> Self {
        Self {
            scale,
            make_inner,
            d: 0,
            n: 0,
            seed: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
            phase: Phase::Idle,
            summary: None,
        }
    }

    /// Exploration state, while still exploring.
    pub fn reveal_stats(&self) -> Option<&RevealStats> {
        match &self.phase {
            Phase::Explore(stats) => Some(stats),
            _ => None,
        }
    }

    /// Nodes handed to the bandit phase, once it has started.
    pub fn kept_nodes(&self) -> Option<&[usize]> {
        match &self.phase {
            Phase::Exploit { kept, .. } => Some(kept),
            _ => None,
        }
    }

    fn start_bandit_phase(&mut self, stats: &RevealStats) {
        let kept = stats.kept_set();
        let offset = stats.samples();
        let mut inner = (self.make_inner)();
        inner.reset(kept.len(), self.n - offset, seed::derive(&[self.seed, 1]));
        self.summary = Some(ExplorationSummary {
            t_star: offset,
            d_star: kept.len(),
        });
        self.phase = Phase::Exploit {
            kept,
            inner,
            offset,
        };
    }
}

impl Policy for Bare {
    fn name(&self) -> &str {
        "bare"
    }

    fn required_feedback(&self) -> FeedbackMode {
        FeedbackMode::FullSet
    }

    fn reset(&mut self, d: usize, n: u64, seed: u64) {
        self.d = d;
        self.n = n;
        self.seed = seed;
        self.rng = ChaCha8Rng::seed_from_u64(seed::derive(&[seed, 0]));
        self.phase = Phase::Explore(RevealStats::new(d, n, self.scale));
        self.summary = None;
    }

    fn select(&mut self, t: u64) -> usize {
        if let Phase::Explore(stats) = &self.phase {
            if stats.should_stop() {
                let stats = stats.clone();
                self.start_bandit_phase(&stats);
            }
        }
        match &mut self.phase {
            Phase::Idle => panic!("select before reset"),
            Phase::Explore(_) => self.rng.gen_range(0..self.d),
            Phase::Exploit {
                kept,
                inner,
                offset,
            } => kept[inner.select(t - *offset)],
        }
    }

    fn observe(&mut self, t: u64, feedback: &Feedback) {
        match &mut self.phase {
            Phase::Idle => panic!("observe before reset"),
            Phase::Explore(stats) => {
                let sample = feedback
                    .sample()
                    .expect("exploration needs the revealed influenced set");
                stats.update(sample);
            }
            Phase::Exploit { inner, offset, .. } => inner.observe(t - *offset, feedback),
        }
    }

    fn exploration_summary(&self) -> Option<ExplorationSummary> {
        match &self.phase {
            Phase::Explore(stats) => Some(ExplorationSummary {
                t_star: stats.samples(),
                d_star: stats.kept_count(),
            }),
            _ => self.summary,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::GraphMoss;
    use proptest::prelude::*;

    fn sample(influenced: Vec<usize>) -> InfluenceSample {
        InfluenceSample {
            chosen: 0,
            influenced,
            round: 0,
        }
    }

    fn moss_factory() -> InnerFactory {
        Arc::new(|| Box::new(GraphMoss::new()))
    }

    #[test]
    fn first_update_matches_recursion() {
        let mut s = RevealStats::new(4, 100, 1.0);
        s.update(&sample(vec![2]));
        // (1/2) * 0 + (4/2) * 1
        assert_eq!(s.dual_estimate(2), 2.0);
        assert_eq!(s.dual_estimate(0), 0.0);
    }

    #[test]
    fn never_influenced_stays_zero() {
        let mut s = RevealStats::new(5, 100, 1.0);
        for _ in 0..50 {
            s.update(&sample(vec![0, 1]));
        }
        assert_eq!(s.dual_estimate(4), 0.0);
    }

    #[test]
    fn initial_state_continues_on_large_config() {
        let s = RevealStats::new(1000, 2000, 1.0);
        assert_eq!(s.sigma_star(), 1000.0);
        assert_eq!(s.kept_count(), 1000);
        // 1000 - 4 sqrt(1000 ln 2e6) ~ 518 <= sqrt(1000 * 2000) ~ 1414
        assert!(!s.should_stop());
    }

    #[test]
    fn sigma_and_width_formulas() {
        let (d, n, c) = (10usize, 50u64, 0.5);
        let mut s = RevealStats::new(d, n, c);
        s.update(&sample(vec![1, 2]));
        s.update(&sample(vec![2]));
        let t = 3.0;
        let l = (500.0f64).ln();
        let max_est = 10.0 * 2.0 / t;
        let sigma = (max_est + c * 8.0 * 10.0 * l / t).sqrt();
        let width = c * (8.0 * sigma * (10.0 * l / t).sqrt() + 40.0 * 10.0 * l / t);
        assert!((s.sigma_star() - sigma).abs() < 1e-12);
        assert!((s.width() - width).abs() < 1e-9);
    }

    #[test]
    fn forced_stop_at_budget() {
        // With c = 1 and nothing ever influenced, t (sigma - deviation) is
        // negative, so only the budget ends exploration.
        let mut s = RevealStats::new(4, 3, 1.0);
        for _ in 0..3 {
            assert!(!s.should_stop());
            s.update(&sample(vec![]));
        }
        assert!(s.should_stop());
    }

    #[test]
    fn tiny_scale_stops_immediately_after_a_sample() {
        // est_0 = 5/2, D_hat = 1: 2 sqrt(2.5) > sqrt(6), while at t = 1
        // sigma = d = 5 is not above sqrt(5 * 6).
        let mut s = RevealStats::new(5, 6, 1e-9);
        assert!(!s.should_stop());
        s.update(&sample(vec![0]));
        assert_eq!(s.kept_count(), 1);
        assert!(s.should_stop());
    }

    #[test]
    fn large_graph_short_budget_skips_exploration() {
        // sigma starts at d, so with d > n the rule fires before any sample
        // and every node is kept.
        let s = RevealStats::new(4039, 2000, 0.01);
        assert!(s.should_stop());
        let mut bare = Bare::new(0.01, moss_factory());
        bare.reset(50, 20, 0);
        assert_eq!(bare.select(1), 0);
        assert_eq!(
            bare.exploration_summary(),
            Some(ExplorationSummary {
                t_star: 0,
                d_star: 50
            })
        );
    }

    #[test]
    fn bare_maps_bandit_arms_to_kept_nodes() {
        let mut bare = Bare::new(1e-9, moss_factory());
        bare.reset(6, 8, 3);
        let k = bare.select(1);
        bare.observe(
            1,
            &Feedback::Full(InfluenceSample {
                chosen: k,
                influenced: vec![4],
                round: 1,
            }),
        );
        let chosen = bare.select(2);
        assert_eq!(bare.kept_nodes(), Some(&[4][..]));
        assert_eq!(chosen, 4);
        assert_eq!(
            bare.exploration_summary(),
            Some(ExplorationSummary {
                t_star: 1,
                d_star: 1
            })
        );
    }

    fn arb_samples() -> impl Strategy<Value = (usize, Vec<Vec<usize>>)> {
        (1usize..15).prop_flat_map(|d| {
            (
                Just(d),
                proptest::collection::vec(
                    proptest::collection::btree_set(0..d, 0..=d)
                        .prop_map(|s| s.into_iter().collect()),
                    1..60,
                ),
            )
        })
    }

    proptest! {
        #[test]
        fn kept_set_matches_definition((d, samples) in arb_samples(), scale in 0.001f64..2.0) {
            let mut s = RevealStats::new(d, 500, scale);
            let mut log = vec![0u64; d];
            for influenced in samples {
                for &k in &influenced {
                    log[k] += 1;
                }
                s.update(&sample(influenced));
                let t = s.round();
                let est: Vec<f64> = log.iter().map(|&c| d as f64 * c as f64 / t as f64).collect();
                prop_assert_eq!(s.dual_estimates(), est.clone());
                let top = est.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let kept: Vec<usize> = (0..d).filter(|&k| top - est[k] <= s.width()).collect();
                prop_assert_eq!(s.kept_count(), kept.len());
                prop_assert_eq!(s.kept_set(), kept.clone());
                let argmax = (0..d).find(|&k| est[k] == top).unwrap();
                prop_assert!(kept.contains(&argmax));
                // A wider window never drops a node.
                let wider = s.kept_set_with_width(s.width() * 1.5 + 1.0);
                prop_assert!(kept.iter().all(|k| wider.contains(k)));
            }
        }

        #[test]
        fn same_seed_same_actions(seed in any::<u64>()) {
            let run = |seed| {
                let mut bare = Bare::new(0.05, moss_factory());
                bare.reset(8, 40, seed);
                (1..=40u64)
                    .map(|t| {
                        let k = bare.select(t);
                        let influenced = vec![(k + 1) % 8, (k * 3) % 8];
                        let mut influenced: Vec<usize> = influenced;
                        influenced.sort();
                        influenced.dedup();
                        bare.observe(t, &Feedback::Full(InfluenceSample { chosen: k, influenced, round: t }));
                        k
                    })
                    .collect::<Vec<_>>()
            };
            prop_assert_eq!(run(seed), run(seed));
        }
    }
}
