//! Exact problem-dependent quantities of a known influence matrix, and
//! aggregation of regret traces across trials.

use crate::environment::RegretTrace;
use crate::error::{Error, Result};
use crate::graph::InfluenceMatrix;

/// The dual-gap counting function `D(delta) = |{i : r_dual_star - r_dual_i <= delta}|`.
#[derive(Debug, Clone)]
pub struct DualGaps {
    r_dual_star: f64,
    /// Dual gaps, ascending.
    sorted: Vec<f64>,
}

impl DualGaps {
    pub fn new(r_dual: &[f64]) -> Self {
        let r_dual_star = r_dual.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sorted: Vec<f64> = r_dual.iter().map(|&r| r_dual_star - r).collect();
        sorted.sort_by(f64::total_cmp);
        Self {
            r_dual_star,
            sorted,
        }
    }

    pub fn from_matrix(matrix: &InfluenceMatrix) -> Self {
        Self::new(&matrix.dual_influence())
    }

    pub fn r_dual_star(&self) -> f64 {
        self.r_dual_star
    }

    pub fn d(&self) -> usize {
        self.sorted.len()
    }

    /// Number of nodes with dual gap at most `delta`; 0 for negative
    /// `delta`.
    pub fn count(&self, delta: f64) -> usize {
        self.sorted.partition_point(|&g| g <= delta)
    }
}

/// `D(delta)` for a matrix.
pub fn dual_gap_count(matrix: &InfluenceMatrix, delta: f64) -> usize {
    DualGaps::from_matrix(matrix).count(delta)
}

/// Detectable horizon, gap and dimension for one horizon `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectableProfile {
    pub n: u64,
    pub t_star: u64,
    pub delta_star: f64,
    pub d_star: usize,
    /// Whether the defining inequality holds for some `T <= n`.
    pub found: bool,
}

/// `16 sqrt(r d log(nd) / T) + 144 d log(nd) / T`.
pub fn detectable_gap(r_dual_star: f64, d: usize, n: u64, t: u64) -> f64 {
    let dlog = d as f64 * (n as f64 * d as f64).ln();
    let t = t as f64;
    16.0 * (r_dual_star * dlog / t).sqrt() + 144.0 * dlog / t
}

fn crossing_holds(gaps: &DualGaps, n: u64, t: u64) -> bool {
    let r = gaps.r_dual_star();
    let dim = gaps.count(detectable_gap(r, gaps.d(), n, t));
    t as f64 * r >= (dim as f64 * n as f64 * r).sqrt()
}

/// Smallest `T` in `1..=n` with `T r* >= sqrt(D(delta(T)) n r*)`.
///
/// The left side grows with `T` while `delta(T)`, and hence the right side,
/// does not, so the set of satisfying `T` is an upper interval and a
/// bisection finds the same `T` as a linear scan.
pub fn detectable_profile_from_gaps(gaps: &DualGaps, n: u64) -> DetectableProfile {
    assert!(n >= 1, "horizon must be positive");
    let d = gaps.d();
    let r = gaps.r_dual_star();
    if r <= 0.0 {
        return DetectableProfile {
            n,
            t_star: 1,
            delta_star: detectable_gap(r, d, n, 1),
            d_star: d,
            found: true,
        };
    }
    if !crossing_holds(gaps, n, n) {
        return DetectableProfile {
            n,
            t_star: n,
            delta_star: detectable_gap(r, d, n, n),
            d_star: d,
            found: false,
        };
    }
    let (mut lo, mut hi) = (1u64, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if crossing_holds(gaps, n, mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let delta_star = detectable_gap(r, d, n, lo);
    DetectableProfile {
        n,
        t_star: lo,
        delta_star,
        d_star: gaps.count(delta_star),
        found: true,
    }
}

pub fn detectable_profile(matrix: &InfluenceMatrix, n: u64) -> DetectableProfile {
    detectable_profile_from_gaps(&DualGaps::from_matrix(matrix), n)
}

/// Detectable profile at every horizon of an ascending grid.
pub fn dstar_curve(matrix: &InfluenceMatrix, n_grid: &[u64]) -> Result<Vec<DetectableProfile>> {
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::usage("horizon grid must be strictly ascending"));
    }
    if n_grid.first() == Some(&0) {
        return Err(Error::usage("horizons must be positive"));
    }
    let gaps = DualGaps::from_matrix(matrix);
    Ok(n_grid
        .iter()
        .map(|&n| detectable_profile_from_gaps(&gaps, n))
        .collect())
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, sd }
    }
}

/// Pointwise summary of a set of traces.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCurve {
    pub trials: usize,
    pub mean_regret: Vec<f64>,
    pub stderr_regret: Vec<f64>,
    pub mean_reward: Vec<f64>,
    pub t_star: Option<MeanSd>,
    pub d_star: Option<MeanSd>,
}

impl AggregateCurve {
    pub fn len(&self) -> usize {
        self.mean_regret.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_regret.is_empty()
    }
}

/// Mean pseudo-regret with its standard error, and mean cumulative reward,
/// at every round. Exploration summaries are aggregated when every trace
/// carries one.
pub fn aggregate(traces: &[RegretTrace]) -> Result<AggregateCurve> {
    let Some(first) = traces.first() else {
        return Err(Error::usage("cannot aggregate zero traces"));
    };
    let len = first.len();
    if let Some(bad) = traces
        .iter()
        .find(|t| t.len() != len || t.reward.len() != len)
    {
        return Err(Error::usage(format!(
            "trace length mismatch: {} vs {len}",
            bad.len()
        )));
    }
    let trials = traces.len();
    let count = trials as f64;
    let mut mean_regret = vec![0.0; len];
    let mut mean_reward = vec![0.0; len];
    for trace in traces {
        for (acc, &r) in mean_regret.iter_mut().zip(&trace.pseudo_regret) {
            *acc += r;
        }
        for (acc, &l) in mean_reward.iter_mut().zip(&trace.reward) {
            *acc += l as f64;
        }
    }
    mean_regret.iter_mut().for_each(|m| *m /= count);
    mean_reward.iter_mut().for_each(|m| *m /= count);

    let stderr_regret = if trials > 1 {
        let mut sq = vec![0.0; len];
        for trace in traces {
            for ((acc, &r), &m) in sq.iter_mut().zip(&trace.pseudo_regret).zip(&mean_regret) {
                *acc += (r - m) * (r - m);
            }
        }
        sq.into_iter()
            .map(|s| (s / (count - 1.0)).sqrt() / count.sqrt())
            .collect()
    } else {
        vec![0.0; len]
    };

    let summaries: Option<Vec<_>> = traces.iter().map(|t| t.exploration).collect();
    let (t_star, d_star) = match summaries {
        Some(s) => {
            let t: Vec<f64> = s.iter().map(|e| e.t_star as f64).collect();
            let d: Vec<f64> = s.iter().map(|e| e.d_star as f64).collect();
            (Some(MeanSd::of(&t)), Some(MeanSd::of(&d)))
        }
        None => (None, None),
    };

    Ok(AggregateCurve {
        trials,
        mean_regret,
        stderr_regret,
        mean_reward,
        t_star,
        d_star,
    })
}
