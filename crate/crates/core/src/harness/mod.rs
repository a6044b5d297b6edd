//! Experiment configuration, seeded parallel execution and CSV output.

mod config;
mod output;

use std::path::Path;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use config::{ExperimentConfig, PRESETS};
pub use output::{emit_csv, read_regret_csv, write_dstar_csv, write_regret_csv, write_summary_csv};

use crate::analysis::{aggregate, AggregateCurve};
use crate::environment::{Environment, FeedbackMode, RegretTrace};
use crate::error::{Error, Result};
use crate::graph::{generate, parse_snap, GraphSpec, InfluenceMatrix};
use crate::policy::{PolicyContext, PolicyRegistry, PolicySpec};
use crate::seed;

/// Aggregated results of one policy on one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyResult {
    /// Policy spec, suffixed with `|p=<p>` in probability sweeps.
    pub label: String,
    pub feedback: FeedbackMode,
    pub r_star: f64,
    pub curve: AggregateCurve,
}

#[derive(Debug, Clone)]
pub struct ResultTable {
    pub config: ExperimentConfig,
    pub results: Vec<PolicyResult>,
    pub wall_clock: Duration,
}

/// Seed of trial `trial` of policy `policy` in sweep step `step`.
pub fn trial_seed(base: u64, step: usize, policy: usize, trial: usize) -> u64 {
    seed::derive(&[base, step as u64, policy as u64, trial as u64])
}

/// Resolves the feedback mode of a policy spec: explicit mode if given,
/// otherwise the weakest mode the policy accepts.
fn resolve_feedback(
    registry: &PolicyRegistry,
    spec: &PolicySpec,
    ctx: &PolicyContext,
) -> Result<FeedbackMode> {
    let probe = registry.build(spec, ctx)?;
    let required = probe.required_feedback();
    let mode = spec.feedback.unwrap_or(required);
    if !required.satisfied_by(mode) {
        return Err(Error::config(format!(
            "policy `{spec}` needs {required} feedback but is configured with {mode}"
        )));
    }
    Ok(mode)
}

/// Plays one trial of `spec` on `env`.
pub fn run_trial(
    env: &Environment,
    registry: &PolicyRegistry,
    spec: &PolicySpec,
    mode: FeedbackMode,
    n: u64,
    trial_seed: u64,
) -> Result<RegretTrace> {
    let ctx = PolicyContext {
        d: env.d(),
        best_node: env.stats().best_node(),
    };
    let mut policy = registry.build(spec, &ctx)?;
    policy.reset(env.d(), n, seed::derive(&[trial_seed, 1]));
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(&[trial_seed, 0]));
    env.run_episode(policy.as_mut(), n, mode, &mut rng, trial_seed)
}

/// Runs every policy for `trials` independent trials on each graph of the
/// experiment. Output depends only on the configuration, not on the number
/// of workers.
pub fn run_experiment(config: &ExperimentConfig, registry: &PolicyRegistry) -> Result<ResultTable> {
    config.validate()?;
    let started = Instant::now();

    let base = generate(&config.graph, config.seed)?;
    let steps: Vec<(Option<f64>, Environment)> = if config.sweep_p.is_empty() {
        vec![(None, Environment::new(base))]
    } else {
        config
            .sweep_p
            .iter()
            .map(|&p| {
                Ok((
                    Some(p),
                    Environment::new(base.apply_uniform_probability(p)?),
                ))
            })
            .collect::<Result<_>>()?
    };

    // Resolve every policy up front so configuration errors surface before
    // any trial runs.
    let mut jobs = Vec::new();
    for (step, (_, env)) in steps.iter().enumerate() {
        let ctx = PolicyContext {
            d: env.d(),
            best_node: env.stats().best_node(),
        };
        for (index, spec) in config.policies.iter().enumerate() {
            jobs.push((step, index, resolve_feedback(registry, spec, &ctx)?));
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;

    let work: Vec<(usize, usize, FeedbackMode, usize)> = jobs
        .iter()
        .flat_map(|&(step, index, mode)| (0..config.trials).map(move |t| (step, index, mode, t)))
        .collect();
    let traces: Vec<RegretTrace> = pool.install(|| {
        work.par_iter()
            .map(|&(step, index, mode, trial)| {
                run_trial(
                    &steps[step].1,
                    registry,
                    &config.policies[index],
                    mode,
                    config.n,
                    trial_seed(config.seed, step, index, trial),
                )
            })
            .collect::<Result<_>>()
    })?;

    let results = jobs
        .iter()
        .zip(traces.chunks(config.trials))
        .map(|(&(step, index, mode), chunk)| {
            let (p, env) = &steps[step];
            let spec = &config.policies[index];
            let label = match p {
                Some(p) => format!("{spec}|p={p}"),
                None => spec.to_string(),
            };
            Ok(PolicyResult {
                label,
                feedback: mode,
                r_star: env.stats().r_star,
                curve: aggregate(chunk)?,
            })
        })
        .collect::<Result<_>>()?;

    Ok(ResultTable {
        config: config.clone(),
        results,
        wall_clock: started.elapsed(),
    })
}

/// Builds the matrix for a graph argument: a graph spec string, or a path
/// to a matrix file (`d=` header) or SNAP edge list. Edge lists get the
/// uniform probability `edge_p`.
pub fn resolve_graph(arg: &str, seed: u64, edge_p: f64) -> Result<InfluenceMatrix> {
    let spec_err = match arg.parse::<GraphSpec>() {
        Ok(spec) => return generate(&spec, seed),
        Err(e) => e,
    };
    let path = Path::new(arg);
    if !path.is_file() {
        return Err(spec_err);
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .unwrap_or("");
    if first.starts_with("d=") {
        InfluenceMatrix::read_from(text.as_bytes(), arg)
    } else {
        parse_snap(text.as_bytes(), arg, false)?.apply_uniform_probability(edge_p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        let mut c = ExperimentConfig::preset("ba1000").unwrap();
        c.apply_text(
            "graph = ba:d=60,m=3,p=0.8\nn = 150\ntrials = 6\nseed = 9\npolicies = graphmoss, bare(c=0.05), uniform_random, fixed_oracle, round_robin\n",
            "test",
        )
        .unwrap();
        c
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let registry = PolicyRegistry::with_builtins();
        let mut one = small_config();
        one.workers = 1;
        let mut many = small_config();
        many.workers = 4;
        let a = run_experiment(&one, &registry).unwrap();
        let b = run_experiment(&many, &registry).unwrap();
        assert_eq!(a.results, b.results);
        assert_eq!(a.results.len(), 5);
    }

    #[test]
    fn oracle_rows_have_zero_regret() {
        let registry = PolicyRegistry::with_builtins();
        let table = run_experiment(&small_config(), &registry).unwrap();
        let oracle = table
            .results
            .iter()
            .find(|r| r.label == "fixed_oracle")
            .unwrap();
        assert!(oracle.curve.mean_regret.iter().all(|&r| r == 0.0));
        let bare = table
            .results
            .iter()
            .find(|r| r.label.starts_with("bare"))
            .unwrap();
        assert_eq!(bare.feedback, FeedbackMode::FullSet);
        assert!(bare.curve.d_star.is_some());
    }

    #[test]
    fn incompatible_feedback_is_rejected_up_front() {
        let registry = PolicyRegistry::with_builtins();
        let mut c = small_config();
        c.apply_text("policies = bare(c=0.01)@count_only\n", "t")
            .unwrap();
        assert!(matches!(
            run_experiment(&c, &registry),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn sweep_labels_each_probability() {
        let registry = PolicyRegistry::with_builtins();
        let mut c = small_config();
        c.apply_text(
            "policies = graphmoss\nsweep_p = 0.5, 1.0\ntrials = 2\n",
            "t",
        )
        .unwrap();
        let table = run_experiment(&c, &registry).unwrap();
        let labels: Vec<&str> = table.results.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["graphmoss|p=0.5", "graphmoss|p=1"]);
    }

    #[test]
    fn trial_seeds_differ() {
        assert_ne!(trial_seed(1, 0, 0, 0), trial_seed(1, 0, 0, 1));
        assert_ne!(trial_seed(1, 0, 0, 0), trial_seed(1, 0, 1, 0));
        assert_ne!(trial_seed(1, 0, 0, 0), trial_seed(2, 0, 0, 0));
    }
}
