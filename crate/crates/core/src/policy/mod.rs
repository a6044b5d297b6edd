//! Decision rules behind a single [`Policy`] trait, plus a registry that
//! builds them by name at runtime.
//!
//! A policy is single-use: the episode calls [`Policy::reset`] once, then
//! alternates [`Policy::select`] and [`Policy::observe`] for every round.

mod bare;
mod baselines;
mod graphmoss;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use bare::{Bare, RevealStats};
pub use baselines::{FixedNode, RoundRobin, UniformRandom};
pub use graphmoss::{graphmoss_confidence, select_index, ArmStats, GraphMoss};

use crate::environment::{Feedback, FeedbackMode};
use crate::error::{Error, Result};

/// Exploration-phase outcome reported by two-phase policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExplorationSummary {
    /// Length of the exploration phase in rounds.
    pub t_star: u64,
    /// Number of nodes kept for the bandit phase.
    pub d_star: usize,
}

pub trait Policy: Send {
    fn name(&self) -> &str;

    /// The weakest feedback the policy can learn from.
    fn required_feedback(&self) -> FeedbackMode;

    /// Prepares for an episode over `d` arms and `n` rounds.
    fn reset(&mut self, d: usize, n: u64, seed: u64);

    /// Arm to play at round `t` (1-based).
    fn select(&mut self, t: u64) -> usize;

    /// Outcome of the arm returned by the preceding `select`.
    fn observe(&mut self, t: u64, feedback: &Feedback);

    fn exploration_summary(&self) -> Option<ExplorationSummary> {
        None
    }
}

/// A policy name with parameters and an optional feedback mode, written
/// `name(key=value,...)@mode`, e.g. `bare(c=0.01)@full_set`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicySpec {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub feedback: Option<FeedbackMode>,
}

impl PolicySpec {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            params: BTreeMap::new(),
            feedback: None,
        }
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn with_feedback(mut self, mode: FeedbackMode) -> Self {
        self.feedback = Some(mode);
        self
    }

    pub fn param<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.params
            .get(key)
            .map(|v| {
                v.parse().map_err(|_| {
                    Error::config(format!("policy `{}`: bad value `{v}` for {key}", self.name))
                })
            })
            .transpose()
    }

    fn allow_only(&self, keys: &[&str]) -> Result<()> {
        match self.params.keys().find(|k| !keys.contains(&k.as_str())) {
            Some(k) => Err(Error::config(format!(
                "policy `{}` has no parameter `{k}`",
                self.name
            ))),
            None => Ok(()),
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.params.is_empty() {
            let inner: Vec<String> = self
                .params
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            write!(f, "({})", inner.join(";"))?;
        }
        if let Some(mode) = self.feedback {
            write!(f, "@{mode}")?;
        }
        Ok(())
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (body, feedback) = match s.rsplit_once('@') {
            Some((body, mode)) => (body.trim(), Some(mode.parse()?)),
            None => (s, None),
        };
        let (name, params) = match body.split_once('(') {
            Some((name, rest)) => {
                let rest = rest
                    .strip_suffix(')')
                    .ok_or_else(|| Error::config(format!("unclosed parameter list in `{s}`")))?;
                let mut params = BTreeMap::new();
                for pair in rest
                    .split([',', ';'])
                    .map(str::trim)
                    .filter(|p| !p.is_empty())
                {
                    let (k, v) = pair.split_once('=').ok_or_else(|| {
                        Error::config(format!("policy parameter `{pair}` is not key=value"))
                    })?;
                    params.insert(k.trim().to_string(), v.trim().to_string());
                }
                (name.trim(), params)
            }
            None => (body, BTreeMap::new()),
        };
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::config(format!("bad policy name in `{s}`")));
        }
        Ok(Self {
            name: name.to_string(),
            params,
            feedback,
        })
    }
}

/// Facts about the environment that some policies need at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyContext {
    pub d: usize,
    /// Lowest-index most influential node, for the oracle baseline.
    pub best_node: usize,
}

pub type PolicyFactory =
    dyn Fn(&PolicySpec, &PolicyContext, &PolicyRegistry) -> Result<Box<dyn Policy>> + Send + Sync;

/// Name-keyed policy constructors.
#[derive(Clone, Default)]
pub struct PolicyRegistry {
    factories: BTreeMap<String, Arc<PolicyFactory>>,
}

impl fmt::Debug for PolicyRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.factories.keys()).finish()
    }
}

impl PolicyRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// `graphmoss`, `bare`, `uniform_random`, `fixed_oracle`, `round_robin`.
    pub fn with_builtins() -> Self {
        let mut registry = Self::empty();
        registry.register("graphmoss", |spec, _, _| {
            spec.allow_only(&[])?;
            Ok(Box::new(GraphMoss::new()))
        });
        registry.register("bare", |spec, ctx, registry| {
            spec.allow_only(&["c", "inner"])?;
            let c = spec.param::<f64>("c")?.unwrap_or(1.0);
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::config(format!(
                    "bare: confidence scale c = {c} must be positive"
                )));
            }
            let inner = PolicySpec::named(
                &spec
                    .param::<String>("inner")?
                    .unwrap_or_else(|| "graphmoss".into()),
            );
            if inner.name == "bare" {
                return Err(Error::config("bare cannot nest itself"));
            }
            // Built once here so configuration errors surface before any trial.
            registry.build(&inner, ctx)?;
            let registry = registry.clone();
            let ctx = *ctx;
            let make_inner = move || {
                registry
                    .build(&inner, &ctx)
                    .expect("inner policy was validated at construction")
            };
            Ok(Box::new(Bare::new(c, Arc::new(make_inner))))
        });
        registry.register("uniform_random", |spec, _, _| {
            spec.allow_only(&[])?;
            Ok(Box::new(UniformRandom::default()))
        });
        registry.register("round_robin", |spec, _, _| {
            spec.allow_only(&[])?;
            Ok(Box::new(RoundRobin::default()))
        });
        registry.register("fixed_oracle", |spec, ctx, _| {
            spec.allow_only(&["k"])?;
            let k = spec.param::<usize>("k")?.unwrap_or(ctx.best_node);
            if k >= ctx.d {
                return Err(Error::config(format!(
                    "fixed_oracle: node {k} out of range for d = {}",
                    ctx.d
                )));
            }
            Ok(Box::new(FixedNode::new(k)))
        });
        registry
    }

    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&PolicySpec, &PolicyContext, &PolicyRegistry) -> Result<Box<dyn Policy>>
            + Send
            + Sync
            + 'static,
    {
        self.factories.insert(name.to_string(), Arc::new(factory));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn build(&self, spec: &PolicySpec, ctx: &PolicyContext) -> Result<Box<dyn Policy>> {
        let factory = self.factories.get(&spec.name).ok_or_else(|| {
            let known: Vec<&str> = self.names().collect();
            Error::config(format!(
                "unknown policy `{}` (known: {})",
                spec.name,
                known.join(", ")
            ))
        })?;
        factory(spec, ctx, self)
    }
}
