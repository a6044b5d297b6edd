use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::environment::FeedbackMode;
use crate::error::{Error, Result};
use crate::graph::{GraphKind, GraphSpec};
use crate::policy::PolicySpec;

/// Everything needed to reproduce an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    /// Optional list of edge probabilities; the experiment is repeated on
    /// the same topology for each value.
    pub sweep_p: Vec<f64>,
    pub n: u64,
    pub trials: usize,
    pub policies: Vec<PolicySpec>,
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; 0 uses all cores.
    pub workers: usize,
}

pub const PRESETS: &[&str] = &["ba1000", "facebook", "enron", "gnutella", "psweep"];

fn preset_policies() -> Vec<PolicySpec> {
    vec![
        PolicySpec::named("graphmoss").with_feedback(FeedbackMode::CountOnly),
        PolicySpec::named("bare")
            .with_param("c", 0.01)
            .with_feedback(FeedbackMode::FullSet),
    ]
}

fn dataset(path: &str, symmetrize: bool) -> GraphSpec {
    GraphSpec::new(
        GraphKind::File {
            path: PathBuf::from(path),
            symmetrize,
        },
        0,
        0.8,
    )
}

impl ExperimentConfig {
    /// Named experiment setups. Dataset presets expect the SNAP files under
    /// `data/`; point `graph = file:path=...` elsewhere to override.
    pub fn preset(name: &str) -> Result<Self> {
        let graph = match name {
            "ba1000" | "psweep" => GraphSpec::new(GraphKind::BarabasiAlbert { m: 10 }, 1000, 0.8),
            "facebook" => dataset("data/facebook_combined.txt", true),
            "enron" => dataset("data/Email-Enron.txt", true),
            "gnutella" => dataset("data/p2p-Gnutella04.txt", true),
            other => {
                return Err(Error::config(format!(
                    "unknown preset `{other}` (known: {})",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(Self {
            graph,
            sweep_p: if name == "psweep" {
                vec![0.2, 0.4, 0.6, 0.8, 1.0]
            } else {
                Vec::new()
            },
            n: 2000,
            trials: 100,
            policies: preset_policies(),
            seed: 0,
            out: PathBuf::from(format!("results/{name}")),
            workers: 0,
        })
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, source: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: source.to_string(),
                line: idx + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected `key = value`, got `{line}`")))?;
            let value = value.trim();
            let wrap = |e: Error| parse_err(e.to_string());
            let number =
                |what: &str| parse_err(format!("{what} = `{value}` is not a valid number"));
            match key.trim() {
                "preset" => {
                    let preset = Self::preset(value).map_err(wrap)?;
                    *self = preset;
                }
                "graph" => self.graph = value.parse().map_err(wrap)?,
                "sweep_p" => {
                    self.sweep_p = split_top_level(value)
                        .iter()
                        .map(|v| v.parse::<f64>().map_err(|_| number("sweep_p")))
                        .collect::<Result<_>>()?
                }
                "n" => self.n = value.parse().map_err(|_| number("n"))?,
                "trials" => self.trials = value.parse().map_err(|_| number("trials"))?,
                "seed" => self.seed = value.parse().map_err(|_| number("seed"))?,
                "workers" => self.workers = value.parse().map_err(|_| number("workers"))?,
                "out" => self.out = PathBuf::from(value),
                "policies" => {
                    self.policies = split_top_level(value)
                        .iter()
                        .map(|p| p.parse().map_err(wrap))
                        .collect::<Result<_>>()?
                }
                other => return Err(parse_err(format!("unknown key `{other}`"))),
            }
        }
        Ok(())
    }

    pub fn from_file(path: &Path, base: Self) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = base;
        config.apply_text(&text, &path.display().to_string())?;
        Ok(config)
    }

    /// Checks everything that can be checked before a trial starts.
    pub fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        if let GraphKind::File { path, .. } = &self.graph.kind {
            if !path.is_file() {
                return Err(Error::config(format!(
                    "dataset file {} not found",
                    path.display()
                )));
            }
        }
        if self.n == 0 {
            return Err(Error::config("n must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.policies.is_empty() {
            return Err(Error::config("no policies configured"));
        }
        if let Some(p) = self.sweep_p.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::config(format!(
                "sweep probability {p} outside (0, 1]"
            )));
        }
        Ok(())
    }

    /// Config-file text that reproduces this experiment.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "graph = {}", self.graph);
        if !self.sweep_p.is_empty() {
            let ps: Vec<String> = self.sweep_p.iter().map(f64::to_string).collect();
            let _ = writeln!(s, "sweep_p = {}", ps.join(", "));
        }
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "seed = {}", self.seed);
        let policies: Vec<String> = self.policies.iter().map(ToString::to_string).collect();
        let _ = writeln!(s, "policies = {}", policies.join(", "));
        let _ = writeln!(s, "out = {}", self.out.display());
        s
    }
}

/// Splits on commas that are not inside parentheses.
fn split_top_level(s: &str) -> Vec<String> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    for ch in s.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(std::mem::take(&mut current));
                continue;
            }
            _ => {}
        }
        current.push(ch);
    }
    parts.push(current);
    parts
        .into_iter()
        .map(|p| p.trim().to_string())
        .filter(|p| !p.is_empty())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_exist() {
        for name in PRESETS {
            let c = ExperimentConfig::preset(name).unwrap();
            assert_eq!(c.n, 2000);
            assert_eq!(c.trials, 100);
            assert_eq!(c.policies.len(), 2);
        }
        let ps = ExperimentConfig::preset("psweep").unwrap();
        assert_eq!(ps.sweep_p, vec![0.2, 0.4, 0.6, 0.8, 1.0]);
        assert!(ExperimentConfig::preset("twitter").is_err());
    }

    #[test]
    fn text_overrides_and_round_trips() {
        let mut c = ExperimentConfig::preset("ba1000").unwrap();
        c.apply_text(
            "# small run\nn = 300\ntrials = 4 # inline\npolicies = graphmoss, bare(c=0.5,inner=graphmoss)@full_set, round_robin\n",
            "inline",
        )
        .unwrap();
        assert_eq!(c.n, 300);
        assert_eq!(c.trials, 4);
        assert_eq!(c.policies.len(), 3);
        assert_eq!(c.policies[1].param::<f64>("c").unwrap(), Some(0.5));

        let mut back = ExperimentConfig::preset("facebook").unwrap();
        back.apply_text(&c.to_text(), "echo").unwrap();
        assert_eq!(
            back,
            ExperimentConfig {
                workers: back.workers,
                ..c
            }
        );
    }

    #[test]
    fn bad_lines_report_line_numbers() {
        let mut c = ExperimentConfig::preset("ba1000").unwrap();
        for (text, line) in [
            ("n = 10\ntrials = many\n", 2),
            ("\n\nbogus\n", 3),
            ("colour = red\n", 1),
        ] {
            match c.apply_text(text, "cfg") {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn validation_catches_missing_dataset() {
        let c = ExperimentConfig::preset("facebook").unwrap();
        let mut c = c;
        c.graph = "file:path=/definitely/missing.txt".parse().unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = ExperimentConfig::preset("ba1000").unwrap();
        c.trials = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn top_level_split_respects_parentheses() {
        assert_eq!(
            split_top_level("a, b(c=1,d=2)@full_set ,c"),
            vec!["a", "b(c=1,d=2)@full_set", "c"]
        );
    }
}
