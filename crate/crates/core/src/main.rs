use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use graph_bandit::analysis::dstar_curve;
use graph_bandit::graph::DEFAULT_EDGE_PROBABILITY;
use graph_bandit::harness::{self, ExperimentConfig};
use graph_bandit::policy::PolicyRegistry;
use graph_bandit::{Error, Result};

#[derive(Parser)]
#[command(
    name = "graph-bandit",
    version,
    about = "Influence bandits with revealed neighbourhoods"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a regret experiment and write CSV results.
    Run {
        /// Flat `key = value` config file, applied on top of the preset.
        #[arg(long)]
        config: Option<PathBuf>,
        /// One of ba1000, facebook, enron, gnutella, psweep.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        n: Option<u64>,
    },
    /// Detectable dimension as a function of the horizon.
    Dstar {
        /// Graph spec (e.g. `star:d=100,p=1`) or path to a matrix / edge list.
        #[arg(long)]
        graph: String,
        /// Comma-separated ascending horizons.
        #[arg(long, value_delimiter = ',', required = true)]
        n_grid: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Edge probability applied to raw edge lists.
        #[arg(long, default_value_t = DEFAULT_EDGE_PROBABILITY)]
        p: f64,
    },
    /// Generate a graph and write it in the plain matrix format.
    Gen {
        #[arg(long)]
        graph: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::Io {
            path: parent.to_path_buf(),
            source: e,
        })?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            preset,
            seed,
            out,
            workers,
            trials,
            n,
        } => {
            if config.is_none() && preset.is_none() {
                return Err(Error::Config("give --config, --preset or both".into()));
            }
            let base = ExperimentConfig::preset(preset.as_deref().unwrap_or("ba1000"))?;
            let mut cfg = match &config {
                Some(path) => ExperimentConfig::from_file(path, base)?,
                None => base,
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(out) = out {
                cfg.out = out;
            }
            if let Some(workers) = workers {
                cfg.workers = workers;
            }
            if let Some(trials) = trials {
                cfg.trials = trials;
            }
            if let Some(n) = n {
                cfg.n = n;
            }
            let table = harness::run_experiment(&cfg, &PolicyRegistry::with_builtins())?;
            harness::emit_csv(&table, &cfg.out)?;
            for r in &table.results {
                let last = r.curve.mean_regret.last().copied().unwrap_or(0.0);
                match (r.curve.t_star, r.curve.d_star) {
                    (Some(t), Some(d)) => eprintln!(
                        "{:<32} regret(n) = {last:.1}  T_star = {:.1}  D_star = {:.1}",
                        r.label, t.mean, d.mean
                    ),
                    _ => eprintln!("{:<32} regret(n) = {last:.1}", r.label),
                }
            }
            eprintln!(
                "wrote {} in {:.1}s",
                cfg.out.display(),
                table.wall_clock.as_secs_f64()
            );
        }
        Command::Dstar {
            graph,
            n_grid,
            out,
            seed,
            p,
        } => {
            let matrix = harness::resolve_graph(&graph, seed, p)?;
            let curve = dstar_curve(&matrix, &n_grid).map_err(|e| Error::Config(e.to_string()))?;
            let file = create(&out)?;
            harness::write_dstar_csv(&curve, file).map_err(|source| Error::Csv {
                path: out.clone(),
                source,
            })?;
        }
        Command::Gen { graph, seed, out } => {
            let spec = graph.parse()?;
            let matrix = graph_bandit::graph::generate(&spec, seed)?;
            matrix.write_to(create(&out)?).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
