//! `semwalk` command-line runner.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use semwalk::cooc::{build_from_traces_par, CoocGraph};
use semwalk::experiment::{
    self, compare, ExperimentConfig, IngestConfig, ObservableSettings, TheoryConfig, COOC, MANIFEST,
};
use semwalk::walker::read_traces;
use semwalk::{Error, NodeId};

#[derive(Parser)]
#[command(name = "semwalk", version, about = "Random-walk model of social annotation")]
struct Cli {
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the substrate graph of an experiment config.
    Generate(RunArgs),
    /// Generate the substrate and run the walk ensemble.
    Walk(RunArgs),
    /// Project walk traces into a co-occurrence network.
    Cooc {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Leave the walk origin (first node of every trace) out of cliques.
        #[arg(long)]
        exclude_origin: bool,
    },
    /// Observables of a co-occurrence edge list.
    Stats {
        #[arg(long)]
        cooc: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Observable settings (JSON); defaults otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Walk traces supplying visit frequencies for the frequency-rank plot.
        #[arg(long)]
        traces: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        exclude_origin: bool,
    },
    /// Vocabulary-growth prediction of a ring model.
    Theory {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Clean a JSON-Lines post log and analyse one focus tag.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        focus: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Abort on the first malformed line.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Juxtapose an empirical and a synthetic artifact directory.
    Compare {
        #[arg(long)]
        empirical: PathBuf,
        #[arg(long)]
        synthetic: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full synthetic pipeline.
    Run(RunArgs),
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn load_experiment(args: &RunArgs) -> CliResult<(ExperimentConfig, PathBuf)> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| config.out_dir.as_ref().map(PathBuf::from))
        .ok_or_else(|| Failure::Usage("no output directory: pass --out or set out_dir".into()))?;
    config.validate()?;
    Ok((config, out))
}

fn read_cooc(path: &Path) -> CliResult<CoocGraph> {
    let f = fs::File::open(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    Ok(CoocGraph::read_edge_list(BufReader::new(f))?)
}

fn load_traces(path: &Path) -> CliResult<Vec<semwalk::walker::WalkTrace>> {
    let f = fs::File::open(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    Ok(read_traces(BufReader::new(f))?)
}

/// Walks containing each node at least once.
fn frequencies(traces: &[semwalk::walker::WalkTrace], count_origin: bool) -> Vec<(NodeId, u64)> {
    let mut counts = std::collections::BTreeMap::new();
    for t in traces {
        for v in t.distinct_nodes(count_origin) {
            *counts.entry(v).or_insert(0u64) += 1;
        }
    }
    counts.into_iter().collect()
}

fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::Generate(args) => {
            let (config, out) = load_experiment(&args)?;
            experiment::run_generate(&config, &out)?;
        }
        Command::Walk(args) => {
            let (config, out) = load_experiment(&args)?;
            experiment::run_walks(&config, &out)?;
        }
        Command::Run(args) => {
            let (config, out) = load_experiment(&args)?;
            let summary = experiment::run_experiment(&config, &out)?;
            eprintln!("wrote {} files to {}", summary.manifest.files.len() + 1, out.display());
        }
        Command::Cooc { traces, out, exclude_origin } => {
            let traces = load_traces(&traces)?;
            let g = build_from_traces_par(&traces, !exclude_origin);
            fs::create_dir_all(&out).map_err(|e| Failure::Runtime(e.to_string()))?;
            let f = fs::File::create(out.join(COOC)).map_err(|e| Failure::Runtime(e.to_string()))?;
            g.write_edge_list(std::io::BufWriter::new(f))?;
        }
        Command::Stats { cooc, out, config, traces, seed, exclude_origin } => {
            let settings = match config {
                Some(p) => {
                    let text = fs::read_to_string(&p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
                    serde_json::from_str::<ObservableSettings>(&text).map_err(|e| Failure::Usage(e.to_string()))?
                }
                None => ObservableSettings::default(),
            };
            settings.validate()?;
            let g = read_cooc(&cooc)?;
            let freq = match traces {
                Some(p) => Some(frequencies(&load_traces(&p)?, !exclude_origin)),
                None => None,
            };
            experiment::run_stats(&g, freq.as_deref(), &settings, seed, &out)?;
        }
        Command::Theory { config, out } => {
            let config = TheoryConfig::load(&config)?;
            config.validate()?;
            experiment::run_theory(&config, &out)?;
        }
        Command::Ingest { input, out, focus, config, strict, seed } => {
            let mut cfg = match (config, focus.as_deref()) {
                (Some(p), _) => IngestConfig::load(&p)?,
                (None, Some(f)) => IngestConfig::new(f),
                (None, None) => return Err(Failure::Usage("ingest needs --focus or --config".into())),
            };
            if let Some(f) = focus {
                cfg.focus = f;
            }
            cfg.strict |= strict;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.validate()?;
            let summary = experiment::run_ingest_file(&cfg, &input, &out)?;
            eprintln!(
                "accepted {} of {} lines; {} posts contain {:?}",
                summary.report.accepted,
                summary.report.input_lines,
                summary.heaps.points.len(),
                cfg.focus
            );
        }
        Command::Compare { empirical, synthetic, out } => {
            for d in [&empirical, &synthetic] {
                if !d.join(MANIFEST).exists() {
                    return Err(Failure::Usage(format!("{} is not an artifact directory", d.display())));
                }
            }
            let report = compare(&empirical, &synthetic, &out)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.threads {
        Some(0) => Err(Failure::Usage("--threads must be >= 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(cli.command)),
            Err(e) => Err(Failure::Runtime(e.to_string())),
        },
        None => execute(cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
