use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;
use sfem::knowledge::Modality;
use sfem::synth::{SignalLayout, SynthConfig};
use sfem_cli::config::{RunConfig, SEED_ENV};
use sfem_cli::{pipeline, CliError, Precision};

#[derive(Parser)]
#[command(
    name = "sfem",
    version,
    about = "Predict syntactic frame extension with chaining models"
)]
struct Cli {
    /// Bound on worker threads used for evaluation.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// dem or dpm.
    #[arg(long)]
    kind: Option<String>,
    /// Modalities joined by `+`, or `all`.
    #[arg(long)]
    mask: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Result<Vec<(String, String)>, CliError> {
        let mut out = Vec::new();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set {kv:?}: expected KEY=VALUE")))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        if let Some(s) = self.seed {
            out.push(("seed".into(), s.to_string()));
        }
        if let Some(o) = &self.out {
            let o = std::path::absolute(o).unwrap_or_else(|_| o.clone());
            out.push(("out".into(), o.display().to_string()));
        }
        if let Some(k) = &self.kind {
            out.push(("kind".into(), k.clone()));
        }
        if let Some(m) = &self.mask {
            out.push(("mask".into(), m.clone()));
        }
        if let Some(e) = self.epochs {
            out.push(("epochs".into(), e.to_string()));
        }
        Ok(out)
    }

    fn load(&self) -> Result<RunConfig, CliError> {
        RunConfig::load(self.config.as_deref(), &self.overrides()?)
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Directory receiving the generated files and `sfem.conf`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 30)]
    frames: usize,
    #[arg(long, default_value_t = 8)]
    nouns_per_frame: usize,
    #[arg(long, default_value_t = 5)]
    frames_per_group: usize,
    #[arg(long, default_value_t = 10)]
    queries_per_cluster: usize,
    #[arg(long, default_value_t = 1)]
    decades: usize,
    #[arg(long, default_value_t = 1900)]
    first_decade: i32,
    #[arg(long, default_value_t = 10.0)]
    separation: f64,
    #[arg(long, default_value_t = 0.1)]
    cluster_sd: f64,
    #[arg(long, default_value_t = 1.0)]
    bimodal_fraction: f64,
    #[arg(long, default_value_t = 0.25)]
    novel_fraction: f64,
    /// shared or split.
    #[arg(long, default_value = "shared")]
    signal: String,
    #[arg(long, default_value_t = 300)]
    dim: usize,
    #[arg(long, default_value_t = 1000)]
    image_dim: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic corpus, graph, embeddings and manifest.
    GenSynthetic(SynthArgs),
    /// Filter the corpus and write one frame table per decade.
    BuildDataset {
        #[command(flatten)]
        common: Common,
        /// Print dataset statistics.
        #[arg(long)]
        stats: bool,
    },
    /// Write conceptual and perceptual embedding stores.
    BuildConcepts(Common),
    /// Train one integration network per decade.
    Train(Common),
    /// Score the trained model and the baselines on the test queries.
    Evaluate(Common),
    /// Joint-probability drops when one modality is removed.
    Ablate {
        #[command(flatten)]
        common: Common,
        /// Modality to remove from the configured mask.
        #[arg(long, required_unless_present = "breakdown")]
        remove: Option<String>,
        /// Attribute test pairs to the three unimodal models instead.
        #[arg(long)]
        breakdown: bool,
    },
    /// Project representations of a few frames onto two principal axes.
    ExportPca(Common),
}

fn synth_config(a: &SynthArgs) -> Result<SynthConfig, CliError> {
    let seed = match a.seed {
        Some(s) => s,
        None => match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{SEED_ENV}={v:?} is not an integer")))?,
            Err(_) => 0,
        },
    };
    let signal: SignalLayout = a.signal.parse().map_err(CliError::Config)?;
    Ok(SynthConfig {
        frames: a.frames,
        nouns_per_frame: a.nouns_per_frame,
        frames_per_group: a.frames_per_group,
        queries_per_cluster: a.queries_per_cluster,
        decades: a.decades,
        first_decade: a.first_decade,
        cluster_separation: a.separation,
        cluster_sd: a.cluster_sd,
        bimodal_fraction: a.bimodal_fraction,
        novel_fraction: a.novel_fraction,
        signal,
        dim: a.dim,
        image_dim: a.image_dim,
        seed,
        ..SynthConfig::default()
    })
}

macro_rules! by_precision {
    ($cfg:expr, $f:ident $(, $arg:expr)*) => {
        match $cfg.precision {
            Precision::F64 => pipeline::$f::<f64>(&$cfg $(, $arg)*),
            Precision::F32 => pipeline::$f::<f32>(&$cfg $(, $arg)*),
        }
    };
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    match cli.command {
        Command::GenSynthetic(a) => {
            let files = pipeline::gen_synthetic(&synth_config(&a)?, &a.out)?;
            println!("{}", files.config.display());
        }
        Command::BuildDataset { common, stats } => {
            let cfg = common.load()?;
            let outcome = pipeline::build_dataset(&cfg)?;
            for p in &outcome.tables {
                println!("{}", p.display());
            }
            if stats {
                print!("{}", outcome.stats);
            }
        }
        Command::BuildConcepts(common) => {
            let cfg = common.load()?;
            let outcome = pipeline::build_concepts(&cfg)?;
            println!(
                "conceptual decades: {:?}; skipped: {:?}; perceptual nouns: {}",
                outcome.decades, outcome.skipped, outcome.perceptual_nouns
            );
        }
        Command::Train(common) => {
            let cfg = common.load()?;
            for d in by_precision!(cfg, train)? {
                println!(
                    "{}\tbest_epoch={}\tscore={:.6}\tfinal_loss={:.6}",
                    d.run.decade,
                    d.run.best_epoch,
                    d.run.best_score,
                    d.run.loss_trace.last().copied().unwrap_or(f64::NAN)
                );
            }
        }
        Command::Evaluate(common) => {
            let cfg = common.load()?;
            let (path, _) = by_precision!(cfg, evaluate)?;
            println!("{}", path.display());
        }
        Command::Ablate {
            common,
            remove,
            breakdown,
        } => {
            let cfg = common.load()?;
            if breakdown {
                println!("{}", by_precision!(cfg, breakdown)?.display());
            }
            if let Some(m) = remove {
                let m: Modality = m.parse().map_err(CliError::Config)?;
                for p in by_precision!(cfg, ablate, m)? {
                    println!("{}", p.display());
                }
            }
        }
        Command::ExportPca(common) => {
            let cfg = common.load()?;
            println!("{}", by_precision!(cfg, export_pca)?.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("sfem: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
