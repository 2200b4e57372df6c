//! `poirec`: one subcommand per pipeline stage, each reading and writing
//! versioned JSON artifacts under the output directory.

mod artifact;
mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use poirec_core::synthetic::SyntheticConfig;
use poirec_core::{Error, ExplainMethod, RunConfig};

use crate::commands::Ctx;
use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "poirec", version, about = "Aspect-aware POI recommendation with explanations")]
struct Cli {
    /// JSON run configuration; unset fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Artifact directory (overrides paths.model_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Review file for `ingest` (overrides paths.corpus).
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Lexicon override directory (overrides paths.lexicons).
    #[arg(long, global = true)]
    lexicons: Option<PathBuf>,
    /// Master seed; every stage seed is derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Recommendations per user.
    #[arg(long, global = true)]
    top_n: Option<usize>,
    /// Minimum corpus frequency of an aspect term.
    #[arg(long, global = true)]
    freq_threshold: Option<usize>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Core,
    Rank,
    Dense,
}

impl From<Method> for ExplainMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Core => ExplainMethod::Core,
            Method::Rank => ExplainMethod::Rank,
            Method::Dense => ExplainMethod::Dense,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse the review file into corpus.json.
    Ingest,
    /// Mine aspect terms and label training sentences.
    ExtractAspects,
    /// Train one sentence classifier per aspect category.
    TrainClassifier,
    /// Assign categories to every labeled sentence.
    Classify,
    /// Fit the factorization machine.
    TrainFm,
    /// Top-N places per user.
    Recommend {
        #[arg(long)]
        user: Option<String>,
    },
    /// Explain each user's recommendations.
    Explain {
        #[arg(long, value_enum, default_value = "core")]
        method: Method,
        #[arg(long)]
        user: Option<String>,
    },
    /// Cross-validated precision, recall and F at several list lengths.
    Evaluate,
    /// Ordered cores of a few users side by side.
    CaseStudy {
        /// Comma-separated user ids; defaults to the first three users.
        #[arg(long, value_delimiter = ',')]
        users: Vec<String>,
    },
    /// Write a seeded synthetic review file with planted preferences.
    GenerateSynthetic {
        #[arg(long, default_value_t = 100)]
        users: usize,
        #[arg(long, default_value_t = 60)]
        places: usize,
        #[arg(long, default_value_t = 2000)]
        reviews: usize,
        /// Defaults to reviews.jsonl in the output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn run_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(|e| match e {
            Error::Io { .. } => Error::InvalidConfig(e.to_string()),
            e => e,
        })?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg = cfg.with_seed(s);
    }
    if let Some(d) = &cli.out {
        cfg.paths.model_dir = d.clone();
    }
    if let Some(p) = &cli.corpus {
        cfg.paths.corpus = Some(p.clone());
    }
    if let Some(p) = &cli.lexicons {
        cfg.paths.lexicons = Some(p.clone());
    }
    if let Some(n) = cli.top_n {
        cfg.top_n = n;
    }
    if let Some(t) = cli.freq_threshold {
        cfg.freq_threshold = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<commands::Manifest> {
    if let Some(n) = cli.threads {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        if let Err(e) = pool {
            log::warn!("thread pool already initialized: {e}");
        }
    }
    let cfg = run_config(&cli)?;
    if let Command::GenerateSynthetic {
        users,
        places,
        reviews,
        output,
    } = &cli.command
    {
        let synth = SyntheticConfig {
            users: *users,
            places: *places,
            reviews: *reviews,
            seed: cfg.seed,
            ..SyntheticConfig::default()
        };
        let output = output.clone().unwrap_or_else(|| cfg.paths.model_dir.join("reviews.jsonl"));
        return commands::synthesize(&synth, &output);
    }
    let ctx = Ctx::new(cfg)?;
    match &cli.command {
        Command::Ingest => commands::ingest(&ctx),
        Command::ExtractAspects => commands::extract(&ctx),
        Command::TrainClassifier => commands::train_cnn(&ctx),
        Command::Classify => commands::classify(&ctx),
        Command::TrainFm => commands::train_fm(&ctx),
        Command::Recommend { user } => commands::recommend(&ctx, user.as_deref()),
        Command::Explain { method, user } => commands::explain(&ctx, (*method).into(), user.as_deref()),
        Command::Evaluate => commands::evaluate(&ctx),
        Command::CaseStudy { users } => commands::case(&ctx, users),
        Command::GenerateSynthetic { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(manifest) => {
            eprint!("{}", manifest.render());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
