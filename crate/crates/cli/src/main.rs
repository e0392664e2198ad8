mod config;
mod corpus_cmds;
mod eval_cmds;
mod model_cmds;
mod pairs;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use config::ModelFlags;
use corpus_cmds::CommandOutcome;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "molpolish",
    version,
    about = "Molecule pair editing: annotate, train, generate, evaluate"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Debug)]
struct IoArgs {
    /// Input file.
    #[arg(long)]
    input: PathBuf,
    /// Output file (stdout when absent).
    #[arg(long)]
    output: Option<PathBuf>,
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Parse a "src<TAB>tgt" pair file and report counts and bad lines.
    Ingest {
        #[command(flatten)]
        io: IoArgs,
        /// Fail unless exactly this many pairs parse.
        #[arg(long)]
        expect_count: Option<usize>,
    },
    /// Annotate pairs with center and branch actions; one JSON per line.
    Annotate {
        #[command(flatten)]
        io: IoArgs,
        /// Re-verify that every annotation rebuilds its target exactly.
        #[arg(long)]
        audit: bool,
    },
    /// Mean preserved/removed/added atom counts over a pair file.
    Stats {
        #[command(flatten)]
        io: IoArgs,
    },
    /// Build the cluster vocabulary of a pair corpus (TSV).
    Vocab {
        #[command(flatten)]
        io: IoArgs,
    },
    /// Train the editor; writes per-epoch checkpoints and a CSV loss log.
    Train {
        /// Pair file to train on.
        #[arg(long)]
        input: PathBuf,
        /// Directory for checkpoints and the loss log.
        #[arg(long)]
        output: PathBuf,
        /// TOML config file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        model: ModelFlags,
    },
    /// Run the editor over sources; emits "src<TAB>generated<TAB>status".
    Generate {
        #[command(flatten)]
        io: IoArgs,
        /// Trained checkpoint; omitted = untrained seeded weights.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[command(flatten)]
        model: ModelFlags,
    },
    /// Score generated pairs under a metric (M1..M5).
    Evaluate {
        #[command(flatten)]
        io: IoArgs,
        /// Metric name: M1..M5.
        #[arg(long)]
        metric: String,
        /// Dataset column for the success metrics: qed|drd2|logp4|logp6.
        #[arg(long)]
        dataset: Option<String>,
        /// Property sidecar: "canonical-SMILES<TAB>value" lines.
        #[arg(long)]
        properties: Option<PathBuf>,
        /// External scorer: SMILES lines on stdin, values on stdout.
        /// `builtin:heavy-atoms` selects the toy heavy-atom counter.
        #[arg(long)]
        scorer_cmd: Option<String>,
    },
    /// Morgan/Tanimoto similarity between two molecules.
    Fingerprint {
        /// First molecule (SMILES).
        a: String,
        /// Second molecule (SMILES).
        b: String,
        /// Output file (stdout when absent).
        #[arg(long)]
        output: Option<PathBuf>,
        /// TOML config file.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Emit a synthetic pair corpus.
    GenCorpus {
        /// Corpus family: rule (hydroxyl-to-amine) or edit (random polish).
        #[arg(long, default_value = "rule")]
        kind: String,
        /// Number of pairs.
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Size budget per molecule (atoms for edit, carbons for rule).
        #[arg(long, default_value_t = 12)]
        max_atoms: usize,
        /// Random seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (stdout when absent).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<CommandOutcome> {
    match cli.command {
        Cmd::Ingest { io, expect_count } => {
            let file = config::load_file(io.config.as_deref())?;
            let cfg = config::resolve(&file, &ModelFlags::default(), io.config.as_deref());
            corpus_cmds::cmd_ingest(&io.input, io.output.as_deref(), expect_count, &cfg)
        }
        Cmd::Annotate { io, audit } => {
            let file = config::load_file(io.config.as_deref())?;
            let cfg = config::resolve(&file, &ModelFlags::default(), io.config.as_deref());
            corpus_cmds::cmd_annotate(&io.input, io.output.as_deref(), audit, &cfg)
        }
        Cmd::Stats { io } => {
            let file = config::load_file(io.config.as_deref())?;
            let cfg = config::resolve(&file, &ModelFlags::default(), io.config.as_deref());
            corpus_cmds::cmd_stats(&io.input, io.output.as_deref(), &cfg)
        }
        Cmd::Vocab { io } => {
            let file = config::load_file(io.config.as_deref())?;
            let cfg = config::resolve(&file, &ModelFlags::default(), io.config.as_deref());
            corpus_cmds::cmd_vocab(&io.input, io.output.as_deref(), &cfg)
        }
        Cmd::Train { input, output, config: cfg_path, model } => {
            let file = config::load_file(cfg_path.as_deref())?;
            let cfg = config::resolve(&file, &model, cfg_path.as_deref());
            model_cmds::cmd_train(&input, &output, &cfg)
        }
        Cmd::Generate { io, checkpoint, model } => {
            let file = config::load_file(io.config.as_deref())?;
            let cfg = config::resolve(&file, &model, io.config.as_deref());
            model_cmds::cmd_generate(&io.input, io.output.as_deref(), checkpoint.as_deref(), &cfg)
        }
        Cmd::Evaluate { io, metric, dataset, properties, scorer_cmd } => {
            let file = config::load_file(io.config.as_deref())?;
            let cfg = config::resolve(&file, &ModelFlags::default(), io.config.as_deref());
            let spec = config::metric_spec(&file, &metric, dataset.as_deref())?;
            eval_cmds::cmd_evaluate(
                &io.input,
                io.output.as_deref(),
                &spec,
                properties.as_deref(),
                scorer_cmd.as_deref(),
                &cfg,
            )
        }
        Cmd::Fingerprint { a, b, output, config: cfg_path } => {
            let file = config::load_file(cfg_path.as_deref())?;
            let cfg = config::resolve(&file, &ModelFlags::default(), cfg_path.as_deref());
            eval_cmds::cmd_fingerprint(&a, &b, output.as_deref(), &cfg)
        }
        Cmd::GenCorpus { kind, count, max_atoms, seed, output } => {
            corpus_cmds::cmd_gen_corpus(&kind, count, max_atoms, seed, output.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) if outcome.skipped == 0 => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
