use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qaleak::commands::{self, NamedPath, NnMode, RunConfig};
use qaleak::io::DatasetFormat;
use qaleak::report::render_table;

#[derive(Parser)]
#[command(name = "qaleak", version, about = "Train/test overlap analysis for open-domain QA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Flag test items whose answer appears among training answers.
    Overlap(Common),
    /// Rank training questions as paraphrase candidates for every test item.
    Candidates(Common),
    /// Draw the annotation sample and auto-label items without candidates.
    Sample(Common),
    /// Serve the annotation API (and UI assets, if given).
    Serve(Common),
    /// Assign sampled items to overlap strata from the collected annotations.
    Stratify(Common),
    /// Score prediction files per stratum.
    Evaluate(Common),
    /// Nearest-neighbor baselines that answer with the closest training answer.
    Nn {
        #[arg(long, value_enum, default_value = "tfidf")]
        mode: Mode,
        #[command(flatten)]
        common: Common,
    },
    /// Run every stage; stratify and evaluate once annotation is complete.
    Pipeline(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Tfidf,
    Dense,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Jsonl,
    Tsv,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    dev: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Input format; detected from the file extension by default.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Dataset name for samples and reports (default: test file stem).
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long, env = "QA_LEAKAGE_OUT", default_value = "qaleak_out")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    sample_size: usize,
    /// Maximum candidates per test item.
    #[arg(long, default_value_t = qaleak_core::DEFAULT_CANDIDATE_CAP)]
    cap: usize,
    /// Treat the dev split as training data (ids get a "dev/" prefix).
    #[arg(long)]
    include_dev: bool,
    /// Annotation store (default: OUT/annotations.jsonl).
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Prediction file as NAME=PATH; repeatable.
    #[arg(long = "predictions", value_name = "NAME=PATH")]
    predictions: Vec<NamedPath>,
    /// Prediction files hold one answer per line in test order.
    #[arg(long)]
    plain_predictions: bool,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Directory of static UI assets to serve next to the API.
    #[arg(long)]
    ui_dir: Option<PathBuf>,
    /// Training embeddings; ids are read from PATH.ids.
    #[arg(long)]
    embeddings_train: Option<PathBuf>,
    /// Test embeddings; ids are read from PATH.ids.
    #[arg(long)]
    embeddings_test: Option<PathBuf>,
}

impl From<Common> for RunConfig {
    fn from(c: Common) -> Self {
        RunConfig {
            train: c.train,
            dev: c.dev,
            test: c.test,
            format: c.format.map(|f| match f {
                Format::Jsonl => DatasetFormat::Jsonl,
                Format::Tsv => DatasetFormat::Tsv,
            }),
            dataset: c.dataset,
            out: c.out,
            seed: c.seed,
            sample_size: c.sample_size,
            cap: c.cap,
            include_dev: c.include_dev,
            annotations: c.annotations,
            predictions: c.predictions,
            plain_predictions: c.plain_predictions,
            port: c.port,
            ui_dir: c.ui_dir,
            embeddings_train: c.embeddings_train,
            embeddings_test: c.embeddings_test,
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Overlap(c) => {
            let s = commands::cmd_overlap(&c.into())?;
            println!(
                "{}: answer overlap {}% ({}/{} test items)",
                s.dataset, s.answer_overlap, s.overlapping, s.test_items
            );
        }
        Command::Candidates(c) => {
            let sets = commands::cmd_candidates(&c.into())?;
            let empty = sets.iter().filter(|s| s.is_empty()).count();
            println!("{} candidate sets written ({empty} empty)", sets.len());
        }
        Command::Sample(c) => {
            let o = commands::cmd_sample(&c.into())?;
            println!(
                "sampled {} items with seed {} ({} auto-labeled)",
                o.sample.len(),
                o.sample.seed,
                o.auto_labeled
            );
        }
        Command::Serve(c) => {
            let config: RunConfig = c.into();
            tokio::runtime::Runtime::new()?.block_on(commands::cmd_serve(&config))?;
        }
        Command::Stratify(c) => {
            let strata = commands::cmd_stratify(&c.into())?;
            println!("{} sampled items stratified", strata.len());
        }
        Command::Evaluate(c) => {
            let reports = commands::cmd_evaluate(&c.into())?;
            print!("{}", render_table(&reports));
        }
        Command::Nn { mode, common } => {
            let mode = match mode {
                Mode::Tfidf => NnMode::Tfidf,
                Mode::Dense => NnMode::Dense,
            };
            let config: RunConfig = common.into();
            let predictions = commands::cmd_nn(&config, mode)?;
            println!(
                "{} predictions written to {}",
                predictions.len(),
                config.out_path(&commands::nn_file(mode)).display()
            );
        }
        Command::Pipeline(c) => {
            let o = commands::cmd_pipeline(&c.into())?;
            println!(
                "{}: answer overlap {}% ({}/{})",
                o.summary.dataset, o.summary.answer_overlap, o.summary.overlapping, o.summary.test_items
            );
            println!("annotation sample: {} items, {} auto-labeled", o.sample_size, o.auto_labeled);
            if o.remaining.is_empty() {
                if !o.reports.is_empty() {
                    print!("{}", render_table(&o.reports));
                }
            } else {
                println!(
                    "{} items still need annotation; run `qaleak serve` and rerun",
                    o.remaining.len()
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
