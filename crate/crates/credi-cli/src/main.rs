//! `credi`: drive the relationship-extraction pipeline from the shell.
//!
//! The binary is a thin sequential driver over the library: every
//! subcommand loads data, calls library functions in order, and writes
//! artifacts. Exit codes classify failures: 2 for I/O, 3 for malformed
//! data, 4 for configuration, 5 for backend trouble.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use credi_core::corpus::CorpusError;
use credi_core::evaluation::EvalError;
use credi_core::inference::BackendError;
use credi_core::network::NetworkError;
use credi_core::pipeline::PipelineError;
use credi_core::retrieval::RetrievalError;

#[derive(Debug, Parser)]
#[command(name = "credi", version, about = "Character relationship extraction from novels")]
struct Cli {
    /// TOML config file; flags below override its values.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: config::Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Segment raw novel text into a dialogue-unit corpus.
    Ingest(commands::ingest::IngestArgs),
    /// Partition a corpus into train/val/test files.
    Split(commands::split::SplitArgs),
    /// Embed the training split and save the retrieval index.
    Index(commands::index::IndexArgs),
    /// Run the full extraction pipeline and write all artifacts.
    Run(commands::run::RunArgs),
    /// Score an existing predictions file against gold labels.
    Eval(commands::eval::EvalArgs),
    /// Run the prompt-mode by dialogue-variant ablation grid.
    Ablate(commands::ablate::AblateArgs),
    /// Build the character network and export it.
    Network(commands::network::NetworkArgs),
    /// Print corpus statistics.
    Stats(commands::stats::StatsArgs),
    /// Export instruction-tuning records.
    ExportFinetune(commands::finetune::FinetuneArgs),
}

fn main() -> ExitCode {
    // Die quietly when stdout goes away mid-print (`credi run | head`)
    // instead of panicking on the broken pipe.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }

    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version are successful exits; everything else is a
            // usage problem.
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 4,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };

    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => config::PipelineConfig::load(path)?,
        None => config::PipelineConfig::default(),
    };
    cli.overrides.apply(&mut cfg)?;

    match &cli.command {
        Command::Ingest(args) => commands::ingest::run(&cfg, args),
        Command::Split(args) => commands::split::run(&cfg, args),
        Command::Index(args) => commands::index::run(&cfg, args),
        Command::Run(args) => commands::run::run(&cfg, args),
        Command::Eval(args) => commands::eval::run(&cfg, args),
        Command::Ablate(args) => commands::ablate::run(&cfg, args),
        Command::Network(args) => commands::network::run(&cfg, args),
        Command::Stats(args) => commands::stats::run(&cfg, args),
        Command::ExportFinetune(args) => commands::finetune::run(&cfg, args),
    }
}

/// Maps the first recognized error in the chain to an exit code; unmapped
/// errors are configuration problems (bad values, unknown names).
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<PipelineError>() {
            return match e {
                PipelineError::Corpus(e) => corpus_code(e),
                PipelineError::Retrieval(e) => retrieval_code(e),
                PipelineError::Backend(e) => backend_code(e),
                PipelineError::Eval(_) => 3,
            };
        }
        if let Some(e) = cause.downcast_ref::<CorpusError>() {
            return corpus_code(e);
        }
        if let Some(e) = cause.downcast_ref::<RetrievalError>() {
            return retrieval_code(e);
        }
        if let Some(e) = cause.downcast_ref::<BackendError>() {
            return backend_code(e);
        }
        if cause.downcast_ref::<EvalError>().is_some() {
            return 3;
        }
        if let Some(e) = cause.downcast_ref::<NetworkError>() {
            return match e {
                NetworkError::Io(_) => 2,
                _ => 3,
            };
        }
        if cause.downcast_ref::<toml::de::Error>().is_some() {
            return 4;
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return 3;
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    4
}

fn corpus_code(e: &CorpusError) -> u8 {
    match e {
        CorpusError::FileNotFound(_) | CorpusError::Io(_) => 2,
        CorpusError::Prompt(_) => 4,
        _ => 3,
    }
}

fn retrieval_code(e: &RetrievalError) -> u8 {
    match e {
        RetrievalError::Io(_) => 2,
        RetrievalError::Http(_) | RetrievalError::EmbedderFailure { .. } => 5,
        RetrievalError::InvalidK => 4,
        _ => 3,
    }
}

fn backend_code(e: &BackendError) -> u8 {
    match e {
        BackendError::Config(_) => 4,
        _ => 5,
    }
}
