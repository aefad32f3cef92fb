use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use chrono::{DateTime, NaiveDate, Utc};
use clap::{Args, Parser, Subcommand};

use forkscope::pipeline::{analyze, AnalysisReport, AnalyzeOptions, PipelineError};
use forkscope::provider::github::GitHubForge;
use forkscope::provider::local::LocalForge;
use forkscope::provider::transport::{HttpTransport, RecordingTransport, ReplayTransport, Transport};
use forkscope::provider::{Forge, ProviderConfig, ProviderError, RepoProvider};
use forkscope::render::render;
use forkscope::RepoId;

/// Finds forks with commits their origin never merged and charts them.
#[derive(Parser)]
#[command(name = "forkscope", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze the fork network of a repository and write a JSON artifact.
    Analyze(AnalyzeArgs),
    /// Turn an artifact into a static, self-contained viewer directory.
    Render {
        artifact: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct AnalyzeArgs {
    /// `owner/name` or a repository URL.
    origin: String,
    /// Fork rows to keep, counting only forks with unique commits.
    #[arg(long, default_value_t = NonZeroUsize::new(10).unwrap())]
    top: NonZeroUsize,
    #[arg(long, default_value = "forkscope.json")]
    out: PathBuf,
    #[arg(long, default_value = ".forkscope-cache")]
    cache: PathBuf,
    /// Use only the cache; never contact the forge.
    #[arg(long)]
    offline: bool,
    /// Hide commits before this UTC date. Ranking is unaffected.
    #[arg(long, value_name = "YYYY-MM-DD")]
    since: Option<NaiveDate>,
    /// Skip forks that cannot be fetched instead of failing.
    #[arg(long)]
    allow_partial: bool,
    /// Fixed `generated_at` value, for reproducible artifacts.
    #[arg(long, value_name = "ISO8601")]
    timestamp: Option<DateTime<Utc>>,
    /// Read repositories from a local fixture manifest instead of GitHub.
    #[arg(long, value_name = "MANIFEST", conflicts_with_all = ["replay", "record"])]
    fixture: Option<PathBuf>,
    /// Serve API responses from a recording instead of the network.
    #[arg(long, value_name = "RECORDING", conflicts_with = "record")]
    replay: Option<PathBuf>,
    /// Save every API response to a recording for later `--replay`.
    #[arg(long, value_name = "RECORDING")]
    record: Option<PathBuf>,
    #[arg(long, default_value = forkscope::provider::github::DEFAULT_API_BASE)]
    api_base: String,
    /// Environment variable holding the API token.
    #[arg(long, default_value = "GITHUB_TOKEN")]
    token_env: String,
    /// Concurrent forge requests and clones.
    #[arg(long, default_value_t = 4)]
    jobs: usize,
    /// Count added lines only in files matching these globs.
    #[arg(long = "source-glob", value_name = "GLOB")]
    source_globs: Vec<String>,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure {
            code: 1,
            error: e.into(),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => run_analyze(args),
        Command::Render { artifact, out } => run_render(&artifact, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run_render(artifact: &Path, out: &Path) -> Result<(), Failure> {
    match render(artifact, out) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            Ok(())
        }
        Err(e) => Err(Failure {
            code: e.exit_code() as u8,
            error: anyhow::Error::new(e).context(format!("cannot render {}", artifact.display())),
        }),
    }
}

fn run_analyze(args: AnalyzeArgs) -> Result<(), Failure> {
    let origin: RepoId = args
        .origin
        .parse()
        .with_context(|| format!("cannot parse repository reference {:?}", args.origin))?;

    let mut config = ProviderConfig::new(&args.cache);
    config.api_base_url = args.api_base.clone();
    config.auth_token_env = args.token_env.clone();
    config.max_parallel_fetches = args.jobs;
    if !args.source_globs.is_empty() {
        config.source_file_filter = Some(args.source_globs.clone());
    }

    let mut recorder: Option<Arc<RecordingTransport<HttpTransport>>> = None;
    let provider = if args.offline {
        RepoProvider::offline(config)
    } else {
        let forge: Box<dyn Forge> = if let Some(manifest) = &args.fixture {
            Box::new(LocalForge::load(manifest)?)
        } else {
            let transport: Box<dyn Transport> = if let Some(path) = &args.replay {
                Box::new(ReplayTransport::load(path)?)
            } else if args.record.is_some() {
                let r = Arc::new(RecordingTransport::new(HttpTransport::new()?));
                recorder = Some(r.clone());
                Box::new(r)
            } else {
                Box::new(HttpTransport::new()?)
            };
            Box::new(GitHubForge::new(
                &config.api_base_url,
                transport,
                config.token(),
                config.retry.clone(),
            ))
        };
        RepoProvider::online(config, forge)
    }
    .map_err(|e| pipeline_failure(PipelineError::Provider(e), &args.token_env))?;

    let mut opts = AnalyzeOptions::new(origin);
    opts.top_k = args.top;
    opts.since = args.since;
    opts.allow_partial = args.allow_partial;
    opts.generated_at = args.timestamp;

    let outcome = analyze(&provider, &opts);
    if let (Some(r), Some(path)) = (&recorder, &args.record) {
        r.recording()
            .save(path)
            .with_context(|| format!("cannot save recording to {}", path.display()))?;
    }
    let report = outcome.map_err(|e| pipeline_failure(e, &args.token_env))?;
    report
        .artifact
        .write(&args.out)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    summarize(&report, &args.out);
    Ok(())
}

fn pipeline_failure(e: PipelineError, token_env: &str) -> Failure {
    let hint = match &e {
        PipelineError::Provider(ProviderError::RateLimited { .. }) => Some(format!(
            "set {token_env} to an API token for a higher limit, or rerun after the reset (cached data is reused)"
        )),
        PipelineError::Provider(ProviderError::OfflineCacheMiss(_)) => {
            Some("run once without --offline to fill the cache".to_string())
        }
        PipelineError::PartialFetch(_) => Some("rerun with --allow-partial to skip these forks".to_string()),
        _ => None,
    };
    let code = e.exit_code() as u8;
    let error = match hint {
        Some(hint) => anyhow::anyhow!("{e}\nhint: {hint}"),
        None => anyhow::Error::new(e),
    };
    Failure { code, error }
}

fn summarize(report: &AnalysisReport, out: &Path) {
    let s = report.stats;
    eprintln!(
        "{}: {} forks, {} fetched, {} with unique commits, {} shown",
        report.artifact.origin.full_name, s.forks_enumerated, s.forks_fetched, s.forks_with_unique, s.forks_shown
    );
    if !report.artifact.warnings.is_empty() {
        eprintln!("{} warnings recorded in the artifact", report.artifact.warnings.len());
    }
    eprintln!("wrote {}", out.display());
}
