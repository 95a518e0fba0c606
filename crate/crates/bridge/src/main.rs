use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use schemabridge::bench::{load_scenarios, render_json, render_report, run_benchmark, BenchConfig};
use schemabridge::config::load_registry_file;
use schemabridge::gateway::{router, Gateway, ReqwestUpstream};
use schemabridge::llm::live::LiveBackend;
use schemabridge::llm::mock::{FaultKind, MockBackend, MockMode};
use schemabridge::llm::profile::{find_profile, load_profiles};
use schemabridge::llm::{LlmBackend, LlmClient, ModelProfile, PromptSet};
use schemabridge::monitor::MetricsSink;
use schemabridge::Pipeline;
use schemabridge_core::Strategy;

#[derive(Parser)]
#[command(name = "schemabridge", version, about = "Schema-bridging HTTP middleware")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the intercepting proxy.
    Serve(ServeArgs),
    /// Run the scenario benchmark and print the report tables.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    Mock,
    Live,
    /// No model: every eligible request resolves through the fallback.
    None,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum, default_value = "mock")]
    backend: BackendKind,
    /// Profile name from the models file.
    #[arg(long, default_value = "mock")]
    model: String,
    #[arg(long, default_value = "config/models.json")]
    models: PathBuf,
    #[arg(long, default_value = "prompts")]
    prompts: PathBuf,
    /// Mock response fixtures.
    #[arg(long, default_value = "fixtures/mock")]
    fixtures: PathBuf,
    /// Mock fault injection: `kind:rate`, kind one of drop_field, garbled,
    /// wrong_value, bad_fn, any.
    #[arg(long)]
    fault: Option<String>,
    /// Make every mock call time out.
    #[arg(long)]
    outage: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Simulated mock latency per call.
    #[arg(long, default_value_t = 0)]
    latency_ms: u64,
    #[arg(long, default_value_t = 3)]
    ensemble: usize,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "config/registry.json")]
    config: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: String,
    /// Service receiving unregistered and non-eligible traffic.
    #[arg(long, default_value = "127.0.0.1:9000")]
    upstream: String,
    #[arg(long)]
    metrics_out: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Direct,
    Codegen,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    On,
    Off,
    Both,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "fixtures/scenarios")]
    scenarios: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    strategy: StrategyArg,
    #[arg(long, value_enum, default_value = "both")]
    safeguards: ModeArg,
    #[arg(long, default_value_t = 3)]
    runs: usize,
    /// Additional profiles to benchmark after `--model`, comma-separated.
    #[arg(long, value_delimiter = ',')]
    also: Vec<String>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    parallel: bool,
    #[command(flatten)]
    model: ModelArgs,
}

fn mock_mode(args: &ModelArgs) -> Result<MockMode> {
    if args.outage {
        return Ok(MockMode::Outage);
    }
    let Some(spec) = &args.fault else { return Ok(MockMode::Faithful) };
    let (kind, rate) = spec.split_once(':').unwrap_or((spec, "1.0"));
    let kind = FaultKind::parse(kind).ok_or_else(|| anyhow!("unknown fault kind `{kind}`"))?;
    let rate: f64 = rate.parse().context("fault rate")?;
    if !(0.0..=1.0).contains(&rate) {
        bail!("fault rate {rate} outside [0, 1]");
    }
    Ok(MockMode::Faulty { kind, rate })
}

fn profile(args: &ModelArgs, name: &str) -> Result<ModelProfile> {
    if matches!(args.backend, BackendKind::Mock | BackendKind::None) && name == "mock" && !args.models.exists() {
        return Ok(ModelProfile::mock());
    }
    let profiles = load_profiles(&args.models).context("models")?;
    Ok(find_profile(&profiles, name)?)
}

fn client(args: &ModelArgs, name: &str) -> Result<Option<LlmClient>> {
    let backend: Arc<dyn LlmBackend> = match args.backend {
        BackendKind::None => return Ok(None),
        BackendKind::Mock => Arc::new(
            MockBackend::from_dir(&args.fixtures, mock_mode(args)?, args.seed)?
                .with_latency(Duration::from_millis(args.latency_ms)),
        ),
        BackendKind::Live => {
            let p = profile(args, name)?;
            Arc::new(LiveBackend::from_env([p.provider.as_str()])?)
        }
    };
    let prompts = PromptSet::load(&args.prompts).context("prompts")?;
    Ok(Some(LlmClient::new(backend, profile(args, name)?, prompts)))
}

async fn serve(args: ServeArgs) -> Result<()> {
    let registry = load_registry_file(&args.config).context("registry")?;
    let llm = client(&args.model, &args.model.model)?;
    let metrics = match &args.metrics_out {
        Some(path) => MetricsSink::to_file(path).context("metrics file")?,
        None => MetricsSink::in_memory(),
    };
    let routes = registry.len();
    let gateway = Gateway::new(
        registry,
        Pipeline::new(llm).with_ensemble_size(args.model.ensemble),
        Arc::new(ReqwestUpstream::new()),
        &args.upstream,
        Arc::new(metrics),
    );
    let listener = tokio::net::TcpListener::bind(&args.listen).await.context("listen")?;
    tracing::info!(listen = %args.listen, routes, upstream = %args.upstream, "serving");
    axum::serve(listener, router(Arc::new(gateway))).await.context("server")
}

async fn bench(args: BenchArgs) -> Result<()> {
    let scenarios = load_scenarios(&args.scenarios)?;
    let config = BenchConfig {
        strategies: match args.strategy {
            StrategyArg::Direct => vec![Strategy::Direct],
            StrategyArg::Codegen => vec![Strategy::Codegen],
            StrategyArg::Both => Strategy::ALL.to_vec(),
        },
        safeguards: match args.safeguards {
            ModeArg::On => vec![true],
            ModeArg::Off => vec![false],
            ModeArg::Both => vec![true, false],
        },
        runs: args.runs,
        ensemble_size: args.model.ensemble,
        parallel: args.parallel,
        ..BenchConfig::default()
    };
    let mut reports = Vec::new();
    for name in std::iter::once(&args.model.model).chain(&args.also) {
        let llm = client(&args.model, name)?;
        reports.push(run_benchmark(&config, &scenarios, llm).await);
    }
    print!("{}", render_report(&reports));
    if let Some(out) = &args.out {
        write_json(out, &render_json(&reports))?;
    }
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).context("report")?;
    std::fs::write(path, text).context("report file")
}

#[tokio::main]
async fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "schemabridge=info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let result = match Cli::parse().command {
        Command::Serve(args) => serve(args).await,
        Command::Bench(args) => bench(args).await,
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
