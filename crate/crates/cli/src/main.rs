//! Command-line front end for the repository context engine.
//!
//! Four subcommands cover the workflow: `index` builds a context graph
//! from a repository, `prompt` assembles a completion prompt for an
//! unfinished file, `eval` scores predictions against a benchmark, and
//! `stats` summarizes a graph. Machine-readable output (JSON, JSONL, or
//! the prompt itself) goes to stdout or `--output`; everything meant for
//! humans goes to stderr. Options resolve as flags over environment
//! variables (`REPOCTX_*`) over the `--config` file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use repoctx_core::eval::{run_eval, EvalOptions};
use repoctx_core::graph::{ContextGraph, Diagnostic};
use repoctx_core::index::build_graph;
use repoctx_core::prompt::build_prompt;
use repoctx_core::render::Scope;
use repoctx_core::source::SourceFile;
use repoctx_core::tokens::{tokenizer, TokenCounter};

#[derive(Parser)]
#[command(
    name = "repoctx",
    version,
    about = "Repository-aware context for code completion"
)]
struct Cli {
    /// TOML file supplying defaults for any long option.
    #[arg(long, global = true, env = "REPOCTX_CONFIG")]
    config: Option<PathBuf>,
    /// Worker threads for indexing (defaults to the CPU count).
    #[arg(long, global = true, env = "REPOCTX_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Index a repository into a context graph.
    Index(IndexArgs),
    /// Build a completion prompt for an unfinished file.
    Prompt(PromptArgs),
    /// Score predictions against a line-completion benchmark.
    Eval(EvalArgs),
    /// Print summary statistics for a graph or repository.
    Stats(StatsArgs),
}

#[derive(Args, Debug, Default)]
struct CommonOpts {
    /// Repository root to index.
    #[arg(long, env = "REPOCTX_REPO_ROOT")]
    repo_root: Option<PathBuf>,
    /// Context graph file to load (if it exists) or write.
    #[arg(long, env = "REPOCTX_GRAPH_PATH")]
    graph_path: Option<PathBuf>,
    /// Token budget for prompts; at least 64.
    #[arg(long, env = "REPOCTX_MAX_TOKENS")]
    max_tokens: Option<usize>,
    /// Background rendering detail: "definition" or "complete".
    #[arg(long, env = "REPOCTX_SCOPE")]
    scope: Option<String>,
    /// Tokenizer used for budget counting.
    #[arg(long, env = "REPOCTX_TOKENIZER")]
    tokenizer: Option<String>,
    /// Write the command's machine output here instead of stdout.
    #[arg(long, env = "REPOCTX_OUTPUT")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct IndexArgs {
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct PromptArgs {
    #[command(flatten)]
    common: CommonOpts,
    /// The unfinished source file to complete.
    file: PathBuf,
    /// Cursor position as LINE:COL, both 1-based; file end when omitted.
    #[arg(long)]
    cursor: Option<String>,
    /// Report prompt construction time on stderr.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonOpts,
    /// Benchmark dataset, one JSON example per line.
    #[arg(long)]
    dataset: PathBuf,
    /// Model predictions, one JSON object per line.
    #[arg(long)]
    predictions: PathBuf,
    /// Write per-example result records (JSONL) here.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Cache built graphs in this directory between runs.
    #[arg(long, env = "REPOCTX_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    common: CommonOpts,
}

/// Defaults loadable from `--config`. Field names match the long options.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    repo_root: Option<PathBuf>,
    graph_path: Option<PathBuf>,
    max_tokens: Option<usize>,
    scope: Option<String>,
    tokenizer: Option<String>,
    output: Option<PathBuf>,
    jobs: Option<usize>,
    cache_dir: Option<PathBuf>,
}

/// Fully resolved options for one invocation.
struct Settings {
    repo_root: Option<PathBuf>,
    graph_path: Option<PathBuf>,
    max_tokens: usize,
    scope: Scope,
    counter: Box<dyn TokenCounter>,
    output: Option<PathBuf>,
}

fn resolve(common: CommonOpts, config: &ConfigFile) -> anyhow::Result<Settings> {
    let max_tokens = common.max_tokens.or(config.max_tokens).unwrap_or(2048);
    if max_tokens < 64 {
        bail!("max-tokens must be at least 64 (got {max_tokens})");
    }
    let scope = common
        .scope
        .or_else(|| config.scope.clone())
        .unwrap_or_else(|| "complete".to_string())
        .parse::<Scope>()
        .map_err(anyhow::Error::msg)?;
    let counter = tokenizer(
        &common
            .tokenizer
            .or_else(|| config.tokenizer.clone())
            .unwrap_or_else(|| "approx".to_string()),
    )?;
    Ok(Settings {
        repo_root: common.repo_root.or_else(|| config.repo_root.clone()),
        graph_path: common.graph_path.or_else(|| config.graph_path.clone()),
        max_tokens,
        scope,
        counter,
        output: common.output.or_else(|| config.output.clone()),
    })
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config: ConfigFile = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
        }
        None => ConfigFile::default(),
    };
    if let Some(jobs) = cli.jobs.or(config.jobs) {
        if jobs == 0 {
            bail!("jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("initializing the worker pool")?;
    }
    match cli.command {
        Command::Index(args) => cmd_index(resolve(args.common, &config)?),
        Command::Prompt(args) => {
            let settings = resolve(args.common, &config)?;
            cmd_prompt(&args.file, args.cursor.as_deref(), args.timing, settings)
        }
        Command::Eval(args) => {
            let settings = resolve(args.common, &config)?;
            let cache_dir = args.cache_dir.or_else(|| config.cache_dir.clone());
            cmd_eval(
                &args.dataset,
                &args.predictions,
                args.records.as_deref(),
                cache_dir,
                settings,
            )
        }
        Command::Stats(args) => cmd_stats(resolve(args.common, &config)?),
    }
}

/// Write the machine payload to `--output` or stdout.
fn emit(output: Option<&Path>, payload: &str) -> anyhow::Result<()> {
    match output {
        Some(path) => fs::write(path, payload)
            .with_context(|| format!("writing {}", path.display()))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(payload.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn warn_diagnostic(diagnostic: &Diagnostic) {
    match diagnostic.line {
        Some(line) => eprintln!(
            "warning: {}:{line}: {}",
            diagnostic.file_path, diagnostic.message
        ),
        None => eprintln!("warning: {}: {}", diagnostic.file_path, diagnostic.message),
    }
}

fn cmd_index(settings: Settings) -> anyhow::Result<()> {
    let root = settings
        .repo_root
        .as_deref()
        .context("index requires --repo-root")?;
    let started = Instant::now();
    let graph = build_graph(root)?;
    let elapsed_ms = started.elapsed().as_secs_f64() * 1000.0;
    if let Some(path) = settings.graph_path.as_deref() {
        graph.save(path)?;
    }
    let stats = graph.stats();
    let entities = stats.modules + stats.classes + stats.functions + stats.variables;
    eprintln!(
        "indexed {} files into {entities} entities ({} contains edges, {} depends edges) in {elapsed_ms:.1} ms",
        stats.files, stats.contains_edges, stats.depends_edges
    );
    for diagnostic in &graph.diagnostics {
        warn_diagnostic(diagnostic);
    }
    let payload = serde_json::json!({
        "schema": repoctx_core::graph::SCHEMA_VERSION,
        "root": graph.root,
        "graph_path": settings.graph_path,
        "stats": stats,
        "elapsed_ms": elapsed_ms,
    });
    emit(
        settings.output.as_deref(),
        &format!("{}\n", serde_json::to_string_pretty(&payload)?),
    )
}

/// Load the graph at `--graph-path` when the file exists; otherwise index
/// `--repo-root`.
fn load_or_build_graph(settings: &Settings) -> anyhow::Result<(ContextGraph, f64, bool)> {
    if let Some(path) = settings.graph_path.as_deref() {
        if path.is_file() {
            let started = Instant::now();
            let graph = ContextGraph::load(path)?;
            return Ok((graph, started.elapsed().as_secs_f64() * 1000.0, false));
        }
    }
    let root = settings
        .repo_root
        .as_deref()
        .context("need --repo-root or an existing --graph-path")?;
    let started = Instant::now();
    let graph = build_graph(root)?;
    Ok((graph, started.elapsed().as_secs_f64() * 1000.0, true))
}

/// The repo-relative path the engine should see for an on-disk file.
fn repo_relative(file: &Path, repo_root: Option<&Path>, graph_root: &str) -> String {
    let root = repo_root
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(graph_root));
    let abs_file = file.canonicalize().unwrap_or_else(|_| file.to_path_buf());
    let abs_root = root.canonicalize().unwrap_or(root);
    match abs_file.strip_prefix(&abs_root) {
        Ok(rel) => rel.to_string_lossy().replace('\\', "/"),
        Err(_) => file
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| file.to_string_lossy().into_owned()),
    }
}

fn parse_cursor(spec: &str) -> anyhow::Result<(u32, u32)> {
    let (line, column) = spec
        .split_once(':')
        .with_context(|| format!("cursor {spec:?} must be LINE:COL"))?;
    let line: u32 = line
        .trim()
        .parse()
        .with_context(|| format!("invalid cursor line in {spec:?}"))?;
    let column: u32 = column
        .trim()
        .parse()
        .with_context(|| format!("invalid cursor column in {spec:?}"))?;
    if line == 0 || column == 0 {
        bail!("cursor positions are 1-based: {spec:?}");
    }
    Ok((line, column))
}

fn cmd_prompt(
    file: &Path,
    cursor: Option<&str>,
    timing: bool,
    settings: Settings,
) -> anyhow::Result<()> {
    let (graph, graph_ms, built) = load_or_build_graph(&settings)?;
    let relative = repo_relative(file, settings.repo_root.as_deref(), &graph.root);
    let unfinished = SourceFile::read(file, &relative)?;
    let cursor = cursor.map(parse_cursor).transpose()?;
    let plan = build_prompt(
        &unfinished,
        cursor,
        &graph,
        settings.max_tokens,
        settings.scope,
        settings.counter.as_ref(),
    )?;
    if timing {
        let source = if built { "indexed" } else { "loaded" };
        eprintln!(
            "prompt built in {:.1} ms (graph {source} in {graph_ms:.1} ms)",
            plan.generation_ms
        );
    }
    emit(settings.output.as_deref(), &plan.final_prompt)
}

fn cmd_eval(
    dataset: &Path,
    predictions: &Path,
    records: Option<&Path>,
    cache_dir: Option<PathBuf>,
    settings: Settings,
) -> anyhow::Result<()> {
    let options = EvalOptions {
        max_tokens: settings.max_tokens,
        scope: settings.scope,
        cache_dir,
    };
    let outcome = run_eval(dataset, predictions, &options, settings.counter.as_ref())?;
    for diagnostic in &outcome.diagnostics {
        eprintln!("warning: {diagnostic}");
    }
    if let Some(path) = records {
        let mut text = String::new();
        for record in &outcome.records {
            text.push_str(&serde_json::to_string(record)?);
            text.push('\n');
        }
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    emit(
        settings.output.as_deref(),
        &format!("{}\n", serde_json::to_string_pretty(&outcome.report)?),
    )
}

fn cmd_stats(settings: Settings) -> anyhow::Result<()> {
    let (graph, _, _) = load_or_build_graph(&settings)?;
    emit(settings.output.as_deref(), &format!("{}\n", graph.stats()))
}
