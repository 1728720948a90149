mod config_file;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use zsp_core::engine::{Classifier, ClassifierConfig, Mode, Override, Prediction};
use zsp_core::eval::{evaluate, run_ablation, AblationCell, Dataset, EvalReport, Task, TableVariants};
use zsp_core::hypotheses::{tiny_table, HypothesisTable, TableError};
use zsp_core::ontology::Rootcode;
use zsp_core::scorer::{cached, EntailmentScorer, OracleScorer, OracleTable, RemoteConfig, RemoteScorer};

#[derive(Parser, Debug)]
#[command(name = "zsp", version, about = "Zero-shot PLOVER event coding over an entailment scorer")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify every instance of a dataset and write one prediction per line.
    Classify(RunArgs),
    /// Classify a labeled dataset and report precision, recall and F1.
    Evaluate(RunArgs),
    /// Check a hypothesis table and print its counts.
    ValidateTable(TableArgs),
    /// Run a grid of configurations and print macro F1 per task.
    Ablate(RunArgs),
    /// Query a remote scorer's health endpoint.
    Health(ScorerArgs),
}

#[derive(Args, Debug, Clone)]
struct TableArgs {
    /// key=value file setting any long flag; command-line flags win
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Hypothesis table (TSV); defaults to the built-in table
    #[arg(long, value_name = "FILE")]
    table: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct ScorerArgs {
    /// key=value file setting any long flag; command-line flags win
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Oracle score file (JSON)
    #[arg(long, value_name = "FILE", conflicts_with = "endpoint")]
    oracle: Option<PathBuf>,
    /// Scorer base URL; falls back to $ZSP_ENDPOINT
    #[arg(long, value_name = "URL")]
    endpoint: Option<String>,
    /// Model id sent to the remote scorer
    #[arg(long)]
    model: Option<String>,
    /// Remote request timeout in seconds
    #[arg(long, default_value_t = 30.0)]
    timeout: f64,
    /// Hypotheses per remote request
    #[arg(long, default_value_t = 32)]
    max_batch: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TaskArg {
    Binary,
    Quad,
    Root,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Tsv,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    #[command(flatten)]
    scorer: ScorerArgs,
    /// Hypothesis table (TSV); defaults to the built-in table
    #[arg(long, value_name = "FILE")]
    table: Option<PathBuf>,
    /// Tiny table for flat Tiny ablation cells; defaults to the built-in one
    #[arg(long, value_name = "FILE")]
    tiny_table: Option<PathBuf>,
    /// Dataset (JSON lines)
    #[arg(long, value_name = "FILE")]
    dataset: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    top_k: usize,
    #[arg(long, default_value_t = 0.1)]
    margin: f64,
    #[arg(long, default_value_t = 0.02)]
    consult_penalty: f64,
    /// l1, l2, l3 or flat
    #[arg(long, default_value = "l3", value_parser = parse_mode)]
    mode: Mode,
    /// conflict, peace or blockade; repeatable
    #[arg(long, value_parser = parse_override, action = clap::ArgAction::Append)]
    disable_override: Vec<Override>,
    #[arg(long, value_enum, default_value_t = TaskArg::All)]
    task: TaskArg,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Comma-separated ablation cells
    #[arg(long, default_value = AblationCell::DEFAULT_GRID)]
    grid: String,
    /// Output file; defaults to standard output
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Include decision traces
    #[arg(long)]
    verbose: bool,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

fn parse_override(s: &str) -> Result<Override, String> {
    s.parse()
}

impl RunArgs {
    fn classifier_config(&self) -> Result<ClassifierConfig> {
        let mut config = ClassifierConfig {
            top_k: self.top_k,
            margin: self.margin,
            consult_penalty: self.consult_penalty,
            mode: self.mode,
            ..ClassifierConfig::default()
        };
        for o in &self.disable_override {
            config.overrides.remove(o);
        }
        config.validate()?;
        Ok(config)
    }

    fn dataset(&self) -> Result<Dataset> {
        let path = self.dataset.as_ref().ok_or_else(|| anyhow!("--dataset is required"))?;
        Dataset::load(path).with_context(|| format!("loading dataset {}", path.display()))
    }

    fn tasks(&self, dataset: &Dataset) -> Result<Vec<Task>> {
        let task = match self.task {
            TaskArg::All => {
                let tasks = dataset.coverage.tasks();
                if tasks.is_empty() {
                    bail!("dataset {} has no gold labels", dataset.name);
                }
                return Ok(tasks);
            }
            TaskArg::Binary => Task::Binary,
            TaskArg::Quad => Task::Quad,
            TaskArg::Root => Task::Root,
        };
        if !dataset.coverage.covers(task) {
            bail!("dataset {} lacks gold {task} labels for some instances", dataset.name);
        }
        Ok(vec![task])
    }
}

fn load_table(path: Option<&Path>) -> Result<HypothesisTable> {
    match path {
        None => Ok(HypothesisTable::shipped()),
        Some(path) => HypothesisTable::load(path).map_err(|e| table_error(path, e)),
    }
}

fn table_error(path: &Path, err: TableError) -> anyhow::Error {
    anyhow!("invalid hypothesis table {}: {err}", path.display())
}

fn build_scorer(args: &ScorerArgs) -> Result<Box<dyn EntailmentScorer>> {
    if let Some(path) = &args.oracle {
        let table = OracleTable::load(path).with_context(|| format!("loading oracle {}", path.display()))?;
        return Ok(Box::new(cached(OracleScorer::new(table))));
    }
    Ok(Box::new(cached(remote(args)?)))
}

fn remote(args: &ScorerArgs) -> Result<RemoteScorer> {
    let endpoint = args
        .endpoint
        .clone()
        .or_else(|| std::env::var("ZSP_ENDPOINT").ok().filter(|s| !s.is_empty()))
        .ok_or_else(|| anyhow!("no scorer: pass --oracle or --endpoint (or set ZSP_ENDPOINT)"))?;
    if !(args.timeout.is_finite() && args.timeout > 0.0) {
        bail!("--timeout must be positive");
    }
    let mut config = RemoteConfig::new(endpoint);
    config.model = args.model.clone();
    config.timeout = Duration::from_secs_f64(args.timeout);
    config.max_batch = args.max_batch;
    Ok(RemoteScorer::new(config)?)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn predict(args: &RunArgs, dataset: &Dataset) -> Result<Vec<Prediction>> {
    let table = load_table(args.table.as_deref())?;
    let scorer = build_scorer(&args.scorer)?;
    let classifier = Classifier::new(&table, scorer.as_ref(), args.classifier_config()?);
    classifier
        .classify_all(&dataset.instances, args.jobs.max(1))
        .into_iter()
        .zip(&dataset.instances)
        .map(|(result, instance)| result.with_context(|| format!("classifying instance `{}`", instance.id)))
        .collect()
}

fn cmd_classify(args: &RunArgs) -> Result<()> {
    let dataset = args.dataset()?;
    let predictions = predict(args, &dataset)?;
    let mut out = output(args.out.as_deref())?;
    writeln!(out, "id\troot\tquad\tbinary\tscore")?;
    for p in &predictions {
        if args.verbose {
            for line in p.trace_lines() {
                writeln!(out, "# {}\t{line}", p.instance_id)?;
            }
        }
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{:.4}",
            p.instance_id,
            p.root,
            p.quad,
            p.binary,
            p.top().adjusted_score
        )?;
    }
    out.flush()?;
    Ok(())
}

fn render(reports: &[EvalReport], format: Format) -> String {
    match format {
        Format::Text => reports.iter().map(EvalReport::render_text).collect::<Vec<_>>().join("\n"),
        Format::Tsv => {
            let mut text = String::new();
            for (i, report) in reports.iter().enumerate() {
                let tsv = report.to_tsv();
                // header once
                text.push_str(if i == 0 { &tsv } else { tsv.split_once('\n').map_or("", |(_, rest)| rest) });
            }
            text
        }
    }
}

fn cmd_evaluate(args: &RunArgs) -> Result<()> {
    let dataset = args.dataset()?;
    let tasks = args.tasks(&dataset)?;
    let predictions = predict(args, &dataset)?;
    let reports = tasks
        .iter()
        .map(|task| evaluate(&predictions, &dataset, *task))
        .collect::<Result<Vec<_>, _>>()?;
    match &args.out {
        Some(path) => {
            print!("{}", render(&reports, Format::Text));
            let mut out = output(Some(path))?;
            out.write_all(render(&reports, Format::Tsv).as_bytes())?;
            out.flush()?;
        }
        None => print!("{}", render(&reports, args.format)),
    }
    if args.verbose {
        for p in &predictions {
            for line in p.trace_lines() {
                eprintln!("# {}\t{line}", p.instance_id);
            }
        }
    }
    Ok(())
}

fn cmd_ablate(args: &RunArgs) -> Result<()> {
    let dataset = args.dataset()?;
    if dataset.coverage.tasks().is_empty() {
        bail!("dataset {} has no gold labels", dataset.name);
    }
    let tiny = match &args.tiny_table {
        Some(path) => HypothesisTable::load(path).map_err(|e| table_error(path, e))?,
        None => tiny_table(),
    };
    let variants = TableVariants::new(tiny, load_table(args.table.as_deref())?);
    let cells = AblationCell::parse_grid(&args.grid, &args.classifier_config()?)?;
    let scorer = build_scorer(&args.scorer)?;
    let grid = run_ablation(&dataset, &variants, scorer.as_ref(), &cells, args.jobs.max(1))?;
    let mut out = output(args.out.as_deref())?;
    out.write_all(grid.to_tsv().as_bytes())?;
    out.flush()?;
    Ok(())
}

fn cmd_validate_table(args: &TableArgs) -> Result<()> {
    let table = load_table(args.table.as_deref())?;
    let source = args
        .table
        .as_ref()
        .map_or_else(|| "built-in".to_string(), |p| p.display().to_string());
    let mut out = io::stdout().lock();
    writeln!(out, "table: {source}")?;
    writeln!(out, "past={} future={}", table.past_count(), table.future_count())?;
    writeln!(out, "{:<10} {:>5} {:>7}", "root", "past", "future")?;
    let coverage = table.coverage();
    for (root, past, future) in &coverage {
        writeln!(out, "{:<10} {:>5} {:>7}", root.name(), past, future)?;
    }
    let missing: Vec<&str> = Rootcode::ALL
        .iter()
        .filter(|r| coverage.iter().all(|(c, past, _)| c != *r || *past == 0))
        .map(|r| r.name())
        .collect();
    if !missing.is_empty() {
        writeln!(out, "roots without hypotheses: {}", missing.join(", "))?;
    }
    let pairs: Vec<String> = table
        .peace_pairs()
        .iter()
        .map(|(general, specific)| format!("{general}->{specific}"))
        .collect();
    writeln!(
        out,
        "peace pairs: {} ok",
        if pairs.is_empty() { "none".to_string() } else { pairs.join(" ") }
    )?;
    let blockade: Vec<String> = table
        .entries()
        .iter()
        .filter(|e| e.tags.blockade_coerce)
        .map(|e| e.id.to_string())
        .collect();
    writeln!(
        out,
        "blockade entries: {}",
        if blockade.is_empty() { "none".to_string() } else { blockade.join(" ") }
    )?;
    Ok(())
}

fn cmd_health(args: &ScorerArgs) -> Result<()> {
    let health = remote(args)?.health()?;
    println!("status={} model={}", health.status, health.model);
    Ok(())
}

fn run() -> Result<()> {
    let argv = config_file::expand(std::env::args_os().collect())?;
    let cli = Cli::try_parse_from(argv).unwrap_or_else(|e| e.exit());
    match &cli.command {
        Command::Classify(args) => cmd_classify(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::ValidateTable(args) => cmd_validate_table(args),
        Command::Ablate(args) => cmd_ablate(args),
        Command::Health(args) => cmd_health(args),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
