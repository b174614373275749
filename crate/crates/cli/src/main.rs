mod settings;

use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use claimcheck::dataset::{self, DatasetPair, COMPLEXITY_THRESHOLDS};
use claimcheck::eval::{curve_csv, recall_curve, ResultGrid};
use claimcheck::pipeline::{ErrorClass, Pipeline, PipelineConfig, PipelineError};
use claimcheck::retrieve::{build_index, load_corpus, RemoteClient, Retriever};
use claimcheck::summarize::{CcrCache, QueryGenerator};
use claimcheck::{HandleMap, Strategy};
use log::warn;

use settings::{ConfigFile, EvalSettings, ReportFormat, RetrieverChoice, RunOptions, Settings};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Pipeline(PipelineError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        let class = match self {
            CliError::Usage(_) => ErrorClass::Validation,
            CliError::Io(_) => ErrorClass::Io,
            CliError::Pipeline(e) => e.class(),
        };
        class.exit_code() as u8
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
            CliError::Pipeline(e) => write!(f, "{e}"),
        }
    }
}

impl<E: Into<PipelineError>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Pipeline(e.into())
    }
}

/// Find previously fact-checked claims for social media posts.
///
/// Exit codes: 0 success, 1 unexpected failure, 2 invalid input or
/// configuration, 3 file I/O failure, 4 summarizer or search API failure.
#[derive(Parser)]
#[command(name = "claimcheck", version)]
struct Cli {
    /// TOML file whose keys mirror the long flags (e.g. `strategy = "P-H-M"`)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Log verbosity: -v info, -vv debug
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search fact-checks for one claim ("-" reads stdin)
    Check {
        claim: String,
        #[command(flatten)]
        run: RunOptions,
    },
    /// Evaluate retrieval over a dataset of claim/summary pairs
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        /// Comma-separated recall cutoffs
        #[arg(long)]
        k_list: Option<String>,
        /// Query source: ccr, scr or smc
        #[arg(long)]
        query_field: Option<String>,
        /// Exclude failed queries instead of aborting
        #[arg(long)]
        skip_errors: bool,
        /// Concurrent queries
        #[arg(long)]
        workers: Option<usize>,
        /// Apply URL removal, deduplication and language filtering first
        #[arg(long)]
        curate: bool,
        #[command(flatten)]
        run: RunOptions,
    },
    /// Build a local index and write its normalized FCA corpus
    Index {
        /// FCA corpus JSONL
        #[arg(long, conflicts_with = "dataset", required_unless_present = "dataset")]
        corpus: Option<PathBuf>,
        /// Dataset JSONL whose fact-check articles are indexed
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Where to write the corpus JSONL
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dataset statistics and SMC/SCR similarity profile
    Stats {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        curate: bool,
        /// TSV handle map, needed only for strategies that substitute handles
        #[arg(long)]
        handle_map: Option<PathBuf>,
        /// Emit JSON instead of text
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Check { claim, run } => check(&claim, &run, &config),
        Command::Eval {
            dataset,
            k_list,
            query_field,
            skip_errors,
            workers,
            curate,
            run,
        } => {
            let eval = EvalSettings::resolve(k_list.as_deref(), query_field.as_deref(), skip_errors, workers, &config)?;
            evaluate(&dataset, curate, &run, &config, eval)
        }
        Command::Index { corpus, dataset, out } => index(corpus.as_deref(), dataset.as_deref(), out.as_deref()),
        Command::Stats {
            dataset,
            curate,
            handle_map,
            json,
        } => stats(&dataset, curate, handle_map.as_deref(), json),
    }
}

fn load_pairs(path: &Path, curate: bool, strict: bool) -> Result<Vec<DatasetPair>, CliError> {
    let report = dataset::load(path)?;
    for w in &report.warnings {
        warn!("{}: {w}", path.display());
    }
    for e in &report.errors {
        eprintln!("{}: {e}", path.display());
    }
    if strict && !report.errors.is_empty() {
        return Err(CliError::Usage(format!(
            "{} invalid record(s) in {}; fix them or pass --skip-errors",
            report.errors.len(),
            path.display()
        )));
    }
    Ok(if curate { dataset::curate(&report.pairs) } else { report.pairs })
}

fn build_retriever(settings: &Settings, pairs: Option<&[DatasetPair]>) -> Result<Box<dyn Retriever>, CliError> {
    Ok(match &settings.retriever {
        RetrieverChoice::Api => Box::new(RemoteClient::new(settings.remote.clone())?),
        RetrieverChoice::Index(path) => Box::new(build_index(load_corpus(path)?, settings.ranking)?),
        RetrieverChoice::SelfIndex => {
            let pairs = pairs.ok_or_else(|| CliError::Usage("--retriever self is only valid for eval".into()))?;
            Box::new(build_index(dataset::fca_records(pairs), settings.ranking)?)
        }
    })
}

fn build_pipeline(
    settings: &Settings,
    config: PipelineConfig,
    retriever: Box<dyn Retriever>,
) -> Result<Pipeline, CliError> {
    let handles = match &settings.handle_map {
        Some(path) => Some(HandleMap::load(path)?),
        None => None,
    };
    let mut generator = QueryGenerator::new(settings.summarizer.clone(), settings.external)?;
    if let Some(dir) = &settings.cache_dir {
        let cache = CcrCache::open(dir).map_err(|e| CliError::Io(format!("CCR cache in {}: {e}", dir.display())))?;
        generator = generator.with_cache(cache);
    }
    Ok(Pipeline::new(config, handles, generator, retriever)?)
}

fn check(claim: &str, run: &RunOptions, config: &ConfigFile) -> Result<(), CliError> {
    let settings = Settings::resolve(run, &config.run)?;
    let claim = if claim == "-" {
        let mut text = String::new();
        io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| CliError::Io(format!("reading stdin: {e}")))?;
        text.trim_end_matches(['\n', '\r']).to_owned()
    } else {
        claim.to_owned()
    };
    if claim.trim().is_empty() {
        return Err(CliError::Usage("claim text is empty".into()));
    }
    let retriever = build_retriever(&settings, None)?;
    let pipeline = build_pipeline(
        &settings,
        PipelineConfig {
            strategy: settings.strategy,
            limit: settings.limit,
            ..Default::default()
        },
        retriever,
    )?;
    let out = pipeline.check(&claim)?;
    let mut stdout = io::stdout().lock();
    match settings.report {
        ReportFormat::Json => writeln!(stdout, "{}", serde_json::to_string_pretty(&out).expect("serializes")),
        ReportFormat::Csv => {
            let mut w = writeln!(stdout, "rank,url,publisher,rating");
            for r in &out.results {
                w = w.and(writeln!(
                    stdout,
                    "{},{},{},{}",
                    r.rank,
                    csv_field(&r.url),
                    csv_field(r.publisher.as_deref().unwrap_or("")),
                    csv_field(r.rating.as_deref().unwrap_or(""))
                ));
            }
            w
        }
        ReportFormat::Table => {
            let mut w = writeln!(stdout, "query: {}", out.query);
            if out.results.is_empty() {
                w = w.and(writeln!(stdout, "no fact-checks found"));
            }
            for r in &out.results {
                let publisher = r.publisher.as_deref().unwrap_or("-");
                let rating = r.rating.as_deref().map(|s| format!("  [{s}]")).unwrap_or_default();
                w = w.and(writeln!(stdout, "{:>3}. {publisher}  {}{rating}", r.rank, r.url));
            }
            w
        }
    }
    .map_err(|e| CliError::Io(format!("writing output: {e}")))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn evaluate(
    path: &Path,
    curate: bool,
    run: &RunOptions,
    config: &ConfigFile,
    eval: EvalSettings,
) -> Result<(), CliError> {
    let settings = Settings::resolve(run, &config.run)?;
    let pairs = load_pairs(path, curate, !eval.skip_errors)?;
    let retriever = build_retriever(&settings, Some(&pairs))?;
    let pipeline = build_pipeline(
        &settings,
        PipelineConfig {
            strategy: settings.strategy,
            limit: settings.limit,
            query_field: eval.query_field,
            workers: eval.workers,
            skip_errors: eval.skip_errors,
        },
        retriever,
    )?;
    let result = pipeline.evaluate(&pairs, &eval.k_list)?;
    let report = &result.report;
    let text = match settings.report {
        ReportFormat::Json => serde_json::to_string_pretty(&result).expect("serializes") + "\n",
        ReportFormat::Csv => curve_csv(&recall_curve(&report.per_query, settings.limit)?),
        ReportFormat::Table => {
            let column = match eval.query_field {
                claimcheck::pipeline::QueryField::Ccr => settings.summarizer.to_string(),
                other => format!("query={other}"),
            };
            let mut out = String::new();
            let k = if eval.k_list.contains(&5) { 5 } else { eval.k_list[0] };
            let mut grid = ResultGrid::new(k);
            grid.insert(settings.strategy.name(), &column, report);
            out.push_str(&grid.render());
            out.push('\n');
            for (k, r) in &report.recall_at {
                out.push_str(&format!("Recall@{k:<3} {r:6.2}\n"));
            }
            out.push_str(&format!("MRR        {:6.4}\nqueries    {}\n", report.mrr, report.n_queries));
            if !result.failures.is_empty() {
                out.push_str(&format!("excluded   {} failed queries\n", result.failures.len()));
            }
            out
        }
    };
    io::stdout()
        .write_all(text.as_bytes())
        .map_err(|e| CliError::Io(format!("writing output: {e}")))
}

fn index(corpus: Option<&Path>, dataset_path: Option<&Path>, out: Option<&Path>) -> Result<(), CliError> {
    let records = match (corpus, dataset_path) {
        (Some(path), _) => load_corpus(path)?,
        (None, Some(path)) => dataset::fca_records(&load_pairs(path, false, true)?),
        (None, None) => return Err(CliError::Usage("pass --corpus or --dataset".into())),
    };
    let index = build_index(records, Default::default())?;
    println!(
        "indexed {} documents, {} terms, mean length {:.2}",
        index.len(),
        index.vocabulary_size(),
        index.avg_doc_len()
    );
    if let Some(out) = out {
        let mut body = String::new();
        for record in index.records() {
            body.push_str(&serde_json::to_string(record).expect("serializes"));
            body.push('\n');
        }
        std::fs::write(out, body).map_err(|e| CliError::Io(format!("writing {}: {e}", out.display())))?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn stats(path: &Path, curate: bool, handle_map: Option<&Path>, json: bool) -> Result<(), CliError> {
    let pairs = load_pairs(path, curate, false)?;
    let stats = dataset::stats(&pairs)?;
    let handles = match handle_map {
        Some(p) => Some(HandleMap::load(p)?),
        None => None,
    };
    let mut rows = Vec::new();
    for strategy in [Strategy::NP, Strategy::PHM] {
        let buckets = dataset::complexity_buckets(&pairs, strategy, handles.as_ref(), &COMPLEXITY_THRESHOLDS)?;
        rows.push((strategy.name(), buckets));
    }
    if json {
        let similarity: serde_json::Map<String, serde_json::Value> = rows
            .iter()
            .map(|(name, b)| {
                let fractions: serde_json::Map<String, serde_json::Value> =
                    b.iter().map(|(t, f)| (t.to_string(), (*f).into())).collect();
                ((*name).to_owned(), fractions.into())
            })
            .collect();
        let value = serde_json::json!({ "stats": stats, "cosine_at_least": similarity });
        println!("{}", serde_json::to_string_pretty(&value).expect("serializes"));
        return Ok(());
    }
    println!("pairs        {}", stats.pairs);
    println!("unique SMC   {}", stats.unique_smc);
    println!("unique SCR   {}", stats.unique_scr);
    println!("median SMC   {} chars, {} words", stats.median_smc_chars, stats.median_smc_words);
    println!("median SCR   {} chars, {} words", stats.median_scr_chars, stats.median_scr_words);
    for (country, pct) in &stats.source_country {
        println!("source {country:<6}{pct:5.1}%");
    }
    println!();
    println!("cosine >=    0.25   0.50   0.75");
    for (name, buckets) in &rows {
        let cells: Vec<String> = buckets.iter().map(|(_, f)| format!("{:5.1}%", 100.0 * f)).collect();
        println!("{name:<12}{}", cells.join(" "));
    }
    println!();
    for (category, n) in &stats.categories {
        println!("{:<20}{n}", category.name());
    }
    Ok(())
}
