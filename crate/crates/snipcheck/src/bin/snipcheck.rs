use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use snipcheck::config::{Config, ProviderKind};
use snipcheck::frontend::Toolchain;
use snipcheck::pipeline;
use snipcheck::report::{self, Format};
use snipcheck::run::RunDir;
use snipcheck::search;
use snipcheck_core::Language;

/// Measure how usable the code snippets in a Q&A post dump are.
#[derive(Parser)]
#[command(name = "snipcheck", version)]
struct Cli {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run directory.
    #[arg(long, global = true, default_value = "run")]
    out: PathBuf,
    /// Worker threads for classify and repair.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Sampling seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output format for printed tables and the report bundle.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract accepted-answer snippets from a Posts.xml dump.
    Ingest {
        posts: PathBuf,
        /// Users.xml, for reputation features.
        #[arg(long)]
        users: Option<PathBuf>,
        /// Languages to keep (csharp, java, javascript, python).
        #[arg(long, value_delimiter = ',', value_parser = parse_language)]
        languages: Vec<Language>,
    },
    /// Parse every snippet, then compile or run the ones that parse.
    Classify,
    /// Apply the class-wrap and semicolon repairs to Java and C# snippets.
    Repair {
        /// Also write unified diffs of changed snippets.
        #[arg(long)]
        diffs: bool,
    },
    /// Error-message histograms.
    Errors,
    /// Feature vectors, optionally merged with a filled-in annotation sheet.
    Features {
        #[arg(long)]
        annotations: Option<PathBuf>,
    },
    /// Draw review samples of runnable snippets.
    Sample {
        #[arg(long, value_parser = parse_language, default_value = "python")]
        language: Language,
        /// Sample size per round, overriding the configuration.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Score top search results for the most-voted questions.
    SearchEval {
        /// Provider, overriding the configuration.
        #[arg(long, value_parser = parse_provider)]
        provider: Option<ProviderKind>,
        /// Fixture directory, overriding the configuration.
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
    /// Write the report bundle under <out>/report.
    Report,
}

fn parse_language(s: &str) -> Result<Language, String> {
    s.parse().map_err(|e: snipcheck_core::Error| e.to_string())
}

fn parse_provider(s: &str) -> Result<ProviderKind, String> {
    match s {
        "fixture" => Ok(ProviderKind::Fixture),
        "record" => Ok(ProviderKind::Record),
        "live" => Ok(ProviderKind::Live),
        _ => Err(format!("unknown provider {s:?} (fixture, record, live)")),
    }
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("snipcheck: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("snipcheck: {msg}");
            ExitCode::from(1)
        }
    }
}

fn command_line() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path).map_err(|e| Failure::Usage(e.to_string()))?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        config.sample.seed = seed;
    }
    let jobs = cli.jobs.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    if jobs == 0 {
        return Err(Failure::Usage("--jobs must be at least 1".into()));
    }
    let command = command_line();
    let run = RunDir::create(&cli.out)?;

    match cli.command {
        Command::Ingest { posts, users, languages } => {
            let languages = if languages.is_empty() { Language::ALL.to_vec() } else { languages };
            let summary = pipeline::ingest(&run, &posts, users.as_deref(), &config, &languages, &command)?;
            for (language, n) in &summary.snippets {
                println!("{:<11} {n} snippets", language.display_name());
            }
            println!("{} accepted pairs, {} rows skipped", summary.pairs, summary.dump.skipped);
        }
        Command::Classify => {
            let toolchain = Toolchain::new(&config)?;
            let summary = pipeline::classify(&run, &toolchain, jobs, &command)?;
            for language in &summary.skipped_languages {
                eprintln!("warning: no parser available for {language}; its snippets were skipped");
            }
            print!("{}", report::render_summary(&summary.rates, cli.format)?);
        }
        Command::Repair { diffs } => {
            let toolchain = Toolchain::new(&config)?;
            let summary = pipeline::repair(&run, &toolchain, jobs, diffs, &command)?;
            print!("{}", report::render_repairs(&summary, cli.format));
        }
        Command::Errors => {
            let histograms = pipeline::errors(&run, &config, &command)?;
            for h in &histograms {
                print!("{}", report::render_histogram(h, cli.format));
            }
        }
        Command::Features { annotations } => {
            let n = pipeline::features(&run, annotations.as_deref(), &command)?;
            println!("{n} feature rows");
        }
        Command::Sample { language, n } => {
            let n = n.unwrap_or(config.sample.n);
            let manifest = pipeline::sample(&run, language, n, config.sample.seed, &command)?;
            for stage in &manifest.stages {
                println!("{:?}: {} of {}", stage.stage, stage.ids.len(), stage.population);
            }
        }
        Command::SearchEval { provider, fixtures } => {
            if let Some(kind) = provider {
                config.search.provider = kind;
            }
            if let Some(dir) = fixtures {
                config.search.fixture_dir = dir;
            }
            let base = cli
                .config
                .as_deref()
                .and_then(|p| p.parent())
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("."));
            let provider = search::provider_from_config(&config.search, &base)?;
            let outcome = search::search_eval(&run, &config, provider.as_ref(), &command)?;
            if outcome.short {
                eprintln!("warning: fewer eligible questions than the {} requested queries", config.search.queries);
            }
            for (id, why) in &outcome.failures {
                eprintln!("warning: query {id} failed: {why}");
            }
            print!("{}", report::render_search(&outcome.evaluation, cli.format));
        }
        Command::Report => {
            let bundle = report::build_report(&run, &config, cli.format)?;
            report::write_report(&run, &bundle)?;
            for notice in &bundle.notices {
                eprintln!("note: {notice}");
            }
            println!("{} files written to {}", bundle.files.len(), run.path(snipcheck::run::REPORT_DIR).display());
        }
    }
    Ok(())
}
