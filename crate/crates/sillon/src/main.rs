use std::error::Error;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sillon::config::{random_salt, Config, ProviderKind};
use sillon::ingest::{register_channel, sync_all, sync_channel, SyncLocks, SyncReport};
use sillon::jsonl::{self, EntityKind};
use sillon::models::{self, DatasetSource, TrainRequest};
use sillon::pipeline::{ensure_index, process};
use sillon::service::{self, AppState};
use sillon::store::{Change, Store};
use sillon_core::classify::ClassWeighting;
use sillon_core::index::{query_terms, ParentKind, SearchFilters};
use sillon_core::taxonomy::Task;

type CliResult = Result<(), Box<dyn Error>>;

/// Collect, process, search, annotate and classify a corpus of video
/// transcripts and comments.
#[derive(Parser)]
#[command(name = "sillon", version)]
struct Cli {
    /// Directory holding the store, config, index and models.
    #[arg(long, global = true, env = "SILLON_DATA_DIR", default_value = "sillon-data")]
    data_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create the data directory, store and config (keeps existing ones).
    Init(InitArgs),
    /// Manage monitored channels.
    #[command(subcommand)]
    Channel(ChannelCommand),
    /// Fetch new videos, transcripts and comments.
    Sync {
        /// Only this channel (default: every active channel).
        #[arg(long)]
        channel: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Restore transcripts, normalize comments, split sentences, tag keywords.
    Process,
    /// Build the sentence search index.
    Index,
    /// Full-text search over sentences.
    Search {
        query: String,
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        #[arg(long)]
        channel: Option<String>,
        #[arg(long)]
        class: Option<String>,
        #[arg(long, default_value_t = 20)]
        limit: usize,
    },
    /// Train a classifier and evaluate it on the held-out split.
    Train {
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        weighting: Option<WeightingArg>,
        /// JSON Lines file of labeled examples (default: the store's annotations).
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Re-evaluate a stored model on its held-out split.
    Eval {
        #[arg(long)]
        model: String,
        #[arg(long)]
        json: bool,
    },
    /// Write entities as JSON Lines.
    Export(ExportArgs),
    /// Upsert entities from JSON Lines.
    Import(ImportArgs),
    /// Corpus counts.
    Stats,
    /// Run the HTTP API.
    Serve {
        /// Overrides the configured bind address.
        #[arg(long)]
        bind: Option<String>,
    },
    /// Deterministic demo corpus.
    #[command(subcommand)]
    Fixtures(FixturesCommand),
}

#[derive(Args)]
struct InitArgs {
    #[arg(long, value_enum)]
    provider: Option<ProviderArg>,
    /// Fixture corpus directory for the fixture provider.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Keyword lexicon (TSV: category, term).
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Abbreviation list, one per line.
    #[arg(long)]
    abbreviations: Option<PathBuf>,
    #[arg(long)]
    bind: Option<String>,
}

#[derive(Subcommand)]
enum ChannelCommand {
    /// Register channels by URL, @handle or id.
    Add {
        #[arg(required = true)]
        channels: Vec<String>,
    },
    List,
    /// Stop syncing a channel; its data is kept.
    Deactivate { channel_id: String },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ExportSelect {
    #[arg(long, value_enum)]
    kind: Option<KindName>,
    /// Every kind, one `<kind>.jsonl` per kind (needs --out DIR).
    #[arg(long)]
    all: bool,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    select: ExportSelect,
    /// Output file (with --kind, default stdout) or directory (with --all).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ImportArgs {
    #[command(flatten)]
    select: ExportSelect,
    /// Input file (with --kind) or directory (with --all).
    input: PathBuf,
}

#[derive(Subcommand)]
enum FixturesCommand {
    /// Write the fixture corpus into DIR.
    Generate { dir: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Info,
    Controversy,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Info => Task::InfoType,
            TaskArg::Controversy => Task::Controversy,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightingArg {
    None,
    InverseFrequency,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderArg {
    Fixture,
    Live,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Transcript,
    Comment,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindName {
    Channels,
    Videos,
    Transcripts,
    Comments,
    Sentences,
    Annotations,
}

impl From<KindName> for EntityKind {
    fn from(k: KindName) -> Self {
        match k {
            KindName::Channels => EntityKind::Channels,
            KindName::Videos => EntityKind::Videos,
            KindName::Transcripts => EntityKind::Transcripts,
            KindName::Comments => EntityKind::Comments,
            KindName::Sentences => EntityKind::Sentences,
            KindName::Annotations => EntityKind::Annotations,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn absolute(p: &Path) -> io::Result<PathBuf> {
    std::path::absolute(p)
}

fn run(cli: Cli) -> CliResult {
    let dir = cli.data_dir.as_path();
    match cli.command {
        Command::Init(args) => init(dir, args),
        Command::Channel(cmd) => channel(dir, cmd),
        Command::Sync { channel, json } => sync(dir, channel, json),
        Command::Process => {
            let config = Config::load(dir)?;
            let mut store = Store::open(dir)?;
            let report = process(&mut store, &config.restoration_config(dir)?, &config.lexicon(dir)?)?;
            store.save()?;
            println!(
                "processed {} transcripts and {} comments into {} sentences ({} updated)",
                report.transcripts, report.comments, report.sentences, report.updated
            );
            Ok(())
        }
        Command::Index => {
            let store = Store::open(dir)?;
            let (snapshot, rebuilt) = ensure_index(dir, &store)?;
            let state = if rebuilt { "built" } else { "up to date" };
            println!("index {state}: {} sentences, {} terms", snapshot.index.doc_count(), snapshot.index.term_count());
            Ok(())
        }
        Command::Search { query, kind, channel, class, limit } => {
            let store = Store::open(dir)?;
            let (snapshot, _) = ensure_index(dir, &store)?;
            let kind = kind.map(|k| match k {
                KindArg::Transcript => ParentKind::Transcript,
                KindArg::Comment => ParentKind::Comment,
            });
            let hits = snapshot.index.search(&query_terms(&query), &SearchFilters { channel, kind, class })?;
            let mut out = io::stdout().lock();
            for h in hits.iter().take(limit) {
                let text = store.sentence(&h.sentence_id).map_or("", |s| s.text.as_str());
                writeln!(out, "{:.4}\t{}\t{}", h.score, h.sentence_id, text)?;
            }
            Ok(())
        }
        Command::Train { task, seed, weighting, dataset, json } => {
            let config = Config::load(dir)?;
            let weighting = weighting.map(|w| match w {
                WeightingArg::None => ClassWeighting::None,
                WeightingArg::InverseFrequency => ClassWeighting::InverseFrequency,
            });
            let (split, train) = config.training.configs(seed, weighting);
            let dataset = match dataset {
                Some(p) => DatasetSource::File(absolute(&p)?),
                None => DatasetSource::Annotations,
            };
            let store = Store::open(dir)?;
            let result = models::train(dir, &store, &TrainRequest { task: task.into(), split, train, dataset })?;
            if json {
                println!("{}", serde_json::to_string_pretty(&serde_json::json!({ "meta": result.meta, "report": result.report }))?);
            } else {
                let m = &result.meta;
                println!("model {}", m.model_id);
                println!("examples {} (train {}, test {}, skipped empty {})", m.examples, m.train_size, m.test_size, m.skipped_empty);
                print!("{}", result.report.render());
            }
            Ok(())
        }
        Command::Eval { model, json } => {
            let store = Store::open(dir)?;
            let report = models::evaluate(dir, &store, &model)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.render());
            }
            Ok(())
        }
        Command::Export(args) => export(dir, args),
        Command::Import(args) => import(dir, args),
        Command::Stats => {
            let store = Store::open(dir)?;
            println!("{}", serde_json::to_string_pretty(&store.stats())?);
            Ok(())
        }
        Command::Serve { bind } => {
            let state = AppState::open(dir)?;
            let addr = match bind {
                Some(b) => b.parse().map_err(|_| format!("bind `{b}` is not a valid address:port"))?,
                None => Config::load(dir)?.bind_addr()?,
            };
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(service::serve(Arc::new(state), addr))?;
            Ok(())
        }
        Command::Fixtures(FixturesCommand::Generate { dir: out }) => {
            let n = sillon::fixtures::write_fixtures(&out)?;
            println!("wrote {n} files to {}", out.display());
            Ok(())
        }
    }
}

fn init(dir: &Path, args: InitArgs) -> CliResult {
    let store = Store::init(dir)?;
    let mut config = match Config::load(dir) {
        Ok(c) => c,
        Err(sillon::config::ConfigError::Missing(_)) => Config::new(random_salt()),
        Err(e) => return Err(e.into()),
    };
    if let Some(p) = args.provider {
        config.provider.kind = match p {
            ProviderArg::Fixture => ProviderKind::Fixture,
            ProviderArg::Live => ProviderKind::Live,
        };
    }
    if let Some(f) = args.fixtures {
        config.provider.fixtures_dir = Some(absolute(&f)?);
    }
    if let Some(l) = args.lexicon {
        config.lexicon = Some(absolute(&l)?);
    }
    if let Some(a) = args.abbreviations {
        config.abbreviations = Some(absolute(&a)?);
    }
    if let Some(b) = args.bind {
        config.bind = b;
    }
    config.validate()?;
    config.save(dir)?;
    println!("initialized {} (store revision {})", dir.display(), store.revision());
    Ok(())
}

fn channel(dir: &Path, cmd: ChannelCommand) -> CliResult {
    let mut store = Store::open(dir)?;
    match cmd {
        ChannelCommand::Add { channels } => {
            let config = Config::load(dir)?;
            let provider = config.provider(dir)?;
            for input in channels {
                let (channel, change) = store.transaction(|s| register_channel(s, &*provider, &input))?;
                store.save()?;
                let what = match change {
                    Change::Inserted => "added",
                    Change::Updated => "updated",
                    Change::Unchanged => "already registered",
                };
                println!("{}\t{what}\t{}", channel.channel_id, channel.title);
            }
        }
        ChannelCommand::List => {
            let mut out = io::stdout().lock();
            for c in store.data().channels.values() {
                let videos = store.videos_of_channel(&c.channel_id).count();
                let state = if c.active { "active" } else { "inactive" };
                writeln!(out, "{}\t{state}\t{videos} videos\t{}\t{}", c.channel_id, c.title, c.url)?;
            }
        }
        ChannelCommand::Deactivate { channel_id } => {
            let mut c = store.channel(&channel_id).cloned().ok_or_else(|| format!("unknown channel `{channel_id}`"))?;
            c.active = false;
            store.upsert_channel(c)?;
            store.save()?;
            println!("{channel_id}\tinactive");
        }
    }
    Ok(())
}

fn print_report(r: &SyncReport) {
    println!(
        "{}: new_videos={} new_comments={} transcripts_fetched={} transcripts_unavailable={} errors={}",
        r.channel_id,
        r.new_videos,
        r.new_comments,
        r.transcripts_fetched,
        r.transcripts_unavailable,
        r.errors.len()
    );
    for e in &r.errors {
        println!("  {}: {}", e.item_id, e.reason);
    }
}

fn sync(dir: &Path, channel: Option<String>, json: bool) -> CliResult {
    let config = Config::load(dir)?;
    let provider = config.provider(dir)?;
    let store = Store::open(dir)?.shared();
    let locks = SyncLocks::default();
    let options = config.sync_options();
    let reports = match channel {
        Some(id) => vec![sync_channel(&store, &*provider, &locks, &id, &options)?],
        None => sync_all(&store, &*provider, &locks, &options),
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&reports)?);
    } else if reports.is_empty() {
        println!("no active channel");
    } else {
        reports.iter().for_each(print_report);
    }
    Ok(())
}

fn export(dir: &Path, args: ExportArgs) -> CliResult {
    let store = Store::open(dir)?;
    match (args.select.kind, args.out) {
        (Some(kind), None) => {
            let mut out = io::BufWriter::new(io::stdout().lock());
            jsonl::export(&store, kind.into(), &mut out)?;
            out.flush()?;
        }
        (Some(kind), Some(path)) => {
            let mut out = io::BufWriter::new(fs::File::create(&path)?);
            let n = jsonl::export(&store, kind.into(), &mut out)?;
            out.flush()?;
            eprintln!("{n} {} -> {}", EntityKind::from(kind), path.display());
        }
        (None, Some(out)) => {
            for (kind, n) in jsonl::export_dir(&store, &out)? {
                eprintln!("{n} {kind}");
            }
        }
        (None, None) => return Err("--all needs --out DIR".into()),
    }
    Ok(())
}

fn import(dir: &Path, args: ImportArgs) -> CliResult {
    let mut store = Store::open(dir)?;
    let reports = match args.select.kind {
        Some(kind) => {
            let input = BufReader::new(fs::File::open(&args.input).map_err(|e| format!("{}: {e}", args.input.display()))?);
            vec![(kind.into(), jsonl::import(&mut store, kind.into(), input)?)]
        }
        None => jsonl::import_dir(&mut store, &args.input)?,
    };
    store.save()?;
    for (kind, r) in reports {
        println!("{kind}: read {} changed {}", r.read, r.changed);
    }
    Ok(())
}
