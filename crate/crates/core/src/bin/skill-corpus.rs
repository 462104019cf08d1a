use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use skill_corpus::bleu::{bleu_n, bleu_with, BleuOptions};
use skill_corpus::dataset::{
    build_mlm_samples, build_seq2seq_samples, filter_files, make_splits, MlmOptions, Seq2SeqOptions, SplitOptions,
};
use skill_corpus::eval::{
    build_survey_candidates, build_survey_pack, correlate, evaluate_predictions, read_human_scores,
    read_predictions, EvalOptions, EvalReport, SurveyOptions,
};
use skill_corpus::io::{discover_sources, read_jsonl, read_text, write_atomic, write_jsonl};
use skill_corpus::lint::{delta_liq, lint_file};
use skill_corpus::manifest::{FileRecord, PairRecord};
use skill_corpus::miner::{
    collect_query_tokens, mine_remote, GithubClient, LiveTransport, MineRemoteOptions, MiningState, RecordingTransport,
    ReplayTransport, Transport, DEFAULT_QUERY,
};
use skill_corpus::model::FileFilter;
use skill_corpus::pipeline::{ingest, mine_corpus, run_pipeline, PipelineConfig, SourceConfig};
use skill_corpus::preprocess::{clean_text, normalize_comments};
use skill_corpus::tokenizer::{train_tokenizer, SubwordVocab, DEFAULT_VOCAB_SIZE};
use skill_corpus::{DatasetManifest, Origin, Pair, SourceFile, Split, TrainingStrategy};

/// Builds SKILL code datasets and scores model predictions.
#[derive(Parser)]
#[command(name = "skill-corpus", version)]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Dataset manifest to read or update.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read SKILL files into ingested.jsonl. Sources are `dir` or `dir=origin`.
    Ingest {
        #[arg(required = true)]
        sources: Vec<String>,
        #[arg(long, default_value = "primary-proprietary", value_parser = parse_origin)]
        origin: Origin,
    },
    /// Clean every SKILL file under a directory into --out, keeping relative paths.
    Clean { dir: PathBuf },
    /// Lint a file or directory. Exits 1 if any file fails.
    Lint { path: PathBuf },
    /// Extract CF/FC/CC pairs into pairs.jsonl and the manifest.
    Mine {
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Retrieve SKILL files from GitHub, live or from a recorded fixture.
    MineRemote(MineRemoteArgs),
    /// Apply the strategy's file filter and comment setting.
    Filter {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[command(flatten)]
        strategy: StrategyArgs,
    },
    /// Assign files and pairs to train/val/test and write the manifest.
    Split {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[command(flatten)]
        strategy: StrategyArgs,
        #[arg(long, default_value_t = SplitOptions::default().tolerance)]
        tolerance: f64,
        #[arg(long, default_value_t = SplitOptions::default().max_attempts)]
        max_attempts: usize,
    },
    /// Train the subword vocabulary; restricted to train files when --manifest is given.
    TrainTokenizer {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value_t = DEFAULT_VOCAB_SIZE)]
        vocab_size: usize,
    },
    /// Span-corrupted samples from train files (all files without --manifest).
    ExportMlm {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long, default_value_t = MlmOptions::default().chunk_len)]
        chunk_len: usize,
        #[arg(long, default_value_t = MlmOptions::default().noise_density)]
        noise_density: f64,
    },
    /// Token-id pairs for one split, or every split when --split is omitted.
    ExportSeq2seq {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long, value_parser = parse_split)]
        split: Option<Split>,
    },
    /// BLEU of a candidate against a reference, both files unless --text.
    Bleu {
        candidate: String,
        reference: String,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        text: bool,
        #[arg(long)]
        no_brevity_penalty: bool,
        /// Score a single n-gram order instead of 1-4.
        #[arg(long)]
        order: Option<usize>,
    },
    /// Lint IQ change from substituting each prediction for its reference output.
    DeltaLiq {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
    },
    /// Score predictions on the test split by BLEU and lint IQ change.
    Evaluate {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        no_brevity_penalty: bool,
    },
    /// Pearson correlation of metric scores with human scores.
    Correlate {
        #[arg(long)]
        report: PathBuf,
        /// CSV with pair_id, model_name, score columns.
        #[arg(long)]
        human: PathBuf,
    },
    /// Survey candidates, or the anonymized pack when --shortlist is given.
    SurveyPack {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// File with one shortlisted pair id per line.
        #[arg(long)]
        shortlist: Option<PathBuf>,
    },
    /// Run every stage from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct CorpusArgs {
    /// Directory of SKILL files or a JSONL file of file records.
    corpus: PathBuf,
    /// Origin of files read from a directory.
    #[arg(long, default_value = "primary-proprietary", value_parser = parse_origin)]
    origin: Origin,
}

#[derive(Args)]
struct StrategyArgs {
    #[arg(long)]
    no_self_supervised: bool,
    #[arg(long, default_value = "none", value_parser = parse_file_filter)]
    file_filter: FileFilter,
    #[arg(long)]
    drop_comments: bool,
    #[arg(long)]
    no_supervised: bool,
    #[arg(long)]
    no_dedup: bool,
}

impl StrategyArgs {
    fn strategy(&self) -> anyhow::Result<TrainingStrategy> {
        let strategy = TrainingStrategy {
            self_supervised: !self.no_self_supervised,
            file_filter: self.file_filter,
            keep_comments: !self.drop_comments,
            supervised: !self.no_supervised,
            deduplicated: !self.no_dedup && !self.no_supervised,
        };
        strategy.validate()?;
        Ok(strategy)
    }
}

#[derive(Args)]
struct MineRemoteArgs {
    #[arg(long, default_value = DEFAULT_QUERY)]
    query: String,
    /// Corpus whose frequent identifiers become code-search queries.
    #[arg(long)]
    tokens_from: Option<PathBuf>,
    /// Identifiers must occur more than this many times.
    #[arg(long, default_value_t = 10)]
    min_count: usize,
    /// Fraction of frequent identifiers to query.
    #[arg(long, default_value_t = 0.2)]
    fraction: f64,
    /// Replay recorded exchanges instead of calling the API.
    #[arg(long)]
    fixture: Option<PathBuf>,
    /// Save the live exchanges for later replay.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Resume from a saved state.json.
    #[arg(long)]
    resume: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    concurrency: usize,
    #[arg(long)]
    skip_repo_listing: bool,
}

fn parse_enum<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn parse_origin(s: &str) -> Result<Origin, String> {
    parse_enum(s)
}

fn parse_file_filter(s: &str) -> Result<FileFilter, String> {
    parse_enum(s)
}

fn parse_split(s: &str) -> Result<Split, String> {
    parse_enum(s)
}

fn out_dir(cli_out: &Option<PathBuf>) -> anyhow::Result<PathBuf> {
    let dir = cli_out.clone().unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn load_corpus(args: &CorpusArgs) -> anyhow::Result<Vec<SourceFile>> {
    if args.corpus.extension().is_some_and(|e| e == "jsonl") {
        return Ok(read_jsonl(&args.corpus)?);
    }
    Ok(ingest(&[SourceConfig {
        path: args.corpus.clone(),
        origin: args.origin,
    }])?)
}

fn load_pairs(path: Option<&Path>, files: &[SourceFile]) -> anyhow::Result<Vec<Pair>> {
    match path {
        Some(p) => Ok(read_jsonl(p)?),
        None => Ok(mine_corpus(files, &Default::default())),
    }
}

fn load_manifest(path: &Option<PathBuf>) -> anyhow::Result<Option<DatasetManifest>> {
    path.as_deref().map(DatasetManifest::load).transpose().map_err(Into::into)
}

fn train_only(files: Vec<SourceFile>, manifest: Option<&DatasetManifest>) -> Vec<SourceFile> {
    match manifest {
        Some(m) => files.into_iter().filter(|f| m.file_split(&f.id) == Some(Split::Train)).collect(),
        None => files,
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Ingest { sources, origin } => {
            let sources = sources
                .iter()
                .map(|s| match s.split_once('=') {
                    Some((path, o)) => Ok(SourceConfig {
                        path: path.into(),
                        origin: parse_origin(o).map_err(anyhow::Error::msg)?,
                    }),
                    None => Ok(SourceConfig { path: s.into(), origin }),
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            let files = ingest(&sources)?;
            let path = out_dir(&cli.out)?.join("ingested.jsonl");
            write_jsonl(&path, &files)?;
            println!("{} files -> {}", files.len(), path.display());
        }
        Command::Clean { dir } => {
            let out = out_dir(&cli.out)?;
            let (mut kept, mut dropped) = (0, 0);
            for (path, rel) in discover_sources(&dir)? {
                let cleaned = normalize_comments(&clean_text(&read_text(&path)?));
                if cleaned.trim().is_empty() {
                    dropped += 1;
                    continue;
                }
                write_atomic(&out.join(&rel), cleaned.as_bytes())?;
                kept += 1;
            }
            println!("{kept} files cleaned into {}, {dropped} empty after cleaning", out.display());
        }
        Command::Lint { path } => {
            let targets = if path.is_dir() {
                discover_sources(&path)?
            } else {
                vec![(path.clone(), path.display().to_string())]
            };
            let mut reports = Vec::new();
            let mut failed = false;
            for (file, rel) in targets {
                let text = read_text(&file)?;
                let report = lint_file(&text);
                failed |= !report.passed();
                let grade = if report.passed() { "pass" } else { "fail" };
                println!("{rel}: grade {grade}, iq {}", report.iq);
                for finding in &report.findings {
                    println!(
                        "  line {}: {} (-{}) {}",
                        line_of(&text, finding.span.start),
                        finding.rule_id,
                        finding.deduction,
                        finding.message
                    );
                }
                reports.push(serde_json::json!({ "path": rel, "report": report }));
            }
            if let Some(out) = &cli.out {
                std::fs::create_dir_all(out)?;
                write_jsonl(&out.join("lint.jsonl"), &reports)?;
            }
            return Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS });
        }
        Command::Mine { corpus } => {
            let files = load_corpus(&corpus)?;
            let pairs = mine_corpus(&files, &Default::default());
            let out = out_dir(&cli.out)?;
            write_jsonl(&out.join("pairs.jsonl"), &pairs)?;
            let manifest_path = cli.manifest.clone().unwrap_or_else(|| out.join("manifest.jsonl"));
            let mut manifest = match manifest_path.is_file() {
                true => DatasetManifest::load(&manifest_path)?,
                false => DatasetManifest::new(seed, TrainingStrategy::default()),
            };
            for f in &files {
                if manifest.file(&f.id).is_none() {
                    manifest.insert_file(FileRecord {
                        id: f.id.clone(),
                        path: f.path.clone(),
                        origin: f.origin,
                        source_id: None,
                        split: None,
                    });
                }
            }
            for p in &pairs {
                manifest.insert_pair(PairRecord {
                    id: p.id.clone(),
                    file_id: p.file_id.clone(),
                    kind: p.kind,
                    top_level: p.top_level,
                    split: manifest.pair_split(&p.id),
                });
            }
            manifest.save(&manifest_path)?;
            let top = pairs.iter().filter(|p| p.top_level).count();
            println!("{} pairs ({top} top-level) from {} files -> {}", pairs.len(), files.len(), manifest_path.display());
        }
        Command::MineRemote(args) => return mine_remote_cmd(&cli.out, seed, args),
        Command::Filter { corpus, pairs, strategy } => {
            let files = load_corpus(&corpus)?;
            let pairs = load_pairs(pairs.as_deref(), &files)?;
            let kept = filter_files(&files, &strategy.strategy()?, &pairs);
            let path = out_dir(&cli.out)?.join("filtered.jsonl");
            write_jsonl(&path, &kept)?;
            println!("{} of {} files kept -> {}", kept.len(), files.len(), path.display());
        }
        Command::Split {
            corpus,
            pairs,
            strategy,
            tolerance,
            max_attempts,
        } => {
            let files = load_corpus(&corpus)?;
            let pairs = load_pairs(pairs.as_deref(), &files)?;
            let options = SplitOptions {
                max_attempts,
                tolerance,
            };
            let outcome = make_splits(&files, &pairs, seed, strategy.strategy()?, &options)?;
            for w in &outcome.warnings {
                log::warn!("{w}");
            }
            let path = cli
                .manifest
                .clone()
                .unwrap_or_else(|| out_dir(&cli.out).map(|d| d.join("manifest.jsonl")).unwrap_or_default());
            outcome.manifest.save(&path)?;
            for split in [Split::Train, Split::Val, Split::Test] {
                let r = outcome.manifest.split_record(split);
                println!("{:<5} files {:>5}  pairs {:?}", split.as_str(), r.files, r.pairs);
            }
            println!("manifest -> {} ({} attempts)", path.display(), outcome.attempts);
        }
        Command::TrainTokenizer { corpus, vocab_size } => {
            let manifest = load_manifest(&cli.manifest)?;
            let files = train_only(load_corpus(&corpus)?, manifest.as_ref());
            let texts: Vec<&str> = files.iter().map(|f| f.text.as_str()).collect();
            let vocab = train_tokenizer(&texts, vocab_size)?;
            let path = out_dir(&cli.out)?.join("vocab.txt");
            vocab.save(&path)?;
            println!("{} symbols from {} files -> {}", vocab.len(), files.len(), path.display());
        }
        Command::ExportMlm {
            corpus,
            vocab,
            chunk_len,
            noise_density,
        } => {
            let manifest = load_manifest(&cli.manifest)?;
            let files = train_only(load_corpus(&corpus)?, manifest.as_ref());
            let vocab = SubwordVocab::load(&vocab)?;
            let options = MlmOptions {
                chunk_len,
                noise_density,
                ..MlmOptions::default()
            };
            let samples = build_mlm_samples(&files, &vocab, seed, &options);
            let path = out_dir(&cli.out)?.join("mlm.jsonl");
            write_jsonl(&path, &samples)?;
            println!("{} samples -> {}", samples.len(), path.display());
        }
        Command::ExportSeq2seq { pairs, vocab, split } => {
            let pairs: Vec<Pair> = read_jsonl(&pairs)?;
            let vocab = SubwordVocab::load(&vocab)?;
            let manifest = load_manifest(&cli.manifest)?.context("export-seq2seq needs --manifest")?;
            let out = out_dir(&cli.out)?;
            let splits = split.map_or(vec![Split::Train, Split::Val, Split::Test], |s| vec![s]);
            for split in splits {
                let selected: Vec<Pair> = pairs
                    .iter()
                    .filter(|p| manifest.pair_split(&p.id) == Some(split))
                    .cloned()
                    .collect();
                let samples = build_seq2seq_samples(&selected, &vocab, &Seq2SeqOptions::default());
                let path = out.join(format!("seq2seq_{}.jsonl", split.as_str()));
                write_jsonl(&path, &samples)?;
                println!("{:<5} {} samples -> {}", split.as_str(), samples.len(), path.display());
            }
        }
        Command::Bleu {
            candidate,
            reference,
            vocab,
            text,
            no_brevity_penalty,
            order,
        } => {
            let read = |s: &str| -> anyhow::Result<String> {
                if text {
                    Ok(s.to_string())
                } else {
                    Ok(read_text(Path::new(s))?)
                }
            };
            let vocab = SubwordVocab::load(&vocab)?;
            let (c, r) = (vocab.encode(&read(&candidate)?), vocab.encode(&read(&reference)?));
            let options = BleuOptions {
                brevity_penalty: !no_brevity_penalty,
            };
            let score = match order {
                Some(n) => bleu_n(&c, &r, n, options)?,
                None => bleu_with(&c, &r, options)?,
            };
            println!(
                "bleu {:.6}  precisions {:?}  bp {:.6}  ({} vs {} tokens)",
                score.score, score.precisions, score.brevity_penalty, score.candidate_len, score.reference_len
            );
            if let Some(out) = &cli.out {
                std::fs::create_dir_all(out)?;
                write_json(&out.join("bleu.json"), &score)?;
            }
        }
        Command::DeltaLiq {
            corpus,
            pairs,
            predictions,
        } => {
            let files: HashMap<String, SourceFile> =
                load_corpus(&corpus)?.into_iter().map(|f| (f.id.clone(), f)).collect();
            let pairs: HashMap<String, Pair> =
                read_jsonl::<Pair>(&pairs)?.into_iter().map(|p| (p.id.clone(), p)).collect();
            let mut rows = Vec::new();
            for record in read_predictions(&predictions)? {
                let pair = pairs.get(&record.pair_id).with_context(|| format!("unknown pair {}", record.pair_id))?;
                let file = files.get(&pair.file_id).with_context(|| format!("file of pair {} not found", pair.id))?;
                let delta = delta_liq(pair, &record.prediction, file)?;
                println!("{} {} {delta:+}", record.pair_id, record.model_name);
                rows.push(serde_json::json!({
                    "pair_id": record.pair_id,
                    "model_name": record.model_name,
                    "delta_liq": delta,
                }));
            }
            if let Some(out) = &cli.out {
                std::fs::create_dir_all(out)?;
                write_jsonl(&out.join("delta_liq.jsonl"), &rows)?;
            }
        }
        Command::Evaluate {
            corpus,
            pairs,
            predictions,
            vocab,
            no_brevity_penalty,
        } => {
            let manifest = load_manifest(&cli.manifest)?.context("evaluate needs --manifest")?;
            let files = load_corpus(&corpus)?;
            let pairs: Vec<Pair> = read_jsonl(&pairs)?;
            let vocab = SubwordVocab::load(&vocab)?;
            let mut options = EvalOptions::default();
            options.bleu.brevity_penalty = !no_brevity_penalty;
            let report =
                evaluate_predictions(&read_predictions(&predictions)?, &manifest, &vocab, &files, &pairs, &options)?;
            print!("{report}");
            for e in &report.errors {
                log::warn!("{e}");
            }
            write_json(&out_dir(&cli.out)?.join("report.json"), &report)?;
        }
        Command::Correlate { report, human } => {
            let report: EvalReport = serde_json::from_str(&read_text(&report)?)?;
            let (rows, excluded) = correlate(&report, &read_human_scores(&human)?);
            for kind in &excluded {
                println!("{}: human scores have zero variance, excluded from pooled rows", kind.as_str());
            }
            for row in &rows {
                let kind = row.kind.map_or("all", |k| k.as_str());
                match &row.r {
                    Ok(r) => println!("{kind:<4} {:<10} n={:<4} r={r:+.4}", row.metric, row.n),
                    Err(e) => println!("{kind:<4} {:<10} n={:<4} undefined ({e})", row.metric, row.n),
                }
            }
            write_json(
                &out_dir(&cli.out)?.join("correlation.json"),
                &serde_json::json!({ "rows": rows, "excluded": excluded }),
            )?;
        }
        Command::SurveyPack {
            pairs,
            predictions,
            shortlist,
        } => {
            let manifest = load_manifest(&cli.manifest)?.context("survey-pack needs --manifest")?;
            let test: Vec<Pair> = read_jsonl::<Pair>(&pairs)?
                .into_iter()
                .filter(|p| manifest.pair_split(&p.id) == Some(Split::Test))
                .collect();
            let out = out_dir(&cli.out)?;
            let options = SurveyOptions::default();
            match shortlist {
                None => {
                    let candidates = build_survey_candidates(&test, seed, &options);
                    for w in &candidates.warnings {
                        log::warn!("{w}");
                    }
                    write_json(&out.join("survey_candidates.json"), &candidates)?;
                    println!("candidates -> {}", out.join("survey_candidates.json").display());
                }
                Some(list) => {
                    let ids: Vec<String> = read_text(&list)?
                        .lines()
                        .map(str::trim)
                        .filter(|l| !l.is_empty())
                        .map(String::from)
                        .collect();
                    let predictions = read_predictions(
                        predictions.as_deref().context("--predictions is required with --shortlist")?,
                    )?;
                    let output = build_survey_pack(&test, &predictions, Some(&ids), seed, &options)?;
                    for w in &output.warnings {
                        log::warn!("{w}");
                    }
                    write_json(&out.join("survey_pack.json"), &output.pack)?;
                    write_json(&out.join("survey_key.json"), &output.key)?;
                    println!("{} prompts -> {}", output.pack.prompts.len(), out.join("survey_pack.json").display());
                }
            }
        }
        Command::Run { config } => {
            let mut config = PipelineConfig::load(&config)?;
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            if let Some(out) = &cli.out {
                config.out_dir = out.clone();
            }
            let outcome = run_pipeline(&config)?;
            if cli.manifest.is_some() {
                log::warn!("run writes its manifest into the output directory; --manifest is ignored");
            }
            println!("executed: {}", outcome.executed.join(", "));
            if !outcome.skipped.is_empty() {
                println!("reused:   {}", outcome.skipped.join(", "));
            }
            println!("manifest digest {}", outcome.manifest.digest());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn mine_remote_cmd(cli_out: &Option<PathBuf>, seed: u64, args: MineRemoteArgs) -> anyhow::Result<ExitCode> {
    let out = out_dir(cli_out)?;
    let tokens = match &args.tokens_from {
        Some(dir) => {
            let files = ingest(&[SourceConfig {
                path: dir.clone(),
                origin: Origin::PrimaryProprietary,
            }])?;
            let texts: Vec<&str> = files.iter().map(|f| f.text.as_str()).collect();
            collect_query_tokens(&texts, args.min_count, args.fraction, seed)
        }
        None => Vec::new(),
    };
    let state: MiningState = match &args.resume {
        Some(path) => serde_json::from_str(&read_text(path)?)?,
        None => MiningState::default(),
    };
    let options = MineRemoteOptions {
        query: args.query.clone(),
        tokens,
        concurrency: args.concurrency,
        list_repo_files: !args.skip_repo_listing,
    };

    let recorder = match (&args.fixture, &args.record) {
        (Some(_), Some(_)) => bail!("--record only applies to live runs"),
        (None, Some(_)) => Some(Arc::new(RecordingTransport::new(LiveTransport::new(Duration::from_secs(30))))),
        _ => None,
    };
    let client = match (&args.fixture, &recorder) {
        (Some(fixture), _) => GithubClient::new(Arc::new(ReplayTransport::load(fixture)?)).with_sleeper(|_| {}),
        (None, Some(rec)) => GithubClient::new(rec.clone() as Arc<dyn Transport>).with_token_from_env(),
        (None, None) => {
            GithubClient::new(Arc::new(LiveTransport::new(Duration::from_secs(30)))).with_token_from_env()
        }
    };

    let outcome = mine_remote(&client, &options, state)?;
    if let (Some(rec), Some(path)) = (&recorder, &args.record) {
        write_json(path, &rec.recording())?;
    }
    write_json(&out.join("state.json"), &outcome.state)?;
    write_jsonl(&out.join("rejections.jsonl"), &outcome.rejections)?;
    if !outcome.complete {
        eprintln!(
            "interrupted: {}; resume with --resume {}",
            outcome.interrupted.as_deref().unwrap_or("rate limited"),
            out.join("state.json").display()
        );
        return Ok(ExitCode::from(3));
    }
    let files: Vec<SourceFile> = outcome
        .kept
        .iter()
        .map(|m| SourceFile::new(m.origin, format!("{}/{}", m.file.repo, m.file.path), m.text.clone()))
        .collect();
    for f in &files {
        write_atomic(&out.join("files").join(&f.path), f.text.as_bytes())?;
    }
    write_jsonl(&out.join("mined.jsonl"), &files)?;
    let licenses: HashMap<&str, Option<&str>> = outcome
        .state
        .repos
        .iter()
        .flatten()
        .map(|r| (r.full_name.as_str(), r.license.as_deref()))
        .collect();
    let refs: Vec<_> = outcome
        .kept
        .iter()
        .map(|m| {
            serde_json::json!({
                "url": m.file.url,
                "repo": m.file.repo,
                "path": m.file.path,
                "origin": m.origin,
                "license": licenses.get(m.file.repo.as_str()).copied().flatten(),
            })
        })
        .collect();
    write_jsonl(&out.join("refs.jsonl"), &refs)?;
    let mut by_stage: BTreeMap<String, usize> = BTreeMap::new();
    for r in &outcome.rejections {
        *by_stage.entry(format!("{:?}", r.stage).to_lowercase()).or_default() += 1;
    }
    println!("{} files kept, rejected {:?} -> {}", files.len(), by_stage, out.display());
    Ok(ExitCode::SUCCESS)
}
