//! The end-to-end dataset build: ingest, clean, lint, mine, filter, split,
//! tokenizer training and exports, recorded in a manifest.

mod config;
mod workspace;

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{PipelineConfig, SourceConfig, TokenizerConfig};
pub use workspace::{Workspace, MANIFEST_FILE};

use crate::dataset::{build_mlm_samples, build_seq2seq_samples, filter_files_with, make_splits};
use crate::error::{Error, Result};
use crate::io::{discover_sources, parse_jsonl, read_text, to_jsonl};
use crate::lint::{lint_file_with, LintConfig};
use crate::manifest::{DatasetManifest, FileRecord};
use crate::model::{hash_fields, Pair, SourceFile, Split};
use crate::pairs::{mark_top_level, mine_pairs_with, MineOptions};
use crate::preprocess::{clean_text_with, dedup_files, normalize_comments, CleanOptions};
use crate::tokenizer::{train_tokenizer, SubwordVocab};

/// A cleaned file and the hash of the text it was cleaned from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanedFile {
    pub source_id: String,
    pub file: SourceFile,
}

/// Reads every SKILL file under the configured sources. Files with
/// identical text are kept once, first source first.
pub fn ingest(sources: &[SourceConfig]) -> Result<Vec<SourceFile>> {
    let mut files = Vec::new();
    for source in sources {
        for (path, rel) in discover_sources(&source.path)? {
            files.push(SourceFile::new(source.origin, rel, read_text(&path)?));
        }
    }
    if files.is_empty() {
        let roots: Vec<String> = sources.iter().map(|s| s.path.display().to_string()).collect();
        return Err(Error::InvalidInput(format!("no input files under {}", roots.join(", "))));
    }
    Ok(dedup_files(files))
}

/// Strips metadata, commented-out code and non-ASCII text, then rewrites
/// line comments as block comments. Files left empty are dropped, and
/// files that became identical are kept once.
pub fn clean_files(files: &[SourceFile], options: &CleanOptions) -> Vec<CleanedFile> {
    let cleaned: Vec<CleanedFile> = files
        .par_iter()
        .map(|f| CleanedFile {
            source_id: f.id.clone(),
            file: f.with_text(normalize_comments(&clean_text_with(&f.text, options))),
        })
        .collect();
    let mut seen = HashSet::new();
    cleaned
        .into_iter()
        .filter(|c| !c.file.text.trim().is_empty())
        .filter(|c| seen.insert(c.file.id.clone()))
        .collect()
}

pub fn lint_files(files: &mut [SourceFile], config: &LintConfig) {
    files.par_iter_mut().for_each(|f| f.lint = Some(lint_file_with(&f.text, config)));
}

/// Pairs from every file, with `top_level` set across the whole corpus.
pub fn mine_corpus(files: &[SourceFile], options: &MineOptions) -> Vec<Pair> {
    let mut pairs: Vec<Pair> = files.par_iter().flat_map_iter(|f| mine_pairs_with(f, options)).collect();
    mark_top_level(&mut pairs);
    pairs
}

/// Pairs in `split` according to the manifest, in the given order.
pub fn pairs_in<'a>(manifest: &DatasetManifest, pairs: &'a [Pair], split: Split) -> Vec<&'a Pair> {
    pairs.iter().filter(|p| manifest.pair_split(&p.id) == Some(split)).collect()
}

/// Files in `split` according to the manifest, in the given order.
pub fn files_in<'a>(manifest: &DatasetManifest, files: &'a [SourceFile], split: Split) -> Vec<&'a SourceFile> {
    files.iter().filter(|f| manifest.file_split(&f.id) == Some(split)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub manifest: DatasetManifest,
    /// Stages that ran, in order.
    pub executed: Vec<String>,
    /// Stages whose previous outputs were reused.
    pub skipped: Vec<String>,
    pub warnings: Vec<String>,
}

fn section_digest<T: Serialize>(parts: &[&str], section: &T) -> String {
    let json = serde_json::to_string(section).expect("config serializes");
    hash_fields(parts.iter().copied().chain([json.as_str()]))
}

fn parse_stage<T: for<'de> Deserialize<'de>>(stage: &'static str, text: &str) -> Result<Vec<T>> {
    parse_jsonl(text).map_err(|e| Error::Stage {
        stage,
        source: Box::new(e),
    })
}

/// Runs every stage in order and writes `manifest.jsonl` to the output
/// directory. Stages whose inputs and settings match the previous run's
/// manifest reuse its outputs.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutcome> {
    config.validate()?;
    let mut ws = Workspace::open(&config.out_dir)?;
    let mut warnings = Vec::new();

    let raw = ingest(&config.sources).map_err(|e| Error::Stage {
        stage: "ingest",
        source: Box::new(e),
    })?;
    let ingest_key = hash_fields(raw.iter().flat_map(|f| [f.id.as_str(), f.path.as_str(), f.origin.as_str()]));
    let text = ws.stage("ingest", "ingested.jsonl", &ingest_key, || Ok((to_jsonl(&raw), raw.len())))?;
    let raw: Vec<SourceFile> = parse_stage("ingest", &text)?;

    let key = section_digest(&[ws.digest_of("ingest").unwrap_or_default()], &config.clean);
    let text = ws.stage("clean", "cleaned.jsonl", &key, || {
        let cleaned = clean_files(&raw, &config.clean);
        Ok((to_jsonl(&cleaned), cleaned.len()))
    })?;
    let cleaned: Vec<CleanedFile> = parse_stage("clean", &text)?;

    let key = section_digest(&[ws.digest_of("clean").unwrap_or_default()], &config.lint);
    let text = ws.stage("lint", "linted.jsonl", &key, || {
        let mut files: Vec<SourceFile> = cleaned.iter().map(|c| c.file.clone()).collect();
        lint_files(&mut files, &config.lint);
        Ok((to_jsonl(&files), files.len()))
    })?;
    let files: Vec<SourceFile> = parse_stage("lint", &text)?;

    let key = section_digest(&[ws.digest_of("clean").unwrap_or_default()], &config.mine);
    let text = ws.stage("mine", "pairs.jsonl", &key, || {
        let pairs = mine_corpus(&files, &config.mine);
        Ok((to_jsonl(&pairs), pairs.len()))
    })?;
    let pairs: Vec<Pair> = parse_stage("mine", &text)?;

    let key = section_digest(
        &[ws.digest_of("lint").unwrap_or_default(), ws.digest_of("mine").unwrap_or_default()],
        &(&config.strategy, &config.filter),
    );
    let text = ws.stage("filter", "filtered.jsonl", &key, || {
        let kept = filter_files_with(&files, &config.strategy, &pairs, &config.filter);
        Ok((to_jsonl(&kept), kept.len()))
    })?;
    let filtered: Vec<SourceFile> = parse_stage("filter", &text)?;

    let key = section_digest(
        &[
            ws.digest_of("lint").unwrap_or_default(),
            ws.digest_of("mine").unwrap_or_default(),
            &config.seed.to_string(),
        ],
        &(&config.strategy, &config.split),
    );
    let text = ws.stage("split", "splits.jsonl", &key, || {
        let outcome = make_splits(&files, &pairs, config.seed, config.strategy, &config.split)?;
        warnings.extend(outcome.warnings);
        let mut manifest = outcome.manifest;
        let sources: BTreeMap<&str, &str> =
            cleaned.iter().map(|c| (c.file.id.as_str(), c.source_id.as_str())).collect();
        let records: Vec<FileRecord> = manifest.files().cloned().collect();
        for mut record in records {
            record.source_id = sources.get(record.id.as_str()).map(|s| s.to_string());
            manifest.insert_file(record);
        }
        Ok((manifest.to_jsonl(), manifest.files().count()))
    })?;
    let split_manifest = DatasetManifest::from_jsonl(&text).map_err(|e| Error::Stage {
        stage: "split",
        source: Box::new(e),
    })?;

    let train_files: Vec<SourceFile> = files_in(&split_manifest, &files, Split::Train).into_iter().cloned().collect();
    let key = section_digest(
        &[ws.digest_of("lint").unwrap_or_default(), ws.digest_of("split").unwrap_or_default()],
        &config.tokenizer,
    );
    let text = ws.stage("train-tokenizer", "vocab.txt", &key, || {
        let texts: Vec<&str> = train_files.iter().map(|f| f.text.as_str()).collect();
        if texts.is_empty() {
            return Err(Error::InvalidInput("training split has no files to train the tokenizer on".into()));
        }
        let vocab = train_tokenizer(&texts, config.tokenizer.vocab_size)?;
        Ok((vocab.to_text(), vocab.len()))
    })?;
    let vocab = SubwordVocab::from_text(&text)?;
    let vocab_digest = ws.digest_of("train-tokenizer").unwrap_or_default().to_string();

    if config.strategy.self_supervised {
        let key = section_digest(
            &[
                ws.digest_of("filter").unwrap_or_default(),
                ws.digest_of("split").unwrap_or_default(),
                &vocab_digest,
                &config.seed.to_string(),
            ],
            &config.mlm,
        );
        ws.stage("export-mlm", "mlm.jsonl", &key, || {
            let train: Vec<SourceFile> = files_in(&split_manifest, &filtered, Split::Train)
                .into_iter()
                .cloned()
                .collect();
            let samples = build_mlm_samples(&train, &vocab, config.seed, &config.mlm);
            Ok((to_jsonl(&samples), samples.len()))
        })?;
    }

    let exports: [(&'static str, &str, Split); 3] = [
        ("export-seq2seq-train", "seq2seq_train.jsonl", Split::Train),
        ("export-seq2seq-val", "seq2seq_val.jsonl", Split::Val),
        ("export-seq2seq-test", "seq2seq_test.jsonl", Split::Test),
    ];
    for (name, file, split) in exports {
        if split == Split::Train && !config.strategy.supervised {
            continue;
        }
        let key = section_digest(
            &[
                ws.digest_of("mine").unwrap_or_default(),
                ws.digest_of("split").unwrap_or_default(),
                &vocab_digest,
            ],
            &config.seq2seq,
        );
        ws.stage(name, file, &key, || {
            let selected: Vec<Pair> = pairs_in(&split_manifest, &pairs, split).into_iter().cloned().collect();
            let samples = build_seq2seq_samples(&selected, &vocab, &config.seq2seq);
            Ok((to_jsonl(&samples), samples.len()))
        })?;
    }

    let mut manifest = split_manifest;
    for record in ws.records() {
        manifest.insert_export(record.clone());
    }
    manifest.save(&config.out_dir.join(MANIFEST_FILE))?;
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(PipelineOutcome {
        manifest,
        executed: ws.executed().to_vec(),
        skipped: ws.skipped().to_vec(),
        warnings,
    })
}
