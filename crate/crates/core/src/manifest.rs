//! Line-delimited JSON manifest.
//!
//! Every line is one object tagged by `record_type`:
//!
//! * `split` – one per split, carrying the seed, training strategy and counts
//! * `file` – a source file and the split it was assigned to
//! * `pair` – a mined pair and its split (absent when discarded)
//! * `export` – a digest of an emitted artifact or pipeline stage output
//!
//! Records are written in a canonical order so that
//! serialize → parse → serialize is byte-identical.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Origin, PairKind, Split, TrainingStrategy};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub id: String,
    pub path: String,
    pub origin: Origin,
    /// Hash of the file as ingested, before cleaning.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_id: Option<String>,
    pub split: Option<Split>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub id: String,
    pub file_id: String,
    pub kind: PairKind,
    pub top_level: bool,
    pub split: Option<Split>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub split: Split,
    pub seed: u64,
    pub strategy: TrainingStrategy,
    pub files: usize,
    pub pairs: BTreeMap<PairKind, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportRecord {
    pub name: String,
    pub path: String,
    pub digest: String,
    /// Digest of everything the artifact was derived from; used to skip
    /// recomputation when nothing upstream changed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_digest: Option<String>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "record_type", rename_all = "lowercase")]
pub enum Record {
    Split(SplitRecord),
    File(FileRecord),
    Pair(PairRecord),
    Export(ExportRecord),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub seed: u64,
    pub strategy: TrainingStrategy,
    files: BTreeMap<String, FileRecord>,
    pairs: BTreeMap<String, PairRecord>,
    exports: BTreeMap<String, ExportRecord>,
}

impl DatasetManifest {
    pub fn new(seed: u64, strategy: TrainingStrategy) -> Self {
        DatasetManifest {
            seed,
            strategy,
            files: BTreeMap::new(),
            pairs: BTreeMap::new(),
            exports: BTreeMap::new(),
        }
    }

    pub fn insert_file(&mut self, record: FileRecord) {
        self.files.insert(record.id.clone(), record);
    }

    pub fn insert_pair(&mut self, record: PairRecord) {
        self.pairs.insert(record.id.clone(), record);
    }

    pub fn insert_export(&mut self, record: ExportRecord) {
        self.exports.insert(record.name.clone(), record);
    }

    pub fn files(&self) -> impl Iterator<Item = &FileRecord> {
        self.files.values()
    }

    pub fn pairs(&self) -> impl Iterator<Item = &PairRecord> {
        self.pairs.values()
    }

    pub fn exports(&self) -> impl Iterator<Item = &ExportRecord> {
        self.exports.values()
    }

    pub fn file(&self, id: &str) -> Option<&FileRecord> {
        self.files.get(id)
    }

    pub fn pair(&self, id: &str) -> Option<&PairRecord> {
        self.pairs.get(id)
    }

    pub fn export(&self, name: &str) -> Option<&ExportRecord> {
        self.exports.get(name)
    }

    pub fn file_split(&self, id: &str) -> Option<Split> {
        self.files.get(id).and_then(|r| r.split)
    }

    pub fn pair_split(&self, id: &str) -> Option<Split> {
        self.pairs.get(id).and_then(|r| r.split)
    }

    pub fn files_in(&self, split: Split) -> impl Iterator<Item = &FileRecord> {
        self.files.values().filter(move |r| r.split == Some(split))
    }

    pub fn pairs_in(&self, split: Split) -> impl Iterator<Item = &PairRecord> {
        self.pairs.values().filter(move |r| r.split == Some(split))
    }

    pub fn split_record(&self, split: Split) -> SplitRecord {
        let mut pairs: BTreeMap<PairKind, usize> = PairKind::ALL.iter().map(|k| (*k, 0)).collect();
        for record in self.pairs_in(split) {
            *pairs.entry(record.kind).or_default() += 1;
        }
        SplitRecord {
            split,
            seed: self.seed,
            strategy: self.strategy,
            files: self.files_in(split).count(),
            pairs,
        }
    }

    pub fn records(&self) -> Vec<Record> {
        let mut out: Vec<Record> = Split::ALL
            .iter()
            .map(|s| Record::Split(self.split_record(*s)))
            .collect();
        out.extend(self.files.values().cloned().map(Record::File));
        out.extend(self.pairs.values().cloned().map(Record::Pair));
        out.extend(self.exports.values().cloned().map(Record::Export));
        out
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for record in self.records() {
            out.push_str(&serde_json::to_string(&record).expect("manifest records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut header: Option<(u64, TrainingStrategy)> = None;
        let mut manifest = DatasetManifest::new(0, TrainingStrategy::default());
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: Record = serde_json::from_str(line).map_err(|source| Error::Record {
                line: idx + 1,
                source,
            })?;
            match record {
                Record::Split(split) => match header {
                    None => header = Some((split.seed, split.strategy)),
                    Some((seed, strategy)) if seed != split.seed || strategy != split.strategy => {
                        return Err(Error::InvalidInput(format!(
                            "line {}: split records disagree on seed or strategy",
                            idx + 1
                        )));
                    }
                    Some(_) => {}
                },
                Record::File(r) => manifest.insert_file(r),
                Record::Pair(r) => manifest.insert_pair(r),
                Record::Export(r) => manifest.insert_export(r),
            }
        }
        if let Some((seed, strategy)) = header {
            manifest.seed = seed;
            manifest.strategy = strategy;
        }
        for pair in manifest.pairs.values() {
            if !manifest.files.contains_key(&pair.file_id) {
                return Err(Error::InvalidInput(format!(
                    "pair {} references unknown file {}",
                    pair.id, pair.file_id
                )));
            }
        }
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        DatasetManifest::from_jsonl(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_jsonl().as_bytes())
    }

    pub fn digest(&self) -> String {
        crate::model::content_hash(self.to_jsonl())
    }
}
