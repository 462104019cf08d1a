//! Corpus construction and evaluation for SKILL, the Lisp-dialect scripting
//! language of Cadence EDA tools.
//!
//! The crate mines and cleans SKILL files, extracts supervised pairs,
//! builds filtered, deduplicated and split datasets with MLM and
//! sequence-to-sequence exports, and scores model predictions with BLEU and
//! a lint-based quality delta.

pub mod bleu;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod io;
pub mod lint;
pub mod manifest;
pub mod miner;
pub mod model;
pub mod pairs;
pub mod pipeline;
pub mod preprocess;
pub mod syntax;
pub mod tokenizer;

pub use error::{Error, Result};
pub use manifest::DatasetManifest;
pub use model::{content_hash, Origin, Pair, PairKind, SourceFile, Span, Split, TrainingStrategy};
