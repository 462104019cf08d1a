use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bleu::{bleu_n, bleu_with, BleuOptions, MAX_ORDER};
use crate::error::Result;
use crate::lint::{delta_liq_with, LintConfig};
use crate::manifest::DatasetManifest;
use crate::model::{Pair, PairKind, SourceFile, Split};
use crate::tokenizer::SubwordVocab;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub pair_id: String,
    pub model_name: String,
    pub prediction: String,
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    crate::io::read_jsonl(path)
}

#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    pub bleu: BleuOptions,
    pub lint: LintConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub pair_id: String,
    pub kind: PairKind,
    pub bleu: f64,
    /// Single-order scores for orders 1 to 4.
    pub bleu_n: Vec<f64>,
    pub delta_liq: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindSummary {
    pub count: usize,
    pub mean_bleu: f64,
    pub mean_delta_liq: f64,
}

impl KindSummary {
    fn of(scores: &[&PairScore]) -> Self {
        let count = scores.len();
        let mean = |f: &dyn Fn(&PairScore) -> f64| {
            if count == 0 {
                0.0
            } else {
                scores.iter().map(|s| f(s)).sum::<f64>() / count as f64
            }
        };
        KindSummary {
            count,
            mean_bleu: mean(&|s| s.bleu),
            mean_delta_liq: mean(&|s| s.delta_liq as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub overall: KindSummary,
    pub by_kind: BTreeMap<PairKind, KindSummary>,
    pub pairs: Vec<PairScore>,
    /// Test pairs this model has no prediction for.
    pub missing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub models: BTreeMap<String, ModelReport>,
    /// Predictions that could not be scored, with the reason.
    pub errors: Vec<String>,
}

/// Scores each prediction against its pair's comment-free reference with
/// BLEU under `vocab`, and by the lint IQ change it causes in its file.
/// Predictions for unknown or non-test pairs are listed under `errors`.
pub fn evaluate_predictions(
    predictions: &[PredictionRecord],
    manifest: &DatasetManifest,
    vocab: &SubwordVocab,
    files: &[SourceFile],
    pairs: &[Pair],
    options: &EvalOptions,
) -> Result<EvalReport> {
    let files: HashMap<&str, &SourceFile> = files.iter().map(|f| (f.id.as_str(), f)).collect();
    let pairs: HashMap<&str, &Pair> = pairs.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut errors = Vec::new();
    let mut by_model: BTreeMap<&str, Vec<(&PredictionRecord, &Pair, &SourceFile)>> = BTreeMap::new();
    for record in predictions {
        let Some(pair) = pairs.get(record.pair_id.as_str()) else {
            errors.push(format!("{}: unknown pair {}", record.model_name, record.pair_id));
            continue;
        };
        if manifest.pair_split(&pair.id) != Some(Split::Test) {
            errors.push(format!("{}: pair {} is not in the test split", record.model_name, record.pair_id));
            continue;
        }
        let Some(file) = files.get(pair.file_id.as_str()) else {
            errors.push(format!("{}: file {} of pair {} is missing", record.model_name, pair.file_id, pair.id));
            continue;
        };
        by_model.entry(&record.model_name).or_default().push((record, pair, file));
    }

    let test_ids: Vec<&str> = manifest.pairs_in(Split::Test).map(|p| p.id.as_str()).collect();
    let mut models = BTreeMap::new();
    for (model, items) in by_model {
        let scored: Vec<Result<PairScore>> = items
            .par_iter()
            .map(|(record, pair, file)| {
                let reference = vocab.encode(&pair.reference_output());
                let candidate = vocab.encode(&record.prediction);
                let bleu = bleu_with(&candidate, &reference, options.bleu)?.score;
                let bleu_n = (1..=MAX_ORDER)
                    .map(|n| bleu_n(&candidate, &reference, n, options.bleu).map(|s| s.score))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                let delta_liq = delta_liq_with(pair, &record.prediction, file, &options.lint)?;
                Ok(PairScore {
                    pair_id: pair.id.clone(),
                    kind: pair.kind,
                    bleu,
                    bleu_n,
                    delta_liq,
                })
            })
            .collect();
        let mut scores = scored.into_iter().collect::<Result<Vec<_>>>()?;
        scores.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
        scores.dedup_by(|a, b| a.pair_id == b.pair_id);
        let all: Vec<&PairScore> = scores.iter().collect();
        let by_kind = PairKind::ALL
            .iter()
            .map(|k| {
                let of_kind: Vec<&PairScore> = scores.iter().filter(|s| s.kind == *k).collect();
                (*k, KindSummary::of(&of_kind))
            })
            .collect();
        let missing = test_ids
            .iter()
            .filter(|id| scores.binary_search_by(|s| s.pair_id.as_str().cmp(id)).is_err())
            .map(|id| id.to_string())
            .collect();
        models.insert(
            model.to_string(),
            ModelReport {
                overall: KindSummary::of(&all),
                by_kind,
                pairs: scores,
                missing,
            },
        );
    }
    Ok(EvalReport { models, errors })
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<20} {:>4} {:>8} {:>8}  {:>16} {:>16} {:>16}", "model", "n", "bleu", "dLIQ", "CF bleu/dLIQ", "CC bleu/dLIQ", "FC bleu/dLIQ")?;
        for (name, m) in &self.models {
            write!(f, "{:<20} {:>4} {:>8.4} {:>8.2} ", name, m.overall.count, m.overall.mean_bleu, m.overall.mean_delta_liq)?;
            for kind in [PairKind::CF, PairKind::CC, PairKind::FC] {
                let k = &m.by_kind[&kind];
                write!(f, " {:>9.4}/{:<6.2}", k.mean_bleu, k.mean_delta_liq)?;
            }
            writeln!(f)?;
            if !m.missing.is_empty() {
                writeln!(f, "  {} test pairs without prediction", m.missing.len())?;
            }
        }
        for error in &self.errors {
            writeln!(f, "error: {error}")?;
        }
        Ok(())
    }
}
