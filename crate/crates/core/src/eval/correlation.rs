use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::report::{EvalReport, PairScore};
use crate::error::{Error, Result};
use crate::model::PairKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum CorrelationError {
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("at least two points are needed, got {0}")]
    TooShort(usize),
    #[error("a series has zero variance; the coefficient is undefined")]
    ZeroVariance,
}

/// Pearson product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> std::result::Result<f64, CorrelationError> {
    if xs.len() != ys.len() {
        return Err(CorrelationError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(CorrelationError::TooShort(xs.len()));
    }
    let constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
    if constant(xs) || constant(ys) {
        return Err(CorrelationError::ZeroVariance);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanScore {
    pub pair_id: String,
    pub model_name: String,
    pub score: f64,
}

/// Reads a comma-separated table with a `pair_id,model_name,score` header.
pub fn read_human_scores(path: &Path) -> Result<Vec<HumanScore>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    reader
        .deserialize()
        .map(|row| row.map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display()))))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    /// `None` for the row pooling every kind that was not excluded.
    pub kind: Option<PairKind>,
    pub metric: String,
    pub n: usize,
    pub r: std::result::Result<f64, CorrelationError>,
}

const METRICS: [&str; 6] = ["bleu", "bleu-1", "bleu-2", "bleu-3", "bleu-4", "delta-liq"];

fn metric_value(score: &PairScore, metric: usize) -> f64 {
    match metric {
        0 => score.bleu,
        1..=4 => score.bleu_n[metric - 1],
        _ => score.delta_liq as f64,
    }
}

/// Correlates each metric with human scores per pair kind and pooled.
///
/// Human scores are joined to report entries on (pair, model). Kinds whose
/// human scores are all equal are reported as undefined and left out of the
/// pooled rows. Returns the rows and the excluded kinds.
pub fn correlate(report: &EvalReport, human: &[HumanScore]) -> (Vec<CorrelationRow>, Vec<PairKind>) {
    let mut scores: HashMap<(&str, &str), &PairScore> = HashMap::new();
    for (model, m) in &report.models {
        for s in &m.pairs {
            scores.insert((model.as_str(), s.pair_id.as_str()), s);
        }
    }
    let mut joined: BTreeMap<PairKind, Vec<(&PairScore, f64)>> = BTreeMap::new();
    for h in human {
        if let Some(s) = scores.get(&(h.model_name.as_str(), h.pair_id.as_str())) {
            joined.entry(s.kind).or_default().push((s, h.score));
        }
    }

    let row = |kind: Option<PairKind>, points: &[(&PairScore, f64)], metric: usize| {
        let xs: Vec<f64> = points.iter().map(|(s, _)| metric_value(s, metric)).collect();
        let ys: Vec<f64> = points.iter().map(|(_, h)| *h).collect();
        CorrelationRow {
            kind,
            metric: METRICS[metric].to_string(),
            n: points.len(),
            r: pearson(&xs, &ys),
        }
    };

    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    let mut pooled = Vec::new();
    for (kind, points) in &joined {
        let humans: Vec<f64> = points.iter().map(|(_, h)| *h).collect();
        if pearson(&humans, &humans) == Err(CorrelationError::ZeroVariance) {
            excluded.push(*kind);
        } else {
            pooled.extend_from_slice(points);
        }
        for metric in 0..METRICS.len() {
            rows.push(row(Some(*kind), points, metric));
        }
    }
    for metric in 0..METRICS.len() {
        rows.push(row(None, &pooled, metric));
    }
    (rows, excluded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::report::{KindSummary, ModelReport};
    use proptest::prelude::*;

    #[test]
    fn closed_forms() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson(&xs, &xs).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = xs.iter().map(|x| -2.0 * x + 7.0).collect();
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert!((pearson(&xs, &[2.0, 1.0, 4.0, 3.0]).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn undefined_cases() {
        assert_eq!(pearson(&[1.0, 2.0], &[5.0, 5.0]), Err(CorrelationError::ZeroVariance));
        assert_eq!(pearson(&[1.0], &[2.0]), Err(CorrelationError::TooShort(1)));
        assert_eq!(pearson(&[1.0, 2.0], &[2.0]), Err(CorrelationError::LengthMismatch(2, 1)));
    }

    proptest! {
        #[test]
        fn affine_maps_give_sign(xs in prop::collection::vec(-1e3f64..1e3, 2..40), a in -50.0f64..50.0, b in -1e3f64..1e3) {
            prop_assume!(a.abs() > 1e-3);
            prop_assume!(xs.iter().any(|x| (x - xs[0]).abs() > 1e-3));
            let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let r = pearson(&xs, &ys).unwrap();
            prop_assert!((r - a.signum()).abs() < 1e-12);
        }
    }

    fn score(id: &str, kind: PairKind, bleu: f64) -> PairScore {
        PairScore {
            pair_id: id.into(),
            kind,
            bleu,
            bleu_n: vec![bleu; 4],
            delta_liq: 0,
        }
    }

    #[test]
    fn constant_kind_is_excluded() {
        let pairs = vec![
            score("a", PairKind::CF, 0.1),
            score("b", PairKind::CF, 0.5),
            score("c", PairKind::CF, 0.9),
            score("d", PairKind::FC, 0.2),
            score("e", PairKind::FC, 0.7),
        ];
        let empty = KindSummary {
            count: 0,
            mean_bleu: 0.0,
            mean_delta_liq: 0.0,
        };
        let report = EvalReport {
            models: [(
                "m".to_string(),
                ModelReport {
                    overall: empty.clone(),
                    by_kind: BTreeMap::new(),
                    pairs,
                    missing: vec![],
                },
            )]
            .into(),
            errors: vec![],
        };
        let human = |id: &str, s: f64| HumanScore {
            pair_id: id.into(),
            model_name: "m".into(),
            score: s,
        };
        let scores = [human("a", 2.0), human("b", 4.0), human("c", 6.0), human("d", 5.0), human("e", 5.0)];
        let (rows, excluded) = correlate(&report, &scores);
        assert_eq!(excluded, [PairKind::FC]);
        let get = |kind, metric: &str| rows.iter().find(|r| r.kind == kind && r.metric == metric).unwrap();
        assert!((get(Some(PairKind::CF), "bleu").r.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(get(Some(PairKind::FC), "bleu").r, Err(CorrelationError::ZeroVariance));
        assert_eq!(get(None, "bleu").n, 3);
        assert_eq!(get(None, "delta-liq").r, Err(CorrelationError::ZeroVariance));
    }

    #[test]
    fn reads_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        std::fs::write(&path, "pair_id,model_name,score\np1, m , 7\np2,m,3.5\n").unwrap();
        let rows = read_human_scores(&path).unwrap();
        assert_eq!(rows[0].model_name, "m");
        assert_eq!(rows[1].score, 3.5);
    }
}
