use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::report::PredictionRecord;
use crate::dataset::rng_for;
use crate::error::{Error, Result};
use crate::model::{Pair, PairKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyQuestion {
    pub text: String,
    pub scale_min: u32,
    pub scale_max: u32,
    /// Asked once per model output rather than once per prompt.
    pub per_output: bool,
}

impl SurveyQuestion {
    fn new(text: &str, scale_max: u32, per_output: bool) -> Self {
        SurveyQuestion {
            text: text.to_string(),
            scale_min: 1,
            scale_max,
            per_output,
        }
    }

    pub fn defaults() -> Vec<SurveyQuestion> {
        vec![
            SurveyQuestion::new("Input prompt quality", 5, false),
            SurveyQuestion::new("Reference follows from input", 5, false),
            SurveyQuestion::new("Output quality", 10, true),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurveyOptions {
    pub candidates_per_kind: usize,
    pub shortlist_per_kind: usize,
    pub prompts_per_kind: usize,
    pub questions: Vec<SurveyQuestion>,
}

impl Default for SurveyOptions {
    fn default() -> Self {
        SurveyOptions {
            candidates_per_kind: 60,
            shortlist_per_kind: 15,
            prompts_per_kind: 5,
            questions: SurveyQuestion::defaults(),
        }
    }
}

/// Seeded candidate pair ids per kind, to be shortlisted by hand.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyCandidates {
    pub seed: u64,
    pub by_kind: BTreeMap<PairKind, Vec<String>>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyPrompt {
    pub prompt_id: String,
    pub kind: PairKind,
    pub input: String,
    pub reference: String,
    /// (anonymous label, model output), in randomized order.
    pub outputs: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyPack {
    pub questions: Vec<SurveyQuestion>,
    pub prompts: Vec<SurveyPrompt>,
}

/// Maps each prompt back to its pair and each anonymous label to a model.
/// Kept apart from the pack handed to raters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyKey {
    pub pairs: BTreeMap<String, String>,
    pub models: BTreeMap<String, BTreeMap<String, String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyOutput {
    pub pack: SurveyPack,
    pub key: SurveyKey,
    pub warnings: Vec<String>,
}

fn kind_index(kind: PairKind) -> u64 {
    PairKind::ALL.iter().position(|k| *k == kind).unwrap_or(0) as u64
}

fn ids_by_kind<'a>(pairs: impl Iterator<Item = &'a Pair>) -> BTreeMap<PairKind, Vec<String>> {
    let mut out: BTreeMap<PairKind, Vec<String>> = PairKind::ALL.iter().map(|k| (*k, Vec::new())).collect();
    for pair in pairs {
        out.get_mut(&pair.kind).expect("all kinds present").push(pair.id.clone());
    }
    for ids in out.values_mut() {
        ids.sort();
        ids.dedup();
    }
    out
}

/// Draws `candidates_per_kind` test pairs of each kind at random.
pub fn build_survey_candidates(test_pairs: &[Pair], seed: u64, options: &SurveyOptions) -> SurveyCandidates {
    let mut warnings = Vec::new();
    let by_kind = ids_by_kind(test_pairs.iter())
        .into_iter()
        .map(|(kind, mut ids)| {
            if ids.len() < options.candidates_per_kind {
                warnings.push(format!(
                    "{}: only {} pairs available, taking all (wanted {})",
                    kind.as_str(),
                    ids.len(),
                    options.candidates_per_kind
                ));
            }
            ids.shuffle(&mut rng_for(seed, "survey-candidates", kind_index(kind)));
            ids.truncate(options.candidates_per_kind);
            (kind, ids)
        })
        .collect();
    SurveyCandidates { seed, by_kind, warnings }
}

fn label(i: usize) -> String {
    let mut out = String::new();
    let mut n = i;
    loop {
        out.insert(0, (b'A' + (n % 26) as u8) as char);
        if n < 26 {
            return out;
        }
        n = n / 26 - 1;
    }
}

/// Samples `prompts_per_kind` pairs of each kind from the shortlist (or from
/// the seeded candidates when no shortlist is given) and lays out every
/// model's output under anonymous labels.
///
/// Only pairs with a prediction from every model are eligible. Shortlist
/// ids that are not test pairs are an error.
pub fn build_survey_pack(
    test_pairs: &[Pair],
    predictions: &[PredictionRecord],
    shortlist: Option<&[String]>,
    seed: u64,
    options: &SurveyOptions,
) -> Result<SurveyOutput> {
    let pairs: HashMap<&str, &Pair> = test_pairs.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut outputs: BTreeMap<&str, BTreeMap<&str, &str>> = BTreeMap::new();
    for p in predictions {
        outputs
            .entry(p.pair_id.as_str())
            .or_default()
            .insert(p.model_name.as_str(), p.prediction.as_str());
    }
    let models: BTreeSet<&str> = predictions.iter().map(|p| p.model_name.as_str()).collect();
    let mut warnings = Vec::new();

    let pool: BTreeMap<PairKind, Vec<String>> = match shortlist {
        Some(ids) => {
            let unknown: Vec<&str> = ids.iter().filter(|id| !pairs.contains_key(id.as_str())).map(|s| s.as_str()).collect();
            if !unknown.is_empty() {
                return Err(Error::InvalidInput(format!("shortlist names unknown test pairs: {}", unknown.join(", "))));
            }
            let by_kind = ids_by_kind(ids.iter().map(|id| pairs[id.as_str()]));
            for (kind, ids) in &by_kind {
                if ids.len() != options.shortlist_per_kind {
                    warnings.push(format!(
                        "{}: shortlist has {} pairs, expected {}",
                        kind.as_str(),
                        ids.len(),
                        options.shortlist_per_kind
                    ));
                }
            }
            by_kind
        }
        None => {
            let candidates = build_survey_candidates(test_pairs, seed, options);
            warnings.extend(candidates.warnings);
            candidates.by_kind
        }
    };

    let mut prompts = Vec::new();
    let mut key = SurveyKey {
        pairs: BTreeMap::new(),
        models: BTreeMap::new(),
    };
    for (kind, ids) in pool {
        let mut eligible: Vec<String> = ids
            .into_iter()
            .filter(|id| outputs.get(id.as_str()).is_some_and(|o| o.len() == models.len()))
            .collect();
        eligible.sort();
        if eligible.len() < options.prompts_per_kind {
            warnings.push(format!(
                "{}: {} pairs with predictions from every model, wanted {}",
                kind.as_str(),
                eligible.len(),
                options.prompts_per_kind
            ));
        }
        let mut rng = rng_for(seed, "survey-pack", kind_index(kind));
        eligible.shuffle(&mut rng);
        eligible.truncate(options.prompts_per_kind);
        for id in eligible {
            let pair = pairs[id.as_str()];
            let mut order: Vec<(&str, &str)> = outputs[id.as_str()].iter().map(|(m, o)| (*m, *o)).collect();
            order.shuffle(&mut rng);
            let prompt_id = format!("P{:02}", prompts.len() + 1);
            let mut labels = BTreeMap::new();
            let mut shown = Vec::new();
            for (i, (model, output)) in order.into_iter().enumerate() {
                labels.insert(label(i), model.to_string());
                shown.push((label(i), output.to_string()));
            }
            key.pairs.insert(prompt_id.clone(), id.clone());
            key.models.insert(prompt_id.clone(), labels);
            prompts.push(SurveyPrompt {
                prompt_id,
                kind,
                input: pair.input_text.clone(),
                reference: pair.reference_output(),
                outputs: shown,
            });
        }
    }
    Ok(SurveyOutput {
        pack: SurveyPack {
            questions: options.questions.clone(),
            prompts,
        },
        key,
        warnings,
    })
}
