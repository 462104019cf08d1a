//! Scoring of model predictions, metric/human correlation and the
//! human-evaluation survey pack.

mod correlation;
mod report;
mod survey;

pub use correlation::{correlate, pearson, read_human_scores, CorrelationError, CorrelationRow, HumanScore};
pub use report::{
    evaluate_predictions, read_predictions, EvalOptions, EvalReport, KindSummary, ModelReport, PairScore,
    PredictionRecord,
};
pub use survey::{
    build_survey_candidates, build_survey_pack, SurveyCandidates, SurveyKey, SurveyOptions, SurveyOutput, SurveyPack,
    SurveyPrompt, SurveyQuestion,
};
