//! Draws survey candidates and builds an anonymized pack from a shortlist.
use skill_corpus::eval::{build_survey_candidates, build_survey_pack, PredictionRecord, SurveyOptions};
use skill_corpus::pairs::mine_pairs;
use skill_corpus::{Origin, SourceFile};

fn main() -> skill_corpus::Result<()> {
    let mut pairs = Vec::new();
    for i in 0..6 {
        let text = format!(
            "/* Scale by {i}. */\nprocedure(scale{i}(w)\n  w * {i}\n)\n\nprocedure(shift{i}(x)\n  x + {i}\n)\n\n/* Apply {i}. */\nr{i} = scale{i}(shift{i}(1))\n"
        );
        pairs.extend(mine_pairs(&SourceFile::new(Origin::PrimaryProprietary, format!("f{i}.il"), text)));
    }
    let options = SurveyOptions { candidates_per_kind: 4, shortlist_per_kind: 2, prompts_per_kind: 2, ..SurveyOptions::default() };
    let candidates = build_survey_candidates(&pairs, 7, &options);
    let shortlist: Vec<String> = candidates.by_kind.values().flat_map(|ids| ids.iter().take(2).cloned()).collect();
    let predictions: Vec<PredictionRecord> = pairs
        .iter()
        .flat_map(|p| {
            [("copy", p.output_text.clone()), ("blank", String::new())].map(|(m, text)| PredictionRecord {
                pair_id: p.id.clone(),
                model_name: m.to_string(),
                prediction: text,
            })
        })
        .collect();
    let out = build_survey_pack(&pairs, &predictions, Some(&shortlist), 7, &options)?;
    for q in &out.pack.questions {
        println!("question: {} ({}-{})", q.text, q.scale_min, q.scale_max);
    }
    for prompt in &out.pack.prompts {
        let labels: Vec<&str> = prompt.outputs.iter().map(|(l, _)| l.as_str()).collect();
        println!("{} {:?} outputs {labels:?} -> models {:?}", prompt.prompt_id, prompt.kind, out.key.models[&prompt.prompt_id]);
    }
    Ok(())
}
