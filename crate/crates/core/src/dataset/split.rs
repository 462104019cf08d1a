use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::rng_for;
use crate::manifest::{DatasetManifest, FileRecord, PairRecord};
use crate::model::{Pair, PairKind, SourceFile, Split, TrainingStrategy};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SplitError {
    #[error(
        "could not balance comment-function pairs across {eligible_files} primary files \
         ({cf_pairs} pairs) within {attempts} partitions; closest was {best_a} vs {best_b}"
    )]
    Unbalanced {
        attempts: usize,
        eligible_files: usize,
        cf_pairs: usize,
        best_a: usize,
        best_b: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitOptions {
    pub max_attempts: usize,
    /// Largest allowed relative difference between the two partitions'
    /// comment-function counts.
    pub tolerance: f64,
}

impl Default for SplitOptions {
    fn default() -> Self {
        SplitOptions {
            max_attempts: 1000,
            tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitOutcome {
    pub manifest: DatasetManifest,
    pub warnings: Vec<String>,
    /// Partitions drawn before the balance held.
    pub attempts: usize,
}

fn balanced(a: usize, b: usize, tolerance: f64) -> bool {
    a.abs_diff(b) as f64 <= tolerance * a.max(b) as f64
}

/// Assigns files and pairs to train/val/test.
///
/// Primary files with at least one pair are shuffled into two halves
/// until both hold a similar number of top-level comment-function pairs.
/// In each half, n is that count; function-completion and comment-code
/// pairs are sampled down to n, topping comment-code up from nested pairs
/// when there are too few top-level ones. Unselected pairs in those files
/// are discarded. Every other file goes to train with all its pairs, or
/// only its top-level pairs when the strategy deduplicates.
pub fn make_splits(
    files: &[SourceFile],
    pairs: &[Pair],
    seed: u64,
    strategy: TrainingStrategy,
    options: &SplitOptions,
) -> Result<SplitOutcome, SplitError> {
    let mut warnings = Vec::new();
    let mut by_file: HashMap<&str, Vec<&Pair>> = HashMap::new();
    for pair in pairs {
        by_file.entry(pair.file_id.as_str()).or_default().push(pair);
    }
    for list in by_file.values_mut() {
        list.sort_by(|a, b| a.id.cmp(&b.id));
    }
    let cf_count = |file_id: &str| {
        by_file.get(file_id).map_or(0, |ps| {
            ps.iter().filter(|p| p.kind == PairKind::CF && p.top_level).count()
        })
    };

    let mut eligible: Vec<&str> = files
        .iter()
        .filter(|f| f.origin.is_primary() && by_file.contains_key(f.id.as_str()))
        .map(|f| f.id.as_str())
        .collect();
    eligible.sort_unstable();
    eligible.dedup();

    let mut file_split: HashMap<&str, Split> = HashMap::new();
    let mut attempts = 0;
    if eligible.is_empty() {
        warnings.push("no primary files with pairs; validation and test splits are empty".into());
    } else {
        let cf_total: usize = eligible.iter().map(|f| cf_count(f)).sum();
        let mut best = (usize::MAX, 0, 0);
        let mut chosen = None;
        while attempts < options.max_attempts {
            let mut order = eligible.clone();
            order.shuffle(&mut rng_for(seed, "partition", attempts as u64));
            attempts += 1;
            let (val, test) = order.split_at(order.len() / 2);
            let a: usize = val.iter().map(|f| cf_count(f)).sum();
            let b: usize = test.iter().map(|f| cf_count(f)).sum();
            if a.abs_diff(b) < best.0 {
                best = (a.abs_diff(b), a, b);
            }
            if !val.is_empty() && balanced(a, b, options.tolerance) {
                chosen = Some((val.to_vec(), test.to_vec()));
                break;
            }
        }
        let Some((val, test)) = chosen else {
            return Err(SplitError::Unbalanced {
                attempts,
                eligible_files: eligible.len(),
                cf_pairs: cf_total,
                best_a: best.1,
                best_b: best.2,
            });
        };
        file_split.extend(val.into_iter().map(|f| (f, Split::Val)));
        file_split.extend(test.into_iter().map(|f| (f, Split::Test)));
    }

    let mut manifest = DatasetManifest::new(seed, strategy);
    for file in files {
        let split = file_split.get(file.id.as_str()).copied().unwrap_or(Split::Train);
        manifest.insert_file(FileRecord {
            id: file.id.clone(),
            path: file.path.clone(),
            origin: file.origin,
            source_id: None,
            split: Some(split),
        });
    }

    let mut pair_split: BTreeMap<&str, Option<Split>> = BTreeMap::new();
    for split in [Split::Val, Split::Test] {
        let members: Vec<&Pair> = eligible
            .iter()
            .filter(|f| file_split.get(*f) == Some(&split))
            .flat_map(|f| by_file[f].iter().copied())
            .collect();
        let of_kind = |kind: PairKind, top: Option<bool>| -> Vec<&Pair> {
            members
                .iter()
                .copied()
                .filter(|p| p.kind == kind && top.is_none_or(|t| p.top_level == t))
                .collect()
        };
        let cf = of_kind(PairKind::CF, Some(true));
        let n = cf.len();
        let mut fc = of_kind(PairKind::FC, None);
        fc.shuffle(&mut rng_for(seed, &format!("{split}-fc"), 0));
        fc.truncate(n);
        let mut cc = of_kind(PairKind::CC, Some(true));
        cc.shuffle(&mut rng_for(seed, &format!("{split}-cc"), 0));
        cc.truncate(n);
        if cc.len() < n {
            let mut nested = of_kind(PairKind::CC, Some(false));
            nested.shuffle(&mut rng_for(seed, &format!("{split}-cc-nested"), 0));
            let missing = n - cc.len();
            cc.extend(nested.into_iter().take(missing));
        }
        if fc.len() < n || cc.len() < n {
            warnings.push(format!(
                "{split}: {n} comment-function pairs but only {} function-completion and {} comment-code",
                fc.len(),
                cc.len()
            ));
        }
        for pair in &members {
            pair_split.insert(pair.id.as_str(), None);
        }
        for pair in cf.iter().chain(&fc).chain(&cc) {
            pair_split.insert(pair.id.as_str(), Some(split));
        }
    }

    for pair in pairs {
        let split = match pair_split.get(pair.id.as_str()) {
            Some(assigned) => *assigned,
            None if manifest.file(&pair.file_id).is_none() => continue,
            None if strategy.deduplicated && !pair.top_level => None,
            None => Some(Split::Train),
        };
        manifest.insert_pair(PairRecord {
            id: pair.id.clone(),
            file_id: pair.file_id.clone(),
            kind: pair.kind,
            top_level: pair.top_level,
            split,
        });
    }

    if file_split.is_empty() && !eligible.is_empty() {
        warnings.push("validation and test splits are empty".into());
    }
    Ok(SplitOutcome {
        manifest,
        warnings,
        attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Origin;

    fn file_with(origin: Origin, name: &str, cf: usize, fc: usize, cc: usize) -> (SourceFile, Vec<Pair>) {
        let mut text = String::new();
        for i in 0..cf {
            text.push_str(&format!("/* doc {name} {i} */\nprocedure({name}_cf{i}(a)\n  a + {i}\n)\n\n"));
        }
        for i in 0..fc {
            text.push_str(&format!("procedure({name}_fc{i}(a)\n  a * {i}\n)\n\n"));
        }
        for i in 0..cc {
            text.push_str(&format!("/* set {name} {i} */\n{name}_v{i} = {i}\n\n"));
        }
        let file = SourceFile::new(origin, format!("{name}.il"), text);
        let mut pairs = crate::pairs::mine_pairs(&file);
        crate::pairs::mark_top_level(&mut pairs);
        (file, pairs)
    }

    fn corpus(specs: &[(Origin, &str, usize, usize, usize)]) -> (Vec<SourceFile>, Vec<Pair>) {
        let mut files = Vec::new();
        let mut pairs = Vec::new();
        for (origin, name, cf, fc, cc) in specs {
            let (f, p) = file_with(*origin, name, *cf, *fc, *cc);
            files.push(f);
            pairs.extend(p);
        }
        (files, pairs)
    }

    fn counts(m: &DatasetManifest, split: Split) -> [usize; 3] {
        let r = m.split_record(split);
        [r.pairs[&PairKind::CF], r.pairs[&PairKind::FC], r.pairs[&PairKind::CC]]
    }

    #[test]
    fn no_primary_files() {
        let (files, pairs) = corpus(&[(Origin::RepoSearch, "a", 1, 1, 1)]);
        let out = make_splits(&files, &pairs, 1, TrainingStrategy::default(), &SplitOptions::default()).unwrap();
        assert_eq!(out.manifest.files_in(Split::Train).count(), 1);
        assert_eq!(out.manifest.files_in(Split::Val).count(), 0);
        assert!(!out.warnings.is_empty());
    }

    #[test]
    fn six_per_kind() {
        use Origin::PrimaryProprietary as P;
        let (files, pairs) = corpus(&[
            (P, "a", 3, 4, 3),
            (P, "b", 3, 4, 5),
            (P, "c", 3, 5, 4),
            (P, "d", 3, 4, 4),
            (P, "e", 0, 0, 0),
            (Origin::CodeSearch, "f", 2, 2, 2),
        ]);
        let out = make_splits(&files, &pairs, 9, TrainingStrategy::default(), &SplitOptions::default()).unwrap();
        let m = &out.manifest;
        assert_eq!(counts(m, Split::Val), [6, 6, 6]);
        assert_eq!(counts(m, Split::Test), [6, 6, 6]);
        let e = files.iter().find(|f| f.path == "e.il").unwrap();
        assert_eq!(m.file_split(&e.id), Some(Split::Train));
        for f in m.files_in(Split::Val).chain(m.files_in(Split::Test)) {
            assert!(f.origin.is_primary());
        }
        let again = make_splits(&files, &pairs, 9, TrainingStrategy::default(), &SplitOptions::default()).unwrap();
        assert_eq!(again.manifest.to_jsonl(), m.to_jsonl());
    }

    #[test]
    fn unbalanced_corpus_fails() {
        use Origin::PrimaryProprietary as P;
        let (files, pairs) = corpus(&[(P, "a", 10, 0, 0), (P, "b", 1, 0, 0)]);
        let err = make_splits(&files, &pairs, 3, TrainingStrategy::default(), &SplitOptions::default()).unwrap_err();
        assert!(matches!(err, SplitError::Unbalanced { attempts: 1000, .. }));
    }

    #[test]
    fn nested_comment_code_fills_up() {
        use Origin::PrimaryProprietary as P;
        let body = |name: &str| {
            format!(
                "/* doc */\nprocedure({name}(a)\n  /* one */\n  x = 1\n  /* two */\n  y = 2\n  x + y\n)\n\
                 procedure({name}_fc(a)\n  a\n)\n"
            )
        };
        let mut files = Vec::new();
        let mut pairs = Vec::new();
        for name in ["p", "q"] {
            let f = SourceFile::new(P, format!("{name}.il"), body(name));
            let mut ps = crate::pairs::mine_pairs(&f);
            crate::pairs::mark_top_level(&mut ps);
            pairs.extend(ps);
            files.push(f);
        }
        let out = make_splits(&files, &pairs, 5, TrainingStrategy::default(), &SplitOptions::default()).unwrap();
        assert_eq!(counts(&out.manifest, Split::Val), [1, 1, 1]);
        let discarded = out.manifest.pairs().filter(|p| p.split.is_none()).count();
        assert_eq!(discarded, 2);
    }

    #[test]
    fn deduplicated_strategy_drops_nested_train_pairs() {
        let text = "/* doc */\nprocedure(f(a)\n  /* one */\n  x = 1\n)\n";
        let file = SourceFile::new(Origin::RepoSearch, "a.il", text);
        let mut pairs = crate::pairs::mine_pairs(&file);
        crate::pairs::mark_top_level(&mut pairs);
        let files = vec![file];
        let dedup = make_splits(&files, &pairs, 1, TrainingStrategy::default(), &SplitOptions::default()).unwrap();
        assert_eq!(dedup.manifest.pairs_in(Split::Train).count(), 1);
        let all = TrainingStrategy {
            deduplicated: false,
            ..TrainingStrategy::default()
        };
        let kept = make_splits(&files, &pairs, 1, all, &SplitOptions::default()).unwrap();
        assert_eq!(kept.manifest.pairs_in(Split::Train).count(), 2);
    }
}
