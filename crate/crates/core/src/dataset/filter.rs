use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::model::{FileFilter, Pair, SourceFile, TrainingStrategy};
use crate::preprocess::strip_comments;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterOptions {
    /// Pairs a file needs under the has-pairs filter.
    pub min_pairs: usize,
    pub min_iq: u32,
}

impl Default for FilterOptions {
    fn default() -> Self {
        FilterOptions {
            min_pairs: 1,
            min_iq: 10,
        }
    }
}

pub fn filter_files(files: &[SourceFile], strategy: &TrainingStrategy, pairs: &[Pair]) -> Vec<SourceFile> {
    filter_files_with(files, strategy, pairs, &FilterOptions::default())
}

/// Files kept for self-supervised training under the strategy's filter.
/// Survivors lose their comments when the strategy drops them.
pub fn filter_files_with(
    files: &[SourceFile],
    strategy: &TrainingStrategy,
    pairs: &[Pair],
    options: &FilterOptions,
) -> Vec<SourceFile> {
    let mut pair_counts: HashMap<&str, usize> = HashMap::new();
    for pair in pairs {
        *pair_counts.entry(pair.file_id.as_str()).or_default() += 1;
    }
    files
        .iter()
        .filter(|file| match strategy.file_filter {
            FileFilter::None => true,
            FileFilter::LintPass => file.lint_report().passed(),
            FileFilter::LintIqGe10 => file.lint_report().iq >= options.min_iq,
            FileFilter::HasPairs => {
                pair_counts.get(file.id.as_str()).copied().unwrap_or(0) >= options.min_pairs
            }
        })
        .map(|file| {
            if strategy.keep_comments {
                file.clone()
            } else {
                file.with_text(strip_comments(&file.text))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Origin;
    use crate::pairs::mine_pairs;

    fn strategy(file_filter: FileFilter, keep_comments: bool) -> TrainingStrategy {
        TrainingStrategy {
            file_filter,
            keep_comments,
            ..TrainingStrategy::default()
        }
    }

    #[test]
    fn filters() {
        // 3.il: unbalanced, unterminated string, 11 comma-space and one
        // repeated call leave an iq of 6.
        let low = format!("procedure(f(a) (g a\n{}x = \"open\n", "h(a,b)\n".repeat(11));
        let files: Vec<SourceFile> = [
            "x = 1\n",
            "procedure(f(a) (g a\n",
            "/* doc */\nprocedure(f(a)\n  a\n)\n",
            low.as_str(),
        ]
        .iter()
        .enumerate()
        .map(|(i, t)| SourceFile::new(Origin::RepoSearch, format!("{i}.il"), *t))
        .collect();
        let pairs: Vec<Pair> = files.iter().flat_map(mine_pairs).collect();
        let kept = |f| {
            filter_files(&files, &strategy(f, true), &pairs)
                .iter()
                .map(|f| f.path.clone())
                .collect::<Vec<_>>()
        };
        assert_eq!(kept(FileFilter::None), ["0.il", "1.il", "2.il", "3.il"]);
        assert_eq!(kept(FileFilter::LintPass), ["0.il", "2.il"]);
        assert_eq!(kept(FileFilter::LintIqGe10), ["0.il", "1.il", "2.il"]);
        assert_eq!(kept(FileFilter::HasPairs), ["2.il"]);
    }

    #[test]
    fn dropping_comments() {
        let files = vec![SourceFile::new(Origin::RepoSearch, "a.il", "/* doc */\nx = 1\n")];
        let out = filter_files(&files, &strategy(FileFilter::None, false), &[]);
        assert_eq!(out[0].text, "x = 1\n");
        assert_ne!(out[0].id, files[0].id);
    }
}
