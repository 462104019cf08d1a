use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::RemoteFileRef;

/// Case-insensitive substrings that reject a candidate by its url.
pub const URL_KEYWORDS: [&str; 8] = ["dotnet", "-ms", "microsoft", ".net", "solaris", "unity", "logs", "www"];

/// Case-sensitive patterns that reject a file when they follow whitespace.
/// They mark assembly listings and other non-SKILL files sharing the
/// extensions.
pub const FILE_PATTERNS: [&str; 7] = [".assembly", ".NET", ".class", ".method", ".string", ".float", ".inline"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterStage {
    Url,
    Fetch,
    File,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub url: String,
    pub stage: FilterStage,
    /// The keyword or pattern that matched, or the fetch error.
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub kept: Vec<RemoteFileRef>,
    pub rejections: Vec<Rejection>,
}

pub fn url_rejection(url: &str) -> Option<&'static str> {
    let url = url.to_ascii_lowercase();
    URL_KEYWORDS.into_iter().find(|k| url.contains(k))
}

pub fn file_rejection(text: &str) -> Option<&'static str> {
    FILE_PATTERNS.into_iter().find(|pattern| {
        text.match_indices(pattern)
            .any(|(i, _)| text[..i].chars().next_back().is_some_and(char::is_whitespace))
    })
}

/// Drops refs whose url carries a blacklisted keyword, then refs whose
/// fetched text contains a blacklisted pattern. Refs that survive the url
/// stage but have no text are rejected at the fetch stage with the reason
/// given in `fetch_errors`.
pub fn filter_candidates(
    refs: &[RemoteFileRef],
    texts: &BTreeMap<String, String>,
    fetch_errors: &BTreeMap<String, String>,
) -> FilterOutcome {
    let mut outcome = FilterOutcome::default();
    for r in refs {
        let reject = |stage, reason: &str| Rejection {
            url: r.url.clone(),
            stage,
            reason: reason.to_string(),
        };
        if let Some(keyword) = url_rejection(&r.url) {
            outcome.rejections.push(reject(FilterStage::Url, keyword));
            continue;
        }
        let Some(text) = texts.get(&r.url) else {
            let reason = fetch_errors.get(&r.url).map_or("not fetched", String::as_str);
            outcome.rejections.push(reject(FilterStage::Fetch, reason));
            continue;
        };
        match file_rejection(text) {
            Some(pattern) => outcome.rejections.push(reject(FilterStage::File, pattern)),
            None => outcome.kept.push(r.clone()),
        }
    }
    outcome
}
