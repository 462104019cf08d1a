//! Retrieval of open-source SKILL files from GitHub through repository and
//! code search, with blacklist filtering. All requests go through a
//! [`Transport`] so runs can be recorded and replayed offline.

mod client;
mod filter;
mod tokens;
mod transport;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use client::{
    code_search, fetch_text, list_repo_files, repo_search, GithubClient, RetryPolicy, DEFAULT_API_BASE, DEFAULT_QUERY,
    TOKEN_ENV,
};
pub use filter::{
    file_rejection, filter_candidates, url_rejection, FilterOutcome, FilterStage, Rejection, FILE_PATTERNS,
    URL_KEYWORDS,
};
pub use tokens::collect_query_tokens;
pub use transport::{Exchange, LiveTransport, Recording, RecordingTransport, ReplayTransport, Response, Transport};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MinerError {
    #[error("{url}: authentication failed with status {status}; check the {} variable", TOKEN_ENV)]
    Auth { url: String, status: u16 },
    #[error("{url}: rate limited after {attempts} attempts")]
    RateLimited { url: String, attempts: u32 },
    #[error("{url}: unexpected status {status}")]
    Http { url: String, status: u16 },
    #[error("{url}: malformed response: {message}")]
    Parse { url: String, message: String },
    #[error("no recorded response for {0}")]
    NotRecorded(String),
    #[error("transport error: {0}")]
    Transport(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RemoteRepo {
    pub full_name: String,
    pub html_url: String,
    pub default_branch: String,
    /// SPDX id as reported by GitHub. Recorded, not enforced.
    pub license: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RemoteFileRef {
    pub url: String,
    pub raw_url: String,
    pub repo: String,
    pub path: String,
    pub extension: String,
}

impl RemoteFileRef {
    /// `None` unless the path has a SKILL extension.
    pub fn try_new(repo: &str, git_ref: &str, path: &str) -> Option<Self> {
        let extension = std::path::Path::new(path).extension()?.to_str()?;
        if !crate::io::SKILL_EXTENSIONS.contains(&extension) {
            return None;
        }
        Some(RemoteFileRef {
            url: format!("https://github.com/{repo}/blob/{git_ref}/{path}"),
            raw_url: format!("https://raw.githubusercontent.com/{repo}/{git_ref}/{path}"),
            repo: repo.to_string(),
            path: path.to_string(),
            extension: extension.to_string(),
        })
    }

    /// Like [`RemoteFileRef::try_new`], panicking on a non-SKILL path.
    pub fn new(repo: &str, git_ref: &str, path: &str) -> Self {
        Self::try_new(repo, git_ref, path).unwrap_or_else(|| panic!("{path} has no SKILL extension"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MineRemoteOptions {
    pub query: String,
    /// Code-search queries, usually from [`collect_query_tokens`].
    pub tokens: Vec<String>,
    pub concurrency: usize,
    pub list_repo_files: bool,
}

impl Default for MineRemoteOptions {
    fn default() -> Self {
        MineRemoteOptions {
            query: DEFAULT_QUERY.to_string(),
            tokens: Vec::new(),
            concurrency: 4,
            list_repo_files: true,
        }
    }
}

/// Everything retrieved so far. Saved when a run is cut short by rate
/// limiting and passed back in to resume without repeating requests.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningState {
    pub repos: Option<Vec<RemoteRepo>>,
    pub listed_repos: BTreeSet<String>,
    pub searched_tokens: BTreeSet<String>,
    /// Refs found by repository listing, by url.
    pub repo_refs: BTreeMap<String, RemoteFileRef>,
    /// Refs found by code search, by url.
    pub code_refs: BTreeMap<String, RemoteFileRef>,
    pub texts: BTreeMap<String, String>,
    pub fetch_errors: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinedFile {
    pub file: RemoteFileRef,
    pub origin: crate::model::Origin,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningOutcome {
    pub state: MiningState,
    /// `false` when rate limiting stopped the run; resume from `state`.
    pub complete: bool,
    pub interrupted: Option<String>,
    pub kept: Vec<MinedFile>,
    pub rejections: Vec<Rejection>,
}

fn interrupted(state: MiningState, err: MinerError) -> Result<MiningOutcome, MinerError> {
    match err {
        MinerError::RateLimited { .. } => {
            log::warn!("mining interrupted: {err}");
            Ok(MiningOutcome {
                state,
                complete: false,
                interrupted: Some(err.to_string()),
                kept: Vec::new(),
                rejections: Vec::new(),
            })
        }
        other => Err(other),
    }
}

/// Repository search, per-repository file listing, token code search,
/// url filtering, fetching and file filtering, resuming from `state`.
///
/// Rate limiting that outlasts the client's backoff ends the run early with
/// `complete: false`; any other failure is an error. A file found by both
/// routes is attributed to repository search.
pub fn mine_remote(
    client: &GithubClient,
    options: &MineRemoteOptions,
    mut state: MiningState,
) -> Result<MiningOutcome, MinerError> {
    if state.repos.is_none() {
        match repo_search(client, &options.query) {
            Ok(repos) => state.repos = Some(repos),
            Err(e) => return interrupted(state, e),
        }
    }
    if options.list_repo_files {
        for repo in state.repos.clone().unwrap_or_default() {
            if state.listed_repos.contains(&repo.full_name) {
                continue;
            }
            match list_repo_files(client, &repo) {
                Ok(refs) => {
                    state.repo_refs.extend(refs.into_iter().map(|r| (r.url.clone(), r)));
                    state.listed_repos.insert(repo.full_name.clone());
                }
                Err(MinerError::Http { url, status }) => {
                    log::warn!("skipping {}: status {status} for {url}", repo.full_name);
                    state.listed_repos.insert(repo.full_name.clone());
                }
                Err(e) => return interrupted(state, e),
            }
        }
    }
    for token in &options.tokens {
        if state.searched_tokens.contains(token) {
            continue;
        }
        match code_search(client, token) {
            Ok(refs) => {
                state.code_refs.extend(refs.into_iter().map(|r| (r.url.clone(), r)));
                state.searched_tokens.insert(token.clone());
            }
            Err(e) => return interrupted(state, e),
        }
    }

    let mut refs: BTreeMap<&str, (&RemoteFileRef, crate::model::Origin)> = BTreeMap::new();
    for r in state.code_refs.values() {
        refs.insert(&r.url, (r, crate::model::Origin::CodeSearch));
    }
    for r in state.repo_refs.values() {
        refs.insert(&r.url, (r, crate::model::Origin::RepoSearch));
    }
    let to_fetch: Vec<RemoteFileRef> = refs
        .values()
        .map(|(r, _)| *r)
        .filter(|r| url_rejection(&r.url).is_none())
        .filter(|r| !state.texts.contains_key(&r.url) && !state.fetch_errors.contains_key(&r.url))
        .cloned()
        .collect();
    let origins: BTreeMap<String, crate::model::Origin> = refs.iter().map(|(u, (_, o))| (u.to_string(), *o)).collect();
    let all_refs: Vec<RemoteFileRef> = refs.values().map(|(r, _)| (*r).clone()).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.concurrency.max(1))
        .build()
        .map_err(|e| MinerError::Transport(e.to_string()))?;
    let fetched: Vec<(String, Result<String, MinerError>)> =
        pool.install(|| to_fetch.par_iter().map(|r| (r.url.clone(), fetch_text(client, r))).collect());
    let mut stop = None;
    for (url, result) in fetched {
        match result {
            Ok(text) => {
                state.texts.insert(url, text);
            }
            Err(e @ MinerError::RateLimited { .. }) => stop = stop.or(Some(e)),
            Err(e @ (MinerError::Auth { .. } | MinerError::NotRecorded(_) | MinerError::Transport(_))) => return Err(e),
            Err(e) => {
                state.fetch_errors.insert(url, e.to_string());
            }
        }
    }
    if let Some(e) = stop {
        return interrupted(state, e);
    }

    let outcome = filter_candidates(&all_refs, &state.texts, &state.fetch_errors);
    let kept = outcome
        .kept
        .into_iter()
        .map(|file| MinedFile {
            origin: origins[&file.url],
            text: state.texts[&file.url].clone(),
            file,
        })
        .collect();
    Ok(MiningOutcome {
        state,
        complete: true,
        interrupted: None,
        kept,
        rejections: outcome.rejections,
    })
}
