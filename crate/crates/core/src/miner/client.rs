use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use url::Url;

use super::transport::Transport;
use super::{MinerError, RemoteFileRef, RemoteRepo};

pub const DEFAULT_API_BASE: &str = "https://api.github.com";
pub const DEFAULT_QUERY: &str = "cadence skill";
pub const TOKEN_ENV: &str = "GITHUB_TOKEN";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 5,
            base_delay: Duration::from_secs(2),
            max_delay: Duration::from_secs(120),
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, attempt: u32) -> Duration {
        self.base_delay.saturating_mul(1u32 << attempt.min(20)).min(self.max_delay)
    }
}

type Sleeper = Arc<dyn Fn(Duration) + Send + Sync>;

/// GitHub REST client over a [`Transport`]. Clones share the transport and
/// the request budget.
#[derive(Clone)]
pub struct GithubClient {
    transport: Arc<dyn Transport>,
    api_base: String,
    token: Option<String>,
    retry: RetryPolicy,
    sleep: Sleeper,
    /// Requests left before the client reports itself rate limited.
    budget: Option<Arc<AtomicU64>>,
    per_page: usize,
    max_pages: usize,
}

impl GithubClient {
    pub fn new(transport: Arc<dyn Transport>) -> Self {
        GithubClient {
            transport,
            api_base: DEFAULT_API_BASE.to_string(),
            token: None,
            retry: RetryPolicy::default(),
            sleep: Arc::new(std::thread::sleep),
            budget: None,
            per_page: 100,
            // The search API serves at most 1000 results per query.
            max_pages: 10,
        }
    }

    pub fn with_token(mut self, token: Option<String>) -> Self {
        self.token = token.filter(|t| !t.is_empty());
        self
    }

    pub fn with_token_from_env(self) -> Self {
        self.with_token(std::env::var(TOKEN_ENV).ok())
    }

    pub fn with_api_base(mut self, base: impl Into<String>) -> Self {
        self.api_base = base.into().trim_end_matches('/').to_string();
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_sleeper(mut self, sleep: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleep = Arc::new(sleep);
        self
    }

    pub fn with_budget(mut self, requests: u64) -> Self {
        self.budget = Some(Arc::new(AtomicU64::new(requests)));
        self
    }

    pub fn with_paging(mut self, per_page: usize, max_pages: usize) -> Self {
        self.per_page = per_page.max(1);
        self.max_pages = max_pages.max(1);
        self
    }

    fn take_budget(&self, url: &str) -> Result<(), MinerError> {
        if let Some(budget) = &self.budget {
            budget
                .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
                .map_err(|_| MinerError::RateLimited {
                    url: url.to_string(),
                    attempts: 0,
                })?;
        }
        Ok(())
    }

    /// GET with bounded exponential backoff on rate limiting and server
    /// errors. Authentication failures are returned at once.
    pub fn get(&self, url: &str) -> Result<String, MinerError> {
        let mut attempt = 0;
        loop {
            self.take_budget(url)?;
            let response = self.transport.get(url, self.token.as_deref())?;
            let rate_limited = response.status == 429
                || (response.status == 403 && response.header("x-ratelimit-remaining") == Some("0"));
            match response.status {
                200..=299 => return Ok(response.body),
                401 | 403 if !rate_limited => {
                    return Err(MinerError::Auth {
                        url: url.to_string(),
                        status: response.status,
                    })
                }
                status if rate_limited || status >= 500 => {
                    if attempt >= self.retry.max_retries {
                        return Err(if rate_limited {
                            MinerError::RateLimited {
                                url: url.to_string(),
                                attempts: attempt + 1,
                            }
                        } else {
                            MinerError::Http {
                                url: url.to_string(),
                                status,
                            }
                        });
                    }
                    let hinted = response
                        .header("retry-after")
                        .and_then(|s| s.trim().parse::<u64>().ok())
                        .map(Duration::from_secs);
                    let delay = hinted.map_or(self.retry.delay(attempt), |d| d.min(self.retry.max_delay));
                    log::warn!("{url}: status {status}, retrying in {delay:?}");
                    (self.sleep)(delay);
                    attempt += 1;
                }
                status => {
                    return Err(MinerError::Http {
                        url: url.to_string(),
                        status,
                    })
                }
            }
        }
    }

    fn get_json<T: DeserializeOwned>(&self, url: &str) -> Result<T, MinerError> {
        let body = self.get(url)?;
        serde_json::from_str(&body).map_err(|e| MinerError::Parse {
            url: url.to_string(),
            message: e.to_string(),
        })
    }

    fn api_url(&self, path: &str, params: &[(&str, String)]) -> String {
        Url::parse_with_params(&format!("{}{path}", self.api_base), params)
            .map(String::from)
            .unwrap_or_else(|_| format!("{}{path}", self.api_base))
    }

    /// Walks result pages until one is empty, the reported total is reached
    /// or the page limit is hit.
    fn search<T: DeserializeOwned>(&self, path: &str, query: &str) -> Result<Vec<T>, MinerError> {
        #[derive(Deserialize)]
        struct Page<T> {
            total_count: usize,
            items: Vec<T>,
        }
        let mut out = Vec::new();
        for page in 1..=self.max_pages {
            let url = self.api_url(
                path,
                &[
                    ("q", query.to_string()),
                    ("per_page", self.per_page.to_string()),
                    ("page", page.to_string()),
                ],
            );
            let result: Page<T> = self.get_json(&url)?;
            let empty = result.items.is_empty();
            out.extend(result.items);
            if empty || out.len() >= result.total_count {
                break;
            }
        }
        Ok(out)
    }
}

#[derive(Deserialize)]
struct RepoItem {
    full_name: String,
    html_url: String,
    #[serde(default)]
    default_branch: Option<String>,
    #[serde(default)]
    license: Option<LicenseItem>,
}

#[derive(Deserialize)]
struct LicenseItem {
    #[serde(default)]
    spdx_id: Option<String>,
}

/// Repositories matching `query`, deduplicated by name in first-seen order.
pub fn repo_search(client: &GithubClient, query: &str) -> Result<Vec<RemoteRepo>, MinerError> {
    let items: Vec<RepoItem> = client.search("/search/repositories", query)?;
    let mut seen = std::collections::HashSet::new();
    Ok(items
        .into_iter()
        .filter(|item| seen.insert(item.full_name.clone()))
        .map(|item| RemoteRepo {
            full_name: item.full_name,
            html_url: item.html_url,
            default_branch: item.default_branch.unwrap_or_else(|| "HEAD".to_string()),
            license: item.license.and_then(|l| l.spdx_id),
        })
        .collect())
}

/// SKILL files in a repository's default branch, from its recursive tree.
pub fn list_repo_files(client: &GithubClient, repo: &RemoteRepo) -> Result<Vec<RemoteFileRef>, MinerError> {
    #[derive(Deserialize)]
    struct Tree {
        tree: Vec<Entry>,
    }
    #[derive(Deserialize)]
    struct Entry {
        path: String,
        #[serde(rename = "type")]
        kind: String,
    }
    let url = client.api_url(
        &format!("/repos/{}/git/trees/{}", repo.full_name, repo.default_branch),
        &[("recursive", "1".to_string())],
    );
    let tree: Tree = client.get_json(&url)?;
    Ok(tree
        .tree
        .into_iter()
        .filter(|e| e.kind == "blob")
        .filter_map(|e| RemoteFileRef::try_new(&repo.full_name, &repo.default_branch, &e.path))
        .collect())
}

/// Files containing `token` with a SKILL extension, one search per
/// extension, deduplicated by url.
pub fn code_search(client: &GithubClient, token: &str) -> Result<Vec<RemoteFileRef>, MinerError> {
    #[derive(Deserialize)]
    struct CodeItem {
        path: String,
        html_url: String,
        repository: Repo,
    }
    #[derive(Deserialize)]
    struct Repo {
        full_name: String,
    }
    let mut out: Vec<RemoteFileRef> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for ext in crate::io::SKILL_EXTENSIONS {
        let items: Vec<CodeItem> = client.search("/search/code", &format!("{token} extension:{ext}"))?;
        for item in items {
            let Some(git_ref) = item
                .html_url
                .split_once("/blob/")
                .and_then(|(_, rest)| rest.split('/').next())
            else {
                continue;
            };
            if let Some(r) = RemoteFileRef::try_new(&item.repository.full_name, git_ref, &item.path) {
                if seen.insert(r.url.clone()) {
                    out.push(r);
                }
            }
        }
    }
    Ok(out)
}

pub fn fetch_text(client: &GithubClient, file: &RemoteFileRef) -> Result<String, MinerError> {
    client.get(&file.raw_url)
}
