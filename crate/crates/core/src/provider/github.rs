//! GitHub-style REST forge.

use std::fmt;
use std::time::Duration;

use chrono::{DateTime, TimeZone, Utc};
use serde::Deserialize;

use super::forge::{Forge, RefHeads, RemoteRepo};
use super::transport::{HttpResponse, Transport};
use super::{ProviderError, RetryPolicy};
use crate::model::{utc_seconds, CommitRecord, RepoId, Sha};

pub const DEFAULT_API_BASE: &str = "https://api.github.com";
pub const PAGE_SIZE: usize = 100;

pub struct GitHubForge {
    base: String,
    transport: Box<dyn Transport>,
    token: Option<String>,
    retry: RetryPolicy,
}

impl fmt::Debug for GitHubForge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GitHubForge")
            .field("base", &self.base)
            .field("token", &self.token.as_ref().map(|_| "<redacted>"))
            .field("retry", &self.retry)
            .finish()
    }
}

#[derive(Deserialize)]
struct RepoJson {
    full_name: String,
    html_url: String,
    clone_url: Option<String>,
}

#[derive(Deserialize)]
struct BranchJson {
    name: String,
    commit: ObjectJson,
}

#[derive(Deserialize)]
struct ObjectJson {
    sha: String,
}

#[derive(Deserialize)]
struct RefJson {
    #[serde(rename = "ref")]
    name: String,
    object: ObjectJson,
}

#[derive(Deserialize)]
struct CommitJson {
    sha: String,
    commit: CommitDetailJson,
    #[serde(default)]
    parents: Vec<ObjectJson>,
}

#[derive(Deserialize)]
struct CommitDetailJson {
    message: String,
    committer: Option<SignatureJson>,
    author: Option<SignatureJson>,
}

#[derive(Deserialize)]
struct SignatureJson {
    date: Option<String>,
}

impl GitHubForge {
    pub fn new(
        base: impl Into<String>,
        transport: Box<dyn Transport>,
        token: Option<String>,
        retry: RetryPolicy,
    ) -> Self {
        GitHubForge {
            base: base.into().trim_end_matches('/').to_string(),
            transport,
            token,
            retry,
        }
    }

    fn repo_url(&self, repo: &RepoId) -> String {
        format!("{}/repos/{}/{}", self.base, repo.owner, repo.name)
    }

    /// GET with retries for transient failures and waits for rate-limit resets.
    fn send(&self, url: &str) -> Result<HttpResponse, ProviderError> {
        let attempts = self.retry.max_attempts.max(1);
        let mut last_reset = None;
        for attempt in 1..=attempts {
            let resp = match self.transport.get(url, self.token.as_deref()) {
                Ok(resp) => resp,
                Err(err) if attempt < attempts => {
                    log::warn!("{err}; retrying");
                    std::thread::sleep(self.retry.backoff(attempt));
                    continue;
                }
                Err(err) => return Err(ProviderError::Transport(err.to_string())),
            };
            match resp.status {
                200..=299 => return Ok(resp),
                403 | 429 => {
                    let Some(reset) = rate_limit_reset(&resp) else {
                        return Err(ProviderError::Http {
                            status: resp.status,
                            url: url.to_string(),
                        });
                    };
                    last_reset = Some(reset);
                    let wait = (reset - Utc::now()).to_std().unwrap_or(Duration::ZERO);
                    if wait > self.retry.max_rate_limit_wait || attempt == attempts {
                        return Err(ProviderError::RateLimited { reset: Some(reset) });
                    }
                    log::warn!("rate limited; waiting {}s for reset", wait.as_secs());
                    std::thread::sleep(wait);
                }
                404 => return Err(ProviderError::NotFound(url.to_string())),
                500..=599 if attempt < attempts => {
                    log::warn!("{url} returned {}; retrying", resp.status);
                    std::thread::sleep(self.retry.backoff(attempt));
                }
                status => {
                    return Err(ProviderError::Http {
                        status,
                        url: url.to_string(),
                    })
                }
            }
        }
        Err(ProviderError::RateLimited { reset: last_reset })
    }

    fn get_json<T: for<'de> Deserialize<'de>>(&self, url: &str) -> Result<T, ProviderError> {
        let resp = self.send(url)?;
        decode(url, &resp.body)
    }

    /// Follows `Link: rel="next"` until exhausted.
    fn get_paginated<T: for<'de> Deserialize<'de>>(&self, url: &str) -> Result<Vec<T>, ProviderError> {
        let mut items = Vec::new();
        let mut next = Some(url.to_string());
        while let Some(url) = next {
            let resp = self.send(&url)?;
            let page: Vec<T> = decode(&url, &resp.body)?;
            next = resp.header("link").and_then(next_link);
            items.extend(page);
        }
        Ok(items)
    }
}

fn decode<T: for<'de> Deserialize<'de>>(url: &str, body: &str) -> Result<T, ProviderError> {
    serde_json::from_str(body).map_err(|e| ProviderError::InvalidResponse {
        url: url.to_string(),
        reason: e.to_string(),
    })
}

/// Reset instant of an exhausted rate limit, from either the primary-limit
/// headers or `retry-after`.
fn rate_limit_reset(resp: &HttpResponse) -> Option<DateTime<Utc>> {
    if resp.header("x-ratelimit-remaining") == Some("0") {
        let epoch: i64 = resp.header("x-ratelimit-reset")?.trim().parse().ok()?;
        return Utc.timestamp_opt(epoch, 0).single();
    }
    let secs: i64 = resp.header("retry-after")?.trim().parse().ok()?;
    Some(Utc::now() + chrono::Duration::seconds(secs))
}

/// Extracts the `rel="next"` target from a `Link` header.
pub fn next_link(header: &str) -> Option<String> {
    header.split(',').find_map(|part| {
        let (target, params) = part.split_once(';')?;
        let is_next = params
            .split(';')
            .any(|p| p.trim().replace(' ', "") == "rel=\"next\"");
        is_next.then(|| {
            target
                .trim()
                .trim_start_matches('<')
                .trim_end_matches('>')
                .to_string()
        })
    })
}

fn parse_sha(url: &str, s: &str) -> Result<Sha, ProviderError> {
    s.parse().map_err(|e: crate::model::ModelError| ProviderError::InvalidResponse {
        url: url.to_string(),
        reason: e.to_string(),
    })
}

impl From<RepoJson> for RemoteRepo {
    fn from(r: RepoJson) -> Self {
        let clone_url = r.clone_url.unwrap_or_else(|| format!("{}.git", r.html_url));
        RemoteRepo {
            full_name: r.full_name,
            url: r.html_url,
            clone_url,
        }
    }
}

impl Forge for GitHubForge {
    fn repository(&self, repo: &RepoId) -> Result<RemoteRepo, ProviderError> {
        let json: RepoJson = self.get_json(&self.repo_url(repo))?;
        Ok(json.into())
    }

    fn list_forks(&self, repo: &RepoId) -> Result<Vec<RemoteRepo>, ProviderError> {
        let url = format!("{}/forks?per_page={PAGE_SIZE}&sort=oldest", self.repo_url(repo));
        let forks: Vec<RepoJson> = self.get_paginated(&url)?;
        Ok(forks.into_iter().map(RemoteRepo::from).collect())
    }

    fn ref_heads(&self, repo: &RepoId, include_pull_refs: bool) -> Result<RefHeads, ProviderError> {
        let url = format!("{}/branches?per_page={PAGE_SIZE}", self.repo_url(repo));
        let mut heads = RefHeads::new();
        for b in self.get_paginated::<BranchJson>(&url)? {
            heads.insert(format!("refs/heads/{}", b.name), parse_sha(&url, &b.commit.sha)?);
        }
        if include_pull_refs {
            let url = format!("{}/git/matching-refs/pull", self.repo_url(repo));
            let refs: Vec<RefJson> = match self.get_paginated(&url) {
                Ok(refs) => refs,
                Err(ProviderError::NotFound(_)) => Vec::new(),
                Err(e) => return Err(e),
            };
            for r in refs.into_iter().filter(|r| r.name.ends_with("/head")) {
                heads.insert(r.name, parse_sha(&url, &r.object.sha)?);
            }
        }
        Ok(heads)
    }

    fn list_commits(&self, repo: &RepoId, head: &Sha) -> Result<Vec<CommitRecord>, ProviderError> {
        let url = format!("{}/commits?sha={head}&per_page={PAGE_SIZE}", self.repo_url(repo));
        let commits: Vec<CommitJson> = self.get_paginated(&url)?;
        commits
            .into_iter()
            .map(|c| {
                let date = c
                    .commit
                    .committer
                    .and_then(|s| s.date)
                    .or_else(|| c.commit.author.and_then(|s| s.date))
                    .ok_or_else(|| ProviderError::InvalidResponse {
                        url: url.clone(),
                        reason: format!("commit {} has no date", c.sha),
                    })?;
                let timestamp = utc_seconds::parse(&date).map_err(|reason| {
                    ProviderError::InvalidResponse {
                        url: url.clone(),
                        reason,
                    }
                })?;
                Ok(CommitRecord::new(
                    parse_sha(&url, &c.sha)?,
                    timestamp,
                    c.commit.message,
                    c.parents.len(),
                    String::new(),
                ))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::transport::{Exchange, Recording, ReplayTransport};
    use serde_json::{json, Value};
    use std::collections::BTreeMap;
    use std::sync::Arc;

    const BASE: &str = "https://api.test";

    fn ex(url: &str, status: u16, headers: &[(&str, &str)], body: Value) -> Exchange {
        Exchange {
            url: url.to_string(),
            status,
            headers: headers
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect::<BTreeMap<_, _>>(),
            body,
        }
    }

    fn forge(exchanges: Vec<Exchange>) -> (GitHubForge, Arc<ReplayTransport>) {
        let transport = Arc::new(ReplayTransport::new(Recording { exchanges }));
        let retry = RetryPolicy {
            max_attempts: 3,
            base_backoff: Duration::ZERO,
            max_rate_limit_wait: Duration::from_secs(2),
        };
        (
            GitHubForge::new(BASE, Box::new(transport.clone()), Some("t0ken".into()), retry),
            transport,
        )
    }

    fn repo_json(full: &str) -> Value {
        json!({"full_name": full, "html_url": format!("https://gh.test/{full}"),
               "clone_url": format!("https://gh.test/{full}.git")})
    }

    #[test]
    fn link_header_parsing() {
        let h = r#"<https://api.test/x?page=2>; rel="next", <https://api.test/x?page=5>; rel="last""#;
        assert_eq!(next_link(h).as_deref(), Some("https://api.test/x?page=2"));
        assert_eq!(next_link(r#"<https://api.test/x?page=1>; rel="prev""#), None);
    }

    #[test]
    fn forks_follow_pagination() {
        let page1: Vec<Value> = (0..100).map(|i| repo_json(&format!("u{i:03}/r"))).collect();
        let p1 = format!("{BASE}/repos/o/r/forks?per_page=100&sort=oldest");
        let p2 = format!("{BASE}/repos/o/r/forks?per_page=100&sort=oldest&page=2");
        let link = format!("<{p2}>; rel=\"next\"");
        let (forge, transport) = forge(vec![
            ex(&p1, 200, &[("Link", link.as_str())], Value::Array(page1)),
            ex(&p2, 200, &[], json!([repo_json("zz/r")])),
        ]);
        let forks = forge.list_forks(&RepoId::new("o", "r")).unwrap();
        assert_eq!(forks.len(), 101);
        assert_eq!(forks[100].clone_url, "https://gh.test/zz/r.git");
        assert_eq!(transport.request_count(), 2);
    }

    #[test]
    fn heads_include_pull_refs_only_when_asked() {
        let a = "a".repeat(40);
        let p = "b".repeat(40);
        let (forge, _) = forge(vec![
            ex(
                &format!("{BASE}/repos/o/r/branches?per_page=100"),
                200,
                &[],
                json!([{"name": "main", "commit": {"sha": a}}]),
            ),
            ex(
                &format!("{BASE}/repos/o/r/git/matching-refs/pull"),
                200,
                &[],
                json!([
                    {"ref": "refs/pull/7/head", "object": {"sha": p}},
                    {"ref": "refs/pull/7/merge", "object": {"sha": "c".repeat(40)}}
                ]),
            ),
        ]);
        let id = RepoId::new("o", "r");
        let heads = forge.ref_heads(&id, false).unwrap();
        assert_eq!(heads.keys().collect::<Vec<_>>(), vec!["refs/heads/main"]);
        let heads = forge.ref_heads(&id, true).unwrap();
        assert_eq!(
            heads.keys().collect::<Vec<_>>(),
            vec!["refs/heads/main", "refs/pull/7/head"]
        );
        assert_eq!(heads["refs/pull/7/head"].to_string(), p);
    }

    #[test]
    fn commits_parse_committer_time_and_parents() {
        let head = "d".repeat(40);
        let (forge, _) = forge(vec![ex(
            &format!("{BASE}/repos/o/r/commits?sha={head}&per_page=100"),
            200,
            &[],
            json!([{
                "sha": head,
                "commit": {
                    "message": "Merge fix #3\n\nbody",
                    "author": {"date": "2020-01-01T00:00:00Z"},
                    "committer": {"date": "2021-02-03T04:05:06+09:00"}
                },
                "parents": [{"sha": "1".repeat(40)}, {"sha": "2".repeat(40)}]
            }]),
        )]);
        let commits = forge
            .list_commits(&RepoId::new("o", "r"), &head.parse().unwrap())
            .unwrap();
        assert_eq!(commits.len(), 1);
        let c = &commits[0];
        assert!(c.is_merge && c.is_bugfix);
        assert_eq!(c.timestamp.to_rfc3339(), "2021-02-02T19:05:06+00:00");
        assert_eq!(c.message_excerpt, "body");
    }

    #[test]
    fn not_found_and_rate_limit() {
        let far = (Utc::now().timestamp() + 3600).to_string();
        let (forge, _) = forge(vec![
            ex(&format!("{BASE}/repos/o/gone"), 404, &[], json!({"message": "Not Found"})),
            ex(
                &format!("{BASE}/repos/o/limited"),
                403,
                &[("x-ratelimit-remaining", "0"), ("x-ratelimit-reset", far.as_str())],
                json!({"message": "API rate limit exceeded"}),
            ),
            ex(&format!("{BASE}/repos/o/denied"), 403, &[], json!({"message": "Forbidden"})),
        ]);
        assert!(matches!(
            forge.repository(&RepoId::new("o", "gone")),
            Err(ProviderError::NotFound(_))
        ));
        match forge.repository(&RepoId::new("o", "limited")) {
            Err(ProviderError::RateLimited { reset: Some(r) }) => {
                assert_eq!(r.timestamp().to_string(), far)
            }
            other => panic!("expected rate limit, got {other:?}"),
        }
        assert!(matches!(
            forge.repository(&RepoId::new("o", "denied")),
            Err(ProviderError::Http { status: 403, .. })
        ));
    }

    /// A limit whose reset has already passed is waited out and retried.
    #[test]
    fn rate_limit_with_past_reset_retries() {
        struct Flaky(std::sync::atomic::AtomicUsize);
        impl Transport for Flaky {
            fn get(&self, _: &str, token: Option<&str>) -> Result<HttpResponse, super::super::transport::TransportError> {
                assert_eq!(token, Some("t0ken"));
                let n = self.0.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                let mut headers = BTreeMap::new();
                if n == 0 {
                    headers.insert("x-ratelimit-remaining".into(), "0".into());
                    headers.insert("x-ratelimit-reset".into(), (Utc::now().timestamp() - 5).to_string());
                    return Ok(HttpResponse { status: 403, headers, body: "{}".into() });
                }
                if n == 1 {
                    return Ok(HttpResponse { status: 502, headers, body: String::new() });
                }
                Ok(HttpResponse {
                    status: 200,
                    headers,
                    body: repo_json("o/r").to_string(),
                })
            }
        }
        let retry = RetryPolicy {
            max_attempts: 3,
            base_backoff: Duration::ZERO,
            max_rate_limit_wait: Duration::from_secs(1),
        };
        let forge = GitHubForge::new(
            BASE,
            Box::new(Flaky(Default::default())),
            Some("t0ken".into()),
            retry,
        );
        assert_eq!(forge.repository(&RepoId::new("o", "r")).unwrap().full_name, "o/r");
        assert!(!format!("{forge:?}").contains("t0ken"));
    }
}
