//! Everything that talks to the outside world: fork enumeration and commit
//! listing through a [`Forge`], change sizes from local clones, and the
//! on-disk [`Cache`] that makes offline replays possible.

pub mod cache;
pub mod forge;
pub mod git;
pub mod github;
pub mod local;
pub mod transport;

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::{DateTime, Utc};
use globset::{Glob, GlobSet, GlobSetBuilder};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::model::{utc_seconds, CommitRecord, CommitSet, RepoId, Sha};
pub use cache::Cache;
pub use forge::{Forge, RefHeads, RemoteRepo};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProviderError {
    #[error("origin repository {0} not found")]
    OriginNotFound(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("rate limited by the forge API{}", reset.map(|r| format!(" until {}", r.to_rfc3339())).unwrap_or_default())]
    RateLimited { reset: Option<DateTime<Utc>> },
    #[error("offline mode: nothing cached for {0}")]
    OfflineCacheMiss(String),
    #[error("HTTP {status} from {url}")]
    Http { status: u16, url: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("unexpected response from {url}: {reason}")]
    InvalidResponse { url: String, reason: String },
    #[error("git: {0}")]
    Git(String),
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Retry behaviour for forge requests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// First backoff after a transient failure; doubles per attempt.
    pub base_backoff: Duration,
    /// Longest wait for a rate-limit reset before giving up.
    pub max_rate_limit_wait: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_backoff: Duration::from_secs(1),
            max_rate_limit_wait: Duration::from_secs(15 * 60),
        }
    }
}

impl RetryPolicy {
    pub fn backoff(&self, attempt: u32) -> Duration {
        self.base_backoff * 2u32.saturating_pow(attempt.saturating_sub(1))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProviderConfig {
    pub api_base_url: String,
    /// Name of the environment variable holding the API token.
    pub auth_token_env: String,
    pub cache_dir: PathBuf,
    pub max_parallel_fetches: usize,
    pub retry: RetryPolicy,
    /// Glob patterns restricting which files count toward added lines.
    /// `None` counts every text file.
    pub source_file_filter: Option<Vec<String>>,
}

impl ProviderConfig {
    pub fn new(cache_dir: impl Into<PathBuf>) -> Self {
        ProviderConfig {
            api_base_url: github::DEFAULT_API_BASE.to_string(),
            auth_token_env: "GITHUB_TOKEN".to_string(),
            cache_dir: cache_dir.into(),
            max_parallel_fetches: 4,
            retry: RetryPolicy::default(),
            source_file_filter: None,
        }
    }

    /// The API token, if the configured variable is set and non-empty.
    pub fn token(&self) -> Option<String> {
        std::env::var(&self.auth_token_env)
            .ok()
            .filter(|t| !t.trim().is_empty())
    }

    fn source_globs(&self) -> Result<Option<GlobSet>, ProviderError> {
        let Some(patterns) = &self.source_file_filter else {
            return Ok(None);
        };
        let mut builder = GlobSetBuilder::new();
        for p in patterns {
            builder.add(Glob::new(p).map_err(|e| ProviderError::Config(format!("glob {p:?}: {e}")))?);
        }
        builder
            .build()
            .map(Some)
            .map_err(|e| ProviderError::Config(e.to_string()))
    }

    fn check_cache_dir(&self) -> Result<(), ProviderError> {
        let fail = |e: std::io::Error| {
            ProviderError::Config(format!(
                "cache directory {} is not writable: {e}",
                self.cache_dir.display()
            ))
        };
        std::fs::create_dir_all(&self.cache_dir).map_err(fail)?;
        tempfile::NamedTempFile::new_in(&self.cache_dir).map_err(fail)?;
        Ok(())
    }
}

/// One repository in the fork tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForkTreeEntry {
    pub full_name: String,
    pub url: String,
    pub clone_url: String,
    /// `None` for the origin.
    pub parent_full_name: Option<String>,
    #[serde(with = "utc_seconds")]
    pub fetched_at: DateTime<Utc>,
}

impl ForkTreeEntry {
    pub fn repo_id(&self) -> RepoId {
        self.full_name
            .parse()
            .unwrap_or_else(|_| match self.full_name.split_once('/') {
                Some((o, n)) => RepoId::new(o, n),
                None => RepoId::new(self.full_name.clone(), ""),
            })
    }

    pub fn is_origin(&self) -> bool {
        self.parent_full_name.is_none()
    }
}

/// The origin and every fork reachable from it, breadth-first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForkTree {
    pub origin: ForkTreeEntry,
    /// BFS level, then full name. Never contains the origin.
    pub forks: Vec<ForkTreeEntry>,
    pub warnings: Vec<String>,
}

/// Result of [`RepoProvider::fetch_commit_sets`].
#[derive(Debug, Clone)]
pub struct FetchOutcome {
    /// Successfully fetched repositories, in request order.
    pub sets: Vec<(ForkTreeEntry, CommitSet)>,
    /// Repositories that could not be fetched, with the reason.
    pub failures: Vec<(String, String)>,
}

/// Result of [`RepoProvider::measure_change_sizes`].
#[derive(Debug, Clone)]
pub struct Measured {
    pub commits: Vec<CommitRecord>,
    pub warnings: Vec<String>,
}

/// Forge access plus cache. Without a forge the provider is offline and
/// serves only what the cache holds.
pub struct RepoProvider {
    config: ProviderConfig,
    forge: Option<Box<dyn Forge>>,
    cache: Cache,
    globs: Option<GlobSet>,
    exec: Execution,
    history: Mutex<HashMap<Sha, Arc<Vec<CommitRecord>>>>,
}

impl RepoProvider {
    pub fn online(config: ProviderConfig, forge: Box<dyn Forge>) -> Result<Self, ProviderError> {
        Self::build(config, Some(forge))
    }

    pub fn offline(config: ProviderConfig) -> Result<Self, ProviderError> {
        Self::build(config, None)
    }

    fn build(config: ProviderConfig, forge: Option<Box<dyn Forge>>) -> Result<Self, ProviderError> {
        if config.max_parallel_fetches == 0 {
            return Err(ProviderError::Config("max_parallel_fetches must be at least 1".into()));
        }
        config.check_cache_dir()?;
        Ok(RepoProvider {
            globs: config.source_globs()?,
            cache: Cache::new(config.cache_dir.clone()),
            config,
            forge,
            exec: Execution::default(),
            history: Mutex::new(HashMap::new()),
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn is_offline(&self) -> bool {
        self.forge.is_none()
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    pub fn cache(&self) -> &Cache {
        &self.cache
    }

    /// Every fork reachable from `origin`, including forks of forks.
    pub fn enumerate_forks(&self, origin: &RepoId) -> Result<ForkTree, ProviderError> {
        let Some(forge) = &self.forge else {
            return self
                .cache
                .load_fork_tree(&origin.full_name())?
                .ok_or_else(|| ProviderError::OfflineCacheMiss(origin.full_name()));
        };
        let remote = match forge.repository(origin) {
            Ok(r) => r,
            Err(ProviderError::NotFound(_)) => {
                return Err(ProviderError::OriginNotFound(origin.full_name()))
            }
            Err(e) => return Err(e),
        };
        let now = crate::model::truncate_to_seconds(Utc::now());
        let origin_entry = ForkTreeEntry {
            full_name: origin.full_name(),
            url: remote.url,
            clone_url: remote.clone_url,
            parent_full_name: None,
            fetched_at: now,
        };

        let mut visited: BTreeSet<String> = BTreeSet::new();
        visited.insert(origin_entry.full_name.to_ascii_lowercase());
        let mut forks: Vec<ForkTreeEntry> = Vec::new();
        let mut warnings = Vec::new();
        let mut level = vec![origin_entry.clone()];
        while !level.is_empty() {
            let listed = self.exec.map_bounded(&level, self.config.max_parallel_fetches, |parent| {
                forge.list_forks(&parent.repo_id())
            });
            let mut next = Vec::new();
            for (parent, result) in level.iter().zip(listed) {
                match result {
                    Ok(children) => {
                        for child in children {
                            if visited.insert(child.full_name.to_ascii_lowercase()) {
                                next.push(ForkTreeEntry {
                                    full_name: child.full_name,
                                    url: child.url,
                                    clone_url: child.clone_url,
                                    parent_full_name: Some(parent.full_name.clone()),
                                    fetched_at: now,
                                });
                            }
                        }
                    }
                    Err(e @ ProviderError::RateLimited { .. }) => return Err(e),
                    Err(e) if parent.is_origin() => return Err(e),
                    Err(e) => {
                        warnings.push(format!("skipped forks of {}: {e}", parent.full_name))
                    }
                }
            }
            next.sort_by(|a, b| a.full_name.cmp(&b.full_name));
            forks.extend(next.iter().cloned());
            level = next;
        }
        let tree = ForkTree {
            origin: origin_entry,
            forks,
            warnings,
        };
        self.cache.store_fork_tree(&tree)?;
        Ok(tree)
    }

    /// `Commits(R)` for every repository: the union over all branch heads,
    /// and for the origin also its pull-request head refs.
    ///
    /// Rate limiting, offline cache misses and origin failures abort; other
    /// per-fork failures are collected in [`FetchOutcome::failures`].
    pub fn fetch_commit_sets(&self, repos: &[ForkTreeEntry]) -> Result<FetchOutcome, ProviderError> {
        let results = self
            .exec
            .map_bounded(repos, self.config.max_parallel_fetches, |entry| self.fetch_one(entry));
        let mut sets = Vec::new();
        let mut failures = Vec::new();
        for (entry, result) in repos.iter().zip(results) {
            match result {
                Ok(set) => sets.push((entry.clone(), set)),
                Err(e @ (ProviderError::RateLimited { .. } | ProviderError::OfflineCacheMiss(_))) => {
                    return Err(e)
                }
                Err(e) if entry.is_origin() => return Err(e),
                Err(e) => failures.push((entry.full_name.clone(), e.to_string())),
            }
        }
        Ok(FetchOutcome { sets, failures })
    }

    fn fetch_one(&self, entry: &ForkTreeEntry) -> Result<CommitSet, ProviderError> {
        let Some(forge) = &self.forge else {
            let cached = self
                .cache
                .load_repo(&entry.full_name)?
                .ok_or_else(|| ProviderError::OfflineCacheMiss(entry.full_name.clone()))?;
            return Ok(cached.commits.into_iter().map(CommitRecord::from).collect());
        };
        let id = entry.repo_id();
        let heads = forge.ref_heads(&id, entry.is_origin())?;
        if let Some(cached) = self.cache.lookup_repo(&entry.full_name, &heads)? {
            log::debug!("cache hit for {}", entry.full_name);
            return Ok(cached.commits.into_iter().map(CommitRecord::from).collect());
        }

        let distinct: BTreeSet<Sha> = heads.values().copied().collect();
        let mut set = CommitSet::new();
        for head in distinct {
            let known = self.history.lock().expect("history lock").get(&head).cloned();
            let history = match known {
                Some(h) => h,
                None => {
                    let listed = Arc::new(forge.list_commits(&id, &head)?);
                    self.history
                        .lock()
                        .expect("history lock")
                        .insert(head, listed.clone());
                    listed
                }
            };
            set.extend(history.iter().cloned());
        }
        let commits: Vec<CommitRecord> = set
            .into_records()
            .into_iter()
            .map(|mut c| {
                c.url = format!("{}/commit/{}", entry.url, c.sha);
                c
            })
            .collect();
        self.cache.store_repo(&cache::CachedRepo {
            full_name: entry.full_name.clone(),
            ref_heads: heads,
            commits: commits.iter().map(cache::CachedCommit::from).collect(),
        })?;
        Ok(commits.into_iter().collect())
    }

    /// Fills `added_lines` for `commits` from a local mirror clone of `repo`.
    ///
    /// Failures never abort: an unavailable clone or a missing commit leaves
    /// the affected sizes at 0 and adds a warning.
    pub fn measure_change_sizes(&self, repo: &ForkTreeEntry, mut commits: Vec<CommitRecord>) -> Measured {
        let mut warnings = Vec::new();
        if commits.is_empty() {
            return Measured { commits, warnings };
        }
        let clone = self.cache.clone_path(&repo.full_name);
        if self.is_offline() {
            if !clone.exists() {
                warnings.push(format!(
                    "no cached clone of {}; {} commits unmeasured",
                    repo.full_name,
                    commits.len()
                ));
                return Measured { commits, warnings };
            }
        } else if clone.exists() {
            if let Err(e) = git::update_mirror(&clone) {
                warnings.push(format!("could not update clone of {}: {e}", repo.full_name));
            }
        } else if let Err(e) = git::clone_mirror(&repo.clone_url, &clone) {
            let _ = std::fs::remove_dir_all(&clone);
            warnings.push(format!(
                "clone of {} failed ({e}); {} commits unmeasured",
                repo.full_name,
                commits.len()
            ));
            return Measured { commits, warnings };
        }

        let shas: Vec<Sha> = commits.iter().map(|c| c.sha).collect();
        let present = match git::existing_commits(&clone, &shas) {
            Ok(p) => p,
            Err(e) => {
                warnings.push(format!("cannot read clone of {}: {e}", repo.full_name));
                return Measured { commits, warnings };
            }
        };
        let measurable: Vec<Sha> = shas.iter().copied().filter(|s| present.contains(s)).collect();
        let sizes = match git::added_lines(&clone, &measurable, self.globs.as_ref()) {
            Ok(sizes) => sizes,
            Err(e) => {
                warnings.push(format!("cannot measure commits of {}: {e}", repo.full_name));
                return Measured { commits, warnings };
            }
        };
        for c in &mut commits {
            match sizes.get(&c.sha) {
                Some(&n) => c.added_lines = n,
                None => warnings.push(format!(
                    "commit {} missing from clone of {}; size unmeasured",
                    c.sha, repo.full_name
                )),
            }
        }
        Measured { commits, warnings }
    }
}
