//! A forge backed by plain local git repositories, described by a manifest.
//!
//! ```json
//! { "repos": [
//!     { "full_name": "origin/app", "path": "origin" },
//!     { "full_name": "alice/app", "path": "alice", "parent": "origin/app" }
//! ] }
//! ```
//!
//! Relative paths resolve against the manifest's directory. Pull-request refs
//! are ordinary `refs/pull/<n>/head` refs in the repository.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::forge::{Forge, RefHeads, RemoteRepo};
use super::{git, ProviderError};
use crate::model::{CommitRecord, RepoId, Sha};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureManifest {
    pub repos: Vec<FixtureRepo>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureRepo {
    pub full_name: String,
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

#[derive(Debug, Clone)]
pub struct LocalForge {
    repos: Vec<FixtureRepo>,
}

impl LocalForge {
    pub fn new(manifest: FixtureManifest, base_dir: &Path) -> Self {
        let repos = manifest
            .repos
            .into_iter()
            .map(|mut r| {
                if r.path.is_relative() {
                    r.path = base_dir.join(&r.path);
                }
                r
            })
            .collect();
        LocalForge { repos }
    }

    pub fn load(manifest_path: &Path) -> Result<Self, ProviderError> {
        let text = fs::read_to_string(manifest_path).map_err(|e| ProviderError::Io {
            path: manifest_path.display().to_string(),
            reason: e.to_string(),
        })?;
        let manifest: FixtureManifest =
            serde_json::from_str(&text).map_err(|e| ProviderError::InvalidResponse {
                url: manifest_path.display().to_string(),
                reason: e.to_string(),
            })?;
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let base = base.canonicalize().unwrap_or_else(|_| base.to_path_buf());
        Ok(Self::new(manifest, &base))
    }

    fn find(&self, repo: &RepoId) -> Result<&FixtureRepo, ProviderError> {
        let full = repo.full_name();
        self.repos
            .iter()
            .find(|r| r.full_name == full)
            .ok_or(ProviderError::NotFound(full))
    }

    fn remote(r: &FixtureRepo) -> RemoteRepo {
        RemoteRepo {
            full_name: r.full_name.clone(),
            url: format!("file://{}", r.path.display()),
            clone_url: r.path.display().to_string(),
        }
    }

    fn existing(&self, repo: &RepoId) -> Result<&FixtureRepo, ProviderError> {
        let r = self.find(repo)?;
        if !r.path.exists() {
            return Err(ProviderError::NotFound(r.full_name.clone()));
        }
        Ok(r)
    }
}

impl Forge for LocalForge {
    fn repository(&self, repo: &RepoId) -> Result<RemoteRepo, ProviderError> {
        self.existing(repo).map(Self::remote)
    }

    fn list_forks(&self, repo: &RepoId) -> Result<Vec<RemoteRepo>, ProviderError> {
        let full = self.existing(repo)?.full_name.clone();
        Ok(self
            .repos
            .iter()
            .filter(|r| r.parent.as_deref() == Some(full.as_str()))
            .map(Self::remote)
            .collect())
    }

    fn ref_heads(&self, repo: &RepoId, include_pull_refs: bool) -> Result<RefHeads, ProviderError> {
        let r = self.existing(repo)?;
        let mut heads = git::ref_heads(&r.path, &["refs/heads/"])?;
        if include_pull_refs {
            let pulls = git::ref_heads(&r.path, &["refs/pull/"])?;
            heads.extend(pulls.into_iter().filter(|(name, _)| name.ends_with("/head")));
        }
        Ok(heads)
    }

    fn list_commits(&self, repo: &RepoId, head: &Sha) -> Result<Vec<CommitRecord>, ProviderError> {
        let r = self.existing(repo)?;
        git::reachable_commits(&r.path, &[*head], &Self::remote(r).url)
    }
}
