use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ProviderError;
use crate::model::{CommitRecord, RepoId, Sha};

/// Ref name (`refs/heads/main`, `refs/pull/7/head`) to the commit it points at.
pub type RefHeads = BTreeMap<String, Sha>;

/// A repository as the forge describes it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemoteRepo {
    pub full_name: String,
    /// Web page.
    pub url: String,
    /// Where `git clone` fetches from.
    pub clone_url: String,
}

/// Read access to a code-hosting service.
pub trait Forge: Send + Sync {
    /// Looks up a repository. A missing repository is
    /// [`ProviderError::NotFound`].
    fn repository(&self, repo: &RepoId) -> Result<RemoteRepo, ProviderError>;

    /// Direct forks of `repo`, in any order.
    fn list_forks(&self, repo: &RepoId) -> Result<Vec<RemoteRepo>, ProviderError>;

    /// Branch heads, plus pull-request head refs when `include_pull_refs`.
    fn ref_heads(&self, repo: &RepoId, include_pull_refs: bool) -> Result<RefHeads, ProviderError>;

    /// Every commit reachable from `head`. The `url` of returned records is
    /// not meaningful; callers assign it.
    fn list_commits(&self, repo: &RepoId, head: &Sha) -> Result<Vec<CommitRecord>, ProviderError>;
}
