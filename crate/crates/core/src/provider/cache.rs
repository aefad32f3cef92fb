//! On-disk cache of forge responses and clones.
//!
//! Layout under the cache root:
//!
//! ```text
//! repos/<owner>__<name>.json    commits reachable from the repo's refs
//! forks/<owner>__<name>.json    enumerated fork tree of an origin
//! clones/<owner>/<name>         mirror clones used for change sizes
//! ```
//!
//! A repo entry is valid only for the exact `(full_name, ref_heads)` it was
//! written for. Files are replaced atomically (temp file + rename).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{ForkTree, ProviderError};
use crate::model::{utc_seconds, CommitRecord, Sha};

/// One commit in a repo cache file: the artifact commit fields, then the
/// parent flag and full message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachedCommit {
    pub sha: Sha,
    #[serde(with = "utc_seconds")]
    pub timestamp: DateTime<Utc>,
    pub subject: String,
    pub message_excerpt: String,
    pub added_lines: u64,
    pub is_bugfix: bool,
    pub url: String,
    pub is_merge: bool,
    pub message: String,
}

impl From<&CommitRecord> for CachedCommit {
    fn from(c: &CommitRecord) -> Self {
        CachedCommit {
            sha: c.sha,
            timestamp: c.timestamp,
            subject: c.subject.clone(),
            message_excerpt: c.message_excerpt.clone(),
            added_lines: c.added_lines,
            is_bugfix: c.is_bugfix,
            url: c.url.clone(),
            is_merge: c.is_merge,
            message: c.message.clone(),
        }
    }
}

impl From<CachedCommit> for CommitRecord {
    fn from(c: CachedCommit) -> Self {
        CommitRecord {
            sha: c.sha,
            timestamp: c.timestamp,
            subject: c.subject,
            message_excerpt: c.message_excerpt,
            message: c.message,
            added_lines: c.added_lines,
            is_merge: c.is_merge,
            is_bugfix: c.is_bugfix,
            url: c.url,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachedRepo {
    pub full_name: String,
    pub ref_heads: BTreeMap<String, Sha>,
    /// Sorted by sha.
    pub commits: Vec<CachedCommit>,
}

#[derive(Debug, Clone)]
pub struct Cache {
    root: PathBuf,
}

fn file_stem(full_name: &str) -> String {
    full_name.replacen('/', "__", 1)
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Cache { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn repo_path(&self, full_name: &str) -> PathBuf {
        self.root
            .join("repos")
            .join(format!("{}.json", file_stem(full_name)))
    }

    pub fn fork_tree_path(&self, origin: &str) -> PathBuf {
        self.root
            .join("forks")
            .join(format!("{}.json", file_stem(origin)))
    }

    pub fn clone_path(&self, full_name: &str) -> PathBuf {
        self.root.join("clones").join(full_name)
    }

    /// The cached entry for `full_name`, whatever heads it was written for.
    pub fn load_repo(&self, full_name: &str) -> Result<Option<CachedRepo>, ProviderError> {
        let entry: Option<CachedRepo> = read_json(&self.repo_path(full_name))?;
        Ok(entry.filter(|e| e.full_name == full_name))
    }

    /// The cached entry only if it was written for exactly these heads.
    pub fn lookup_repo(
        &self,
        full_name: &str,
        heads: &BTreeMap<String, Sha>,
    ) -> Result<Option<CachedRepo>, ProviderError> {
        Ok(self.load_repo(full_name)?.filter(|e| &e.ref_heads == heads))
    }

    pub fn store_repo(&self, entry: &CachedRepo) -> Result<(), ProviderError> {
        write_json_atomic(&self.repo_path(&entry.full_name), entry)
    }

    pub fn load_fork_tree(&self, origin: &str) -> Result<Option<ForkTree>, ProviderError> {
        let tree: Option<ForkTree> = read_json(&self.fork_tree_path(origin))?;
        Ok(tree.filter(|t| t.origin.full_name == origin))
    }

    pub fn store_fork_tree(&self, tree: &ForkTree) -> Result<(), ProviderError> {
        write_json_atomic(&self.fork_tree_path(&tree.origin.full_name), tree)
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> ProviderError {
    ProviderError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Option<T>, ProviderError> {
    let text = match fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(io_error(path, e)),
    };
    match serde_json::from_str(&text) {
        Ok(v) => Ok(Some(v)),
        Err(e) => {
            log::warn!("ignoring unreadable cache file {}: {e}", path.display());
            Ok(None)
        }
    }
}

fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<(), ProviderError> {
    let dir = path.parent().expect("cache paths have a parent");
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_error(path, e))?;
    text.push('\n');
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_error(dir, e))?;
    tmp.write_all(text.as_bytes()).map_err(|e| io_error(path, e))?;
    tmp.persist(path).map_err(|e| io_error(path, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn entry(name: &str, head: u8) -> CachedRepo {
        let sha = Sha::from_bytes([head; 20]);
        let commit = CommitRecord::new(
            sha,
            Utc.timestamp_opt(1_600_000_000, 0).unwrap(),
            "Fix bug #1\n\nfull body",
            1,
            "https://example.test/c",
        );
        CachedRepo {
            full_name: name.to_string(),
            ref_heads: BTreeMap::from([("refs/heads/main".to_string(), sha)]),
            commits: vec![CachedCommit::from(&commit)],
        }
    }

    #[test]
    fn layout_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let e = entry("alice/app", 1);
        cache.store_repo(&e).unwrap();
        assert!(dir.path().join("repos/alice__app.json").is_file());
        assert_eq!(cache.clone_path("alice/app"), dir.path().join("clones/alice/app"));
        assert_eq!(cache.load_repo("alice/app").unwrap(), Some(e.clone()));
        let back = CommitRecord::from(e.commits[0].clone());
        assert_eq!(back.message, "Fix bug #1\n\nfull body");
        assert!(back.is_bugfix);
    }

    #[test]
    fn heads_must_match_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let e = entry("alice/app", 1);
        cache.store_repo(&e).unwrap();
        assert!(cache.lookup_repo("alice/app", &e.ref_heads).unwrap().is_some());
        let moved = entry("alice/app", 2).ref_heads;
        assert!(cache.lookup_repo("alice/app", &moved).unwrap().is_none());
        let mut extra = e.ref_heads.clone();
        extra.insert("refs/heads/dev".into(), Sha::from_bytes([1; 20]));
        assert!(cache.lookup_repo("alice/app", &extra).unwrap().is_none());
        assert!(cache.lookup_repo("bob/app", &e.ref_heads).unwrap().is_none());
    }

    #[test]
    fn corrupt_files_are_misses() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let path = cache.repo_path("alice/app");
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, "{ not json").unwrap();
        assert!(cache.load_repo("alice/app").unwrap().is_none());
    }

    #[test]
    fn entry_written_under_another_name_is_not_served() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let e = entry("alice/app", 1);
        let text = serde_json::to_string(&e).unwrap();
        let path = cache.repo_path("mallory/app");
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, text).unwrap();
        assert!(cache.load_repo("mallory/app").unwrap().is_none());
    }
}
