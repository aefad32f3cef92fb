//! Domain types: commit identity, commit records, per-repository analysis
//! results and the ordered fork universe.

use std::collections::{btree_map, BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::classify::classify_bugfix;

/// Maximum length, in characters, of the message excerpt carried per commit.
pub const EXCERPT_CHARS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("invalid commit id {0:?}: expected 40 lowercase hex characters")]
    InvalidSha(String),
    #[error("invalid repository reference {0:?}: expected owner/name or a repository URL")]
    InvalidRepoRef(String),
}

/// A commit identifier (SHA-1, 20 bytes). Text form is 40 lowercase hex digits.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sha([u8; 20]);

impl Sha {
    pub fn from_bytes(bytes: [u8; 20]) -> Self {
        Sha(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 20] {
        &self.0
    }

    /// Abbreviated 7-character form, as used in log messages.
    pub fn short(&self) -> String {
        let mut s = self.to_string();
        s.truncate(7);
        s
    }
}

impl FromStr for Sha {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let well_formed =
            s.len() == 40 && s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b));
        if !well_formed {
            return Err(ModelError::InvalidSha(s.to_string()));
        }
        let mut bytes = [0u8; 20];
        hex::decode_to_slice(s, &mut bytes).map_err(|_| ModelError::InvalidSha(s.to_string()))?;
        Ok(Sha(bytes))
    }
}

impl fmt::Display for Sha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for Sha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sha({})", self.short())
    }
}

impl Serialize for Sha {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Sha {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for UTC instants at second precision (`2021-12-01T10:00:00Z`).
pub mod utc_seconds {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&ts.to_rfc3339_opts(SecondsFormat::Secs, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }

    /// Parses an RFC 3339 instant and truncates it to whole seconds in UTC.
    pub fn parse(s: &str) -> Result<DateTime<Utc>, String> {
        let ts = DateTime::parse_from_rfc3339(s)
            .map_err(|e| format!("invalid timestamp {s:?}: {e}"))?
            .with_timezone(&Utc);
        Ok(super::truncate_to_seconds(ts))
    }
}

pub(crate) fn truncate_to_seconds(ts: DateTime<Utc>) -> DateTime<Utc> {
    Utc.timestamp_opt(ts.timestamp(), 0).single().unwrap_or(ts)
}

/// First line of a commit message, verbatim apart from a trailing `\r`.
pub fn subject_line(message: &str) -> &str {
    let line = message.split('\n').next().unwrap_or("");
    line.strip_suffix('\r').unwrap_or(line)
}

/// Message body (everything after the subject line, trimmed) cut to
/// [`EXCERPT_CHARS`] characters.
pub fn message_excerpt(message: &str) -> String {
    let body = match message.split_once('\n') {
        Some((_, rest)) => rest.trim(),
        None => "",
    };
    body.chars().take(EXCERPT_CHARS).collect()
}

/// One commit as seen by the analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitRecord {
    pub sha: Sha,
    /// Committer timestamp, UTC, second precision.
    pub timestamp: DateTime<Utc>,
    pub subject: String,
    pub message_excerpt: String,
    /// Full message. Kept in memory and in the cache, not in the artifact.
    pub message: String,
    /// Lines added relative to the first parent; 0 until measured.
    pub added_lines: u64,
    pub is_merge: bool,
    pub is_bugfix: bool,
    /// Web page of the commit on the forge.
    pub url: String,
}

impl CommitRecord {
    /// Builds a record from a raw commit, deriving subject, excerpt and the
    /// bug-fix flag from the full message.
    pub fn new(
        sha: Sha,
        timestamp: DateTime<Utc>,
        message: impl Into<String>,
        parent_count: usize,
        url: impl Into<String>,
    ) -> Self {
        let message = message.into();
        CommitRecord {
            sha,
            timestamp: truncate_to_seconds(timestamp),
            subject: subject_line(&message).to_string(),
            message_excerpt: message_excerpt(&message),
            is_bugfix: classify_bugfix(&message),
            message,
            added_lines: 0,
            is_merge: parent_count >= 2,
            url: url.into(),
        }
    }

    /// Sort key used for every per-repository commit listing.
    pub fn order_key(&self) -> (DateTime<Utc>, Sha) {
        (self.timestamp, self.sha)
    }
}

/// `Commits(R)`: the commits reachable from a repository's refs, keyed by id.
///
/// Membership is exact-match on [`Sha`]. Iteration is in sha order, so every
/// derived result is independent of the order commits were listed in.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CommitSet {
    commits: BTreeMap<Sha, CommitRecord>,
}

impl CommitSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a record. An existing record with the same sha is kept.
    pub fn insert(&mut self, record: CommitRecord) {
        self.commits.entry(record.sha).or_insert(record);
    }

    pub fn contains(&self, sha: &Sha) -> bool {
        self.commits.contains_key(sha)
    }

    pub fn get(&self, sha: &Sha) -> Option<&CommitRecord> {
        self.commits.get(sha)
    }

    pub fn len(&self) -> usize {
        self.commits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commits.is_empty()
    }

    pub fn shas(&self) -> impl Iterator<Item = &Sha> + '_ {
        self.commits.keys()
    }

    pub fn records(&self) -> impl Iterator<Item = &CommitRecord> + '_ {
        self.commits.values()
    }

    pub fn sha_set(&self) -> BTreeSet<Sha> {
        self.commits.keys().copied().collect()
    }

    pub fn extend(&mut self, records: impl IntoIterator<Item = CommitRecord>) {
        for r in records {
            self.insert(r);
        }
    }

    pub fn into_records(self) -> Vec<CommitRecord> {
        self.commits.into_values().collect()
    }
}

impl FromIterator<CommitRecord> for CommitSet {
    fn from_iter<I: IntoIterator<Item = CommitRecord>>(iter: I) -> Self {
        let mut set = CommitSet::new();
        set.extend(iter);
        set
    }
}

impl IntoIterator for CommitSet {
    type Item = CommitRecord;
    type IntoIter = btree_map::IntoValues<Sha, CommitRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.commits.into_values()
    }
}

/// `owner/name` on the forge.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RepoId {
    pub owner: String,
    pub name: String,
}

impl RepoId {
    pub fn new(owner: impl Into<String>, name: impl Into<String>) -> Self {
        RepoId {
            owner: owner.into(),
            name: name.into(),
        }
    }

    pub fn full_name(&self) -> String {
        format!("{}/{}", self.owner, self.name)
    }
}

impl fmt::Display for RepoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.owner, self.name)
    }
}

impl FromStr for RepoId {
    type Err = ModelError;

    /// Accepts `owner/name`, `https://host/owner/name[.git][/]` and
    /// `git@host:owner/name[.git]`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelError::InvalidRepoRef(s.to_string());
        let trimmed = s.trim();
        let path = if let Some((_, rest)) = trimmed.split_once("://") {
            rest.split_once('/').map(|(_, p)| p).ok_or_else(bad)?
        } else if let Some((_, rest)) = trimmed.strip_prefix("git@").and_then(|r| r.split_once(':')) {
            rest
        } else {
            trimmed
        };
        let path = path.trim_end_matches('/');
        let path = path.strip_suffix(".git").unwrap_or(path);
        let mut parts = path.split('/');
        let (owner, name) = match (parts.next(), parts.next(), parts.next()) {
            (Some(o), Some(n), None) => (o, n),
            _ => return Err(bad()),
        };
        let valid = |p: &str| {
            !p.is_empty()
                && p.chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        };
        if !valid(owner) || !valid(name) {
            return Err(bad());
        }
        Ok(RepoId::new(owner, name))
    }
}

/// One row of the view: a repository with its divergence and unique commits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepoAnalysis {
    pub owner: String,
    pub name: String,
    pub full_name: String,
    pub url: String,
    /// `d(R_i)`: commits not present in the origin. Zero for the origin itself.
    pub divergent_count: usize,
    /// `U(R_i)` without merges, ascending by (timestamp, sha).
    pub unique_commits: Vec<CommitRecord>,
    pub bugfix_count: usize,
}

impl RepoAnalysis {
    /// Builds a row, sorting the commits and recounting bug fixes.
    pub fn new(
        repo: &RepoId,
        url: impl Into<String>,
        divergent_count: usize,
        commits: impl IntoIterator<Item = CommitRecord>,
    ) -> Self {
        let mut row = RepoAnalysis {
            owner: repo.owner.clone(),
            name: repo.name.clone(),
            full_name: repo.full_name(),
            url: url.into(),
            divergent_count,
            unique_commits: commits.into_iter().collect(),
            bugfix_count: 0,
        };
        row.normalize();
        row
    }

    /// Restores the ordering and count invariants after `unique_commits`
    /// has been edited.
    pub fn normalize(&mut self) {
        self.unique_commits.sort_by_key(CommitRecord::order_key);
        self.bugfix_count = self.unique_commits.iter().filter(|c| c.is_bugfix).count();
    }

    pub fn repo_id(&self) -> RepoId {
        RepoId::new(self.owner.clone(), self.name.clone())
    }
}

/// Origin plus the selected forks in display order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForkUniverse {
    pub origin: RepoAnalysis,
    pub forks: Vec<RepoAnalysis>,
}

impl ForkUniverse {
    /// Rows in display order: origin first.
    pub fn rows(&self) -> impl Iterator<Item = &RepoAnalysis> + '_ {
        std::iter::once(&self.origin).chain(self.forks.iter())
    }

    /// Checks every structural invariant, naming the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (i, pair) in self.forks.windows(2).enumerate() {
            let (a, b) = (&pair[0], &pair[1]);
            let ordered = a.divergent_count > b.divergent_count
                || (a.divergent_count == b.divergent_count && a.full_name < b.full_name);
            if !ordered {
                return Err(format!(
                    "forks {i} and {} out of order ({} d={}, {} d={})",
                    i + 1,
                    a.full_name,
                    a.divergent_count,
                    b.full_name,
                    b.divergent_count
                ));
            }
        }
        let mut seen = BTreeSet::new();
        for (i, row) in self.rows().enumerate() {
            if i > 0 && row.unique_commits.is_empty() {
                return Err(format!("fork {} has no unique commits", row.full_name));
            }
            if i > 0 && row.divergent_count < row.unique_commits.len() {
                return Err(format!(
                    "fork {} lists more unique commits than its divergent count",
                    row.full_name
                ));
            }
            let expected_fixes = row.unique_commits.iter().filter(|c| c.is_bugfix).count();
            if expected_fixes != row.bugfix_count {
                return Err(format!("{}: bugfix_count mismatch", row.full_name));
            }
            for w in row.unique_commits.windows(2) {
                if w[0].order_key() >= w[1].order_key() {
                    return Err(format!("{}: commits not sorted", row.full_name));
                }
            }
            for c in &row.unique_commits {
                if c.is_merge {
                    return Err(format!("{}: merge commit {} listed", row.full_name, c.sha));
                }
                if !seen.insert(c.sha) {
                    return Err(format!("commit {} appears in more than one row", c.sha));
                }
            }
        }
        Ok(())
    }
}
