//! The JSON hand-off between the analyzer and the viewer.
//!
//! Field names and order are fixed; output is UTF-8, LF line endings, 2-space
//! indentation with a trailing newline. [`AnalysisArtifact::parse`] validates
//! structure and the fork-universe invariants before accepting a document, and
//! reports the first violation as a JSON pointer.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::model::{utc_seconds, CommitRecord, ForkUniverse, RepoAnalysis, Sha, EXCERPT_CHARS};

pub const SCHEMA_VERSION: u32 = 1;

/// Published JSON Schema for the artifact.
pub const JSON_SCHEMA: &str = include_str!("../schema/artifact.schema.json");

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("invalid artifact at {pointer}: {reason}")]
    Invalid { pointer: String, reason: String },
    #[error("artifact is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read or write artifact {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ArtifactError {
    fn invalid(pointer: impl Into<String>, reason: impl Into<String>) -> Self {
        ArtifactError::Invalid {
            pointer: pointer.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisArtifact {
    pub schema_version: u32,
    #[serde(with = "utc_seconds")]
    pub generated_at: DateTime<Utc>,
    pub origin: ArtifactRepo,
    pub forks: Vec<ArtifactRepo>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArtifactRepo {
    pub owner: String,
    pub name: String,
    pub full_name: String,
    pub url: String,
    pub divergent_count: u64,
    pub bugfix_count: u64,
    pub commits: Vec<ArtifactCommit>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArtifactCommit {
    pub sha: Sha,
    #[serde(with = "utc_seconds")]
    pub timestamp: DateTime<Utc>,
    pub subject: String,
    pub message_excerpt: String,
    pub added_lines: u64,
    pub is_bugfix: bool,
    pub url: String,
}

impl From<&CommitRecord> for ArtifactCommit {
    fn from(c: &CommitRecord) -> Self {
        ArtifactCommit {
            sha: c.sha,
            timestamp: c.timestamp,
            subject: c.subject.clone(),
            message_excerpt: c.message_excerpt.clone(),
            added_lines: c.added_lines,
            is_bugfix: c.is_bugfix,
            url: c.url.clone(),
        }
    }
}

impl From<&RepoAnalysis> for ArtifactRepo {
    fn from(r: &RepoAnalysis) -> Self {
        ArtifactRepo {
            owner: r.owner.clone(),
            name: r.name.clone(),
            full_name: r.full_name.clone(),
            url: r.url.clone(),
            divergent_count: r.divergent_count as u64,
            bugfix_count: r.bugfix_count as u64,
            commits: r.unique_commits.iter().map(ArtifactCommit::from).collect(),
        }
    }
}

impl AnalysisArtifact {
    pub fn from_universe(
        universe: &ForkUniverse,
        generated_at: DateTime<Utc>,
        warnings: Vec<String>,
    ) -> Self {
        AnalysisArtifact {
            schema_version: SCHEMA_VERSION,
            generated_at: crate::model::truncate_to_seconds(generated_at),
            origin: ArtifactRepo::from(&universe.origin),
            forks: universe.forks.iter().map(ArtifactRepo::from).collect(),
            warnings,
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = &ArtifactRepo> + '_ {
        std::iter::once(&self.origin).chain(self.forks.iter())
    }

    /// Canonical text form.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("artifact serializes");
        out.push('\n');
        out
    }

    /// Parses and validates an artifact document.
    pub fn parse(text: &str) -> Result<Self, ArtifactError> {
        let value: Value = serde_json::from_str(text)?;
        validate(&value)?;
        Ok(serde_json::from_value(value)?)
    }

    pub fn read(path: &Path) -> Result<Self, ArtifactError> {
        let text = fs::read_to_string(path).map_err(|source| ArtifactError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<(), ArtifactError> {
        let io = |source| ArtifactError::Io {
            path: path.display().to_string(),
            source,
        };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(io)?;
        }
        fs::write(path, self.to_json()).map_err(io)
    }
}

/// Checks `value` against the artifact schema and the fork-universe
/// invariants.
pub fn validate(value: &Value) -> Result<(), ArtifactError> {
    let root = object(value, "")?;
    exact_keys(
        root,
        "",
        &["schema_version", "generated_at", "origin", "forks", "warnings"],
    )?;
    let version = unsigned(&root["schema_version"], "/schema_version")?;
    if version != SCHEMA_VERSION as u64 {
        return Err(ArtifactError::invalid(
            "/schema_version",
            format!("unsupported schema version {version}, expected {SCHEMA_VERSION}"),
        ));
    }
    timestamp(&root["generated_at"], "/generated_at")?;
    for (i, w) in array(&root["warnings"], "/warnings")?.iter().enumerate() {
        string(w, &format!("/warnings/{i}"))?;
    }

    let mut seen = HashSet::new();
    validate_repo(&root["origin"], "/origin", false, &mut seen)?;
    let forks = array(&root["forks"], "/forks")?;
    let mut previous: Option<(u64, &str)> = None;
    for (i, fork) in forks.iter().enumerate() {
        let ptr = format!("/forks/{i}");
        let (d, name) = validate_repo(fork, &ptr, true, &mut seen)?;
        if let Some((pd, pname)) = previous {
            if !(pd > d || (pd == d && pname < name)) {
                return Err(ArtifactError::invalid(
                    ptr,
                    "forks must be ordered by descending divergent_count, then full_name",
                ));
            }
        }
        previous = Some((d, name));
    }
    Ok(())
}

fn validate_repo<'v>(
    value: &'v Value,
    ptr: &str,
    is_fork: bool,
    seen: &mut HashSet<Sha>,
) -> Result<(u64, &'v str), ArtifactError> {
    let repo = object(value, ptr)?;
    exact_keys(
        repo,
        ptr,
        &[
            "owner",
            "name",
            "full_name",
            "url",
            "divergent_count",
            "bugfix_count",
            "commits",
        ],
    )?;
    let owner = string(&repo["owner"], &format!("{ptr}/owner"))?;
    let name = string(&repo["name"], &format!("{ptr}/name"))?;
    let full_name = string(&repo["full_name"], &format!("{ptr}/full_name"))?;
    if full_name != format!("{owner}/{name}") {
        return Err(ArtifactError::invalid(
            format!("{ptr}/full_name"),
            "must equal owner/name",
        ));
    }
    string(&repo["url"], &format!("{ptr}/url"))?;
    let divergent = unsigned(&repo["divergent_count"], &format!("{ptr}/divergent_count"))?;
    let bugfixes = unsigned(&repo["bugfix_count"], &format!("{ptr}/bugfix_count"))?;
    let commits = array(&repo["commits"], &format!("{ptr}/commits"))?;

    if is_fork && commits.is_empty() {
        return Err(ArtifactError::invalid(
            format!("{ptr}/commits"),
            "a listed fork must have at least one unique commit",
        ));
    }
    if is_fork && divergent < commits.len() as u64 {
        return Err(ArtifactError::invalid(
            format!("{ptr}/divergent_count"),
            "smaller than the number of unique commits",
        ));
    }

    let mut fixes = 0u64;
    let mut previous: Option<(DateTime<Utc>, Sha)> = None;
    for (i, commit) in commits.iter().enumerate() {
        let cptr = format!("{ptr}/commits/{i}");
        let c = object(commit, &cptr)?;
        exact_keys(
            c,
            &cptr,
            &[
                "sha",
                "timestamp",
                "subject",
                "message_excerpt",
                "added_lines",
                "is_bugfix",
                "url",
            ],
        )?;
        let sha: Sha = string(&c["sha"], &format!("{cptr}/sha"))?
            .parse()
            .map_err(|e: crate::model::ModelError| {
                ArtifactError::invalid(format!("{cptr}/sha"), e.to_string())
            })?;
        let ts = timestamp(&c["timestamp"], &format!("{cptr}/timestamp"))?;
        string(&c["subject"], &format!("{cptr}/subject"))?;
        let excerpt = string(&c["message_excerpt"], &format!("{cptr}/message_excerpt"))?;
        if excerpt.chars().count() > EXCERPT_CHARS {
            return Err(ArtifactError::invalid(
                format!("{cptr}/message_excerpt"),
                format!("longer than {EXCERPT_CHARS} characters"),
            ));
        }
        unsigned(&c["added_lines"], &format!("{cptr}/added_lines"))?;
        let is_bugfix = c["is_bugfix"]
            .as_bool()
            .ok_or_else(|| ArtifactError::invalid(format!("{cptr}/is_bugfix"), "expected a boolean"))?;
        string(&c["url"], &format!("{cptr}/url"))?;

        if is_bugfix {
            fixes += 1;
        }
        if previous.is_some_and(|p| p >= (ts, sha)) {
            return Err(ArtifactError::invalid(
                cptr,
                "commits must be sorted ascending by (timestamp, sha)",
            ));
        }
        previous = Some((ts, sha));
        if !seen.insert(sha) {
            return Err(ArtifactError::invalid(
                format!("{cptr}/sha"),
                "commit appears in more than one repository",
            ));
        }
    }
    if fixes != bugfixes {
        return Err(ArtifactError::invalid(
            format!("{ptr}/bugfix_count"),
            format!("is {bugfixes} but {fixes} commits are bug fixes"),
        ));
    }
    Ok((divergent, full_name))
}

fn object<'v>(value: &'v Value, ptr: &str) -> Result<&'v Map<String, Value>, ArtifactError> {
    value
        .as_object()
        .ok_or_else(|| ArtifactError::invalid(ptr, "expected an object"))
}

fn array<'v>(value: &'v Value, ptr: &str) -> Result<&'v Vec<Value>, ArtifactError> {
    value
        .as_array()
        .ok_or_else(|| ArtifactError::invalid(ptr, "expected an array"))
}

fn string<'v>(value: &'v Value, ptr: &str) -> Result<&'v str, ArtifactError> {
    value
        .as_str()
        .ok_or_else(|| ArtifactError::invalid(ptr, "expected a string"))
}

fn unsigned(value: &Value, ptr: &str) -> Result<u64, ArtifactError> {
    value
        .as_u64()
        .ok_or_else(|| ArtifactError::invalid(ptr, "expected a nonnegative integer"))
}

fn timestamp(value: &Value, ptr: &str) -> Result<DateTime<Utc>, ArtifactError> {
    let s = string(value, ptr)?;
    let ts = utc_seconds::parse(s).map_err(|e| ArtifactError::invalid(ptr, e))?;
    if !s.ends_with('Z') || ts.timestamp_subsec_nanos() != 0 || s.contains('.') {
        return Err(ArtifactError::invalid(
            ptr,
            "expected a UTC instant with second precision, e.g. 2021-12-01T10:00:00Z",
        ));
    }
    Ok(ts)
}

fn exact_keys(map: &Map<String, Value>, ptr: &str, keys: &[&str]) -> Result<(), ArtifactError> {
    for key in keys {
        if !map.contains_key(*key) {
            return Err(ArtifactError::invalid(
                format!("{ptr}/{key}"),
                "required field is missing",
            ));
        }
    }
    if let Some(extra) = map.keys().find(|k| !keys.contains(&k.as_str())) {
        return Err(ArtifactError::invalid(
            format!("{ptr}/{}", escape_pointer(extra)),
            "unknown field",
        ));
    }
    Ok(())
}

fn escape_pointer(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}
