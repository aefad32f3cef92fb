//! Thin wrappers over the `git` command line.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};

use chrono::{TimeZone, Utc};
use globset::GlobSet;

use super::ProviderError;
use crate::model::{CommitRecord, Sha};

const FIELD_SEP: char = '\x1f';
const RECORD_SEP: char = '\x1e';

fn command(dir: Option<&Path>) -> Command {
    let mut cmd = Command::new("git");
    if let Some(dir) = dir {
        cmd.arg("-C").arg(dir);
    }
    cmd.env("LC_ALL", "C")
        .env("GIT_TERMINAL_PROMPT", "0")
        .stdin(Stdio::null());
    cmd
}

fn run(mut cmd: Command, input: Option<&str>) -> Result<String, ProviderError> {
    // Name only the subcommand: paths would make messages depend on the
    // cache location.
    let args: Vec<String> = cmd.get_args().map(|a| a.to_string_lossy().into_owned()).collect();
    let sub = if args.first().map(String::as_str) == Some("-C") { args.get(2) } else { args.first() };
    let describe = format!("git {}", sub.map(String::as_str).unwrap_or_default());
    if input.is_some() {
        cmd.stdin(Stdio::piped());
    }
    cmd.stdout(Stdio::piped()).stderr(Stdio::piped());
    let mut child = cmd
        .spawn()
        .map_err(|e| ProviderError::Git(format!("cannot run {describe}: {e}")))?;
    if let Some(input) = input {
        let mut stdin = child.stdin.take().expect("piped stdin");
        let data = input.to_string();
        // Write from a separate thread so large outputs cannot deadlock.
        std::thread::spawn(move || {
            let _ = stdin.write_all(data.as_bytes());
        });
    }
    let out = child
        .wait_with_output()
        .map_err(|e| ProviderError::Git(format!("{describe}: {e}")))?;
    if !out.status.success() {
        let stderr = String::from_utf8_lossy(&out.stderr);
        let first = stderr.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("no output");
        return Err(ProviderError::Git(format!("{describe} failed: {first}")));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

/// Refs under the given prefixes (e.g. `refs/heads/`) mapped to their commit.
pub fn ref_heads(repo: &Path, prefixes: &[&str]) -> Result<BTreeMap<String, Sha>, ProviderError> {
    let mut cmd = command(Some(repo));
    cmd.args(["for-each-ref", "--format=%(objectname) %(objecttype) %(refname)"]);
    cmd.args(prefixes);
    let out = run(cmd, None)?;
    let mut heads = BTreeMap::new();
    for line in out.lines() {
        let mut parts = line.splitn(3, ' ');
        let (Some(sha), Some(kind), Some(name)) = (parts.next(), parts.next(), parts.next()) else {
            continue;
        };
        if kind != "commit" {
            continue;
        }
        heads.insert(name.to_string(), parse_sha(sha)?);
    }
    Ok(heads)
}

/// Every commit reachable from `heads`. `url_base` is the repository web page;
/// commit URLs are `<url_base>/commit/<sha>`.
pub fn reachable_commits(
    repo: &Path,
    heads: &[Sha],
    url_base: &str,
) -> Result<Vec<CommitRecord>, ProviderError> {
    if heads.is_empty() {
        return Ok(Vec::new());
    }
    let mut cmd = command(Some(repo));
    cmd.args([
        "log",
        "--no-color",
        "--format=%H%x1f%P%x1f%ct%x1f%B%x1e",
    ]);
    cmd.args(heads.iter().map(|h| h.to_string()));
    cmd.arg("--");
    let out = run(cmd, None)?;
    let mut commits = Vec::new();
    for record in out.split(RECORD_SEP) {
        let record = record.trim_start_matches('\n');
        if record.is_empty() {
            continue;
        }
        let fields: Vec<&str> = record.splitn(4, FIELD_SEP).collect();
        let [sha, parents, ts, message] = fields[..] else {
            return Err(ProviderError::Git(format!("unexpected git log record {record:?}")));
        };
        let sha = parse_sha(sha)?;
        let seconds: i64 = ts
            .parse()
            .map_err(|_| ProviderError::Git(format!("bad commit time {ts:?}")))?;
        let timestamp = Utc
            .timestamp_opt(seconds, 0)
            .single()
            .ok_or_else(|| ProviderError::Git(format!("bad commit time {ts:?}")))?;
        let parent_count = parents.split_whitespace().count();
        let message = message.strip_suffix('\n').unwrap_or(message);
        commits.push(CommitRecord::new(
            sha,
            timestamp,
            message,
            parent_count,
            format!("{url_base}/commit/{sha}"),
        ));
    }
    Ok(commits)
}

/// Full mirror clone, so every branch and its parents are present locally.
pub fn clone_mirror(source: &str, dest: &Path) -> Result<(), ProviderError> {
    if let Some(parent) = dest.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| ProviderError::Git(format!("cannot create {}: {e}", parent.display())))?;
    }
    let mut cmd = command(None);
    cmd.args(["clone", "--quiet", "--mirror", source]).arg(dest);
    run(cmd, None).map(drop)
}

/// Brings an existing mirror up to date with its source.
pub fn update_mirror(dest: &Path) -> Result<(), ProviderError> {
    let mut cmd = command(Some(dest));
    cmd.args(["remote", "update", "--prune"]);
    run(cmd, None).map(drop)
}

/// The subset of `shas` present as commits in `repo`.
pub fn existing_commits(repo: &Path, shas: &[Sha]) -> Result<HashSet<Sha>, ProviderError> {
    let mut cmd = command(Some(repo));
    cmd.args(["cat-file", "--batch-check=%(objectname) %(objecttype)"]);
    let input: String = shas.iter().map(|s| format!("{s}\n")).collect();
    let out = run(cmd, Some(&input))?;
    let mut present = HashSet::new();
    for line in out.lines() {
        let mut parts = line.split(' ');
        if let (Some(sha), Some("commit")) = (parts.next(), parts.next()) {
            present.insert(parse_sha(sha)?);
        }
    }
    Ok(present)
}

/// Lines added by each commit relative to its first parent (the empty tree
/// for root commits). Binary files count 0; `filter`, when given, restricts
/// which paths count. Commits must exist in `repo`; merges report 0.
pub fn added_lines(
    repo: &Path,
    shas: &[Sha],
    filter: Option<&GlobSet>,
) -> Result<HashMap<Sha, u64>, ProviderError> {
    let mut sizes: HashMap<Sha, u64> = shas.iter().map(|s| (*s, 0)).collect();
    if shas.is_empty() {
        return Ok(sizes);
    }
    let mut cmd = command(Some(repo));
    cmd.args([
        "diff-tree",
        "--stdin",
        "-r",
        "--root",
        "--numstat",
        "--no-renames",
        "-z",
    ]);
    let input: String = shas.iter().map(|s| format!("{s}\n")).collect();
    let out = run(cmd, Some(&input))?;
    for (sha, added) in parse_numstat(&out, filter)? {
        if let Some(total) = sizes.get_mut(&sha) {
            *total += added;
        }
    }
    Ok(sizes)
}

/// Parses `diff-tree --stdin --numstat -z` output into per-commit totals.
///
/// The stream is NUL-separated: a bare commit id opens a commit, and each
/// following `added\tdeleted\tpath` token is one file.
fn parse_numstat(out: &str, filter: Option<&GlobSet>) -> Result<Vec<(Sha, u64)>, ProviderError> {
    let mut totals: Vec<(Sha, u64)> = Vec::new();
    for token in out.split('\0') {
        let token = token.trim_start_matches('\n');
        if token.is_empty() {
            continue;
        }
        let mut parts = token.splitn(3, '\t');
        match (parts.next(), parts.next(), parts.next()) {
            (Some(added), Some(_deleted), Some(path)) => {
                let Some((_, total)) = totals.last_mut() else {
                    return Err(ProviderError::Git(format!("numstat entry before commit: {token:?}")));
                };
                if filter.is_some_and(|f| !f.is_match(path)) {
                    continue;
                }
                // "-" marks a binary file
                if let Ok(n) = added.parse::<u64>() {
                    *total += n;
                }
            }
            (Some(sha), None, None) => totals.push((parse_sha(sha.trim())?, 0)),
            _ => return Err(ProviderError::Git(format!("unexpected numstat token {token:?}"))),
        }
    }
    Ok(totals)
}

fn parse_sha(s: &str) -> Result<Sha, ProviderError> {
    s.parse()
        .map_err(|e: crate::model::ModelError| ProviderError::Git(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use globset::{Glob, GlobSetBuilder};

    #[test]
    fn numstat_stream() {
        let a = "a".repeat(40);
        let b = "b".repeat(40);
        let out = format!("{a}\x001\t2\tf\x001\t0\tsp ace.txt\x00{b}\x00-\t-\tb.bin\x003\t0\tsrc/x.rs\x00");
        let got = parse_numstat(&out, None).unwrap();
        assert_eq!(got, vec![(a.parse().unwrap(), 2), (b.parse().unwrap(), 3)]);

        let filter = GlobSetBuilder::new()
            .add(Glob::new("*.rs").unwrap())
            .build()
            .unwrap();
        let got = parse_numstat(&out, Some(&filter)).unwrap();
        assert_eq!(got, vec![(a.parse().unwrap(), 0), (b.parse().unwrap(), 3)]);
    }

    #[test]
    fn numstat_rejects_orphan_entries() {
        assert!(parse_numstat("1\t2\tf\0", None).is_err());
    }
}
