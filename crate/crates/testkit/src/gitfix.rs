//! Scripted local git repositories with known contents.
//!
//! Every commit is built from [`Change`]s whose added-line count is known
//! from the script itself, so tests never need a diff to know the expected
//! size of a commit.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::json;

/// A file operation inside a scripted commit.
#[derive(Debug, Clone)]
pub enum Change {
    /// New text file with `lines` lines.
    Create { path: String, lines: usize },
    /// `lines` more lines at the end of an existing text file.
    Append { path: String, lines: usize },
    /// Drop the last `lines` lines of a text file.
    Truncate { path: String, lines: usize },
    /// Remove a file.
    Delete { path: String },
    /// New binary file.
    Binary { path: String, bytes: usize },
}

impl Change {
    pub fn create(path: &str, lines: usize) -> Self {
        Change::Create { path: path.into(), lines }
    }
    pub fn append(path: &str, lines: usize) -> Self {
        Change::Append { path: path.into(), lines }
    }
    pub fn truncate(path: &str, lines: usize) -> Self {
        Change::Truncate { path: path.into(), lines }
    }
    pub fn delete(path: &str) -> Self {
        Change::Delete { path: path.into() }
    }
    pub fn binary(path: &str, bytes: usize) -> Self {
        Change::Binary { path: path.into(), bytes }
    }

    /// Lines this change adds, by construction.
    pub fn authored_added_lines(&self) -> u64 {
        match self {
            Change::Create { lines, .. } | Change::Append { lines, .. } => *lines as u64,
            Change::Truncate { .. } | Change::Delete { .. } | Change::Binary { .. } => 0,
        }
    }
}

/// A commit made by a script.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Authored {
    pub sha: String,
    pub message: String,
    pub time: i64,
    pub added_lines: u64,
    pub parents: usize,
}

#[derive(Debug, Clone)]
pub struct GitRepo {
    pub path: PathBuf,
    counter: std::cell::Cell<u64>,
}

fn git_in(dir: &Path, args: &[&str], envs: &[(&str, String)]) -> String {
    let out = Command::new("git")
        .arg("-C")
        .arg(dir)
        .args(args)
        .env("GIT_CONFIG_NOSYSTEM", "1")
        .env("GIT_CONFIG_GLOBAL", "/dev/null")
        .env("LC_ALL", "C")
        .envs(envs.iter().map(|(k, v)| (*k, v.as_str())))
        .output()
        .expect("git runs");
    assert!(
        out.status.success(),
        "git {args:?} failed in {}: {}",
        dir.display(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).trim().to_string()
}

impl GitRepo {
    /// `git init` with a `main` branch and a fixed identity.
    pub fn init(path: &Path) -> Self {
        fs::create_dir_all(path).unwrap();
        git_in(path, &["init", "-q", "-b", "main"], &[]);
        let repo = GitRepo {
            path: path.to_path_buf(),
            counter: Default::default(),
        };
        repo.configure();
        repo
    }

    /// A fork: a clone of `source` with every branch as a local branch and
    /// no remote left behind.
    pub fn fork(source: &GitRepo, path: &Path) -> Self {
        let parent = path.parent().unwrap();
        fs::create_dir_all(parent).unwrap();
        git_in(
            parent,
            &["clone", "-q", source.path.to_str().unwrap(), path.to_str().unwrap()],
            &[],
        );
        let repo = GitRepo {
            path: path.to_path_buf(),
            counter: Default::default(),
        };
        repo.configure();
        let remote_branches = git_in(
            path,
            &["for-each-ref", "--format=%(refname:strip=3)", "refs/remotes/origin/"],
            &[],
        );
        let current = repo.current_branch();
        for b in remote_branches.lines().filter(|b| *b != "HEAD" && *b != current) {
            git_in(path, &["branch", "-q", b, &format!("origin/{b}")], &[]);
        }
        git_in(path, &["remote", "remove", "origin"], &[]);
        repo
    }

    fn configure(&self) {
        git_in(&self.path, &["config", "user.name", "Fixture Author"], &[]);
        git_in(&self.path, &["config", "user.email", "fixture@example.test"], &[]);
        git_in(&self.path, &["config", "commit.gpgsign", "false"], &[]);
    }

    fn dated(time: i64) -> Vec<(&'static str, String)> {
        let date = format!("@{time} +0000");
        vec![("GIT_AUTHOR_DATE", date.clone()), ("GIT_COMMITTER_DATE", date)]
    }

    pub fn current_branch(&self) -> String {
        git_in(&self.path, &["rev-parse", "--abbrev-ref", "HEAD"], &[])
    }

    /// Applies `changes` and commits them at `time` (epoch seconds, UTC).
    pub fn commit(&self, message: &str, changes: &[Change], time: i64) -> Authored {
        for change in changes {
            self.apply(change);
        }
        git_in(&self.path, &["add", "-A"], &[]);
        git_in(
            &self.path,
            &["commit", "-q", "--allow-empty", "--no-verify", "-m", message],
            &Self::dated(time),
        );
        Authored {
            sha: self.head(),
            message: message.to_string(),
            time,
            added_lines: changes.iter().map(Change::authored_added_lines).sum(),
            parents: self.parent_count("HEAD"),
        }
    }

    /// Shorthand: one new file of `lines` lines with a generated name.
    pub fn commit_lines(&self, message: &str, lines: usize, time: i64) -> Authored {
        let n = self.counter.get() + 1;
        self.counter.set(n);
        let name = format!("src/{}_{n}.txt", self.path.file_name().unwrap().to_string_lossy());
        self.commit(message, &[Change::create(&name, lines)], time)
    }

    fn apply(&self, change: &Change) {
        let full = |p: &str| self.path.join(p);
        let salt = self.path.display().to_string();
        match change {
            Change::Create { path, lines } => {
                let f = full(path);
                fs::create_dir_all(f.parent().unwrap()).unwrap();
                let text: String = (0..*lines).map(|i| format!("{salt}:{path}:{i}\n")).collect();
                fs::write(f, text).unwrap();
            }
            Change::Append { path, lines } => {
                let f = full(path);
                let mut text = fs::read_to_string(&f).unwrap();
                let start = text.lines().count();
                text.extend((0..*lines).map(|i| format!("{salt}:{path}:appended:{}\n", start + i)));
                fs::write(f, text).unwrap();
            }
            Change::Truncate { path, lines } => {
                let f = full(path);
                let text = fs::read_to_string(&f).unwrap();
                let all: Vec<&str> = text.lines().collect();
                let keep = all.len().saturating_sub(*lines);
                let kept: String = all[..keep].iter().map(|l| format!("{l}\n")).collect();
                fs::write(f, kept).unwrap();
            }
            Change::Delete { path } => fs::remove_file(full(path)).unwrap(),
            Change::Binary { path, bytes } => {
                let f = full(path);
                fs::create_dir_all(f.parent().unwrap()).unwrap();
                let data: Vec<u8> = (0..*bytes).map(|i| (i % 7) as u8).collect();
                fs::write(f, data).unwrap();
            }
        }
    }

    pub fn checkout(&self, branch: &str) {
        git_in(&self.path, &["checkout", "-q", branch], &[]);
    }

    pub fn checkout_new(&self, branch: &str, start: &str) {
        git_in(&self.path, &["checkout", "-q", "-b", branch, start], &[]);
    }

    /// `git merge --no-ff` of `branch` into the current branch.
    pub fn merge(&self, branch: &str, message: &str, time: i64) -> Authored {
        git_in(
            &self.path,
            &["merge", "-q", "--no-ff", "-m", message, branch],
            &Self::dated(time),
        );
        Authored {
            sha: self.head(),
            message: message.to_string(),
            time,
            added_lines: 0,
            parents: self.parent_count("HEAD"),
        }
    }

    /// Copies the history of `branch` in `other` into this repository as
    /// local branch `as_branch`.
    pub fn fetch_branch(&self, other: &GitRepo, branch: &str, as_branch: &str) {
        self.fetch_ref(other, &format!("refs/heads/{branch}"), &format!("refs/heads/{as_branch}"));
    }

    /// Fetches ref `src` of `other` into ref `dst` here (any namespace,
    /// e.g. `refs/pull/1/head`).
    pub fn fetch_ref(&self, other: &GitRepo, src: &str, dst: &str) {
        git_in(
            &self.path,
            &["fetch", "-q", other.path.to_str().unwrap(), &format!("+{src}:{dst}")],
            &[],
        );
    }

    /// Makes `rev` (possibly fetched from `other`) the tip of the current
    /// branch.
    pub fn adopt(&self, other: &GitRepo, branch: &str, rev: &str) {
        const TMP: &str = "refs/fixture/adopt";
        self.fetch_ref(other, &format!("refs/heads/{branch}"), TMP);
        self.reset_hard(rev);
        self.delete_ref(TMP);
    }

    pub fn reset_hard(&self, rev: &str) {
        git_in(&self.path, &["reset", "-q", "--hard", rev], &[]);
    }

    pub fn delete_ref(&self, name: &str) {
        git_in(&self.path, &["update-ref", "-d", name], &[]);
    }

    /// Creates or moves a ref, e.g. `refs/pull/7/head`.
    pub fn update_ref(&self, name: &str, sha: &str) {
        git_in(&self.path, &["update-ref", name, sha], &[]);
    }

    pub fn head(&self) -> String {
        self.rev_parse("HEAD")
    }

    pub fn rev_parse(&self, rev: &str) -> String {
        git_in(&self.path, &["rev-parse", rev], &[])
    }

    pub fn parent_count(&self, rev: &str) -> usize {
        git_in(&self.path, &["rev-list", "--parents", "-n", "1", rev], &[])
            .split_whitespace()
            .count()
            - 1
    }

    /// Commits reachable from branch heads (plus pull refs when asked).
    pub fn reachable(&self, include_pull_refs: bool) -> Vec<String> {
        let mut args = vec!["rev-list", "--branches"];
        if include_pull_refs {
            args.push("--glob=refs/pull/*/head");
        }
        let out = git_in(&self.path, &args, &[]);
        let mut shas: Vec<String> = out.lines().map(str::to_string).collect();
        shas.sort();
        shas
    }
}

/// One repository of a local fixture family.
#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub full_name: String,
    pub repo: GitRepo,
    pub parent: Option<String>,
}

/// Writes a manifest for the local forge describing `members`.
pub fn write_manifest(path: &Path, members: &[FamilyMember]) {
    let repos: Vec<_> = members
        .iter()
        .map(|m| {
            let mut entry = json!({
                "full_name": m.full_name,
                "path": m.repo.path.display().to_string(),
            });
            if let Some(p) = &m.parent {
                entry["parent"] = json!(p);
            }
            entry
        })
        .collect();
    let text = serde_json::to_string_pretty(&json!({ "repos": repos })).unwrap();
    fs::write(path, text + "\n").unwrap();
}

/// Seconds since the epoch for a UTC calendar date at noon.
pub fn noon(year: i32, month: u32, day: u32) -> i64 {
    // days from civil, valid for the proleptic Gregorian calendar
    let (y, m) = if month <= 2 { (year - 1, month + 9) } else { (year, month - 3) };
    let era = y.div_euclid(400);
    let yoe = y - era * 400;
    let doy = (153 * m as i32 + 2) / 5 + day as i32 - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    let days = era as i64 * 146_097 + doe as i64 - 719_468;
    days * 86_400 + 12 * 3600
}
