#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use forkscope_testkit::gitfix::{noon, write_manifest, Authored, Change, FamilyMember, GitRepo};
use forkscope_testkit::{classifier, oracle};
use tempfile::TempDir;

pub const TIMESTAMP: &str = "2024-01-01T00:00:00Z";

/// Runs the `forkscope` binary with `args`, with a clean token variable.
pub fn forkscope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_forkscope"))
        .args(args)
        .env_remove("GITHUB_TOKEN")
        .env("RUST_LOG", "error")
        .output()
        .expect("spawn forkscope")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A scripted family of local repositories plus everything authored in it.
pub struct Family {
    pub dir: TempDir,
    pub manifest: PathBuf,
    pub members: Vec<FamilyMember>,
    pub commits: BTreeMap<String, Authored>,
}

/// What the artifact must contain, computed by brute force over the
/// repositories' reachable commits.
pub struct ExpectedRow {
    pub full_name: String,
    pub divergent: usize,
    /// Non-merge unique commits, sorted.
    pub commits: Vec<String>,
    pub bugfix: usize,
}

impl Family {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn path_str(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    pub fn manifest_str(&self) -> String {
        self.manifest.display().to_string()
    }

    /// Origin row followed by forks with unique commits, in rank order.
    pub fn expected(&self) -> Vec<ExpectedRow> {
        let names: Vec<String> = self.members.iter().map(|m| m.full_name.clone()).collect();
        let repos: Vec<Vec<String>> = self
            .members
            .iter()
            .enumerate()
            .map(|(i, m)| m.repo.reachable(i == 0))
            .collect();
        let reference = oracle::analyze(&names, &repos);
        let mut rows = Vec::new();
        let ranked = std::iter::once(0).chain(reference.order.iter().map(|&i| i + 1));
        for (idx, unique) in ranked.zip(&reference.unique) {
            let commits: Vec<String> = unique
                .iter()
                .filter(|sha| self.commits[*sha].parents < 2)
                .cloned()
                .collect();
            if idx != 0 && unique.is_empty() {
                continue;
            }
            rows.push(ExpectedRow {
                full_name: names[idx].clone(),
                divergent: if idx == 0 { 0 } else { reference.divergent[idx - 1] },
                bugfix: commits.iter().filter(|s| classifier::is_bugfix(&self.commits[*s].message)).count(),
                commits,
            });
        }
        rows
    }
}

fn member(full_name: &str, repo: GitRepo, parent: Option<&str>) -> FamilyMember {
    FamilyMember {
        full_name: full_name.into(),
        repo,
        parent: parent.map(str::to_string),
    }
}

fn finish(dir: TempDir, members: Vec<FamilyMember>, commits: BTreeMap<String, Authored>) -> Family {
    let manifest = dir.path().join("manifest.json");
    write_manifest(&manifest, &members);
    Family {
        dir,
        manifest,
        members,
        commits,
    }
}

/// Clipboard-manager shaped family:
///
/// - `Clipy/Clipy`: root import, a deletion-only commit, and a merge of
///   `merged/Clipy`'s work.
/// - `ian4hu/Clipy`: six unique commits over two branches, two of them bug
///   fixes, with binary, truncating and multi-file changes.
/// - `Econa77/Clipy`: one commit shared with ian4hu plus its own.
/// - `merged/Clipy`: everything already merged upstream.
pub fn clipy_family() -> Family {
    let dir = TempDir::new().unwrap();
    let mut commits = BTreeMap::new();
    let mut keep = |a: Authored| {
        commits.insert(a.sha.clone(), a.clone());
        a
    };
    let o = GitRepo::init(&dir.path().join("origin"));
    keep(o.commit(
        "Initial import",
        &[Change::create("Clipy/AppDelegate.swift", 40), Change::create("NOTES", 5)],
        noon(2016, 3, 1),
    ));
    keep(o.commit("Remove notes", &[Change::delete("NOTES")], noon(2016, 3, 2)));
    keep(o.commit("Fix menu title #3", &[Change::append("Clipy/AppDelegate.swift", 2)], noon(2016, 3, 4)));

    let merged = GitRepo::fork(&o, &dir.path().join("merged"));
    keep(merged.commit("Add snippet editor", &[Change::create("Clipy/Snippets.swift", 25)], noon(2016, 4, 1)));
    keep(merged.commit("Tidy snippet editor", &[Change::append("Clipy/Snippets.swift", 3)], noon(2016, 4, 2)));
    o.fetch_branch(&merged, "main", "incoming");
    keep(o.merge("incoming", "Merge pull request #9 from merged/main", noon(2016, 4, 5)));
    o.delete_ref("refs/heads/incoming");

    let ian = GitRepo::fork(&o, &dir.path().join("ian4hu"));
    let econa = GitRepo::fork(&o, &dir.path().join("Econa77"));

    let shared = keep(ian.commit(
        "Add Korean localization",
        &[Change::create("ko.lproj/Localizable.strings", 60)],
        noon(2017, 1, 10),
    ));
    keep(ian.commit(
        "Fix crash on startup #123",
        &[Change::append("Clipy/AppDelegate.swift", 4), Change::create("Clipy/Guard.swift", 6)],
        noon(2017, 1, 12),
    ));
    keep(ian.commit(
        "Update app icon",
        &[Change::binary("Resources/AppIcon.png", 512), Change::append("ko.lproj/Localizable.strings", 1)],
        noon(2017, 1, 15),
    ));
    ian.checkout_new("history-size", "main");
    keep(ian.commit(
        "Resolve issue #374: history limit ignored",
        &[Change::truncate("Clipy/AppDelegate.swift", 30), Change::append("Clipy/Guard.swift", 2)],
        noon(2017, 2, 1),
    ));
    keep(ian.commit("Refactor history store", &[Change::create("Clipy/History.swift", 18)], noon(2017, 2, 3)));
    keep(ian.commit("Drop legacy strings", &[Change::truncate("ko.lproj/Localizable.strings", 10)], noon(2017, 2, 4)));
    ian.checkout("main");

    econa.adopt(&ian, "main", &shared.sha);
    keep(econa.commit("Bump version to 1.1.2", &[Change::append("Clipy/AppDelegate.swift", 1)], noon(2017, 3, 1)));
    keep(econa.commit("Add Japanese help", &[Change::create("ja.lproj/Help.html", 12)], noon(2017, 3, 2)));

    let members = vec![
        member("Clipy/Clipy", o, None),
        member("ian4hu/Clipy", ian, Some("Clipy/Clipy")),
        member("Econa77/Clipy", econa, Some("Clipy/Clipy")),
        member("merged/Clipy", merged, Some("Clipy/Clipy")),
    ];
    finish(dir, members, commits)
}

/// `widget/core` with an open pull request whose head commit a contributor
/// fork also carries.
pub fn pull_request_family() -> Family {
    let dir = TempDir::new().unwrap();
    let mut commits = BTreeMap::new();
    let mut keep = |a: Authored| {
        commits.insert(a.sha.clone(), a.clone());
        a
    };
    let o = GitRepo::init(&dir.path().join("origin"));
    keep(o.commit("Initial import", &[Change::create("core.py", 10)], noon(2021, 6, 1)));
    let contributor = GitRepo::fork(&o, &dir.path().join("contributor"));
    let proposed = keep(contributor.commit("Fix rounding error #7", &[Change::append("core.py", 3)], noon(2021, 6, 2)));
    o.fetch_ref(&contributor, "refs/heads/main", "refs/pull/7/head");
    keep(contributor.commit("Add benchmarks", &[Change::create("bench.py", 8)], noon(2021, 6, 3)));
    debug_assert!(o.reachable(true).contains(&proposed.sha));

    let members = vec![
        member("widget/core", o, None),
        member("contrib/core", contributor, Some("widget/core")),
    ];
    finish(dir, members, commits)
}

pub fn sorted_shas(row: &forkscope::artifact::ArtifactRepo) -> Vec<String> {
    let set: BTreeSet<String> = row.commits.iter().map(|c| c.sha.to_string()).collect();
    set.into_iter().collect()
}

pub fn read_artifact(path: &Path) -> forkscope::artifact::AnalysisArtifact {
    forkscope::artifact::AnalysisArtifact::read(path).expect("valid artifact")
}
