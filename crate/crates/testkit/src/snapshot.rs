//! Synthetic recordings of the GitHub REST API for a whole fork network.
//!
//! A snapshot is generated from a seed: a commit graph, an origin with
//! pull-request refs, and forks of several kinds (forks that carry their own
//! work, forks of those, forks whose work was sent upstream as a pull
//! request, verbatim copies of another fork, stale and identical forks).
//! The exchanges match what the forge client requests, page by page.
//!
//! Expected results come from the brute-force [`oracle`](crate::oracle), not
//! from the code under test.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use chrono::DateTime;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::classifier;
use crate::gitfix::noon;
use crate::oracle;
use crate::topology::random_sha;

const PAGE: usize = 100;
const DAY: i64 = 86_400;

#[derive(Debug, Clone)]
pub struct SnapshotSpec {
    pub origin: String,
    pub seed: u64,
    /// Forks in the whole network, forks of forks included.
    pub forks: usize,
    /// Forks left with at least one unique non-merge commit.
    pub forks_with_unique: usize,
    pub api_base: String,
    /// Prefix of every `clone_url`; point it somewhere unreachable to keep
    /// tests off the network.
    pub clone_base: String,
}

impl SnapshotSpec {
    /// Modeled on a clipboard manager's network: 487 forks, 61 with work of
    /// their own.
    pub fn clipy_like() -> Self {
        SnapshotSpec {
            origin: "Clipy/Clipy".into(),
            seed: 487,
            forks: 487,
            forks_with_unique: 61,
            api_base: "https://api.github.com".into(),
            clone_base: "https://github.com".into(),
        }
    }

    /// Modeled on a compiler obfuscator's network: 994 forks, 66 with work
    /// of their own.
    pub fn obfuscator_like() -> Self {
        SnapshotSpec {
            origin: "obfuscator-llvm/obfuscator".into(),
            seed: 994,
            forks: 994,
            forks_with_unique: 66,
            api_base: "https://api.github.com".into(),
            clone_base: "https://github.com".into(),
        }
    }
}

/// One fork row the analysis must produce, in rank order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectedRow {
    pub full_name: String,
    pub divergent: usize,
    /// Unique non-merge commits, sorted.
    pub unique: Vec<String>,
    pub bugfix: usize,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub origin: String,
    /// `{"exchanges": [...]}` in the replay format.
    pub recording: Value,
    /// Origin first, then every fork.
    pub names: Vec<String>,
    /// `Commits(R)` per entry of `names`.
    pub commit_sets: Vec<Vec<String>>,
    pub merges: HashSet<String>,
    pub messages: HashMap<String, String>,
    /// Number of forks whose unique set has a non-merge commit.
    pub forks_with_unique: usize,
    /// Every fork with unique non-merge commits, in rank order.
    pub ranked: Vec<ExpectedRow>,
    /// Unique non-merge commits of the origin, sorted.
    pub origin_unique: Vec<String>,
    /// Number of `refs/pull/*/head` refs on the origin.
    pub pull_refs: usize,
}

impl Snapshot {
    pub fn top(&self, k: usize) -> &[ExpectedRow] {
        &self.ranked[..k.min(self.ranked.len())]
    }
}

struct Node {
    parents: Vec<String>,
    message: String,
    time: i64,
}

#[derive(Default)]
struct Graph {
    nodes: HashMap<String, Node>,
}

impl Graph {
    fn add(&mut self, rng: &mut ChaCha8Rng, parents: Vec<String>, message: String, time: i64) -> String {
        let sha = random_sha(rng);
        self.nodes.insert(
            sha.clone(),
            Node {
                parents,
                message,
                time,
            },
        );
        sha
    }

    /// A linear run of `len` commits on top of `base`; returns the new shas.
    fn chain(
        &mut self,
        rng: &mut ChaCha8Rng,
        base: Option<&str>,
        len: usize,
        start: i64,
        bugfix_rate: f64,
    ) -> Vec<String> {
        let mut tip = base.map(str::to_string);
        let mut out = Vec::with_capacity(len);
        for i in 0..len {
            let time = start + i as i64 * DAY / 3 + rng.random_range(0..3600);
            let message = message(rng, bugfix_rate);
            let sha = self.add(rng, tip.iter().cloned().collect(), message, time);
            out.push(sha.clone());
            tip = Some(sha);
        }
        out
    }

    /// Everything reachable from `head`, newest first.
    fn history(&self, head: &str) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut stack = vec![head.to_string()];
        let mut out = Vec::new();
        while let Some(sha) = stack.pop() {
            if !seen.insert(sha.clone()) {
                continue;
            }
            stack.extend(self.nodes[&sha].parents.iter().cloned());
            out.push(sha);
        }
        out.sort_by(|a, b| self.nodes[b].time.cmp(&self.nodes[a].time).then(a.cmp(b)));
        out
    }

    fn time(&self, sha: &str) -> i64 {
        self.nodes[sha].time
    }
}

fn message(rng: &mut ChaCha8Rng, bugfix_rate: f64) -> String {
    const FIXES: &[&str] = &[
        "Fix crash when pasting rich text",
        "Fix error in snippet import",
        "Bugfix: hotkey not registered after sleep",
        "Resolve issue with menu icon on dark mode",
        "fix wrong pass ordering",
    ];
    const OTHER: &[&str] = &[
        "Add Korean localization",
        "Update README",
        "Refactor preferences window",
        "Support LLVM 4.0",
        "Bump version",
        "Add string encryption pass",
        "Tidy up build scripts",
        "Prefix table cleanup",
        "Improve error message wording",
    ];
    if rng.random_bool(bugfix_rate) {
        let m = FIXES.choose(rng).unwrap();
        format!("{m} (#{})", rng.random_range(1..500))
    } else {
        let m = OTHER.choose(rng).unwrap();
        if rng.random_bool(0.15) {
            format!("{m}\n\nSee #{} for context.", rng.random_range(1..500))
        } else {
            m.to_string()
        }
    }
}

struct Repo {
    full_name: String,
    parent: Option<usize>,
    branches: BTreeMap<String, String>,
    pulls: Vec<String>,
}

fn owner_names(rng: &mut ChaCha8Rng, n: usize, taken: &str) -> Vec<String> {
    const HEADS: &[&str] = &[
        "ash", "bo", "chen", "dev", "eli", "fox", "gao", "hana", "ivan", "jun", "kai", "lee", "mika",
        "nor", "oli", "pat", "qi", "ravi", "sam", "tao", "uma", "vic", "wen", "xu", "yuki", "zed",
    ];
    const TAILS: &[&str] = &["", "-dev", "code", "hub", "_x", "lab", "ware", "io", "-jp", "man"];
    let mut seen: HashSet<String> = HashSet::new();
    seen.insert(taken.to_ascii_lowercase());
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut name = format!("{}{}", HEADS.choose(rng).unwrap(), TAILS.choose(rng).unwrap());
        if rng.random_bool(0.5) {
            name.push_str(&rng.random_range(1..2000).to_string());
        }
        if rng.random_bool(0.2) {
            let mut chars = name.chars();
            let first = chars.next().unwrap().to_ascii_uppercase();
            name = std::iter::once(first).chain(chars).collect();
        }
        if seen.insert(name.to_ascii_lowercase()) {
            out.push(name);
        }
    }
    out
}

fn iso(t: i64) -> String {
    DateTime::from_timestamp(t, 0)
        .expect("valid time")
        .format("%Y-%m-%dT%H:%M:%SZ")
        .to_string()
}

/// Generates the network described by `spec`. Panics if the generated
/// network does not have exactly `spec.forks_with_unique` forks with unique
/// work, which would be a bug in the generator.
pub fn generate(spec: &SnapshotSpec) -> Snapshot {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (origin_owner, repo_name) = spec.origin.split_once('/').expect("owner/name");
    let mut graph = Graph::default();

    let origin_main = graph.chain(&mut rng, None, 12, noon(2016, 3, 1), 0.3);
    let origin_tip = origin_main.last().unwrap().clone();
    let after_origin = graph.time(&origin_tip) + DAY;

    let w = spec.forks_with_unique;
    let fof_unique = (w / 12).clamp(1, 5).min(w.saturating_sub(1));
    let creators = w - fof_unique;
    assert!(creators >= 1, "need at least one fork with unique work");
    let rest = spec.forks.checked_sub(w).expect("forks >= forks_with_unique");
    let fof_empty = (rest / 25).max(1).min(rest);
    let social = (rest / 16).min(rest - fof_empty);
    let copies = (rest / 30).min(rest - fof_empty - social);
    let stale = (rest - fof_empty - social - copies) / 2;
    let identical = rest - fof_empty - social - copies - stale;

    let owners = owner_names(&mut rng, spec.forks, origin_owner);
    let mut owners = owners.into_iter();
    let mut repos = vec![Repo {
        full_name: spec.origin.clone(),
        parent: None,
        branches: BTreeMap::from([("master".to_string(), origin_tip.clone())]),
        pulls: Vec::new(),
    }];
    let mut push = |repos: &mut Vec<Repo>, parent: usize, branches: BTreeMap<String, String>| {
        let full_name = format!("{}/{repo_name}", owners.next().unwrap());
        repos.push(Repo {
            full_name,
            parent: Some(parent),
            branches,
            pulls: Vec::new(),
        });
        repos.len() - 1
    };

    // Forks with work of their own. The first lengths are fixed so the top
    // of the ranking has long chains, ties and a chain longer than a page.
    let fixed = [150usize, 64, 41, 41, 33, 27, 20, 20, 18, 15, 12, 12];
    let mut lengths: Vec<usize> = (0..creators)
        .map(|i| fixed.get(i).copied().unwrap_or_else(|| rng.random_range(1..=10)))
        .collect();
    lengths.shuffle(&mut rng);
    let mut creator_ids = Vec::with_capacity(creators);
    let mut creator_chains: Vec<Vec<String>> = Vec::with_capacity(creators);
    for (i, &len) in lengths.iter().enumerate() {
        let base = origin_main[rng.random_range(6..origin_main.len())].clone();
        let start = after_origin + rng.random_range(0..900) * DAY;
        let chain = graph.chain(&mut rng, Some(&base), len, start, 0.35);
        let mut branches = BTreeMap::from([("master".to_string(), chain.last().unwrap().clone())]);
        if i % 4 == 1 {
            let at = chain[rng.random_range(0..chain.len())].clone();
            let extra = rng.random_range(1..=4);
            let side = graph.chain(&mut rng, Some(&at), extra, graph.time(&at) + DAY, 0.35);
            branches.insert("develop".into(), side.last().unwrap().clone());
        }
        if len == 33 {
            // merges upstream back in; the merge itself is charged to the fork
            let tip = chain.last().unwrap().clone();
            let t = graph.time(&tip) + DAY;
            let merge = graph.add(
                &mut rng,
                vec![tip, origin_tip.clone()],
                "Merge branch 'master' of upstream".into(),
                t,
            );
            branches.insert("master".into(), merge);
        }
        let id = push(&mut repos, 0, branches);
        if len == 41 && repos[0].pulls.is_empty() {
            // part of this fork's work was proposed upstream
            repos[0].pulls.push(chain[4].clone());
        }
        creator_ids.push(id);
        creator_chains.push(chain);
    }

    // Forks of forks: with own work (counted), and strict prefixes (not).
    let mut fof_chains: Vec<(usize, Vec<String>)> = Vec::new();
    for _ in 0..fof_unique {
        // branching off a strict prefix keeps the parent's own work unique
        let long: Vec<usize> = (0..creators).filter(|&k| creator_chains[k].len() >= 2).collect();
        let k = *long.choose(&mut rng).expect("a fork with two or more commits");
        let chain = &creator_chains[k];
        let cut = rng.random_range(0..chain.len() - 1);
        let base = chain[cut].clone();
        let len = rng.random_range(1..=6);
        let own = graph.chain(&mut rng, Some(&base), len, graph.time(&base) + DAY, 0.35);
        let mut full: Vec<String> = chain[..=cut].to_vec();
        full.extend(own.iter().cloned());
        let id = push(
            &mut repos,
            creator_ids[k],
            BTreeMap::from([("master".to_string(), own.last().unwrap().clone())]),
        );
        fof_chains.push((id, full));
    }
    for j in 0..fof_empty {
        // one of them sits a level deeper, under a fork of a fork
        let (parent, chain) = if j == 0 && !fof_chains.is_empty() {
            let (id, full) = &fof_chains[0];
            (*id, full.clone())
        } else {
            let k = rng.random_range(0..creators);
            (creator_ids[k], creator_chains[k].clone())
        };
        let head = if chain.len() >= 2 {
            chain[rng.random_range(0..chain.len() - 1)].clone()
        } else {
            origin_main[rng.random_range(0..origin_main.len())].clone()
        };
        push(&mut repos, parent, BTreeMap::from([("master".to_string(), head)]));
    }

    // Work already proposed upstream as a pull request.
    for _ in 0..social {
        let base = origin_main[rng.random_range(8..origin_main.len())].clone();
        let len = rng.random_range(1..=3);
        let own = graph.chain(&mut rng, Some(&base), len, after_origin, 0.5);
        let tip = own.last().unwrap().clone();
        repos[0].pulls.push(tip.clone());
        let mut branches = BTreeMap::from([("master".to_string(), origin_tip.clone())]);
        let branch = if rng.random_bool(0.5) { "master" } else { "patch-1" };
        branches.insert(branch.into(), tip);
        push(&mut repos, 0, branches);
    }
    for _ in 0..copies {
        let k = rng.random_range(0..creators);
        let branches = repos[creator_ids[k]].branches.clone();
        push(&mut repos, 0, branches);
    }
    for _ in 0..stale {
        let head = origin_main[rng.random_range(0..origin_main.len() - 1)].clone();
        push(&mut repos, 0, BTreeMap::from([("master".to_string(), head)]));
    }
    for _ in 0..identical {
        push(&mut repos, 0, BTreeMap::from([("master".to_string(), origin_tip.clone())]));
    }
    assert_eq!(repos.len(), spec.forks + 1);

    let exchanges = exchanges(spec, &repos, &graph, &mut rng);
    expected(spec, repos, graph, exchanges)
}

fn repo_json(spec: &SnapshotSpec, full_name: &str) -> Value {
    json!({
        "full_name": full_name,
        "html_url": format!("https://github.com/{full_name}"),
        "clone_url": format!("{}/{full_name}.git", spec.clone_base),
        "fork": true,
    })
}

/// Splits `items` into pages of [`PAGE`], linking each to the next.
fn paged(url: &str, items: Vec<Value>, out: &mut Vec<Value>) {
    let pages: Vec<&[Value]> = if items.is_empty() {
        vec![&[]]
    } else {
        items.chunks(PAGE).collect()
    };
    let page_url = |n: usize| if n == 1 { url.to_string() } else { format!("{url}&page={n}") };
    for (i, page) in pages.iter().enumerate() {
        let mut headers = serde_json::Map::new();
        if i + 1 < pages.len() {
            headers.insert(
                "link".into(),
                json!(format!(
                    "<{}>; rel=\"next\", <{}>; rel=\"last\"",
                    page_url(i + 2),
                    page_url(pages.len())
                )),
            );
        }
        out.push(json!({
            "url": page_url(i + 1),
            "status": 200,
            "headers": headers,
            "body": page,
        }));
    }
}

fn exchanges(spec: &SnapshotSpec, repos: &[Repo], graph: &Graph, rng: &mut ChaCha8Rng) -> Vec<Value> {
    let base = &spec.api_base;
    let mut out = Vec::new();
    let origin = &repos[0];
    let mut origin_json = repo_json(spec, &origin.full_name);
    origin_json["fork"] = json!(false);
    out.push(json!({
        "url": format!("{base}/repos/{}", origin.full_name),
        "status": 200,
        "headers": {},
        "body": origin_json,
    }));

    let mut children: Vec<Vec<usize>> = vec![Vec::new(); repos.len()];
    for (i, r) in repos.iter().enumerate() {
        if let Some(p) = r.parent {
            children[p].push(i);
        }
    }
    for (i, r) in repos.iter().enumerate() {
        let mut kids = children[i].clone();
        kids.shuffle(rng);
        let items = kids.iter().map(|&k| repo_json(spec, &repos[k].full_name)).collect();
        let url = format!("{base}/repos/{}/forks?per_page={PAGE}&sort=oldest", r.full_name);
        paged(&url, items, &mut out);

        let branches = r
            .branches
            .iter()
            .map(|(name, sha)| json!({"name": name, "commit": {"sha": sha}, "protected": false}))
            .collect();
        paged(&format!("{base}/repos/{}/branches?per_page={PAGE}", r.full_name), branches, &mut out);

        let mut heads: BTreeSet<&String> = r.branches.values().collect();
        if i == 0 {
            let refs: Vec<Value> = r
                .pulls
                .iter()
                .enumerate()
                .map(|(n, sha)| json!({"ref": format!("refs/pull/{}/head", n + 1), "object": {"sha": sha, "type": "commit"}}))
                .collect();
            paged(&format!("{base}/repos/{}/git/matching-refs/pull", r.full_name), refs, &mut out);
            heads.extend(r.pulls.iter());
        }
        for head in heads {
            let items = graph
                .history(head)
                .into_iter()
                .map(|sha| {
                    let n = &graph.nodes[&sha];
                    let date = iso(n.time);
                    json!({
                        "sha": sha,
                        "commit": {
                            "author": {"name": "Dev", "date": date},
                            "committer": {"name": "Dev", "date": date},
                            "message": n.message,
                        },
                        "parents": n.parents.iter().map(|p| json!({"sha": p})).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let url = format!("{base}/repos/{}/commits?sha={head}&per_page={PAGE}", r.full_name);
            paged(&url, items, &mut out);
        }
    }
    out
}

fn expected(spec: &SnapshotSpec, repos: Vec<Repo>, graph: Graph, exchanges: Vec<Value>) -> Snapshot {
    let names: Vec<String> = repos.iter().map(|r| r.full_name.clone()).collect();
    let commit_sets: Vec<Vec<String>> = repos
        .iter()
        .map(|r| {
            let mut set: BTreeSet<String> = BTreeSet::new();
            for head in r.branches.values().chain(r.pulls.iter()) {
                set.extend(graph.history(head));
            }
            set.into_iter().collect()
        })
        .collect();
    let merges: HashSet<String> = graph
        .nodes
        .iter()
        .filter(|(_, n)| n.parents.len() >= 2)
        .map(|(s, _)| s.clone())
        .collect();
    let messages: HashMap<String, String> = graph
        .nodes
        .iter()
        .map(|(s, n)| (s.clone(), n.message.clone()))
        .collect();

    let reference = oracle::analyze(&names, &commit_sets);
    let visible = |unique: &[String]| -> Vec<String> {
        unique.iter().filter(|s| !merges.contains(*s)).cloned().collect()
    };
    let mut ranked = Vec::new();
    for (pos, &fork) in reference.order.iter().enumerate() {
        let unique = visible(&reference.unique[pos + 1]);
        if unique.is_empty() {
            continue;
        }
        let bugfix = unique.iter().filter(|s| classifier::is_bugfix(&messages[*s])).count();
        ranked.push(ExpectedRow {
            full_name: names[fork + 1].clone(),
            divergent: reference.divergent[fork],
            unique,
            bugfix,
        });
    }
    assert_eq!(
        ranked.len(),
        spec.forks_with_unique,
        "generator produced a network with the wrong number of forks with unique work"
    );
    let pull_refs = repos[0].pulls.len();
    Snapshot {
        origin: spec.origin.clone(),
        recording: json!({ "exchanges": exchanges }),
        origin_unique: visible(&reference.unique[0]),
        names,
        commit_sets,
        merges,
        messages,
        forks_with_unique: ranked.len(),
        ranked,
        pull_refs,
    }
}
