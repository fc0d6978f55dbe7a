//! Empirical annotation logs.
//!
//! Input is JSON Lines, one post per line:
//!
//! ```text
//! {"user": "alice", "resource": "http://example.org", "ts": 1136073600, "tags": ["Web", "design"]}
//! ```
//!
//! Cleaning: tags are lower-cased (no other normalisation), duplicates
//! collapse, posts without tags and posts outside the validity window are
//! rejected. Accepted posts are ordered by timestamp, ties by input order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::cooc::{build_from_posts, CoocGraph, TagIndex};
use crate::walker::{HeapsCurve, WalkTrace};
use crate::{Error, Result};

/// 2001-01-01T00:00:00Z.
pub const DEFAULT_WINDOW_START: i64 = 978_307_200;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub user: String,
    pub resource: String,
    pub ts: i64,
    pub tags: BTreeSet<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPost {
    user: String,
    resource: String,
    ts: i64,
    tags: Vec<String>,
}

/// Inclusive range of accepted timestamps (epoch seconds).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityWindow {
    pub start: i64,
    pub end: i64,
}

impl ValidityWindow {
    /// `[2001-01-01, now]`.
    pub fn until_now() -> Self {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs() as i64)
            .unwrap_or(i64::MAX);
        ValidityWindow { start: DEFAULT_WINDOW_START, end: now }
    }

    pub fn contains(&self, ts: i64) -> bool {
        ts >= self.start && ts <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Malformed,
    NoTags,
    BadTimestamp,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::Malformed => "malformed",
            RejectReason::NoTags => "no_tags",
            RejectReason::BadTimestamp => "bad_timestamp",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionReport {
    pub input_lines: u64,
    pub accepted: u64,
    pub rejected: BTreeMap<RejectReason, u64>,
}

impl RejectionReport {
    pub fn rejected_total(&self) -> u64 {
        self.rejected.values().sum()
    }

    pub fn count(&self, reason: RejectReason) -> u64 {
        self.rejected.get(&reason).copied().unwrap_or(0)
    }

    /// CSV `reason,count` with every reason listed.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "reason,count")?;
        for r in [RejectReason::Malformed, RejectReason::NoTags, RejectReason::BadTimestamp] {
            writeln!(out, "{r},{}", self.count(r))?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub posts: Vec<Post>,
    pub window: Option<ValidityWindow>,
}

impl Corpus {
    /// Writes cleaned posts back as JSON Lines.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for p in &self.posts {
            serde_json::to_writer(&mut out, p)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Lower-case fold used for tag identity.
pub fn normalize_tag(tag: &str) -> String {
    tag.to_lowercase()
}

/// Parses and cleans a JSON-Lines stream. Blank lines are ignored. In
/// strict mode the first malformed line aborts with a parse error.
pub fn parse_posts<R: BufRead>(input: R, window: ValidityWindow, strict: bool) -> Result<(Corpus, RejectionReport)> {
    let mut report = RejectionReport::default();
    let mut posts = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        report.input_lines += 1;
        let raw: RawPost = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                if strict {
                    return Err(Error::Parse { line: idx + 1, message: e.to_string() });
                }
                *report.rejected.entry(RejectReason::Malformed).or_insert(0) += 1;
                continue;
            }
        };
        let tags: BTreeSet<String> = raw.tags.iter().filter(|t| !t.is_empty()).map(|t| normalize_tag(t)).collect();
        let reason = if tags.is_empty() {
            Some(RejectReason::NoTags)
        } else if !window.contains(raw.ts) {
            Some(RejectReason::BadTimestamp)
        } else {
            None
        };
        match reason {
            Some(r) => *report.rejected.entry(r).or_insert(0) += 1,
            None => {
                report.accepted += 1;
                posts.push(Post { user: raw.user, resource: raw.resource, ts: raw.ts, tags });
            }
        }
    }
    posts.sort_by_key(|p| p.ts);
    Ok((Corpus { posts, window: Some(window) }, report))
}

/// Posts containing `focus`, in corpus order.
pub fn filter_by_tag<'a>(corpus: &'a Corpus, focus: &str) -> Vec<&'a Post> {
    corpus.posts.iter().filter(|p| p.tags.contains(focus)).collect()
}

/// Distinct co-occurring tags (excluding `focus`) after each post.
pub fn vocabulary_growth(stream: &[&Post], focus: &str) -> Result<HeapsCurve> {
    let mut vocab: BTreeSet<&str> = BTreeSet::new();
    let mut points = Vec::with_capacity(stream.len());
    for (n, post) in stream.iter().enumerate() {
        if !post.tags.contains(focus) {
            return Err(Error::Contract(format!("post #{n} does not contain focus tag {focus:?}")));
        }
        vocab.extend(post.tags.iter().map(String::as_str).filter(|t| *t != focus));
        points.push((n as u64 + 1, vocab.len() as u64));
    }
    Ok(HeapsCurve { points })
}

pub fn empirical_cooc(stream: &[&Post], focus: &str) -> Result<(CoocGraph, TagIndex)> {
    build_from_posts(stream.iter().map(|p| &p.tags), focus)
}

/// Number of posts in which each co-occurring tag appears.
pub fn tag_counts(stream: &[&Post], focus: &str) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for p in stream {
        for t in p.tags.iter().filter(|t| t.as_str() != focus) {
            *counts.entry(t.clone()).or_insert(0) += 1;
        }
    }
    counts
}

/// Label used when a synthetic node is written out as a tag.
pub fn node_label(v: crate::NodeId) -> String {
    format!("n{v}")
}

/// Serialises walk traces as posts: one post per walk, tags `n<id>`, the
/// walk index as timestamp offset from `ts0`.
pub fn traces_to_posts(traces: &[WalkTrace], ts0: i64) -> Vec<Post> {
    traces
        .iter()
        .enumerate()
        .map(|(i, t)| Post {
            user: format!("walker{i}"),
            resource: "synthetic".into(),
            ts: ts0 + i as i64,
            tags: t.nodes.iter().map(|&v| node_label(v)).collect(),
        })
        .collect()
}
