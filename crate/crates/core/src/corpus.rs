//! Comment and post ingestion plus text normalization.
//!
//! Input files are newline-delimited JSON. Loading collects per-line
//! problems instead of stopping at the first one; in strict mode any
//! problem turns into an error once the whole file has been read.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::error::{Error, Result};

/// Default English + Filipino stopword list shipped with the crate.
pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

#[derive(Debug, Clone, PartialEq)]
pub struct Comment {
    pub id: String,
    pub post_id: String,
    pub timestamp: DateTime<Utc>,
    pub raw_text: String,
    /// Empty until [`preprocess`] runs.
    pub clean_text: String,
    pub reactions: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Post {
    pub id: String,
    pub timestamp: DateTime<Utc>,
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct CommentRecord {
    id: String,
    post_id: String,
    timestamp: String,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reactions: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PostRecord {
    id: String,
    timestamp: String,
    text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadMode {
    /// Skip bad records and report them.
    #[default]
    Lenient,
    /// Fail if any record is bad.
    Strict,
}

/// A record that could not be loaded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadIssue {
    pub file: String,
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for LoadIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}: {}", self.file, self.line, self.message)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub comments: Vec<Comment>,
    pub posts: Vec<Post>,
    pub issues: Vec<LoadIssue>,
}

/// Parses an ISO-8601 instant. Accepts RFC 3339, naive date-times (taken as
/// UTC) and bare dates (midnight UTC).
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|t| t.and_utc())
}

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

fn read_lines(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Walks the non-blank lines of an NDJSON file, converting each record and
/// recording problems with their 1-based line numbers.
fn load_records<R, T>(
    path: &Path,
    mut convert: impl FnMut(R) -> std::result::Result<(String, T), String>,
    issues: &mut Vec<LoadIssue>,
) -> Result<Vec<T>>
where
    R: for<'de> Deserialize<'de>,
{
    let text = read_lines(path)?;
    let file = path.display().to_string();
    let mut out = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: R = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                issues.push(LoadIssue {
                    file: file.clone(),
                    line: line_no,
                    message: format!("malformed JSON: {e}"),
                });
                continue;
            }
        };
        match convert(record) {
            Ok((id, item)) => {
                if let Some(first) = seen.get(&id) {
                    issues.push(LoadIssue {
                        file: file.clone(),
                        line: line_no,
                        message: format!("duplicate id {id:?} (lines {first} and {line_no})"),
                    });
                    continue;
                }
                seen.insert(id, line_no);
                out.push(item);
            }
            Err(message) => issues.push(LoadIssue {
                file: file.clone(),
                line: line_no,
                message,
            }),
        }
    }
    Ok(out)
}

fn comment_from_record(r: CommentRecord) -> std::result::Result<(String, Comment), String> {
    let timestamp = parse_timestamp(&r.timestamp)
        .ok_or_else(|| format!("invalid timestamp {:?} for id {:?}", r.timestamp, r.id))?;
    Ok((
        r.id.clone(),
        Comment {
            id: r.id,
            post_id: r.post_id,
            timestamp,
            raw_text: r.text,
            clean_text: String::new(),
            reactions: r.reactions,
        },
    ))
}

fn post_from_record(r: PostRecord) -> std::result::Result<(String, Post), String> {
    let timestamp = parse_timestamp(&r.timestamp)
        .ok_or_else(|| format!("invalid timestamp {:?} for id {:?}", r.timestamp, r.id))?;
    Ok((
        r.id.clone(),
        Post {
            id: r.id,
            timestamp,
            text: r.text,
        },
    ))
}

/// Loads comments and (optionally) posts from NDJSON files.
pub fn load_corpus(comments_path: &Path, posts_path: Option<&Path>, mode: LoadMode) -> Result<Corpus> {
    let mut issues = Vec::new();
    let comments = load_records(comments_path, comment_from_record, &mut issues)?;
    let posts = match posts_path {
        Some(p) => load_records(p, post_from_record, &mut issues)?,
        None => Vec::new(),
    };
    if mode == LoadMode::Strict && !issues.is_empty() {
        let path = if issues[0].file == comments_path.display().to_string() {
            comments_path.to_path_buf()
        } else {
            posts_path.unwrap_or(comments_path).to_path_buf()
        };
        return Err(Error::Load {
            path,
            count: issues.len(),
            first: issues[0].to_string(),
        });
    }
    Ok(Corpus {
        comments,
        posts,
        issues,
    })
}

/// Serializes comments back into the NDJSON input format.
pub fn write_comments(path: &Path, comments: &[Comment]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for c in comments {
        let rec = CommentRecord {
            id: c.id.clone(),
            post_id: c.post_id.clone(),
            timestamp: format_timestamp(&c.timestamp),
            text: c.raw_text.clone(),
            reactions: c.reactions,
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_posts(path: &Path, posts: &[Post]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for p in posts {
        let rec = PostRecord {
            id: p.id.clone(),
            timestamp: format_timestamp(&p.timestamp),
            text: p.text.clone(),
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Which codepoints count as punctuation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Punctuation {
    /// ASCII punctuation plus every Unicode `P*` general category.
    #[default]
    Standard,
    Chars(BTreeSet<char>),
}

impl Punctuation {
    pub fn contains(&self, c: char) -> bool {
        match self {
            Punctuation::Standard => c.is_ascii_punctuation() || is_unicode_punctuation(c),
            Punctuation::Chars(set) => set.contains(&c),
        }
    }
}

fn is_unicode_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// Emoji blocks, variation selectors, ZWJ and regional indicators.
pub fn is_emoji(c: char) -> bool {
    matches!(c as u32,
        0x1F300..=0x1F5FF // misc symbols and pictographs
        | 0x1F600..=0x1F64F // emoticons
        | 0x1F680..=0x1F6FF // transport and map
        | 0x1F900..=0x1F9FF // supplemental symbols and pictographs
        | 0x1FA70..=0x1FAFF // symbols and pictographs extended-a
        | 0x2600..=0x27BF // misc symbols, dingbats
        | 0x1F1E6..=0x1F1FF // regional indicators
        | 0xFE00..=0xFE0F // variation selectors
        | 0x200D)
}

/// Apostrophes inside words are deleted ("don't" -> "dont"); every other
/// removed character acts as a token separator.
fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '\u{02BC}')
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreprocessConfig {
    stopwords: BTreeSet<String>,
    pub punctuation: Punctuation,
    pub strip_emoji: bool,
    pub lowercase: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            stopwords: BTreeSet::new(),
            punctuation: Punctuation::Standard,
            strip_emoji: true,
            lowercase: true,
        }
    }
}

impl PreprocessConfig {
    /// Replaces the stopword set. Entries must be lowercase, free of
    /// punctuation and whitespace, and non-empty.
    pub fn with_stopwords<I, S>(mut self, words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = BTreeSet::new();
        for w in words {
            let w = w.into();
            if w.is_empty()
                || w.chars().any(|c| c.is_whitespace() || self.punctuation.contains(c))
                || w.to_lowercase() != w
            {
                return Err(Error::InvalidParam(format!("invalid stopword {w:?}")));
            }
            set.insert(w);
        }
        self.stopwords = set;
        Ok(self)
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    /// Normalizes text: lowercase, strip emoji, strip punctuation, split on
    /// whitespace, drop stopwords, rejoin with single spaces.
    pub fn clean(&self, text: &str) -> String {
        let lowered;
        let text = if self.lowercase {
            lowered = text.to_lowercase();
            lowered.as_str()
        } else {
            text
        };
        let mut buf = String::with_capacity(text.len());
        for c in text.chars() {
            if self.strip_emoji && is_emoji(c) {
                buf.push(' ');
            } else if self.punctuation.contains(c) {
                if !is_apostrophe(c) {
                    buf.push(' ');
                }
            } else {
                buf.push(c);
            }
        }
        let mut out = String::with_capacity(buf.len());
        for tok in buf.split_whitespace() {
            if self.stopwords.contains(tok) {
                continue;
            }
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(tok);
        }
        out
    }
}

/// Parses a stopword file: one token per line, `#` comment lines ignored.
pub fn parse_stopwords(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

pub fn load_stopwords(path: &Path) -> Result<Vec<String>> {
    Ok(parse_stopwords(&read_lines(path)?))
}

pub fn default_stopwords() -> Vec<String> {
    parse_stopwords(DEFAULT_STOPWORDS)
}

/// Returns a copy of `comment` with `clean_text` populated.
pub fn preprocess(comment: &Comment, config: &PreprocessConfig) -> Comment {
    Comment {
        clean_text: config.clean(&comment.raw_text),
        ..comment.clone()
    }
}

pub fn preprocess_all(comments: &mut [Comment], config: &PreprocessConfig) {
    for c in comments {
        c.clean_text = config.clean(&c.raw_text);
    }
}

/// Splits preprocessed text into maximal runs of non-whitespace.
pub fn tokenize(clean_text: &str) -> Vec<String> {
    clean_text.split_whitespace().map(str::to_owned).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(stop: &[&str]) -> PreprocessConfig {
        PreprocessConfig::default()
            .with_stopwords(stop.iter().copied())
            .unwrap()
    }

    fn write_tmp(lines: &[&str]) -> tempfile_path::TmpFile {
        let t = tempfile_path::TmpFile::new();
        let mut f = fs::File::create(&t.0).unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        t
    }

    // Minimal temp file helper so the library does not need a tempfile dep.
    mod tempfile_path {
        use std::path::PathBuf;
        use std::sync::atomic::{AtomicUsize, Ordering};

        static N: AtomicUsize = AtomicUsize::new(0);

        pub struct TmpFile(pub PathBuf);

        impl TmpFile {
            pub fn new() -> Self {
                let n = N.fetch_add(1, Ordering::SeqCst);
                TmpFile(std::env::temp_dir().join(format!(
                    "cladesense-corpus-{}-{n}.jsonl",
                    std::process::id()
                )))
            }
        }

        impl Drop for TmpFile {
            fn drop(&mut self) {
                let _ = std::fs::remove_file(&self.0);
            }
        }
    }

    #[test]
    fn cleans_case_and_emoji() {
        assert_eq!(cfg(&[]).clean("Vaccines WORK! 😷"), "vaccines work");
    }

    #[test]
    fn drops_stopwords() {
        assert_eq!(cfg(&["the", "is"]).clean("the vaccine is safe"), "vaccine safe");
    }

    #[test]
    fn all_removed_is_empty() {
        assert_eq!(cfg(&[]).clean("!!!😷😷"), "");
    }

    #[test]
    fn apostrophes_join_and_other_punctuation_splits() {
        let c = cfg(&[]);
        assert_eq!(c.clean("Don't force--please"), "dont force please");
        assert_eq!(c.clean("yan..pnpilit"), "yan pnpilit");
        assert_eq!(c.clean("«bakuna»¿"), "bakuna");
    }

    #[test]
    fn zwj_sequences_are_removed() {
        assert_eq!(cfg(&[]).clean("ok 👨\u{200D}⚕\u{FE0F} doc"), "ok doc");
    }

    #[test]
    fn rejects_bad_stopwords() {
        assert!(PreprocessConfig::default().with_stopwords(["The"]).is_err());
        assert!(PreprocessConfig::default().with_stopwords(["a.b"]).is_err());
        assert!(PreprocessConfig::default().with_stopwords([""]).is_err());
    }

    #[test]
    fn default_list_is_valid() {
        let words = default_stopwords();
        assert!(words.contains(&"the".to_string()));
        assert!(words.contains(&"ang".to_string()));
        PreprocessConfig::default().with_stopwords(words).unwrap();
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("vaccine  safe"), vec!["vaccine", "safe"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("a b a"), vec!["a", "b", "a"]);
    }

    #[test]
    fn preprocess_leaves_raw_text() {
        let c = Comment {
            id: "c1".into(),
            post_id: "p1".into(),
            timestamp: parse_timestamp("2021-07-06T10:00:00Z").unwrap(),
            raw_text: "The Vaccine!".into(),
            clean_text: String::new(),
            reactions: None,
        };
        let out = preprocess(&c, &cfg(&["the"]));
        assert_eq!(out.raw_text, "The Vaccine!");
        assert_eq!(out.clean_text, "vaccine");
    }

    #[test]
    fn timestamp_formats() {
        assert!(parse_timestamp("2021-04-20T08:15:00Z").is_some());
        assert!(parse_timestamp("2021-04-20T08:15:00+08:00").is_some());
        assert!(parse_timestamp("2021-04-20 08:15:00").is_some());
        assert!(parse_timestamp("2021-04-20").is_some());
        assert!(parse_timestamp("yesterday").is_none());
        assert!(parse_timestamp("2021-02-30").is_none());
    }

    #[test]
    fn loads_two_records() {
        let f = write_tmp(&[
            r#"{"id":"c1","post_id":"p1","timestamp":"2021-07-06T00:00:00Z","text":"a"}"#,
            r#"{"id":"c2","post_id":"p1","timestamp":"2021-07-07T00:00:00Z","text":"b","reactions":4}"#,
        ]);
        let corpus = load_corpus(&f.0, None, LoadMode::Strict).unwrap();
        assert_eq!(corpus.comments.len(), 2);
        assert!(corpus.issues.is_empty());
        assert_eq!(corpus.comments[1].reactions, Some(4));
    }

    #[test]
    fn duplicate_id_names_both_lines() {
        let rec = |id: &str| {
            format!(r#"{{"id":"{id}","post_id":"p","timestamp":"2021-07-06","text":"x"}}"#)
        };
        let lines: Vec<String> = ["c0", "c2", "c1", "c3", "c4", "c5", "c1"]
            .iter()
            .map(|s| rec(s))
            .collect();
        let lines: Vec<&str> = lines.iter().map(String::as_str).collect();
        let f = write_tmp(&lines);
        let corpus = load_corpus(&f.0, None, LoadMode::Lenient).unwrap();
        assert_eq!(corpus.issues.len(), 1);
        let msg = &corpus.issues[0].message;
        assert!(msg.contains("\"c1\"") && msg.contains("lines 3 and 7"), "{msg}");
        assert_eq!(corpus.issues[0].line, 7);
        let err = load_corpus(&f.0, None, LoadMode::Strict).unwrap_err();
        assert!(err.to_string().contains("lines 3 and 7"));
    }

    #[test]
    fn lenient_skips_bad_lines() {
        let f = write_tmp(&[
            r#"{"id":"c1","post_id":"p1","timestamp":"2021-07-06T00:00:00Z","text":"a"}"#,
            "{not json",
            r#"{"id":"c2","post_id":"p1","timestamp":"nope","text":"b"}"#,
            "",
            r#"{"id":"c3","post_id":"p1","timestamp":"2021-07-06","text":"c"}"#,
        ]);
        let corpus = load_corpus(&f.0, None, LoadMode::Lenient).unwrap();
        assert_eq!(corpus.comments.len(), 2);
        let lines: Vec<usize> = corpus.issues.iter().map(|i| i.line).collect();
        assert_eq!(lines, vec![2, 3]);
        assert!(corpus.issues[1].message.contains("invalid timestamp"));
        assert!(load_corpus(&f.0, None, LoadMode::Strict).is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_corpus(Path::new("/nonexistent/comments.jsonl"), None, LoadMode::Lenient)
            .unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn loads_posts() {
        let c = write_tmp(&[r#"{"id":"c1","post_id":"p1","timestamp":"2021-07-06","text":"a"}"#]);
        let p = write_tmp(&[r#"{"id":"p1","timestamp":"2021-07-05T09:00:00Z","text":"Belgium chose to get vaccinated"}"#]);
        let corpus = load_corpus(&c.0, Some(&p.0), LoadMode::Strict).unwrap();
        assert_eq!(corpus.posts.len(), 1);
        assert_eq!(corpus.posts[0].id, "p1");
    }
}
