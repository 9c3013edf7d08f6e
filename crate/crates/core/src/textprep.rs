//! Corpus ingestion, tweet tokenization and cleaning.
//!
//! Tokenization is tweet-aware: URLs, @-mentions, #-hashtags, emoji runs and
//! ASCII smileys are recognised as whole tokens before ordinary words have
//! their leading and trailing punctuation detached. Cleaning then simply
//! drops the tokens of those five kinds, which makes it idempotent and never
//! increases the token count.

use std::path::Path;
use std::sync::LazyLock;

use crate::formats::{read_text, DataError};
use crate::langid::LanguageTag;
use crate::tagmap::UniversalTag;
use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTweet {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<LanguageTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<UniversalTag>,
}

impl Token {
    pub fn new(surface: impl Into<String>) -> Self {
        Self {
            surface: surface.into(),
            language: None,
            pos: None,
        }
    }

    pub fn with_language(surface: impl Into<String>, language: LanguageTag) -> Self {
        Self {
            language: Some(language),
            ..Self::new(surface)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanTweet {
    pub id: String,
    pub tokens: Vec<Token>,
}

impl CleanTweet {
    /// Token surfaces joined by single spaces.
    pub fn joined(&self) -> String {
        self.tokens
            .iter()
            .map(|t| t.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    /// One tweet per line; the id is the 1-based line number.
    Text,
    /// One JSON object per line with string fields `id` and `text`.
    Records,
}

impl std::str::FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Self::Text),
            "records" | "jsonl" => Ok(Self::Records),
            other => Err(format!(
                "unknown corpus format `{other}` (expected text or records)"
            )),
        }
    }
}

/// Reads a corpus file. Blank lines and records whose text is blank are
/// skipped; everything else yields one tweet, in file order.
pub fn ingest_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<RawTweet>, DataError> {
    let content = read_text(path)?;
    parse_corpus(&content, format, &path.display().to_string())
}

pub fn parse_corpus(
    content: &str,
    format: CorpusFormat,
    origin: &str,
) -> Result<Vec<RawTweet>, DataError> {
    let mut tweets = Vec::new();
    for (n, line) in content.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let tweet = match format {
            CorpusFormat::Text => RawTweet {
                id: line_no.to_string(),
                text: line.to_string(),
            },
            CorpusFormat::Records => serde_json::from_str::<RawTweet>(line)
                .map_err(|e| DataError::parse(origin, line_no, format!("malformed record: {e}")))?,
        };
        if !tweet.text.trim().is_empty() {
            tweets.push(tweet);
        }
    }
    Ok(tweets)
}

/// Emoticons removed during cleaning. Matched only as complete tokens.
pub const SMILEYS: &[&str] = &[
    ":)", ":-)", ":(", ":-(", ":D", ":-D", ";)", ";-)", ":P", ":-P", ":p", ":-p", ":'(", ":O",
    ":-O", ":o", ":/", ":-/", ":|", ":*", "=)", "=(", "<3", "</3", "^_^", "-_-", "xD", "XD", "B)",
];

const EMOJI_CLASS: &str = r"[\x{1F000}-\x{1FAFF}\x{2600}-\x{27BF}\x{2300}-\x{23FF}\x{2B00}-\x{2BFF}\x{3030}\x{303D}\x{3297}\x{3299}\x{FE0E}\x{FE0F}\x{200D}\x{20E3}\x{E0020}-\x{E007F}]";

static ENTITY_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(
        r"(?i)(?P<url>(?:https?|ftp)://\S+|www\.\S+)|(?P<mention>@\w+)|(?P<hashtag>#\w+)|(?P<emoji>{EMOJI_CLASS}+)"
    ))
    .expect("entity regex")
});

static EMOJI_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(EMOJI_CLASS).expect("emoji regex"));

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PieceKind {
    Word,
    Punct,
    Url,
    Mention,
    Hashtag,
    Emoji,
    Smiley,
}

pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '“' | '”'
                | '‘'
                | '’'
                | '…'
                | '–'
                | '—'
                | '।'
                | '«'
                | '»'
                | '¡'
                | '¿'
                | '·'
                | '•'
        )
}

pub fn is_smiley(s: &str) -> bool {
    SMILEYS.contains(&s)
}

/// Splits text into typed pieces. Concatenating the pieces of a chunk gives
/// back the chunk exactly.
pub fn scan(text: &str) -> Vec<(PieceKind, &str)> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        if is_smiley(chunk) {
            out.push((PieceKind::Smiley, chunk));
            continue;
        }
        let mut last = 0;
        for caps in ENTITY_RE.captures_iter(chunk) {
            let m = caps.get(0).expect("whole match");
            split_plain(&chunk[last..m.start()], &mut out);
            let kind = if caps.name("url").is_some() {
                PieceKind::Url
            } else if caps.name("mention").is_some() {
                PieceKind::Mention
            } else if caps.name("hashtag").is_some() {
                PieceKind::Hashtag
            } else {
                PieceKind::Emoji
            };
            out.push((kind, m.as_str()));
            last = m.end();
        }
        split_plain(&chunk[last..], &mut out);
    }
    out
}

/// Detaches the leading and trailing punctuation runs of an entity-free span.
fn split_plain<'a>(span: &'a str, out: &mut Vec<(PieceKind, &'a str)>) {
    if span.is_empty() {
        return;
    }
    let start = span.find(|c| !is_punctuation(c));
    let Some(start) = start else {
        out.push((classify_punct(span), span));
        return;
    };
    let end = span
        .char_indices()
        .rev()
        .find(|&(_, c)| !is_punctuation(c))
        .map(|(i, c)| i + c.len_utf8())
        .expect("non-punctuation char exists");
    if start > 0 {
        out.push((classify_punct(&span[..start]), &span[..start]));
    }
    let core = &span[start..end];
    let kind = if is_smiley(core) {
        PieceKind::Smiley
    } else {
        PieceKind::Word
    };
    out.push((kind, core));
    if end < span.len() {
        out.push((classify_punct(&span[end..]), &span[end..]));
    }
}

fn classify_punct(run: &str) -> PieceKind {
    if is_smiley(run) {
        PieceKind::Smiley
    } else {
        PieceKind::Punct
    }
}

/// Whitespace split with leading/trailing punctuation runs detached.
/// Recognised entities stay whole, so the concatenation of the output equals
/// the input with whitespace removed.
pub fn tokenize(text: &str) -> Vec<String> {
    scan(text).into_iter().map(|(_, s)| s.to_string()).collect()
}

/// Counts of entities removed from one tweet or a whole corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub tweets: usize,
    pub urls: usize,
    pub mentions: usize,
    pub hashtags: usize,
    pub emoji: usize,
    pub smileys: usize,
    pub tokens_kept: usize,
    /// Tweets left with no tokens at all.
    pub emptied_tweets: usize,
}

impl CleaningReport {
    pub fn merge(&mut self, other: &CleaningReport) {
        self.tweets += other.tweets;
        self.urls += other.urls;
        self.mentions += other.mentions;
        self.hashtags += other.hashtags;
        self.emoji += other.emoji;
        self.smileys += other.smileys;
        self.tokens_kept += other.tokens_kept;
        self.emptied_tweets += other.emptied_tweets;
    }
}

pub fn clean(tweet: &RawTweet) -> CleanTweet {
    clean_with_report(tweet).0
}

pub fn clean_with_report(tweet: &RawTweet) -> (CleanTweet, CleaningReport) {
    let mut report = CleaningReport {
        tweets: 1,
        ..Default::default()
    };
    let mut tokens = Vec::new();
    for (kind, piece) in scan(&tweet.text) {
        match kind {
            PieceKind::Url => report.urls += 1,
            PieceKind::Mention => report.mentions += 1,
            PieceKind::Hashtag => report.hashtags += 1,
            PieceKind::Emoji => report.emoji += EMOJI_RE.find_iter(piece).count(),
            PieceKind::Smiley => report.smileys += 1,
            PieceKind::Word | PieceKind::Punct => tokens.push(Token::new(piece)),
        }
    }
    report.tokens_kept = tokens.len();
    report.emptied_tweets = usize::from(tokens.is_empty());
    (
        CleanTweet {
            id: tweet.id.clone(),
            tokens,
        },
        report,
    )
}

/// Cleans a corpus, dropping tweets that clean to nothing.
pub fn clean_corpus(tweets: &[RawTweet]) -> (Vec<CleanTweet>, CleaningReport) {
    let mut report = CleaningReport::default();
    let mut out = Vec::with_capacity(tweets.len());
    for t in tweets {
        let (c, r) = clean_with_report(t);
        report.merge(&r);
        if !c.tokens.is_empty() {
            out.push(c);
        }
    }
    (out, report)
}
