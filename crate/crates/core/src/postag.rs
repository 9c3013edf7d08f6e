//! Pluggable per-language POS tagging and the segment join.
//!
//! The built-in tagger is a bigram HMM with add-k smoothing. Tags are kept in
//! order of first appearance in the training corpus; that order breaks
//! Viterbi ties (lowest index wins).

use std::collections::BTreeMap;
use std::path::Path;

use codemix_nnet::persist::{self, PersistError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formats::{data_lines, read_text, DataError};
use crate::langid::LanguageTag;
use crate::segment::Segment;
use crate::translit::Transliterate;

pub const MODEL_KIND: &str = "hmm";

pub const DEFAULT_SMOOTHING: f64 = 0.1;

/// Probabilities below this are raised to it before taking logs in Viterbi,
/// so decoding stays total when `k = 0` leaves zero entries.
pub const LOG_FLOOR: f64 = 1e-12;

const ROW_TOLERANCE: f64 = 1e-9;

/// One training sentence: `(word, tag)` pairs.
pub type TaggedSentence = Vec<(String, String)>;

#[derive(Debug, Error)]
pub enum PostagError {
    #[error("tagged corpus is empty")]
    EmptyCorpus,
    #[error("sentence {0} is empty")]
    EmptySentence(usize),
    #[error("smoothing constant must be finite and >= 0, got {0}")]
    InvalidSmoothing(f64),
    #[error("invalid HMM: {0}")]
    InvalidModel(String),
    #[error("{language} tagger returned {actual} tags for {expected} tokens")]
    CountMismatch {
        language: LanguageTag,
        expected: usize,
        actual: usize,
    },
    #[error("no tagger for language `{0}`")]
    NoTagger(LanguageTag),
    #[error(transparent)]
    Persist(#[from] PersistError),
}

/// Parses one sentence per line, tokens `word/TAG` split at the last `/`.
pub fn parse_tagged_corpus(content: &str, origin: &str) -> Result<Vec<TaggedSentence>, DataError> {
    data_lines(content)
        .map(|(line_no, line)| {
            line.split_whitespace()
                .map(|item| match item.rsplit_once('/') {
                    Some((w, t)) if !w.is_empty() && !t.is_empty() => {
                        Ok((w.to_string(), t.to_string()))
                    }
                    _ => Err(DataError::parse(
                        origin,
                        line_no,
                        format!("expected word/TAG, got `{item}`"),
                    )),
                })
                .collect()
        })
        .collect()
}

pub fn load_tagged_corpus(path: &Path) -> Result<Vec<TaggedSentence>, DataError> {
    parse_tagged_corpus(&read_text(path)?, &path.display().to_string())
}

/// A POS tagger for one language. Implementations must return one tag per word.
pub trait PosTagger: Send + Sync {
    fn tag(&self, words: &[String]) -> Result<Vec<String>, PostagError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmTagger {
    tags: Vec<String>,
    /// Word → emission column. Column `words.len()` is UNK.
    words: BTreeMap<String, usize>,
    /// `P(tag | START)`.
    start: Vec<f64>,
    /// `P(next | tag)` with a final END column.
    transition: Vec<Vec<f64>>,
    /// `P(word | tag)` with a final UNK column.
    emission: Vec<Vec<f64>>,
    pub smoothing: f64,
    pub fold_case: bool,
}

fn normalize(counts: &[f64], k: f64) -> Vec<f64> {
    let total: f64 = counts.iter().sum::<f64>() + k * counts.len() as f64;
    counts.iter().map(|c| (c + k) / total).collect()
}

fn floor_ln(p: f64) -> f64 {
    p.max(LOG_FLOOR).ln()
}

/// Trains a bigram HMM from MLE counts with add-`k` smoothing. Words are
/// case-folded.
pub fn train_hmm(corpus: &[TaggedSentence], k: f64) -> Result<HmmTagger, PostagError> {
    if !(k.is_finite() && k >= 0.0) {
        return Err(PostagError::InvalidSmoothing(k));
    }
    if corpus.is_empty() {
        return Err(PostagError::EmptyCorpus);
    }
    let mut tags: Vec<String> = Vec::new();
    let mut tag_ids: BTreeMap<&str, usize> = BTreeMap::new();
    let mut words: BTreeMap<String, usize> = BTreeMap::new();
    for (i, sentence) in corpus.iter().enumerate() {
        if sentence.is_empty() {
            return Err(PostagError::EmptySentence(i));
        }
        for (w, t) in sentence {
            if !tag_ids.contains_key(t.as_str()) {
                tag_ids.insert(t, tags.len());
                tags.push(t.clone());
            }
            let n = words.len();
            words.entry(w.to_lowercase()).or_insert(n);
        }
    }
    let (n_tags, n_words) = (tags.len(), words.len());
    let mut start = vec![0.0; n_tags];
    let mut transition = vec![vec![0.0; n_tags + 1]; n_tags];
    let mut emission = vec![vec![0.0; n_words + 1]; n_tags];
    for sentence in corpus {
        let ids: Vec<usize> = sentence.iter().map(|(_, t)| tag_ids[t.as_str()]).collect();
        start[ids[0]] += 1.0;
        for pair in ids.windows(2) {
            transition[pair[0]][pair[1]] += 1.0;
        }
        transition[ids[ids.len() - 1]][n_tags] += 1.0;
        for ((w, _), &t) in sentence.iter().zip(&ids) {
            emission[t][words[&w.to_lowercase()]] += 1.0;
        }
    }
    Ok(HmmTagger {
        start: normalize(&start, k),
        transition: transition.iter().map(|r| normalize(r, k)).collect(),
        emission: emission.iter().map(|r| normalize(r, k)).collect(),
        tags,
        words,
        smoothing: k,
        fold_case: true,
    })
}

impl HmmTagger {
    /// Builds a tagger from explicit distributions. `transition` rows carry a
    /// final END column and `emission` rows a final UNK column; every row and
    /// `start` must sum to 1.
    pub fn from_probabilities(
        tags: Vec<String>,
        vocabulary: Vec<String>,
        start: Vec<f64>,
        transition: Vec<Vec<f64>>,
        emission: Vec<Vec<f64>>,
    ) -> Result<Self, PostagError> {
        let words = vocabulary
            .into_iter()
            .enumerate()
            .map(|(i, w)| (w, i))
            .collect();
        let tagger = Self {
            tags,
            words,
            start,
            transition,
            emission,
            smoothing: 0.0,
            fold_case: false,
        };
        tagger.validate()?;
        Ok(tagger)
    }

    pub fn validate(&self) -> Result<(), PostagError> {
        let bad = |m: String| Err(PostagError::InvalidModel(m));
        let t = self.tags.len();
        if t == 0 {
            return bad("no tags".into());
        }
        if self.words.values().any(|&i| i >= self.words.len()) {
            return bad("vocabulary indices are not dense".into());
        }
        let check = |name: &str, row: &[f64], len: usize| -> Result<(), PostagError> {
            if row.len() != len {
                return bad(format!("{name} has {} entries, expected {len}", row.len()));
            }
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return bad(format!("{name} has a negative or non-finite entry"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return bad(format!("{name} sums to {sum}"));
            }
            Ok(())
        };
        check("start", &self.start, t)?;
        if self.transition.len() != t || self.emission.len() != t {
            return bad("one transition and emission row per tag required".into());
        }
        for (i, row) in self.transition.iter().enumerate() {
            check(&format!("transition row {i}"), row, t + 1)?;
        }
        for (i, row) in self.emission.iter().enumerate() {
            check(&format!("emission row {i}"), row, self.words.len() + 1)?;
        }
        Ok(())
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn start_probabilities(&self) -> &[f64] {
        &self.start
    }

    /// Rows indexed by tag; the last column is END.
    pub fn transition_probabilities(&self) -> &[Vec<f64>] {
        &self.transition
    }

    /// Rows indexed by tag; the last column is UNK.
    pub fn emission_probabilities(&self) -> &[Vec<f64>] {
        &self.emission
    }

    /// Emission column of a word (UNK column if unseen).
    pub fn word_index(&self, word: &str) -> usize {
        let key = if self.fold_case {
            word.to_lowercase()
        } else {
            word.to_string()
        };
        self.words.get(&key).copied().unwrap_or(self.words.len())
    }

    /// Log-score of a complete tag path, floored as in Viterbi.
    pub fn path_score(&self, tag_ids: &[usize], words: &[&str]) -> f64 {
        let Some(&first) = tag_ids.first() else {
            return 0.0;
        };
        let mut s = floor_ln(self.start[first]);
        for (i, (&t, w)) in tag_ids.iter().zip(words).enumerate() {
            if i > 0 {
                s += floor_ln(self.transition[tag_ids[i - 1]][t]);
            }
            s += floor_ln(self.emission[t][self.word_index(w)]);
        }
        s + floor_ln(self.transition[tag_ids[tag_ids.len() - 1]][self.tags.len()])
    }

    /// Viterbi decode, returning tag indices.
    pub fn viterbi(&self, words: &[&str]) -> Vec<usize> {
        let n_tags = self.tags.len();
        if words.is_empty() {
            return Vec::new();
        }
        let emit: Vec<usize> = words.iter().map(|w| self.word_index(w)).collect();
        let log_trans: Vec<Vec<f64>> = self
            .transition
            .iter()
            .map(|r| r.iter().map(|&p| floor_ln(p)).collect())
            .collect();
        let mut score: Vec<f64> = (0..n_tags)
            .map(|t| floor_ln(self.start[t]) + floor_ln(self.emission[t][emit[0]]))
            .collect();
        let mut back: Vec<Vec<usize>> = Vec::with_capacity(words.len());
        for &e in &emit[1..] {
            let mut next = vec![0.0; n_tags];
            let mut ptr = vec![0; n_tags];
            for t in 0..n_tags {
                let (best, arg) = best_predecessor(&score, |p| log_trans[p][t]);
                next[t] = best + floor_ln(self.emission[t][e]);
                ptr[t] = arg;
            }
            back.push(ptr);
            score = next;
        }
        let (_, mut t) = best_predecessor(&score, |p| log_trans[p][n_tags]);
        let mut path = vec![t];
        for ptr in back.iter().rev() {
            t = ptr[t];
            path.push(t);
        }
        path.reverse();
        path
    }

    pub fn tag_sequence(&self, words: &[&str]) -> Vec<String> {
        self.viterbi(words)
            .into_iter()
            .map(|t| self.tags[t].clone())
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), PersistError> {
        persist::save(path, MODEL_KIND, self)
    }

    pub fn load(path: &Path) -> Result<Self, PostagError> {
        let tagger: HmmTagger = persist::load(path, MODEL_KIND)?;
        tagger.validate()?;
        Ok(tagger)
    }
}

/// Max over predecessors of `score[p] + step(p)`; strict `>` keeps the lowest index on ties.
fn best_predecessor(score: &[f64], step: impl Fn(usize) -> f64) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for (p, s) in score.iter().enumerate() {
        let v = s + step(p);
        if v > best.0 {
            best = (v, p);
        }
    }
    best
}

impl PosTagger for HmmTagger {
    fn tag(&self, words: &[String]) -> Result<Vec<String>, PostagError> {
        let refs: Vec<&str> = words.iter().map(String::as_str).collect();
        Ok(self.tag_sequence(&refs))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedSegment {
    pub segment: Segment,
    /// One native tag per token of `segment`.
    pub native_tags: Vec<String>,
    /// Script-converted words the tagger saw, for BN segments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transliterated: Option<Vec<String>>,
}

/// Tags each segment as its own sentence. EN segments go straight to
/// `english`; BN segments are transliterated word by word first, and the
/// resulting tags are attached back to the Romanized tokens by position.
pub fn tag_segments(
    english: &dyn PosTagger,
    bengali: &dyn PosTagger,
    translit: &dyn Transliterate,
    segments: &[Segment],
) -> Result<Vec<TaggedSegment>, PostagError> {
    segments
        .iter()
        .map(|seg| {
            let surfaces: Vec<String> = seg.tokens.iter().map(|t| t.surface.clone()).collect();
            let (native_tags, transliterated) = match seg.language {
                LanguageTag::En => (english.tag(&surfaces)?, None),
                LanguageTag::Bn => {
                    let script: Vec<String> =
                        surfaces.iter().map(|w| translit.transliterate(w)).collect();
                    (bengali.tag(&script)?, Some(script))
                }
                LanguageTag::Un => return Err(PostagError::NoTagger(LanguageTag::Un)),
            };
            if native_tags.len() != surfaces.len() {
                return Err(PostagError::CountMismatch {
                    language: seg.language,
                    expected: surfaces.len(),
                    actual: native_tags.len(),
                });
            }
            Ok(TaggedSegment {
                segment: seg.clone(),
                native_tags,
                transliterated,
            })
        })
        .collect()
}
