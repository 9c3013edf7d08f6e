//! Same-language segmentation and language-switch bigram statistics.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::langid::LanguageTag;
use crate::textprep::{CleanTweet, Token};

/// How `UN` tokens affect segmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnknownPolicy {
    /// `UN` tokens are removed first; runs on either side of them may merge.
    #[default]
    Drop,
    /// `UN` tokens are removed but always end the current segment.
    Split,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub language: LanguageTag,
    pub tokens: Vec<Token>,
    /// Source-tweet index of every token.
    pub positions: Vec<usize>,
}

impl Segment {
    /// Half-open `[start, end)` range of source indices covered.
    pub fn span(&self) -> (usize, usize) {
        match (self.positions.first(), self.positions.last()) {
            (Some(&a), Some(&b)) => (a, b + 1),
            _ => (0, 0),
        }
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }
}

/// Groups the EN/BN tokens of a language-tagged tweet into maximal
/// same-language runs. Tokens without a language are treated as `UN`.
pub fn segment_tweet(tweet: &CleanTweet, policy: UnknownPolicy) -> Vec<Segment> {
    let mut segments: Vec<Segment> = Vec::new();
    let mut broken = true;
    for (pos, token) in tweet.tokens.iter().enumerate() {
        let lang = token.language.unwrap_or(LanguageTag::Un);
        if !lang.is_language() {
            if policy == UnknownPolicy::Split {
                broken = true;
            }
            continue;
        }
        match segments.last_mut() {
            Some(seg) if seg.language == lang && !broken => {
                seg.tokens.push(token.clone());
                seg.positions.push(pos);
            }
            _ => segments.push(Segment {
                language: lang,
                tokens: vec![token.clone()],
                positions: vec![pos],
            }),
        }
        broken = false;
    }
    segments
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SwitchKind {
    #[serde(rename = "EN-BN")]
    EnBn,
    #[serde(rename = "BN-EN")]
    BnEn,
    #[serde(rename = "EN-EN")]
    EnEn,
    #[serde(rename = "BN-BN")]
    BnBn,
}

impl SwitchKind {
    pub const ALL: [SwitchKind; 4] = [
        SwitchKind::EnBn,
        SwitchKind::BnEn,
        SwitchKind::EnEn,
        SwitchKind::BnBn,
    ];

    pub fn of(a: LanguageTag, b: LanguageTag) -> Option<Self> {
        use LanguageTag::*;
        match (a, b) {
            (En, Bn) => Some(SwitchKind::EnBn),
            (Bn, En) => Some(SwitchKind::BnEn),
            (En, En) => Some(SwitchKind::EnEn),
            (Bn, Bn) => Some(SwitchKind::BnBn),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SwitchKind::EnBn => "EN-BN",
            SwitchKind::BnEn => "BN-EN",
            SwitchKind::EnEn => "EN-EN",
            SwitchKind::BnBn => "BN-BN",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchStats {
    pub en_en: u64,
    pub bn_bn: u64,
    pub en_bn: u64,
    pub bn_en: u64,
}

impl SwitchStats {
    pub fn get(&self, kind: SwitchKind) -> u64 {
        match kind {
            SwitchKind::EnBn => self.en_bn,
            SwitchKind::BnEn => self.bn_en,
            SwitchKind::EnEn => self.en_en,
            SwitchKind::BnBn => self.bn_bn,
        }
    }

    fn bump(&mut self, kind: SwitchKind) {
        match kind {
            SwitchKind::EnBn => self.en_bn += 1,
            SwitchKind::BnEn => self.bn_en += 1,
            SwitchKind::EnEn => self.en_en += 1,
            SwitchKind::BnBn => self.bn_bn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.en_en + self.bn_bn + self.en_bn + self.bn_en
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchRow {
    pub switch: SwitchKind,
    pub count: u64,
    /// Distinct bigrams whose frequency exceeds each threshold, in threshold order.
    pub above: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchReport {
    pub stats: SwitchStats,
    pub thresholds: Vec<u64>,
    pub rows: Vec<SwitchRow>,
}

/// Counts adjacent EN/BN token pairs within each tweet by language pattern.
/// Pairs touching a `UN` (or untagged) token are skipped. Bigram identity
/// for the threshold columns is case-folded surface text.
pub fn switch_stats(corpus: &[CleanTweet], thresholds: &[u64]) -> SwitchReport {
    let mut stats = SwitchStats::default();
    let mut freq: HashMap<(SwitchKind, String, String), u64> = HashMap::new();
    for tweet in corpus {
        for pair in tweet.tokens.windows(2) {
            let (Some(a), Some(b)) = (pair[0].language, pair[1].language) else {
                continue;
            };
            let Some(kind) = SwitchKind::of(a, b) else {
                continue;
            };
            stats.bump(kind);
            *freq
                .entry((
                    kind,
                    pair[0].surface.to_lowercase(),
                    pair[1].surface.to_lowercase(),
                ))
                .or_default() += 1;
        }
    }
    let rows = SwitchKind::ALL
        .iter()
        .map(|&kind| SwitchRow {
            switch: kind,
            count: stats.get(kind),
            above: thresholds
                .iter()
                .map(|&t| {
                    freq.iter()
                        .filter(|((k, _, _), &n)| *k == kind && n > t)
                        .count()
                })
                .collect(),
        })
        .collect();
    SwitchReport {
        stats,
        thresholds: thresholds.to_vec(),
        rows,
    }
}

impl SwitchReport {
    /// Text table: one row per switch kind with a `Freq > t` column per threshold.
    pub fn to_table(&self) -> String {
        let mut header = vec!["Switch".to_string(), "Count".to_string()];
        header.extend(self.thresholds.iter().map(|t| format!("Freq > {t}")));
        let mut lines = vec![header.join("\t")];
        for row in &self.rows {
            let mut cols = vec![row.switch.label().to_string(), row.count.to_string()];
            cols.extend(row.above.iter().map(usize::to_string));
            lines.push(cols.join("\t"));
        }
        lines.join("\n") + "\n"
    }
}
