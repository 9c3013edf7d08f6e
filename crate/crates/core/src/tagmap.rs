//! The universal tagset, native-to-universal mappings, and rendering of
//! final tagged tweets.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::formats::{data_lines, read_text, two_columns, DataError};
use crate::langid::LanguageTag;
use crate::postag::TaggedSegment;
use crate::textprep::{is_punctuation, CleanTweet};

/// Declaration order doubles as the interval-metric code (`ADJ = 0` … `UN = 15`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum UniversalTag {
    Adj,
    Adp,
    Det,
    Noun,
    Pron,
    Verb,
    Adv,
    Conj,
    Num,
    Prt,
    Sym,
    X,
    Dem,
    Intf,
    Rdp,
    Un,
}

impl UniversalTag {
    pub const ALL: [UniversalTag; 16] = [
        UniversalTag::Adj,
        UniversalTag::Adp,
        UniversalTag::Det,
        UniversalTag::Noun,
        UniversalTag::Pron,
        UniversalTag::Verb,
        UniversalTag::Adv,
        UniversalTag::Conj,
        UniversalTag::Num,
        UniversalTag::Prt,
        UniversalTag::Sym,
        UniversalTag::X,
        UniversalTag::Dem,
        UniversalTag::Intf,
        UniversalTag::Rdp,
        UniversalTag::Un,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            UniversalTag::Adj => "ADJ",
            UniversalTag::Adp => "ADP",
            UniversalTag::Det => "DET",
            UniversalTag::Noun => "NOUN",
            UniversalTag::Pron => "PRON",
            UniversalTag::Verb => "VERB",
            UniversalTag::Adv => "ADV",
            UniversalTag::Conj => "CONJ",
            UniversalTag::Num => "NUM",
            UniversalTag::Prt => "PRT",
            UniversalTag::Sym => "SYM",
            UniversalTag::X => "X",
            UniversalTag::Dem => "DEM",
            UniversalTag::Intf => "INTF",
            UniversalTag::Rdp => "RDP",
            UniversalTag::Un => "UN",
        }
    }
}

impl fmt::Display for UniversalTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UniversalTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        UniversalTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown universal tag `{s}`"))
    }
}

/// A total map from a native tagset onto [`UniversalTag`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagMapping {
    pub name: String,
    entries: HashMap<String, UniversalTag>,
    pub default: UniversalTag,
}

pub const BENGALI_TABLE: &str = include_str!("../data/map_bn.tsv");
pub const ENGLISH_TABLE: &str = include_str!("../data/map_en.tsv");

impl TagMapping {
    /// Parses `native<TAB>universal` lines. A `*` native entry sets the
    /// default for unlisted tags; without one the default is `X`.
    pub fn parse(name: &str, content: &str) -> Result<Self, DataError> {
        let mut entries = HashMap::new();
        let mut default = UniversalTag::X;
        for (line_no, line) in data_lines(content) {
            let (native, universal) = two_columns(line, name, line_no)?;
            let tag = universal
                .parse::<UniversalTag>()
                .map_err(|e| DataError::parse(name, line_no, e))?;
            if native == "*" {
                default = tag;
            } else if entries.insert(native.to_string(), tag).is_some() {
                return Err(DataError::parse(
                    name,
                    line_no,
                    format!("duplicate native tag `{native}`"),
                ));
            }
        }
        Ok(Self {
            name: name.to_string(),
            entries,
            default,
        })
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        Self::parse(&path.display().to_string(), &read_text(path)?)
    }

    pub fn bengali() -> Self {
        Self::parse("bn", BENGALI_TABLE).expect("shipped Bengali table parses")
    }

    pub fn english() -> Self {
        Self::parse("en", ENGLISH_TABLE).expect("shipped English table parses")
    }

    pub fn map(&self, native: &str) -> UniversalTag {
        self.entries.get(native).copied().unwrap_or(self.default)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Bengali system tag → universal tag using the shipped table.
pub fn map_bn(tag: &str) -> UniversalTag {
    static MAP: std::sync::LazyLock<TagMapping> = std::sync::LazyLock::new(TagMapping::bengali);
    MAP.map(tag)
}

/// Penn Treebank tag → universal tag using the shipped table.
pub fn map_en(tag: &str) -> UniversalTag {
    static MAP: std::sync::LazyLock<TagMapping> = std::sync::LazyLock::new(TagMapping::english);
    MAP.map(tag)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedToken {
    pub surface: String,
    pub language: LanguageTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub native: Option<String>,
    pub universal: UniversalTag,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedTweet {
    pub id: String,
    pub tokens: Vec<RenderedToken>,
}

/// Universal tag for a token that never reached a POS tagger.
pub fn untagged_universal(surface: &str) -> UniversalTag {
    if !surface.is_empty() && surface.chars().all(is_punctuation) {
        UniversalTag::Sym
    } else {
        UniversalTag::X
    }
}

/// Puts tagged segments back into tweet order and reinserts the tokens that
/// were left out of segmentation (tagged `SYM` if all punctuation, else `X`).
pub fn render_tagged_tweet(
    tweet: &CleanTweet,
    segments: &[TaggedSegment],
    en_map: &TagMapping,
    bn_map: &TagMapping,
) -> RenderedTweet {
    let mut native: Vec<Option<(LanguageTag, &str)>> = vec![None; tweet.tokens.len()];
    for seg in segments {
        for (&pos, tag) in seg.segment.positions.iter().zip(&seg.native_tags) {
            if let Some(slot) = native.get_mut(pos) {
                *slot = Some((seg.segment.language, tag.as_str()));
            }
        }
    }
    let tokens = tweet
        .tokens
        .iter()
        .zip(native)
        .map(|(tok, tagged)| {
            let language = tok.language.unwrap_or(LanguageTag::Un);
            match tagged {
                Some((lang, tag)) => RenderedToken {
                    surface: tok.surface.clone(),
                    language,
                    native: Some(tag.to_string()),
                    universal: match lang {
                        LanguageTag::Bn => bn_map.map(tag),
                        _ => en_map.map(tag),
                    },
                },
                None => RenderedToken {
                    surface: tok.surface.clone(),
                    language,
                    native: None,
                    universal: untagged_universal(&tok.surface),
                },
            }
        })
        .collect();
    RenderedTweet {
        id: tweet.id.clone(),
        tokens,
    }
}

impl RenderedTweet {
    /// `surface\lang\UTAG` tokens joined by spaces.
    pub fn to_text(&self) -> String {
        self.tokens
            .iter()
            .map(|t| format!("{}\\{}\\{}", t.surface, t.language, t.universal))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Writes the universal tags back onto a copy of the tweet's tokens.
    pub fn annotate(&self, tweet: &CleanTweet) -> CleanTweet {
        let mut out = tweet.clone();
        for (tok, r) in out.tokens.iter_mut().zip(&self.tokens) {
            tok.pos = Some(r.universal);
        }
        out
    }
}

/// One machine-readable output record per token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub tweet: String,
    pub index: usize,
    pub surface: String,
    pub lang: LanguageTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub native: Option<String>,
    pub utag: UniversalTag,
}

impl RenderedTweet {
    pub fn records(&self) -> Vec<TokenRecord> {
        self.tokens
            .iter()
            .enumerate()
            .map(|(index, t)| TokenRecord {
                tweet: self.id.clone(),
                index,
                surface: t.surface.clone(),
                lang: t.language,
                native: t.native.clone(),
                utag: t.universal,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::langid::parse_language_tags;
    use crate::segment::{segment_tweet, UnknownPolicy};

    #[test]
    fn bengali_examples() {
        assert_eq!(map_bn("VAUX"), UniversalTag::Verb);
        assert_eq!(map_bn("WQ"), UniversalTag::Pron);
        assert_eq!(map_bn("ZZZ"), UniversalTag::X);
    }

    #[test]
    fn english_examples() {
        assert_eq!(map_en("NNS"), UniversalTag::Noun);
        assert_eq!(map_en("MD"), UniversalTag::Verb);
        assert_eq!(map_en("???"), UniversalTag::X);
        assert_eq!(map_en("-LRB-"), UniversalTag::Sym);
        assert_eq!(map_en("PRP$"), UniversalTag::Pron);
    }

    #[test]
    fn codes_follow_declaration_order() {
        for (i, t) in UniversalTag::ALL.iter().enumerate() {
            assert_eq!(t.code(), i);
            assert_eq!(t.as_str().parse::<UniversalTag>().unwrap(), *t);
        }
    }

    #[test]
    fn mapping_file_errors_and_default() {
        let m = TagMapping::parse("m", "A\tNOUN\n*\tUN\n").unwrap();
        assert_eq!(m.map("A"), UniversalTag::Noun);
        assert_eq!(m.map("B"), UniversalTag::Un);
        assert!(TagMapping::parse("m", "A\tNOPE\n").is_err());
        assert!(TagMapping::parse("m", "A\tNOUN\nA\tVERB\n").is_err());
    }

    #[test]
    fn reinserts_unknown_tokens() {
        let tweet = CleanTweet {
            id: "1".into(),
            tokens: parse_language_tags("khub\\bn nice\\en chilo\\bn .\\un ?x\\un").unwrap(),
        };
        let segs = segment_tweet(&tweet, UnknownPolicy::Drop);
        let tagged: Vec<TaggedSegment> = segs
            .into_iter()
            .map(|s| {
                let native_tags = vec!["JJ".to_string(); s.tokens.len()];
                TaggedSegment {
                    segment: s,
                    native_tags,
                    transliterated: None,
                }
            })
            .collect();
        let r = render_tagged_tweet(
            &tweet,
            &tagged,
            &TagMapping::english(),
            &TagMapping::bengali(),
        );
        assert_eq!(r.tokens.len(), tweet.tokens.len());
        assert_eq!(
            r.to_text(),
            "khub\\bn\\ADJ nice\\en\\ADJ chilo\\bn\\ADJ .\\un\\SYM ?x\\un\\X"
        );
        assert_eq!(
            r,
            render_tagged_tweet(
                &tweet,
                &tagged,
                &TagMapping::english(),
                &TagMapping::bengali()
            )
        );
    }
}
