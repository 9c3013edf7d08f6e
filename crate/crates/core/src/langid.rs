//! Token-level language identification: English vs. Romanized Bengali,
//! with a rule-based `UN` tag for tokens that carry no letters or digits.
//!
//! The classifier embeds the case-folded characters of a word, runs them
//! through a stacked LSTM, and maps the last top-layer hidden vector through
//! a one-unit dense layer and a sigmoid to `P(BN)`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use codemix_nnet::loss::bce_logit_grad;
use codemix_nnet::persist::{self, PersistError};
use codemix_nnet::train::train_with;
use codemix_nnet::{
    bce_loss, sigmoid, CharVocab, EpochMetrics, Evaluation, ModelDims, NnetError, Parameters,
    SequenceModelParams, Special, TrainConfig, TrainReport, Trainable,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formats::{data_lines, read_text, two_columns, DataError};
use crate::textprep::CleanTweet;

pub const MODEL_KIND: &str = "langid";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LanguageTag {
    #[serde(rename = "en")]
    En,
    #[serde(rename = "bn")]
    Bn,
    #[serde(rename = "un")]
    Un,
}

impl LanguageTag {
    pub fn as_str(self) -> &'static str {
        match self {
            LanguageTag::En => "en",
            LanguageTag::Bn => "bn",
            LanguageTag::Un => "un",
        }
    }

    pub fn is_language(self) -> bool {
        self != LanguageTag::Un
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LanguageTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "en" => Ok(LanguageTag::En),
            "bn" => Ok(LanguageTag::Bn),
            "un" => Ok(LanguageTag::Un),
            _ => Err(format!("unknown language tag `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub surface: String,
    pub language: LanguageTag,
}

/// Reads a `surface<TAB>lang` lexicon with `lang` in {en, bn}.
pub fn load_lexicon(path: &Path) -> Result<Vec<LexiconEntry>, DataError> {
    parse_lexicon(&read_text(path)?, &path.display().to_string())
}

pub fn parse_lexicon(content: &str, origin: &str) -> Result<Vec<LexiconEntry>, DataError> {
    let mut out = Vec::new();
    for (line_no, line) in data_lines(content) {
        let (surface, lang) = two_columns(line, origin, line_no)?;
        if surface.contains(char::is_whitespace) {
            return Err(DataError::parse(
                origin,
                line_no,
                format!("`{surface}` is not a single token"),
            ));
        }
        let language = match lang.parse::<LanguageTag>() {
            Ok(l @ (LanguageTag::En | LanguageTag::Bn)) => l,
            _ => {
                return Err(DataError::parse(
                    origin,
                    line_no,
                    format!("language must be en or bn, got `{lang}`"),
                ))
            }
        };
        out.push(LexiconEntry {
            surface: surface.to_string(),
            language,
        });
    }
    Ok(out)
}

/// Which tokens bypass the classifier and are tagged `UN`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnknownRule {
    /// Tokens with no ASCII letter and no ASCII digit.
    #[default]
    NoAlphanumeric,
    /// Tokens containing any character that is not an ASCII letter or digit.
    AnyNonAlphanumeric,
}

impl UnknownRule {
    pub fn is_unknown(self, token: &str) -> bool {
        match self {
            UnknownRule::NoAlphanumeric => !token.chars().any(|c| c.is_ascii_alphanumeric()),
            UnknownRule::AnyNonAlphanumeric => {
                token.is_empty() || token.chars().any(|c| !c.is_ascii_alphanumeric())
            }
        }
    }
}

/// `true` iff the token has no ASCII letter and no digit.
pub fn is_unknown(token: &str) -> bool {
    UnknownRule::NoAlphanumeric.is_unknown(token)
}

/// Default training regime: batch 30, 30 epochs, 20% validation.
pub fn default_train_config() -> TrainConfig {
    TrainConfig {
        batch_size: 30,
        epochs: 30,
        validation_split: 0.2,
        ..TrainConfig::default()
    }
}

#[derive(Debug, Error)]
pub enum LangIdError {
    #[error("lexicon is empty")]
    EmptyLexicon,
    #[error("lexicon has no {0} entries; both en and bn are required")]
    SingleClass(LanguageTag),
    #[error(transparent)]
    Nnet(#[from] NnetError),
    #[error(transparent)]
    Persist(#[from] PersistError),
}

/// The trainable part of the language model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    params: SequenceModelParams,
}

/// Character ids of one word and whether it is Bengali.
pub type LabelledWord = (Vec<usize>, bool);

impl Classifier {
    pub fn new(params: SequenceModelParams) -> Self {
        Self { params }
    }

    pub fn params(&self) -> &SequenceModelParams {
        &self.params
    }

    pub fn encode(&self, word: &str) -> Vec<usize> {
        let ids = self.params.vocab().encode(&word.to_lowercase());
        if ids.is_empty() {
            self.params
                .vocab()
                .special(Special::Unk)
                .into_iter()
                .collect()
        } else {
            ids
        }
    }

    /// `P(BN)` for already-encoded characters.
    pub fn probability(&self, ids: &[usize]) -> Result<f64, NnetError> {
        let trace = self.params.forward(ids, None)?;
        let h = trace
            .outputs()
            .last()
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.params.hidden_dim()]);
        Ok(sigmoid(self.params.head_logits(&h)?[0]))
    }

    /// BCE loss and its gradient for one word.
    pub fn loss_and_grad(
        &self,
        ids: &[usize],
        is_bn: bool,
        grads: &mut Self,
    ) -> Result<f64, NnetError> {
        let trace = self.params.forward(ids, None)?;
        let hidden = self.params.hidden_dim();
        let h = trace
            .outputs()
            .last()
            .cloned()
            .unwrap_or_else(|| vec![0.0; hidden]);
        let p = sigmoid(self.params.head_logits(&h)?[0]);
        let dh = self
            .params
            .head_backward(&h, &[bce_logit_grad(p, is_bn)], &mut grads.params);
        let mut d_out = vec![vec![0.0; hidden]; trace.len()];
        if let Some(last) = d_out.last_mut() {
            *last = dh;
        }
        self.params
            .backward(&trace, &d_out, None, &mut grads.params)?;
        Ok(bce_loss(p, is_bn))
    }
}

impl Parameters for Classifier {
    fn tensors(&self) -> Vec<&[f64]> {
        self.params.tensors()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.params.tensors_mut()
    }
}

impl Trainable for Classifier {
    type Example = LabelledWord;

    fn batch_gradient(&self, batch: &[&LabelledWord]) -> codemix_nnet::Result<(f64, Self)> {
        let mut grads = self.zeros_like();
        let mut loss = 0.0;
        for (ids, is_bn) in batch {
            loss += self.loss_and_grad(ids, *is_bn, &mut grads)?;
        }
        let n = batch.len().max(1) as f64;
        grads.scale(1.0 / n);
        Ok((loss / n, grads))
    }

    fn evaluate(&self, (ids, is_bn): &LabelledWord) -> codemix_nnet::Result<Evaluation> {
        let p = self.probability(ids)?;
        Ok(Evaluation {
            loss: bce_loss(p, *is_bn),
            correct: (p >= 0.5) == *is_bn,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageModel {
    classifier: Classifier,
    /// `P(BN)` at or above this is tagged BN.
    pub threshold: f64,
    pub unknown_rule: UnknownRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Keep,
    Discard,
}

pub fn train_langid(
    lexicon: &[LexiconEntry],
    dims: ModelDims,
    cfg: &TrainConfig,
) -> Result<(LanguageModel, TrainReport), LangIdError> {
    train_langid_with(lexicon, dims, cfg, |_| {})
}

pub fn train_langid_with<F: FnMut(&EpochMetrics)>(
    lexicon: &[LexiconEntry],
    dims: ModelDims,
    cfg: &TrainConfig,
    on_epoch: F,
) -> Result<(LanguageModel, TrainReport), LangIdError> {
    if lexicon.is_empty() {
        return Err(LangIdError::EmptyLexicon);
    }
    for lang in [LanguageTag::En, LanguageTag::Bn] {
        if !lexicon.iter().any(|e| e.language == lang) {
            return Err(LangIdError::SingleClass(lang));
        }
    }
    cfg.validate()?;
    let folded: Vec<String> = lexicon.iter().map(|e| e.surface.to_lowercase()).collect();
    let vocab = CharVocab::build(
        &[Special::Pad, Special::Unk],
        folded.iter().map(String::as_str),
    );
    // Initialisation draws from a stream separate from the shuffling stream.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_1a6e);
    let mut classifier = Classifier::new(SequenceModelParams::init(vocab, dims, Some(1), &mut rng));
    let data: Vec<LabelledWord> = lexicon
        .iter()
        .map(|e| (classifier.encode(&e.surface), e.language == LanguageTag::Bn))
        .collect();
    let report = train_with(&mut classifier, &data, cfg, on_epoch)?;
    Ok((
        LanguageModel {
            classifier,
            threshold: 0.5,
            unknown_rule: UnknownRule::default(),
        },
        report,
    ))
}

impl LanguageModel {
    pub fn from_classifier(classifier: Classifier) -> Self {
        Self {
            classifier,
            threshold: 0.5,
            unknown_rule: UnknownRule::default(),
        }
    }

    pub fn classifier(&self) -> &Classifier {
        &self.classifier
    }

    /// `P(BN)` from the network, regardless of the unknown rule.
    pub fn bengali_probability(&self, token: &str) -> f64 {
        let ids = self.classifier.encode(token);
        // Ids come from the model's own vocabulary, so forward cannot fail.
        self.classifier.probability(&ids).expect("validated model")
    }

    pub fn tag_token(&self, token: &str) -> LanguageTag {
        if self.unknown_rule.is_unknown(token) {
            LanguageTag::Un
        } else if self.bengali_probability(token) >= self.threshold {
            LanguageTag::Bn
        } else {
            LanguageTag::En
        }
    }

    /// Tags every token; a tweet with no EN or BN token is discarded.
    pub fn tag_tweet(&self, tweet: &CleanTweet) -> (CleanTweet, Verdict) {
        let mut tagged = tweet.clone();
        for t in &mut tagged.tokens {
            t.language = Some(self.tag_token(&t.surface));
        }
        let verdict = if tagged
            .tokens
            .iter()
            .any(|t| t.language.is_some_and(LanguageTag::is_language))
        {
            Verdict::Keep
        } else {
            Verdict::Discard
        };
        (tagged, verdict)
    }

    pub fn save(&self, path: &Path) -> Result<(), PersistError> {
        persist::save(path, MODEL_KIND, self)
    }

    pub fn load(path: &Path) -> Result<Self, LangIdError> {
        let model: LanguageModel = persist::load(path, MODEL_KIND)?;
        model.classifier.params.validate()?;
        if model.classifier.params.head().map(|h| h.output_dim()) != Some(1) {
            return Err(NnetError::ShapeMismatch {
                context: "langid head",
                expected: 1,
                actual: model.classifier.params.head().map_or(0, |h| h.output_dim()),
            }
            .into());
        }
        Ok(model)
    }
}

/// Renders tokens as `surface\lang` joined by spaces.
pub fn render_language_tags(tweet: &CleanTweet) -> String {
    tweet
        .tokens
        .iter()
        .map(|t| match t.language {
            Some(l) => format!("{}\\{}", t.surface, l),
            None => t.surface.clone(),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parses one `surface\lang` line back into tokens.
pub fn parse_language_tags(line: &str) -> Result<Vec<crate::textprep::Token>, String> {
    line.split_whitespace()
        .map(|item| {
            let mut parts = item.split('\\');
            let surface = parts.next().unwrap_or_default();
            let lang = parts
                .next()
                .ok_or_else(|| format!("token `{item}` has no language tag"))?;
            if surface.is_empty() {
                return Err(format!("token `{item}` has an empty surface"));
            }
            let language = lang.parse::<LanguageTag>()?;
            Ok(crate::textprep::Token::with_language(surface, language))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_rule() {
        assert!(is_unknown("."));
        assert!(is_unknown("?!"));
        assert!(!is_unknown("golpo"));
        assert!(!is_unknown("a1!"));
        assert!(!is_unknown("42"));
        assert!(UnknownRule::AnyNonAlphanumeric.is_unknown("a1!"));
        assert!(UnknownRule::AnyNonAlphanumeric.is_unknown("don't"));
        assert!(!UnknownRule::AnyNonAlphanumeric.is_unknown("dont"));
    }

    #[test]
    fn lexicon_parsing() {
        let lex = parse_lexicon("# comment\nkhub\tbn\nnice\ten\n", "lex").unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex[0].language, LanguageTag::Bn);
        let err = parse_lexicon("khub\tbn\n.\tun\n", "lex.tsv").unwrap_err();
        assert!(err.to_string().contains("lex.tsv:2"));
        assert!(parse_lexicon("khub bn\n", "lex").is_err());
    }

    #[test]
    fn empty_and_single_class_lexicons_rejected() {
        let cfg = default_train_config();
        assert!(matches!(
            train_langid(&[], ModelDims::default(), &cfg),
            Err(LangIdError::EmptyLexicon)
        ));
        let en_only = parse_lexicon("a\ten\nb\ten\n", "lex").unwrap();
        assert!(matches!(
            train_langid(&en_only, ModelDims::default(), &cfg),
            Err(LangIdError::SingleClass(LanguageTag::Bn))
        ));
    }

    #[test]
    fn language_tag_round_trip() {
        for l in [LanguageTag::En, LanguageTag::Bn, LanguageTag::Un] {
            assert_eq!(l.as_str().parse::<LanguageTag>().unwrap(), l);
            assert_eq!(l.as_str().to_uppercase().parse::<LanguageTag>().unwrap(), l);
        }
    }

    #[test]
    fn render_and_parse_language_tags() {
        let toks = parse_language_tags("I\\en golpo\\bn .\\un").unwrap();
        let tweet = CleanTweet {
            id: "1".into(),
            tokens: toks,
        };
        assert_eq!(render_language_tags(&tweet), "I\\en golpo\\bn .\\un");
        assert!(parse_language_tags("I golpo\\bn").is_err());
    }
}
