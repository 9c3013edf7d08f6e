//! End-to-end tagging: clean → language-tag → segment → transliterate BN →
//! POS-tag → map to universal tags → render.

use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formats::DataError;
use crate::langid::{LangIdError, LanguageModel, LanguageTag, UnknownRule, Verdict};
use crate::postag::{tag_segments, HmmTagger, PosTagger, PostagError};
use crate::segment::{segment_tweet, UnknownPolicy};
use crate::tagmap::{render_tagged_tweet, RenderedTweet, TagMapping};
use crate::textprep::{clean_with_report, CleaningReport, RawTweet};
use crate::translit::{DecodeLimit, Seq2SeqModel, TranslitError, Transliterate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub langid_model: PathBuf,
    pub translit_model: PathBuf,
    pub en_tagger: PathBuf,
    pub bn_tagger: PathBuf,
    /// Built-in tables are used when unset.
    #[serde(default)]
    pub en_mapping: Option<PathBuf>,
    #[serde(default)]
    pub bn_mapping: Option<PathBuf>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub unknown_rule: UnknownRule,
    #[serde(default)]
    pub unknown_policy: UnknownPolicy,
    #[serde(default = "default_length_factor")]
    pub decode_length_factor: usize,
    #[serde(default = "default_length_offset")]
    pub decode_length_offset: usize,
}

fn default_threshold() -> f64 {
    0.5
}

fn default_length_factor() -> usize {
    DecodeLimit::default().length_factor
}

fn default_length_offset() -> usize {
    DecodeLimit::default().length_offset
}

impl PipelineConfig {
    pub fn new(
        langid_model: PathBuf,
        translit_model: PathBuf,
        en_tagger: PathBuf,
        bn_tagger: PathBuf,
    ) -> Self {
        Self {
            langid_model,
            translit_model,
            en_tagger,
            bn_tagger,
            en_mapping: None,
            bn_mapping: None,
            threshold: default_threshold(),
            unknown_rule: UnknownRule::default(),
            unknown_policy: UnknownPolicy::default(),
            decode_length_factor: default_length_factor(),
            decode_length_offset: default_length_offset(),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(PipelineError::Config(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        if self.decode_length_factor == 0 && self.decode_length_offset == 0 {
            return Err(PipelineError::Config("decode length limit is zero".into()));
        }
        let files = [
            Some(&self.langid_model),
            Some(&self.translit_model),
            Some(&self.en_tagger),
            Some(&self.bn_tagger),
            self.en_mapping.as_ref(),
            self.bn_mapping.as_ref(),
        ];
        for path in files.into_iter().flatten() {
            if !path.is_file() {
                return Err(PipelineError::Config(format!(
                    "{} does not exist",
                    path.display()
                )));
            }
        }
        Ok(())
    }

    /// Resolves relative paths against `base`.
    pub fn resolve(mut self, base: &Path) -> Self {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.langid_model,
            &mut self.translit_model,
            &mut self.en_tagger,
            &mut self.bn_tagger,
        ] {
            fix(p);
        }
        for p in [&mut self.en_mapping, &mut self.bn_mapping]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        self
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("{path}: {message}")]
    Model { path: String, message: String },
}

impl PipelineError {
    fn model(path: &Path, e: impl ToString) -> Self {
        PipelineError::Model {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

pub struct Pipeline {
    pub langid: LanguageModel,
    pub translit: Box<dyn Transliterate>,
    pub english: Box<dyn PosTagger>,
    pub bengali: Box<dyn PosTagger>,
    pub en_map: TagMapping,
    pub bn_map: TagMapping,
    pub unknown_policy: UnknownPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscardReason {
    EmptiedByCleaning,
    NoLanguageTag,
    TaggingFailed,
}

impl DiscardReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DiscardReason::EmptiedByCleaning => "emptied-by-cleaning",
            DiscardReason::NoLanguageTag => "no-language-tag",
            DiscardReason::TaggingFailed => "tagging-failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discard {
    pub id: String,
    pub reason: DiscardReason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Tagged(RenderedTweet),
    Discarded(Discard),
}

/// Corpus bookkeeping. `tweets_after_lt + tagging_failed + no_language_tag +
/// emptied_by_cleaning = input_tweets`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub input_tweets: usize,
    pub emptied_by_cleaning: usize,
    pub tweets_before_lt: usize,
    pub tweets_after_lt: usize,
    pub tokens_before_lt: usize,
    /// EN and BN tokens of the tweets that survive language tagging.
    pub tokens_after_lt: usize,
    pub no_language_tag: usize,
    pub tagging_failed: usize,
    pub cleaning: CleaningReport,
}

impl Summary {
    pub fn kept(&self) -> usize {
        self.tweets_after_lt - self.tagging_failed
    }

    pub fn discarded(&self) -> usize {
        self.emptied_by_cleaning + self.no_language_tag + self.tagging_failed
    }

    pub fn rows(&self) -> Vec<(&'static str, usize)> {
        vec![
            ("No. of tweets before LT", self.tweets_before_lt),
            ("No. of tweets after LT", self.tweets_after_lt),
            ("No. of tokens before LT", self.tokens_before_lt),
            ("No. of tokens after LT", self.tokens_after_lt),
            ("No. of tweets with no language tag", self.no_language_tag),
            (
                "No. of tweets emptied by cleaning",
                self.emptied_by_cleaning,
            ),
            ("No. of tweets that failed tagging", self.tagging_failed),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineOutput {
    /// One outcome per input tweet, in input order.
    pub outcomes: Vec<Outcome>,
    pub summary: Summary,
}

struct TweetResult {
    outcome: Outcome,
    cleaning: CleaningReport,
    tokens_before_lt: usize,
    tokens_after_lt: usize,
}

impl Pipeline {
    pub fn load(cfg: &PipelineConfig) -> Result<Self, PipelineError> {
        cfg.validate()?;
        let mut langid = LanguageModel::load(&cfg.langid_model)
            .map_err(|e: LangIdError| PipelineError::model(&cfg.langid_model, e))?;
        langid.threshold = cfg.threshold;
        langid.unknown_rule = cfg.unknown_rule;
        let mut translit = Seq2SeqModel::load(&cfg.translit_model)
            .map_err(|e: TranslitError| PipelineError::model(&cfg.translit_model, e))?;
        translit.limit = DecodeLimit {
            length_factor: cfg.decode_length_factor,
            length_offset: cfg.decode_length_offset,
        };
        let tagger =
            |p: &Path| HmmTagger::load(p).map_err(|e: PostagError| PipelineError::model(p, e));
        let mapping = |p: &Option<PathBuf>, builtin: fn() -> TagMapping| match p {
            Some(p) => TagMapping::load(p),
            None => Ok(builtin()),
        };
        Ok(Self {
            langid,
            translit: Box::new(translit),
            english: Box::new(tagger(&cfg.en_tagger)?),
            bengali: Box::new(tagger(&cfg.bn_tagger)?),
            en_map: mapping(&cfg.en_mapping, TagMapping::english)?,
            bn_map: mapping(&cfg.bn_mapping, TagMapping::bengali)?,
            unknown_policy: cfg.unknown_policy,
        })
    }

    fn process(&self, raw: &RawTweet) -> TweetResult {
        let (clean, cleaning) = clean_with_report(raw);
        let discard = |reason, detail| {
            Outcome::Discarded(Discard {
                id: raw.id.clone(),
                reason,
                detail,
            })
        };
        if clean.tokens.is_empty() {
            return TweetResult {
                outcome: discard(DiscardReason::EmptiedByCleaning, None),
                cleaning,
                tokens_before_lt: 0,
                tokens_after_lt: 0,
            };
        }
        let tokens_before_lt = clean.tokens.len();
        let (tagged, verdict) = self.langid.tag_tweet(&clean);
        if verdict == Verdict::Discard {
            return TweetResult {
                outcome: discard(DiscardReason::NoLanguageTag, None),
                cleaning,
                tokens_before_lt,
                tokens_after_lt: 0,
            };
        }
        let tokens_after_lt = tagged
            .tokens
            .iter()
            .filter(|t| t.language.is_some_and(LanguageTag::is_language))
            .count();
        let segments = segment_tweet(&tagged, self.unknown_policy);
        let outcome = match tag_segments(&*self.english, &*self.bengali, &*self.translit, &segments)
        {
            Ok(ts) => Outcome::Tagged(render_tagged_tweet(
                &tagged,
                &ts,
                &self.en_map,
                &self.bn_map,
            )),
            Err(e) => discard(DiscardReason::TaggingFailed, Some(e.to_string())),
        };
        TweetResult {
            outcome,
            cleaning,
            tokens_before_lt,
            tokens_after_lt,
        }
    }

    /// Runs every tweet independently (in parallel); outcomes keep input order.
    pub fn run(&self, tweets: &[RawTweet]) -> PipelineOutput {
        let results: Vec<TweetResult> = tweets.par_iter().map(|t| self.process(t)).collect();
        let mut summary = Summary {
            input_tweets: tweets.len(),
            ..Summary::default()
        };
        let mut outcomes = Vec::with_capacity(results.len());
        for r in results {
            summary.cleaning.merge(&r.cleaning);
            summary.tokens_before_lt += r.tokens_before_lt;
            summary.tokens_after_lt += r.tokens_after_lt;
            match &r.outcome {
                Outcome::Tagged(_) => {}
                Outcome::Discarded(d) => {
                    warn!(
                        "tweet {} discarded: {}",
                        d.id,
                        d.detail.as_deref().unwrap_or(d.reason.as_str())
                    );
                    match d.reason {
                        DiscardReason::EmptiedByCleaning => summary.emptied_by_cleaning += 1,
                        DiscardReason::NoLanguageTag => summary.no_language_tag += 1,
                        DiscardReason::TaggingFailed => summary.tagging_failed += 1,
                    }
                }
            }
            outcomes.push(r.outcome);
        }
        summary.tweets_before_lt = summary.input_tweets - summary.emptied_by_cleaning;
        summary.tweets_after_lt = summary.tweets_before_lt - summary.no_language_tag;
        PipelineOutput { outcomes, summary }
    }
}
