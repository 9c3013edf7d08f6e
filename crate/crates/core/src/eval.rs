//! Agreement between manually and automatically tagged sentences:
//! per-sentence match scores, Krippendorff's alpha, and a per-tag
//! confusion summary.

use std::fmt::Write as _;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formats::{data_lines, read_text, DataError};
use crate::langid::LanguageTag;
use crate::tagmap::UniversalTag;

pub const DEFAULT_LOG_BASE: f64 = 10.0;

/// score_B for a sentence whose score_A is 0 but whose switch points match.
pub const DEFAULT_SCORE_CAP: f64 = 10.0;

/// Factor applied once per switch point in score_B.
pub const SWITCH_FACTOR: f64 = 0.25;

const TOP_CONFUSIONS: usize = 3;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("sentence {0} is empty")]
    EmptySentence(usize),
    #[error("manual file has {manual} sentences but system file has {system}")]
    SentenceCount { manual: usize, system: usize },
    #[error("sentence {sentence}: manual has {manual} tokens but system has {system}")]
    LengthMismatch {
        sentence: usize,
        manual: usize,
        system: usize,
    },
    #[error(
        "sentence {sentence}, token {token}: manual `{manual}` differs from system `{system}`"
    )]
    SurfaceMismatch {
        sentence: usize,
        token: usize,
        manual: String,
        system: String,
    },
    #[error("sentence {sentence}: switch point {index} out of range")]
    SwitchPoint { sentence: usize, index: usize },
    #[error("log base must be positive, finite and not 1, got {0}")]
    InvalidLogBase(f64),
    #[error("no rated units")]
    NoUnits,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencePair {
    pub manual: Vec<(String, UniversalTag)>,
    pub system: Vec<(String, UniversalTag)>,
    /// Indices `i` such that tokens `i - 1` and `i` differ in language.
    #[serde(default)]
    pub switch_points: Vec<usize>,
}

impl SentencePair {
    /// Checks the pair; `sentence` is a 1-based index used in errors.
    pub fn validate(&self, sentence: usize) -> Result<(), EvalError> {
        if self.manual.is_empty() {
            return Err(EvalError::EmptySentence(sentence));
        }
        if self.manual.len() != self.system.len() {
            return Err(EvalError::LengthMismatch {
                sentence,
                manual: self.manual.len(),
                system: self.system.len(),
            });
        }
        for (token, ((m, _), (s, _))) in self.manual.iter().zip(&self.system).enumerate() {
            if m != s {
                return Err(EvalError::SurfaceMismatch {
                    sentence,
                    token: token + 1,
                    manual: m.clone(),
                    system: s.clone(),
                });
            }
        }
        if let Some(&index) = self
            .switch_points
            .iter()
            .find(|&&i| i == 0 || i >= self.manual.len())
        {
            return Err(EvalError::SwitchPoint { sentence, index });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.manual.len()
    }

    pub fn is_empty(&self) -> bool {
        self.manual.is_empty()
    }

    fn matches(&self, i: usize) -> bool {
        self.manual[i].1 == self.system[i].1
    }
}

/// Indices where an EN token meets a BN token (in either order).
pub fn switch_points(languages: &[LanguageTag]) -> Vec<usize> {
    (1..languages.len())
        .filter(|&i| {
            let (a, b) = (languages[i - 1], languages[i]);
            a.is_language() && b.is_language() && a != b
        })
        .collect()
}

/// Fraction of tokens whose tags agree.
pub fn score_a(pair: &SentencePair) -> Result<f64, EvalError> {
    if pair.is_empty() || pair.manual.len() != pair.system.len() {
        pair.validate(1)?;
    }
    let matched = (0..pair.len()).filter(|&i| pair.matches(i)).count();
    Ok(matched as f64 / pair.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreB {
    pub value: f64,
    /// Whether all switch-point tokens agreed, so the log formula was used.
    pub switch_match: bool,
    /// score_A was 0 under a switch match; `value` is the cap.
    pub capped: bool,
}

pub fn check_log_base(base: f64) -> Result<(), EvalError> {
    if base.is_finite() && base > 0.0 && base != 1.0 {
        Ok(())
    } else {
        Err(EvalError::InvalidLogBase(base))
    }
}

/// `|log_base(score_A · 0.25^n)|` when both tokens around every switch point
/// carry matching tags, `n` being the number of switch points; score_A
/// otherwise.
pub fn score_b(pair: &SentencePair, log_base: f64, cap: f64) -> Result<ScoreB, EvalError> {
    check_log_base(log_base)?;
    let a = score_a(pair)?;
    let switch_match = pair
        .switch_points
        .iter()
        .all(|&i| i > 0 && pair.matches(i - 1) && pair.matches(i));
    if !switch_match {
        return Ok(ScoreB {
            value: a,
            switch_match,
            capped: false,
        });
    }
    if a == 0.0 {
        warn!("score_A is 0 with matching switch points; score_B capped at {cap}");
        return Ok(ScoreB {
            value: cap,
            switch_match,
            capped: true,
        });
    }
    let n = pair.switch_points.len() as i32;
    Ok(ScoreB {
        value: (a * SWITCH_FACTOR.powi(n)).log(log_base).abs(),
        switch_match,
        capped: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Nominal,
    Interval,
}

impl Metric {
    /// Squared difference δ² between two codes.
    pub fn delta(self, a: usize, b: usize) -> f64 {
        match self {
            Metric::Nominal => f64::from(u8::from(a != b)),
            Metric::Interval => {
                let d = a as f64 - b as f64;
                d * d
            }
        }
    }
}

/// Krippendorff's alpha for two coders over `units`, each a pair of codes.
/// Codes index a dense value space `0..` (only used values matter).
pub fn alpha_from_codes(units: &[(usize, usize)], metric: Metric) -> Result<f64, EvalError> {
    if units.is_empty() {
        return Err(EvalError::NoUnits);
    }
    let values = units.iter().map(|&(a, b)| a.max(b)).max().unwrap_or(0) + 1;
    let mut o = vec![vec![0.0; values]; values];
    for &(a, b) in units {
        o[a][b] += 1.0;
        o[b][a] += 1.0;
    }
    let marg: Vec<f64> = o.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = marg.iter().sum();
    let mut d_o = 0.0;
    let mut d_e = 0.0;
    for c in 0..values {
        for k in 0..values {
            let delta = metric.delta(c, k);
            d_o += o[c][k] * delta;
            d_e += marg[c] * marg[k] * delta;
        }
    }
    d_o /= n;
    d_e /= n * (n - 1.0);
    if d_e == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - d_o / d_e)
}

/// Alpha over all tokens of all pairs, manual vs. system, coding tags by
/// their universal-tag index.
pub fn krippendorff_alpha(pairs: &[SentencePair], metric: Metric) -> Result<f64, EvalError> {
    let units: Vec<(usize, usize)> = pairs
        .iter()
        .flat_map(|p| {
            p.manual
                .iter()
                .zip(&p.system)
                .map(|((_, m), (_, s))| (m.code(), s.code()))
        })
        .collect();
    alpha_from_codes(&units, metric)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagRow {
    pub tag: UniversalTag,
    pub manual: usize,
    pub system: usize,
    pub difference: usize,
    /// System tags given where the manual tag is `tag`, most frequent first.
    pub confusions: Vec<(UniversalTag, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub sentences: usize,
    pub tokens: usize,
    pub rows: Vec<TagRow>,
    pub mean_score_a: f64,
    pub mean_score_b: f64,
    pub log_base: f64,
    /// 1-based indices of sentences whose score_B was capped.
    pub capped: Vec<usize>,
    pub alpha_nominal: f64,
    pub alpha_interval: f64,
}

/// Per-tag counts and confusions plus corpus means and both alphas. An empty
/// input gives zero counts and means, and alpha 1.
pub fn confusion_report(
    pairs: &[SentencePair],
    log_base: f64,
    cap: f64,
) -> Result<AgreementReport, EvalError> {
    check_log_base(log_base)?;
    let n_tags = UniversalTag::ALL.len();
    let mut confusion = vec![vec![0usize; n_tags]; n_tags];
    let (mut sum_a, mut sum_b) = (0.0, 0.0);
    let mut capped = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        p.validate(i + 1)?;
        for ((_, m), (_, s)) in p.manual.iter().zip(&p.system) {
            confusion[m.code()][s.code()] += 1;
        }
        sum_a += score_a(p)?;
        let b = score_b(p, log_base, cap)?;
        if b.capped {
            capped.push(i + 1);
        }
        sum_b += b.value;
    }
    let rows = UniversalTag::ALL
        .iter()
        .map(|&tag| {
            let t = tag.code();
            let manual: usize = confusion[t].iter().sum();
            let system: usize = confusion.iter().map(|row| row[t]).sum();
            let mut confusions: Vec<(UniversalTag, usize)> = UniversalTag::ALL
                .iter()
                .filter(|&&s| s != tag && confusion[t][s.code()] > 0)
                .map(|&s| (s, confusion[t][s.code()]))
                .collect();
            confusions.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            confusions.truncate(TOP_CONFUSIONS);
            TagRow {
                tag,
                manual,
                system,
                difference: manual.abs_diff(system),
                confusions,
            }
        })
        .collect();
    let n = pairs.len();
    let (alpha_nominal, alpha_interval) = if n == 0 {
        (1.0, 1.0)
    } else {
        (
            krippendorff_alpha(pairs, Metric::Nominal)?,
            krippendorff_alpha(pairs, Metric::Interval)?,
        )
    };
    Ok(AgreementReport {
        sentences: n,
        tokens: pairs.iter().map(SentencePair::len).sum(),
        rows,
        mean_score_a: if n == 0 { 0.0 } else { sum_a / n as f64 },
        mean_score_b: if n == 0 { 0.0 } else { sum_b / n as f64 },
        log_base,
        capped,
        alpha_nominal,
        alpha_interval,
    })
}

impl AgreementReport {
    pub fn to_table(&self) -> String {
        let mut out = String::from("Tag\tMan.\tSyst.\tDiff.\tConfusions\n");
        for row in &self.rows {
            let conf = row
                .confusions
                .iter()
                .map(|(t, c)| format!("{t}:{c}"))
                .collect::<Vec<_>>()
                .join(",");
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                row.tag, row.manual, row.system, row.difference, conf
            );
        }
        let _ = writeln!(out, "Sentences\t{}", self.sentences);
        let _ = writeln!(out, "Tokens\t{}", self.tokens);
        let _ = writeln!(out, "Mean score_A\t{:.4}", self.mean_score_a);
        let _ = writeln!(
            out,
            "Mean score_B (log base {})\t{:.4}",
            self.log_base, self.mean_score_b
        );
        let _ = writeln!(out, "K's alpha (nominal)\t{:.4}", self.alpha_nominal);
        let _ = writeln!(out, "K's alpha (interval)\t{:.4}", self.alpha_interval);
        if !self.capped.is_empty() {
            let list: Vec<String> = self.capped.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "Capped score_B\t{}", list.join(","));
        }
        out
    }
}

/// A token from an evaluation file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalToken {
    pub surface: String,
    pub language: Option<LanguageTag>,
    pub tag: UniversalTag,
}

/// Parses `word/UTAG` or `surface\lang\UTAG` tokens.
pub fn parse_eval_token(item: &str) -> Result<EvalToken, String> {
    let mut parts = item.rsplitn(3, '\\');
    if let (Some(tag), Some(lang), Some(surface)) = (parts.next(), parts.next(), parts.next()) {
        if !surface.is_empty() {
            return Ok(EvalToken {
                surface: surface.to_string(),
                language: Some(lang.parse()?),
                tag: tag.parse()?,
            });
        }
    }
    match item.rsplit_once('/') {
        Some((w, t)) if !w.is_empty() => Ok(EvalToken {
            surface: w.to_string(),
            language: None,
            tag: t.parse()?,
        }),
        _ => Err(format!(
            "expected word/UTAG or surface\\lang\\UTAG, got `{item}`"
        )),
    }
}

fn parse_eval_file(content: &str, origin: &str) -> Result<Vec<Vec<EvalToken>>, DataError> {
    data_lines(content)
        .map(|(line_no, line)| {
            line.split_whitespace()
                .map(|item| {
                    parse_eval_token(item).map_err(|e| DataError::parse(origin, line_no, e))
                })
                .collect()
        })
        .collect()
}

/// Pairs up parallel manual/system sentences. Switch points come from the
/// manual languages when present, else the system's.
pub fn pair_sentences(
    manual: Vec<Vec<EvalToken>>,
    system: Vec<Vec<EvalToken>>,
) -> Result<Vec<SentencePair>, EvalError> {
    if manual.len() != system.len() {
        return Err(EvalError::SentenceCount {
            manual: manual.len(),
            system: system.len(),
        });
    }
    manual
        .into_iter()
        .zip(system)
        .enumerate()
        .map(|(i, (m, s))| {
            let langs =
                |toks: &[EvalToken]| toks.iter().map(|t| t.language).collect::<Option<Vec<_>>>();
            let switches = langs(&m)
                .or_else(|| langs(&s))
                .map(|l| switch_points(&l))
                .unwrap_or_default();
            let pair = SentencePair {
                manual: m.into_iter().map(|t| (t.surface, t.tag)).collect(),
                system: s.into_iter().map(|t| (t.surface, t.tag)).collect(),
                switch_points: switches,
            };
            pair.validate(i + 1)?;
            Ok(pair)
        })
        .collect()
}

pub fn parse_parallel(
    manual: &str,
    system: &str,
    manual_origin: &str,
    system_origin: &str,
) -> Result<Vec<SentencePair>, EvalError> {
    pair_sentences(
        parse_eval_file(manual, manual_origin)?,
        parse_eval_file(system, system_origin)?,
    )
}

pub fn load_parallel(manual: &Path, system: &Path) -> Result<Vec<SentencePair>, EvalError> {
    parse_parallel(
        &read_text(manual)?,
        &read_text(system)?,
        &manual.display().to_string(),
        &system.display().to_string(),
    )
}

/// One JSON [`SentencePair`] per line.
pub fn parse_merged(content: &str, origin: &str) -> Result<Vec<SentencePair>, EvalError> {
    data_lines(content)
        .enumerate()
        .map(|(i, (line_no, line))| {
            let pair: SentencePair = serde_json::from_str(line)
                .map_err(|e| DataError::parse(origin, line_no, e.to_string()))?;
            pair.validate(i + 1)?;
            Ok(pair)
        })
        .collect()
}

pub fn load_merged(path: &Path) -> Result<Vec<SentencePair>, EvalError> {
    parse_merged(&read_text(path)?, &path.display().to_string())
}
