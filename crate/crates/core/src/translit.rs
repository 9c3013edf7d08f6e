//! Character-level encoder/decoder back-transliteration of Romanized
//! Bengali words into Devanagari.
//!
//! The encoder reads the lowercased source characters through a stacked
//! LSTM; its final per-layer `(h, c)` initialises the decoder stack, which is
//! trained with teacher forcing: inputs are `SOS y1 .. yn` and targets are
//! `y1 .. yn EOS`. Inference decodes greedily.

use std::path::Path;

use codemix_nnet::loss::cce_logit_grad;
use codemix_nnet::persist::{self, PersistError};
use codemix_nnet::train::train_with;
use codemix_nnet::{
    cce_loss, softmax, CharVocab, EpochMetrics, Evaluation, ModelDims, NnetError, Parameters,
    SequenceModelParams, Special, Symbol, TrainConfig, TrainReport, Trainable,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formats::{data_lines, read_text, two_columns, DataError};
use crate::segment::Segment;

pub const MODEL_KIND: &str = "translit";

const SPECIALS: [Special; 4] = [Special::Pad, Special::Unk, Special::Sos, Special::Eos];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslitPair {
    pub roman: String,
    pub devanagari: String,
}

pub fn load_pairs(path: &Path) -> Result<Vec<TranslitPair>, DataError> {
    parse_pairs(&read_text(path)?, &path.display().to_string())
}

pub fn parse_pairs(content: &str, origin: &str) -> Result<Vec<TranslitPair>, DataError> {
    data_lines(content)
        .map(|(line_no, line)| {
            let (roman, devanagari) = two_columns(line, origin, line_no)?;
            if roman.contains(char::is_whitespace) || devanagari.contains(char::is_whitespace) {
                return Err(DataError::parse(
                    origin,
                    line_no,
                    "pairs must be single words",
                ));
            }
            Ok(TranslitPair {
                roman: roman.to_string(),
                devanagari: devanagari.to_string(),
            })
        })
        .collect()
}

/// Default training regime: batch 1024, 50 epochs, 10% validation.
pub fn default_train_config() -> TrainConfig {
    TrainConfig {
        batch_size: 1024,
        epochs: 50,
        validation_split: 0.1,
        ..TrainConfig::default()
    }
}

/// Greedy decoding stops after `length_factor · |source| + length_offset` symbols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeLimit {
    pub length_factor: usize,
    pub length_offset: usize,
}

impl Default for DecodeLimit {
    fn default() -> Self {
        Self {
            length_factor: 2,
            length_offset: 8,
        }
    }
}

impl DecodeLimit {
    pub fn max_len(&self, source_chars: usize) -> usize {
        self.length_factor * source_chars + self.length_offset
    }
}

#[derive(Debug, Error)]
pub enum TranslitError {
    #[error("no transliteration pairs to train on")]
    EmptyDataset,
    #[error(transparent)]
    Nnet(#[from] NnetError),
    #[error(transparent)]
    Persist(#[from] PersistError),
}

/// Anything that maps a Romanized word to the tagger's script.
pub trait Transliterate: Send + Sync {
    fn transliterate(&self, roman: &str) -> String;
}

/// Identity transliteration, for taggers that read Romanized text directly.
#[derive(Debug, Clone, Copy, Default)]
pub struct Passthrough;

impl Transliterate for Passthrough {
    fn transliterate(&self, roman: &str) -> String {
        roman.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seq2SeqModel {
    encoder: SequenceModelParams,
    decoder: SequenceModelParams,
    pub limit: DecodeLimit,
}

/// Encoded training pair: source ids, decoder inputs, decoder targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedPair {
    pub source: Vec<usize>,
    pub decoder_input: Vec<usize>,
    pub decoder_target: Vec<usize>,
}

/// Decoder inputs `SOS y1 .. yn` and targets `y1 .. yn EOS`.
pub fn teacher_forcing(target: &[usize], sos: usize, eos: usize) -> (Vec<usize>, Vec<usize>) {
    let mut input = Vec::with_capacity(target.len() + 1);
    input.push(sos);
    input.extend_from_slice(target);
    let mut output = target.to_vec();
    output.push(eos);
    (input, output)
}

impl Seq2SeqModel {
    pub fn init(
        source_vocab: CharVocab,
        target_vocab: CharVocab,
        dims: ModelDims,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = target_vocab.len();
        Self {
            encoder: SequenceModelParams::init(source_vocab, dims, None, &mut rng),
            decoder: SequenceModelParams::init(target_vocab, dims, Some(out), &mut rng),
            limit: DecodeLimit::default(),
        }
    }

    pub fn encoder(&self) -> &SequenceModelParams {
        &self.encoder
    }

    pub fn decoder(&self) -> &SequenceModelParams {
        &self.decoder
    }

    pub fn validate(&self) -> Result<(), NnetError> {
        self.encoder.validate()?;
        self.decoder.validate()?;
        let enc = self.encoder.stack().layers();
        let dec = self.decoder.stack().layers();
        if enc.len() != dec.len() {
            return Err(NnetError::ShapeMismatch {
                context: "encoder/decoder depth",
                expected: enc.len(),
                actual: dec.len(),
            });
        }
        for (e, d) in enc.iter().zip(dec) {
            if e.hidden_dim() != d.hidden_dim() {
                return Err(NnetError::ShapeMismatch {
                    context: "decoder initial state",
                    expected: e.hidden_dim(),
                    actual: d.hidden_dim(),
                });
            }
        }
        let head = self.decoder.head().map_or(0, |h| h.output_dim());
        if head != self.decoder.vocab().len() {
            return Err(NnetError::ShapeMismatch {
                context: "decoder head",
                expected: self.decoder.vocab().len(),
                actual: head,
            });
        }
        for v in [self.encoder.vocab(), self.decoder.vocab()] {
            for s in SPECIALS {
                if v.special(s).is_none() {
                    return Err(NnetError::InvalidConfig(format!("vocabulary lacks {s:?}")));
                }
            }
        }
        Ok(())
    }

    fn special(&self, s: Special) -> usize {
        self.decoder
            .vocab()
            .special(s)
            .expect("validated vocabulary")
    }

    pub fn encode_source(&self, roman: &str) -> Vec<usize> {
        self.encoder.vocab().encode(&roman.to_lowercase())
    }

    pub fn encode_pair(&self, pair: &TranslitPair) -> EncodedPair {
        let target = self.decoder.vocab().encode(&pair.devanagari);
        let (decoder_input, decoder_target) = teacher_forcing(
            &target,
            self.special(Special::Sos),
            self.special(Special::Eos),
        );
        EncodedPair {
            source: self.encode_source(&pair.roman),
            decoder_input,
            decoder_target,
        }
    }

    /// Summed cross-entropy over the target positions of one pair, with
    /// gradients added into `grads` scaled by `scale`.
    fn pair_loss_and_grad(
        &self,
        ex: &EncodedPair,
        grads: &mut Seq2SeqModel,
        scale: f64,
    ) -> Result<f64, NnetError> {
        let enc = self.encoder.forward(&ex.source, None)?;
        let state = enc.final_state();
        let dec = self.decoder.forward(&ex.decoder_input, Some(&state))?;
        let mut loss = 0.0;
        let mut d_out = Vec::with_capacity(dec.len());
        for (h, &y) in dec.outputs().iter().zip(&ex.decoder_target) {
            let p = softmax(&self.decoder.head_logits(h)?);
            loss += cce_loss(&p, y)?;
            let mut dz = cce_logit_grad(&p, y);
            dz.iter_mut().for_each(|v| *v *= scale);
            d_out.push(self.decoder.head_backward(h, &dz, &mut grads.decoder));
        }
        let d_state = self
            .decoder
            .backward(&dec, &d_out, None, &mut grads.decoder)?;
        let zeros = vec![vec![0.0; self.encoder.hidden_dim()]; enc.len()];
        self.encoder
            .backward(&enc, &zeros, Some(&d_state), &mut grads.encoder)?;
        Ok(loss)
    }

    /// Mean per-symbol cross-entropy of one pair under teacher forcing.
    pub fn pair_loss(&self, ex: &EncodedPair) -> Result<f64, NnetError> {
        let enc = self.encoder.forward(&ex.source, None)?;
        let dec = self
            .decoder
            .forward(&ex.decoder_input, Some(&enc.final_state()))?;
        let mut loss = 0.0;
        for (h, &y) in dec.outputs().iter().zip(&ex.decoder_target) {
            loss += cce_loss(&softmax(&self.decoder.head_logits(h)?), y)?;
        }
        Ok(loss / ex.decoder_target.len() as f64)
    }

    /// Greedy decode of source ids; returns target ids without specials.
    pub fn decode_ids(&self, source: &[usize]) -> Result<Vec<usize>, NnetError> {
        let enc = self.encoder.forward(source, None)?;
        let mut state = enc.final_state();
        let eos = self.special(Special::Eos);
        let banned = [Special::Pad, Special::Sos, Special::Unk].map(|s| self.special(s));
        let mut prev = self.special(Special::Sos);
        let mut out = Vec::new();
        for _ in 0..self.limit.max_len(source.len()) {
            let step = self.decoder.forward(&[prev], Some(&state))?;
            let logits = self.decoder.head_logits(&step.outputs()[0])?;
            let next = logits
                .iter()
                .enumerate()
                .filter(|(i, _)| !banned.contains(i))
                .fold(None, |best: Option<(usize, f64)>, (i, &z)| match best {
                    Some((_, bz)) if bz >= z => best,
                    _ => Some((i, z)),
                })
                .map(|(i, _)| i)
                .unwrap_or(eos);
            if next == eos {
                break;
            }
            out.push(next);
            state = step.final_state();
            prev = next;
        }
        Ok(out)
    }

    pub fn transliterate_segment(&self, segment: &Segment) -> Vec<String> {
        segment
            .tokens
            .iter()
            .map(|t| self.transliterate(&t.surface))
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), PersistError> {
        persist::save(path, MODEL_KIND, self)
    }

    pub fn load(path: &Path) -> Result<Self, TranslitError> {
        let model: Seq2SeqModel = persist::load(path, MODEL_KIND)?;
        model.validate()?;
        Ok(model)
    }

    fn render(&self, ids: &[usize]) -> String {
        ids.iter()
            .filter_map(|&i| match self.decoder.vocab().symbol(i) {
                Some(Symbol::Char(c)) => Some(c),
                _ => None,
            })
            .collect()
    }
}

impl Transliterate for Seq2SeqModel {
    /// Greedy decode; total for any input.
    fn transliterate(&self, roman: &str) -> String {
        let ids = self
            .decode_ids(&self.encode_source(roman))
            .expect("validated model");
        self.render(&ids)
    }
}

impl Parameters for Seq2SeqModel {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut t = self.encoder.tensors();
        t.extend(self.decoder.tensors());
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t = self.encoder.tensors_mut();
        t.extend(self.decoder.tensors_mut());
        t
    }
}

impl Trainable for Seq2SeqModel {
    type Example = EncodedPair;

    /// Loss is the mean over every target symbol in the batch.
    fn batch_gradient(&self, batch: &[&EncodedPair]) -> codemix_nnet::Result<(f64, Self)> {
        let symbols: usize = batch.iter().map(|e| e.decoder_target.len()).sum();
        let scale = 1.0 / symbols.max(1) as f64;
        let mut grads = self.zeros_like();
        let mut loss = 0.0;
        for ex in batch {
            loss += self.pair_loss_and_grad(ex, &mut grads, scale)?;
        }
        Ok((loss * scale, grads))
    }

    /// Correct means the greedy decode reproduces the target exactly.
    fn evaluate(&self, ex: &EncodedPair) -> codemix_nnet::Result<Evaluation> {
        let loss = self.pair_loss(ex)?;
        let decoded = self.decode_ids(&ex.source)?;
        let target = &ex.decoder_target[..ex.decoder_target.len() - 1];
        Ok(Evaluation {
            loss,
            correct: decoded == target,
        })
    }
}

pub fn train_translit(
    pairs: &[TranslitPair],
    dims: ModelDims,
    cfg: &TrainConfig,
) -> Result<(Seq2SeqModel, TrainReport), TranslitError> {
    train_translit_with(pairs, dims, cfg, |_| {})
}

pub fn train_translit_with<F: FnMut(&EpochMetrics)>(
    pairs: &[TranslitPair],
    dims: ModelDims,
    cfg: &TrainConfig,
    on_epoch: F,
) -> Result<(Seq2SeqModel, TrainReport), TranslitError> {
    if pairs.is_empty() {
        return Err(TranslitError::EmptyDataset);
    }
    cfg.validate()?;
    let sources: Vec<String> = pairs.iter().map(|p| p.roman.to_lowercase()).collect();
    let source_vocab = CharVocab::build(&SPECIALS, sources.iter().map(String::as_str));
    let target_vocab = CharVocab::build(&SPECIALS, pairs.iter().map(|p| p.devanagari.as_str()));
    let mut model = Seq2SeqModel::init(source_vocab, target_vocab, dims, cfg.seed ^ 0x7a5b_11e2);
    let data: Vec<EncodedPair> = pairs.iter().map(|p| model.encode_pair(p)).collect();
    let report = train_with(&mut model, &data, cfg, on_epoch)?;
    Ok((model, report))
}
