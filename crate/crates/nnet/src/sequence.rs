//! Character vocabularies and the embedding → stacked LSTM → dense model
//! shared by the classifier and the encoder/decoder.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dense::Dense;
use crate::error::{check_len, NnetError, Result};
use crate::lstm::{LstmStack, StackState, StackTrace};
use crate::matrix::{axpy, Matrix};
use crate::params::Parameters;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Special {
    Pad,
    Unk,
    Sos,
    Eos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symbol {
    Special(Special),
    Char(char),
}

/// Ordered symbol inventory: the reserved symbols first, then characters in
/// first-seen order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<Symbol>", into = "Vec<Symbol>")]
pub struct CharVocab {
    symbols: Vec<Symbol>,
    index: HashMap<Symbol, usize>,
}

impl From<Vec<Symbol>> for CharVocab {
    fn from(symbols: Vec<Symbol>) -> Self {
        let mut vocab = CharVocab {
            symbols: Vec::with_capacity(symbols.len()),
            index: HashMap::new(),
        };
        for s in symbols {
            vocab.push(s);
        }
        vocab
    }
}

impl From<CharVocab> for Vec<Symbol> {
    fn from(v: CharVocab) -> Self {
        v.symbols
    }
}

impl CharVocab {
    /// Builds a vocabulary from text. `specials` must include `Unk` for
    /// total lookups.
    pub fn build<'a, I>(specials: &[Special], texts: I) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut vocab = CharVocab::from(
            specials
                .iter()
                .map(|&s| Symbol::Special(s))
                .collect::<Vec<_>>(),
        );
        for text in texts {
            for c in text.chars() {
                vocab.push(Symbol::Char(c));
            }
        }
        vocab
    }

    fn push(&mut self, s: Symbol) {
        if !self.index.contains_key(&s) {
            self.index.insert(s, self.symbols.len());
            self.symbols.push(s);
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn symbol(&self, id: usize) -> Option<Symbol> {
        self.symbols.get(id).copied()
    }

    pub fn special(&self, s: Special) -> Option<usize> {
        self.index.get(&Symbol::Special(s)).copied()
    }

    pub fn char_id(&self, c: char) -> Option<usize> {
        self.index.get(&Symbol::Char(c)).copied()
    }

    /// Character ids with unseen characters mapped to `Unk`.
    pub fn encode(&self, text: &str) -> Vec<usize> {
        let unk = self.special(Special::Unk);
        text.chars()
            .filter_map(|c| self.char_id(c).or(unk))
            .collect()
    }
}

/// Embedding matrix, LSTM stack and optional output head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceModelParams {
    vocab: CharVocab,
    /// `vocab × embed_dim`
    embedding: Matrix,
    stack: LstmStack,
    head: Option<Dense>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelDims {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub depth: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        Self {
            embed_dim: 32,
            hidden_dim: 64,
            depth: 2,
        }
    }
}

/// Forward-pass record for one sequence.
#[derive(Debug, Clone)]
pub struct SequenceTrace {
    ids: Vec<usize>,
    stack: StackTrace,
}

impl SequenceTrace {
    pub fn outputs(&self) -> &[Vec<f64>] {
        self.stack.outputs()
    }

    pub fn final_state(&self) -> StackState {
        self.stack.final_state()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

impl SequenceModelParams {
    pub fn init<R: Rng + ?Sized>(
        vocab: CharVocab,
        dims: ModelDims,
        head_dim: Option<usize>,
        rng: &mut R,
    ) -> Self {
        let embedding = Matrix::glorot(vocab.len(), dims.embed_dim, rng);
        let stack = LstmStack::init(dims.embed_dim, dims.hidden_dim, dims.depth, rng);
        let head = head_dim.map(|out| Dense::init(dims.hidden_dim, out, rng));
        Self {
            vocab,
            embedding,
            stack,
            head,
        }
    }

    pub fn from_parts(
        vocab: CharVocab,
        embedding: Matrix,
        stack: LstmStack,
        head: Option<Dense>,
    ) -> Result<Self> {
        let m = Self {
            vocab,
            embedding,
            stack,
            head,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn vocab(&self) -> &CharVocab {
        &self.vocab
    }

    pub fn stack(&self) -> &LstmStack {
        &self.stack
    }

    pub fn stack_mut(&mut self) -> &mut LstmStack {
        &mut self.stack
    }

    pub fn head(&self) -> Option<&Dense> {
        self.head.as_ref()
    }

    pub fn head_mut(&mut self) -> Option<&mut Dense> {
        self.head.as_mut()
    }

    pub fn embed_dim(&self) -> usize {
        self.embedding.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.stack.output_dim().unwrap_or(self.embedding.cols())
    }

    pub fn validate(&self) -> Result<()> {
        check_len("embedding rows", self.vocab.len(), self.embedding.rows())?;
        if !self.embedding.is_finite() {
            return Err(NnetError::NonFiniteParameter { tensor: 0 });
        }
        self.stack.validate()?;
        if let Some(first) = self.stack.layers().first() {
            check_len(
                "first layer input",
                self.embedding.cols(),
                first.input_dim(),
            )?;
        }
        if let Some(head) = &self.head {
            head.validate()?;
            check_len("head input", self.hidden_dim(), head.input_dim())?;
        }
        Ok(())
    }

    pub fn forward(&self, ids: &[usize], init: Option<&StackState>) -> Result<SequenceTrace> {
        let mut inputs = Vec::with_capacity(ids.len());
        for &id in ids {
            if id >= self.vocab.len() {
                return Err(NnetError::IndexOutOfRange {
                    index: id,
                    classes: self.vocab.len(),
                });
            }
            inputs.push(self.embedding.row(id).to_vec());
        }
        let stack = self.stack.forward_trace(&inputs, init)?;
        Ok(SequenceTrace {
            ids: ids.to_vec(),
            stack,
        })
    }

    /// Head logits for a hidden vector.
    pub fn head_logits(&self, h: &[f64]) -> Result<Vec<f64>> {
        match &self.head {
            Some(head) => head.logits(h),
            None => Ok(h.to_vec()),
        }
    }

    /// Backpropagates gradients on the top-layer outputs (and optionally on the
    /// final state) into `grads`, returning the gradient w.r.t. the initial state.
    pub fn backward(
        &self,
        trace: &SequenceTrace,
        d_outputs: &[Vec<f64>],
        d_final: Option<&StackState>,
        grads: &mut SequenceModelParams,
    ) -> Result<StackState> {
        let (d_inputs, d_init) =
            self.stack
                .backward(&trace.stack, d_outputs, d_final, &mut grads.stack)?;
        for (&id, dx) in trace.ids.iter().zip(&d_inputs) {
            axpy(1.0, dx, grads.embedding.row_mut(id));
        }
        Ok(d_init)
    }

    /// Backpropagates a logit gradient through the head, accumulating head
    /// gradients, and returns the gradient on the hidden vector.
    pub fn head_backward(
        &self,
        h: &[f64],
        d_logits: &[f64],
        grads: &mut SequenceModelParams,
    ) -> Vec<f64> {
        match (&self.head, grads.head.as_mut()) {
            (Some(head), Some(g)) => head.backward(h, d_logits, g),
            _ => d_logits.to_vec(),
        }
    }
}

impl Parameters for SequenceModelParams {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut t = vec![self.embedding.as_slice()];
        t.extend(self.stack.tensors());
        if let Some(h) = &self.head {
            t.extend(h.tensors());
        }
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t = vec![self.embedding.as_mut_slice()];
        t.extend(self.stack.tensors_mut());
        if let Some(h) = &mut self.head {
            t.extend(h.tensors_mut());
        }
        t
    }
}
