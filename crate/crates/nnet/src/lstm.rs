//! LSTM layers and stacks with full backpropagation through time.
//!
//! Gate pre-activations are stored as one `4H`-row block per weight matrix,
//! in the order input, forget, output, candidate:
//!
//! ```text
//! i = σ(W_i x + U_i h + b_i)     f = σ(W_f x + U_f h + b_f)
//! o = σ(W_o x + U_o h + b_o)     g = tanh(W_g x + U_g h + b_g)
//! c' = f ∘ c + i ∘ g             h' = o ∘ tanh(c')
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, NnetError, Result};
use crate::matrix::{sigmoid, Matrix};
use crate::params::Parameters;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Output = 2,
    Cell = 3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLayerParams {
    input_dim: usize,
    hidden_dim: usize,
    /// `4H × input_dim`
    w: Matrix,
    /// `4H × H`
    u: Matrix,
    /// `4H`
    b: Vec<f64>,
}

#[derive(Debug, Clone)]
struct StepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Post-activation gates, `[i | f | o | g]`.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// Intermediate values of one forward pass, consumed by `backward`.
#[derive(Debug, Clone)]
pub struct LayerTrace {
    steps: Vec<StepCache>,
    outputs: Vec<Vec<f64>>,
    final_state: LstmState,
}

impl LayerTrace {
    pub fn outputs(&self) -> &[Vec<f64>] {
        &self.outputs
    }

    pub fn final_state(&self) -> &LstmState {
        &self.final_state
    }
}

impl LstmLayerParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dim,
            w: Matrix::zeros(4 * hidden_dim, input_dim),
            u: Matrix::zeros(4 * hidden_dim, hidden_dim),
            b: vec![0.0; 4 * hidden_dim],
        }
    }

    /// Uniform Glorot init per gate block, forget-gate bias set to 1.
    pub fn init<R: Rng + ?Sized>(input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let mut layer = Self::zeros(input_dim, hidden_dim);
        for gate in 0..4 {
            let w = Matrix::glorot(hidden_dim, input_dim, rng);
            let u = Matrix::glorot(hidden_dim, hidden_dim, rng);
            let wr = gate * hidden_dim * input_dim;
            layer.w.as_mut_slice()[wr..wr + w.as_slice().len()].copy_from_slice(w.as_slice());
            let ur = gate * hidden_dim * hidden_dim;
            layer.u.as_mut_slice()[ur..ur + u.as_slice().len()].copy_from_slice(u.as_slice());
        }
        layer.bias_mut(Gate::Forget).fill(1.0);
        layer
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn bias_mut(&mut self, gate: Gate) -> &mut [f64] {
        let h = self.hidden_dim;
        let g = gate as usize;
        &mut self.b[g * h..(g + 1) * h]
    }

    /// Input-to-hidden weights of one gate (`H × input_dim`, row-major).
    pub fn input_weights_mut(&mut self, gate: Gate) -> &mut [f64] {
        let n = self.hidden_dim * self.input_dim;
        let g = gate as usize;
        &mut self.w.as_mut_slice()[g * n..(g + 1) * n]
    }

    /// Hidden-to-hidden weights of one gate (`H × H`, row-major).
    pub fn recurrent_weights_mut(&mut self, gate: Gate) -> &mut [f64] {
        let n = self.hidden_dim * self.hidden_dim;
        let g = gate as usize;
        &mut self.u.as_mut_slice()[g * n..(g + 1) * n]
    }

    pub fn validate(&self) -> Result<()> {
        check_len("lstm W rows", 4 * self.hidden_dim, self.w.rows())?;
        check_len("lstm W cols", self.input_dim, self.w.cols())?;
        check_len("lstm U rows", 4 * self.hidden_dim, self.u.rows())?;
        check_len("lstm U cols", self.hidden_dim, self.u.cols())?;
        check_len("lstm bias", 4 * self.hidden_dim, self.b.len())?;
        if let Some(tensor) = self
            .tensors()
            .iter()
            .position(|t| t.iter().any(|v| !v.is_finite()))
        {
            return Err(NnetError::NonFiniteParameter { tensor });
        }
        Ok(())
    }

    fn check_inputs(&self, inputs: &[Vec<f64>], init: &LstmState) -> Result<()> {
        check_len("lstm h0", self.hidden_dim, init.h.len())?;
        check_len("lstm c0", self.hidden_dim, init.c.len())?;
        for x in inputs {
            check_len("lstm input", self.input_dim, x.len())?;
        }
        Ok(())
    }

    /// Runs the layer over a sequence and returns every hidden vector plus
    /// the final `(h, c)`.
    pub fn forward(
        &self,
        inputs: &[Vec<f64>],
        init: &LstmState,
    ) -> Result<(Vec<Vec<f64>>, LstmState)> {
        let trace = self.forward_trace(inputs, init)?;
        Ok((trace.outputs, trace.final_state))
    }

    pub fn forward_trace(&self, inputs: &[Vec<f64>], init: &LstmState) -> Result<LayerTrace> {
        self.check_inputs(inputs, init)?;
        let hd = self.hidden_dim;
        let mut h = init.h.clone();
        let mut c = init.c.clone();
        let mut steps = Vec::with_capacity(inputs.len());
        let mut outputs = Vec::with_capacity(inputs.len());
        for x in inputs {
            let mut z = self.b.clone();
            self.w.matvec_acc_unchecked(x, &mut z);
            self.u.matvec_acc_unchecked(&h, &mut z);
            for v in &mut z[..3 * hd] {
                *v = sigmoid(*v);
            }
            for v in &mut z[3 * hd..] {
                *v = v.tanh();
            }
            let (i, rest) = z.split_at(hd);
            let (f, rest) = rest.split_at(hd);
            let (o, g) = rest.split_at(hd);
            let mut c_new = vec![0.0; hd];
            let mut tanh_c = vec![0.0; hd];
            let mut h_new = vec![0.0; hd];
            for k in 0..hd {
                c_new[k] = f[k] * c[k] + i[k] * g[k];
                tanh_c[k] = c_new[k].tanh();
                h_new[k] = o[k] * tanh_c[k];
            }
            steps.push(StepCache {
                x: x.clone(),
                h_prev: std::mem::replace(&mut h, h_new.clone()),
                c_prev: std::mem::replace(&mut c, c_new),
                gates: z,
                tanh_c,
            });
            outputs.push(h_new);
        }
        Ok(LayerTrace {
            steps,
            outputs,
            final_state: LstmState { h, c },
        })
    }

    /// Backpropagation through time.
    ///
    /// `d_outputs[t]` is the loss gradient w.r.t. the hidden vector emitted at
    /// step `t`; `d_final` is the gradient w.r.t. the final `(h, c)` (for a
    /// state handed to another network). Parameter gradients are added into
    /// `grads`. Returns the gradients w.r.t. every input vector and w.r.t. the
    /// initial state.
    pub fn backward(
        &self,
        trace: &LayerTrace,
        d_outputs: &[Vec<f64>],
        d_final: Option<&LstmState>,
        grads: &mut LstmLayerParams,
    ) -> Result<(Vec<Vec<f64>>, LstmState)> {
        check_len("lstm d_outputs", trace.steps.len(), d_outputs.len())?;
        let hd = self.hidden_dim;
        let (mut dh, mut dc) = match d_final {
            Some(s) => {
                check_len("lstm d_final h", hd, s.h.len())?;
                check_len("lstm d_final c", hd, s.c.len())?;
                (s.h.clone(), s.c.clone())
            }
            None => (vec![0.0; hd], vec![0.0; hd]),
        };
        let mut d_inputs = vec![Vec::new(); trace.steps.len()];
        let mut dz = vec![0.0; 4 * hd];
        for (t, step) in trace.steps.iter().enumerate().rev() {
            check_len("lstm d_output", hd, d_outputs[t].len())?;
            for (a, b) in dh.iter_mut().zip(&d_outputs[t]) {
                *a += b;
            }
            let gates = &step.gates;
            for k in 0..hd {
                let i = gates[k];
                let f = gates[hd + k];
                let o = gates[2 * hd + k];
                let g = gates[3 * hd + k];
                let tc = step.tanh_c[k];
                let d_o = dh[k] * tc;
                let dck = dc[k] + dh[k] * o * (1.0 - tc * tc);
                dz[k] = dck * g * i * (1.0 - i);
                dz[hd + k] = dck * step.c_prev[k] * f * (1.0 - f);
                dz[2 * hd + k] = d_o * o * (1.0 - o);
                dz[3 * hd + k] = dck * i * (1.0 - g * g);
                dc[k] = dck * f;
            }
            grads.w.add_outer_unchecked(&dz, &step.x);
            grads.u.add_outer_unchecked(&dz, &step.h_prev);
            for (gb, d) in grads.b.iter_mut().zip(&dz) {
                *gb += d;
            }
            let mut dx = vec![0.0; self.input_dim];
            self.w.matvec_t_acc_unchecked(&dz, &mut dx);
            d_inputs[t] = dx;
            dh.fill(0.0);
            self.u.matvec_t_acc_unchecked(&dz, &mut dh);
        }
        Ok((d_inputs, LstmState { h: dh, c: dc }))
    }
}

impl Parameters for LstmLayerParams {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![self.w.as_slice(), self.u.as_slice(), &self.b]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.w.as_mut_slice(), self.u.as_mut_slice(), &mut self.b]
    }
}

/// Layers applied in order; layer `k` consumes the hidden sequence of layer `k-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmStack {
    layers: Vec<LstmLayerParams>,
}

pub type StackState = Vec<LstmState>;

#[derive(Debug, Clone)]
pub struct StackTrace {
    layers: Vec<LayerTrace>,
}

impl StackTrace {
    /// Hidden vectors of the top layer.
    pub fn outputs(&self) -> &[Vec<f64>] {
        self.layers.last().map(|l| l.outputs()).unwrap_or(&[])
    }

    pub fn final_state(&self) -> StackState {
        self.layers.iter().map(|l| l.final_state.clone()).collect()
    }
}

impl LstmStack {
    pub fn new(layers: Vec<LstmLayerParams>) -> Result<Self> {
        let stack = Self { layers };
        stack.validate()?;
        Ok(stack)
    }

    pub fn init<R: Rng + ?Sized>(
        input_dim: usize,
        hidden_dim: usize,
        depth: usize,
        rng: &mut R,
    ) -> Self {
        let layers = (0..depth)
            .map(|k| {
                LstmLayerParams::init(if k == 0 { input_dim } else { hidden_dim }, hidden_dim, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn layers(&self) -> &[LstmLayerParams] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [LstmLayerParams] {
        &mut self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn output_dim(&self) -> Option<usize> {
        self.layers.last().map(|l| l.hidden_dim)
    }

    pub fn zero_state(&self) -> StackState {
        self.layers
            .iter()
            .map(|l| LstmState::zeros(l.hidden_dim))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        for (k, layer) in self.layers.iter().enumerate() {
            layer.validate()?;
            if k > 0 {
                check_len(
                    "stacked layer input",
                    self.layers[k - 1].hidden_dim,
                    layer.input_dim,
                )?;
            }
        }
        Ok(())
    }

    pub fn forward_trace(
        &self,
        inputs: &[Vec<f64>],
        init: Option<&StackState>,
    ) -> Result<StackTrace> {
        if let Some(s) = init {
            check_len("stack initial state", self.layers.len(), s.len())?;
        }
        let zero = self.zero_state();
        let init = init.unwrap_or(&zero);
        let mut traces: Vec<LayerTrace> = Vec::with_capacity(self.layers.len());
        for (k, layer) in self.layers.iter().enumerate() {
            let input = match traces.last() {
                Some(prev) => prev.outputs(),
                None => inputs,
            };
            let trace = layer.forward_trace(input, &init[k])?;
            traces.push(trace);
        }
        Ok(StackTrace { layers: traces })
    }

    /// Returns gradients w.r.t. the stack inputs and the initial per-layer states.
    pub fn backward(
        &self,
        trace: &StackTrace,
        d_outputs: &[Vec<f64>],
        d_final: Option<&StackState>,
        grads: &mut LstmStack,
    ) -> Result<(Vec<Vec<f64>>, StackState)> {
        if let Some(s) = d_final {
            check_len("stack d_final", self.layers.len(), s.len())?;
        }
        let mut d_seq = d_outputs.to_vec();
        let mut d_init = vec![LstmState::zeros(0); self.layers.len()];
        for k in (0..self.layers.len()).rev() {
            let (d_in, d_state) = self.layers[k].backward(
                &trace.layers[k],
                &d_seq,
                d_final.map(|s| &s[k]),
                &mut grads.layers[k],
            )?;
            d_seq = d_in;
            d_init[k] = d_state;
        }
        Ok((d_seq, d_init))
    }
}

impl Parameters for LstmStack {
    fn tensors(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| l.tensors()).collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.tensors_mut())
            .collect()
    }
}
