//! Model parameters and forward passes: embeddings, the Bi-LSTM encoder and
//! decoder cells, and the softmax output layer.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::tagger::scheme::{Tag, TAG_COUNT};
use crate::util::{fnv1a, subseed};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("input dimension {got} does not match cell input dimension {want}")]
    InputDim { got: usize, want: usize },
    #[error("state dimension {got} does not match cell hidden dimension {want}")]
    StateDim { got: usize, want: usize },
    #[error("page must contain at least one token")]
    EmptyPage,
    #[error("token {0:?} contains whitespace")]
    TokenWhitespace(String),
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut() -> f64) -> Self {
        Self {
            rows,
            cols,
            data: (0..rows * cols).map(|_| f()).collect(),
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `out = self * v` (v has `cols` entries).
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for (r, slot) in out.iter_mut().enumerate() {
            let row = self.row(r);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(v) {
                acc += a * b;
            }
            *slot = acc;
        }
        out
    }

    /// `out = self^T * v` (v has `rows` entries).
    pub fn matvec_t(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &vr) in v.iter().enumerate() {
            if vr == 0.0 {
                continue;
            }
            let row = self.row(r);
            for (slot, a) in out.iter_mut().zip(row) {
                *slot += vr * a;
            }
        }
        out
    }

    /// `self += outer(u, v)` with u along rows.
    pub fn add_outer(&mut self, u: &[f64], v: &[f64]) {
        debug_assert_eq!(u.len(), self.rows);
        debug_assert_eq!(v.len(), self.cols);
        for (r, &ur) in u.iter().enumerate() {
            if ur == 0.0 {
                continue;
            }
            let row = self.row_mut(r);
            for (slot, b) in row.iter_mut().zip(v) {
                *slot += ur * b;
            }
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One gate of an LSTM cell: recurrent weights, input weights, bias.
#[derive(Debug, Clone, PartialEq)]
pub struct GateParams {
    pub rec: Matrix,
    pub inp: Matrix,
    pub bias: Vec<f64>,
}

impl GateParams {
    fn zeros(hidden: usize, input: usize) -> Self {
        Self {
            rec: Matrix::zeros(hidden, hidden),
            inp: Matrix::zeros(hidden, input),
            bias: vec![0.0; hidden],
        }
    }

    fn pre_activation(&self, h_prev: &[f64], x: &[f64]) -> Vec<f64> {
        let mut a = self.rec.matvec(h_prev);
        let bx = self.inp.matvec(x);
        for ((slot, b), bias) in a.iter_mut().zip(&bx).zip(&self.bias) {
            *slot += b + bias;
        }
        a
    }
}

/// One direction of an LSTM layer: input, forget, cell, output gates.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    pub input_gate: GateParams,
    pub forget_gate: GateParams,
    pub cell_gate: GateParams,
    pub output_gate: GateParams,
}

impl LstmCell {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        Self {
            input_gate: GateParams::zeros(hidden, input),
            forget_gate: GateParams::zeros(hidden, input),
            cell_gate: GateParams::zeros(hidden, input),
            output_gate: GateParams::zeros(hidden, input),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.input_gate.rec.rows
    }

    pub fn input_dim(&self) -> usize {
        self.input_gate.inp.cols
    }
}

/// Hidden and cell vectors carried between time steps.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub hidden: Vec<f64>,
    pub cell: Vec<f64>,
}

impl CellState {
    pub fn zeros(dim: usize) -> Self {
        Self {
            hidden: vec![0.0; dim],
            cell: vec![0.0; dim],
        }
    }
}

/// Everything the backward pass needs about one cell step.
#[derive(Debug, Clone)]
pub(crate) struct CellStep {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

pub(crate) fn cell_forward(cell: &LstmCell, x: &[f64], prev: &CellState) -> CellStep {
    let i: Vec<f64> = cell
        .input_gate
        .pre_activation(&prev.hidden, x)
        .into_iter()
        .map(sigmoid)
        .collect();
    let f: Vec<f64> = cell
        .forget_gate
        .pre_activation(&prev.hidden, x)
        .into_iter()
        .map(sigmoid)
        .collect();
    let g: Vec<f64> = cell
        .cell_gate
        .pre_activation(&prev.hidden, x)
        .into_iter()
        .map(f64::tanh)
        .collect();
    let o: Vec<f64> = cell
        .output_gate
        .pre_activation(&prev.hidden, x)
        .into_iter()
        .map(sigmoid)
        .collect();
    let c: Vec<f64> = f
        .iter()
        .zip(&prev.cell)
        .zip(i.iter().zip(&g))
        .map(|((f, cp), (i, g))| f * cp + i * g)
        .collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h: Vec<f64> = o.iter().zip(&tanh_c).map(|(o, t)| o * t).collect();
    CellStep {
        x: x.to_vec(),
        h_prev: prev.hidden.clone(),
        c_prev: prev.cell.clone(),
        i,
        f,
        g,
        o,
        c,
        tanh_c,
        h,
    }
}

/// One LSTM update: gate activations from the previous state and the input,
/// then the new cell and hidden vectors.
pub fn lstm_cell_step(cell: &LstmCell, x: &[f64], prev: &CellState) -> Result<CellState, ModelError> {
    if x.len() != cell.input_dim() {
        return Err(ModelError::InputDim {
            got: x.len(),
            want: cell.input_dim(),
        });
    }
    if prev.hidden.len() != cell.hidden_dim() || prev.cell.len() != cell.hidden_dim() {
        return Err(ModelError::StateDim {
            got: prev.hidden.len(),
            want: cell.hidden_dim(),
        });
    }
    let step = cell_forward(cell, x, prev);
    Ok(CellState {
        hidden: step.h,
        cell: step.c,
    })
}

/// Run one direction over a sequence starting from the zero state.
pub(crate) fn run_direction(cell: &LstmCell, xs: &[Vec<f64>]) -> Vec<CellStep> {
    let mut state = CellState::zeros(cell.hidden_dim());
    let mut steps = Vec::with_capacity(xs.len());
    for x in xs {
        let step = cell_forward(cell, x, &state);
        state = CellState {
            hidden: step.h.clone(),
            cell: step.c.clone(),
        };
        steps.push(step);
    }
    steps
}

/// A tokenized page: an ordered word list plus an opaque source id.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedPage {
    pub source_id: String,
    pub tokens: Vec<String>,
}

impl TokenizedPage {
    pub fn new(source_id: impl Into<String>, tokens: Vec<String>) -> Result<Self, ModelError> {
        if tokens.is_empty() {
            return Err(ModelError::EmptyPage);
        }
        for t in &tokens {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(ModelError::TokenWhitespace(t.clone()));
            }
        }
        Ok(Self {
            source_id: source_id.into(),
            tokens,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// The trainable tensors, grouped so gradients can mirror the layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub embeddings: Matrix,
    pub enc_fwd: LstmCell,
    pub enc_bwd: LstmCell,
    pub dec_fwd: LstmCell,
    pub dec_bwd: LstmCell,
    pub out_weight: Matrix,
    pub out_bias: Vec<f64>,
}

pub const GATE_NAMES: [&str; 4] = ["input", "forget", "cell", "output"];
pub const CELL_NAMES: [&str; 4] = ["enc_fwd", "enc_bwd", "dec_fwd", "dec_bwd"];

impl ParamSet {
    pub fn zeros(vocab: usize, embed: usize, enc: usize, dec: usize) -> Self {
        Self {
            embeddings: Matrix::zeros(vocab, embed),
            enc_fwd: LstmCell::zeros(enc, embed),
            enc_bwd: LstmCell::zeros(enc, embed),
            dec_fwd: LstmCell::zeros(dec, 2 * enc),
            dec_bwd: LstmCell::zeros(dec, 2 * enc),
            out_weight: Matrix::zeros(TAG_COUNT, 2 * dec),
            out_bias: vec![0.0; TAG_COUNT],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(
            self.embeddings.rows,
            self.embeddings.cols,
            self.enc_fwd.hidden_dim(),
            self.dec_fwd.hidden_dim(),
        )
    }

    fn cell(&self, name: &str) -> Option<&LstmCell> {
        match name {
            "enc_fwd" => Some(&self.enc_fwd),
            "enc_bwd" => Some(&self.enc_bwd),
            "dec_fwd" => Some(&self.dec_fwd),
            "dec_bwd" => Some(&self.dec_bwd),
            _ => None,
        }
    }

    fn cell_mut(&mut self, name: &str) -> Option<&mut LstmCell> {
        match name {
            "enc_fwd" => Some(&mut self.enc_fwd),
            "enc_bwd" => Some(&mut self.enc_bwd),
            "dec_fwd" => Some(&mut self.dec_fwd),
            "dec_bwd" => Some(&mut self.dec_bwd),
            _ => None,
        }
    }

    /// Names of every tensor, in a stable order.
    pub fn tensor_names(&self) -> Vec<String> {
        let mut names = vec!["embeddings".to_string()];
        for cell in CELL_NAMES {
            for gate in GATE_NAMES {
                for part in ["rec", "inp", "bias"] {
                    names.push(format!("{cell}.{gate}.{part}"));
                }
            }
        }
        names.push("out.weight".to_string());
        names.push("out.bias".to_string());
        names
    }

    /// Flat view of one tensor's values.
    pub fn tensor(&self, name: &str) -> Option<&[f64]> {
        match name {
            "embeddings" => return Some(&self.embeddings.data),
            "out.weight" => return Some(&self.out_weight.data),
            "out.bias" => return Some(&self.out_bias),
            _ => {}
        }
        let mut parts = name.splitn(3, '.');
        let cell = self.cell(parts.next()?)?;
        let gate = match parts.next()? {
            "input" => &cell.input_gate,
            "forget" => &cell.forget_gate,
            "cell" => &cell.cell_gate,
            "output" => &cell.output_gate,
            _ => return None,
        };
        match parts.next()? {
            "rec" => Some(&gate.rec.data),
            "inp" => Some(&gate.inp.data),
            "bias" => Some(&gate.bias),
            _ => None,
        }
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        match name {
            "embeddings" => return Some(&mut self.embeddings.data),
            "out.weight" => return Some(&mut self.out_weight.data),
            "out.bias" => return Some(&mut self.out_bias),
            _ => {}
        }
        let mut parts = name.splitn(3, '.');
        let cell = self.cell_mut(parts.next()?)?;
        let gate = match parts.next()? {
            "input" => &mut cell.input_gate,
            "forget" => &mut cell.forget_gate,
            "cell" => &mut cell.cell_gate,
            "output" => &mut cell.output_gate,
            _ => return None,
        };
        match parts.next()? {
            "rec" => Some(&mut gate.rec.data),
            "inp" => Some(&mut gate.inp.data),
            "bias" => Some(&mut gate.bias),
            _ => None,
        }
    }

    /// Sum of squares over every tensor.
    pub fn squared_norm(&self) -> f64 {
        self.tensor_names()
            .iter()
            .map(|n| {
                self.tensor(n)
                    .unwrap()
                    .iter()
                    .map(|v| v * v)
                    .sum::<f64>()
            })
            .sum()
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn axpy(&mut self, scale: f64, other: &ParamSet) {
        for name in self.tensor_names() {
            let src = other.tensor(&name).expect("tensor layouts match");
            let dst = self.tensor_mut(&name).expect("tensor layouts match");
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for name in self.tensor_names() {
            for v in self.tensor_mut(&name).unwrap() {
                *v *= factor;
            }
        }
    }
}

/// Full tagger parameters: vocabulary, trainable tensors, and the seed used
/// to derive embeddings for tokens never seen in training.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggerParams {
    pub vocab: Vec<String>,
    pub token_index: BTreeMap<String, usize>,
    pub set: ParamSet,
    pub seed: u64,
}

impl TaggerParams {
    /// Initialize from a vocabulary. Embedding rows come from a per-token
    /// hash of (seed, token), so initialization is independent of vocabulary
    /// order; cell and output weights are seeded uniform.
    pub fn init(vocab: Vec<String>, embed: usize, enc: usize, dec: usize, seed: u64) -> Self {
        let token_index: BTreeMap<String, usize> = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        let mut set = ParamSet::zeros(vocab.len(), embed, enc, dec);
        for (row, token) in vocab.iter().enumerate() {
            let values = hash_embedding(token, embed, seed);
            set.embeddings.row_mut(row).copy_from_slice(&values);
        }
        for name in set.tensor_names() {
            if name == "embeddings" {
                continue;
            }
            let fan_in = if name.starts_with("enc") {
                if name.contains(".rec") {
                    enc
                } else {
                    embed
                }
            } else if name.starts_with("dec") {
                if name.contains(".rec") {
                    dec
                } else {
                    2 * enc
                }
            } else {
                2 * dec
            };
            let bound = 1.0 / (fan_in as f64).sqrt();
            let mut rng = ChaCha8Rng::seed_from_u64(subseed(seed, &name));
            let tensor = set.tensor_mut(&name).unwrap();
            if name.ends_with(".bias") || name == "out.bias" {
                // Forget-gate biases start at 1 so early gradients flow.
                let fill = if name.contains(".forget.") { 1.0 } else { 0.0 };
                tensor.iter_mut().for_each(|v| *v = fill);
            } else {
                tensor
                    .iter_mut()
                    .for_each(|v| *v = rng.gen_range(-bound..bound));
            }
        }
        Self {
            vocab,
            token_index,
            set,
            seed,
        }
    }

    pub fn embedding_dim(&self) -> usize {
        self.set.embeddings.cols
    }

    pub fn encoder_units(&self) -> usize {
        self.set.enc_fwd.hidden_dim()
    }

    pub fn decoder_units(&self) -> usize {
        self.set.dec_fwd.hidden_dim()
    }

    /// Embedding vector for a token: the trained row when in-vocabulary,
    /// otherwise the deterministic hash-derived vector.
    pub fn embedding(&self, token: &str) -> Vec<f64> {
        match self.token_index.get(token) {
            Some(&row) => self.set.embeddings.row(row).to_vec(),
            None => hash_embedding(token, self.embedding_dim(), self.seed),
        }
    }

    pub(crate) fn token_row(&self, token: &str) -> Option<usize> {
        self.token_index.get(token).copied()
    }

    /// Bi-LSTM encoder: forward pass over x_1..x_n, backward pass over
    /// x_n..x_1, concatenated per token.
    pub fn bilstm_encode(&self, tokens: &[String]) -> Result<Vec<Vec<f64>>, ModelError> {
        if tokens.is_empty() {
            return Err(ModelError::EmptyPage);
        }
        let xs: Vec<Vec<f64>> = tokens.iter().map(|t| self.embedding(t)).collect();
        Ok(bilstm_outputs(&self.set.enc_fwd, &self.set.enc_bwd, &xs))
    }

    /// Decoder Bi-LSTM over the encoded sequence, then the output layer and
    /// a per-token softmax.
    pub fn decode_scores(&self, encoded: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, ModelError> {
        if encoded.is_empty() {
            return Err(ModelError::EmptyPage);
        }
        if encoded[0].len() != self.set.dec_fwd.input_dim() {
            return Err(ModelError::InputDim {
                got: encoded[0].len(),
                want: self.set.dec_fwd.input_dim(),
            });
        }
        let dhat = bilstm_outputs(&self.set.dec_fwd, &self.set.dec_bwd, encoded);
        Ok(dhat
            .iter()
            .map(|d| {
                let mut logits = self.set.out_weight.matvec(d);
                for (l, b) in logits.iter_mut().zip(&self.set.out_bias) {
                    *l += b;
                }
                softmax(&logits)
            })
            .collect())
    }

    /// Per-token tag probabilities for a page.
    pub fn predict_probs(&self, tokens: &[String]) -> Result<Vec<Vec<f64>>, ModelError> {
        let encoded = self.bilstm_encode(tokens)?;
        self.decode_scores(&encoded)
    }

    /// Highest-scoring tag per token (lowest index wins ties).
    pub fn predict_tags(&self, tokens: &[String]) -> Result<Vec<Tag>, ModelError> {
        let probs = self.predict_probs(tokens)?;
        Ok(probs
            .iter()
            .map(|row| {
                let mut best = 0usize;
                for (j, v) in row.iter().enumerate() {
                    if *v > row[best] {
                        best = j;
                    }
                }
                Tag::from_index(best).unwrap()
            })
            .collect())
    }
}

/// Deterministic embedding initialization from a token hash.
pub fn hash_embedding(token: &str, dim: usize, seed: u64) -> Vec<f64> {
    let mut key = seed.to_le_bytes().to_vec();
    key.extend_from_slice(token.as_bytes());
    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(&key));
    (0..dim).map(|_| rng.gen_range(-0.1..0.1)).collect()
}

/// Concatenated forward/backward hidden states per position.
pub(crate) fn bilstm_outputs(fwd: &LstmCell, bwd: &LstmCell, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = xs.len();
    let fwd_steps = run_direction(fwd, xs);
    let rev: Vec<Vec<f64>> = xs.iter().rev().cloned().collect();
    let bwd_steps = run_direction(bwd, &rev);
    (0..n)
        .map(|t| {
            let mut out = fwd_steps[t].h.clone();
            out.extend_from_slice(&bwd_steps[n - 1 - t].h);
            out
        })
        .collect()
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}
