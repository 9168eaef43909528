//! Training: analytic gradients through the full model (output layer,
//! decoder Bi-LSTM, encoder Bi-LSTM, embeddings) and a deterministic
//! mini-batch gradient-descent loop with self-adaptive tag weights.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::TaggerHyperParams;
use crate::tagger::corpus::LabeledPage;
use crate::tagger::loss::{adaptive_loss, update_weights_supported, AdaptiveWeights, LossError, LOG_CLAMP};
use crate::tagger::metrics::{compute_metrics, per_tag_f1, ExtractionMetrics, MetricsError};
use crate::tagger::model::{
    run_direction, CellStep, LstmCell, ModelError, ParamSet, TaggerParams,
};
use crate::tagger::scheme::Tag;
use crate::util::subseed_n;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("validation corpus is empty")]
    EmptyValidation,
    #[error("loss diverged (non-finite) at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Training schedule. Dimensions come from the engine config; the seed
/// drives initialization, shuffling, and hash embeddings.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub hyper: TaggerHyperParams,
    pub seed: u64,
}

/// Per-epoch training record.
#[derive(Debug, Clone)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation: ExtractionMetrics,
    pub tag_f1: Vec<f64>,
    /// Weights that the NEXT epoch will train with.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_validation_f1: f64,
}

/// Forward pass keeping every intermediate needed by the backward pass.
struct ForwardCache {
    token_rows: Vec<Option<usize>>,
    enc_fwd: Vec<CellStep>,
    enc_bwd: Vec<CellStep>,
    hhat: Vec<Vec<f64>>,
    dec_fwd: Vec<CellStep>,
    dec_bwd: Vec<CellStep>,
    dhat: Vec<Vec<f64>>,
    probs: Vec<Vec<f64>>,
}

fn forward_cache(params: &TaggerParams, tokens: &[String]) -> Result<ForwardCache, ModelError> {
    if tokens.is_empty() {
        return Err(ModelError::EmptyPage);
    }
    let n = tokens.len();
    let token_rows: Vec<Option<usize>> = tokens.iter().map(|t| params.token_row(t)).collect();
    let xs: Vec<Vec<f64>> = tokens.iter().map(|t| params.embedding(t)).collect();

    let enc_fwd = run_direction(&params.set.enc_fwd, &xs);
    let xs_rev: Vec<Vec<f64>> = xs.iter().rev().cloned().collect();
    let enc_bwd = run_direction(&params.set.enc_bwd, &xs_rev);
    let hhat: Vec<Vec<f64>> = (0..n)
        .map(|t| {
            let mut v = enc_fwd[t].h.clone();
            v.extend_from_slice(&enc_bwd[n - 1 - t].h);
            v
        })
        .collect();

    let dec_fwd = run_direction(&params.set.dec_fwd, &hhat);
    let hhat_rev: Vec<Vec<f64>> = hhat.iter().rev().cloned().collect();
    let dec_bwd = run_direction(&params.set.dec_bwd, &hhat_rev);
    let dhat: Vec<Vec<f64>> = (0..n)
        .map(|t| {
            let mut v = dec_fwd[t].h.clone();
            v.extend_from_slice(&dec_bwd[n - 1 - t].h);
            v
        })
        .collect();

    let probs: Vec<Vec<f64>> = dhat
        .iter()
        .map(|d| {
            let mut logits = params.set.out_weight.matvec(d);
            for (l, b) in logits.iter_mut().zip(&params.set.out_bias) {
                *l += b;
            }
            crate::tagger::model::softmax(&logits)
        })
        .collect();

    Ok(ForwardCache {
        token_rows,
        enc_fwd,
        enc_bwd,
        hhat,
        dec_fwd,
        dec_bwd,
        dhat,
        probs,
    })
}

/// Loss of one page under the current parameters (forward only).
pub fn page_loss(
    params: &TaggerParams,
    tokens: &[String],
    gold: &[Tag],
    weights: &AdaptiveWeights,
) -> Result<f64, TrainError> {
    let probs = params.predict_probs(tokens)?;
    Ok(adaptive_loss(&probs, gold, weights)?)
}

/// Backward pass through one LSTM direction. `dh_list[t]` is the gradient
/// arriving at the hidden output of step `t`; returns the gradients with
/// respect to the step inputs and accumulates parameter gradients.
fn direction_backward(
    cell: &LstmCell,
    steps: &[CellStep],
    dh_list: &[Vec<f64>],
    grads: &mut LstmCell,
) -> Vec<Vec<f64>> {
    let n = steps.len();
    let hidden = cell.hidden_dim();
    let input = cell.input_dim();
    let mut dxs = vec![vec![0.0; input]; n];
    let mut dh_next = vec![0.0; hidden];
    let mut dc_next = vec![0.0; hidden];

    for t in (0..n).rev() {
        let step = &steps[t];
        let mut dh = dh_list[t].clone();
        for (a, b) in dh.iter_mut().zip(&dh_next) {
            *a += b;
        }

        let mut d_o = vec![0.0; hidden];
        let mut dc = dc_next.clone();
        for j in 0..hidden {
            d_o[j] = dh[j] * step.tanh_c[j];
            dc[j] += dh[j] * step.o[j] * (1.0 - step.tanh_c[j] * step.tanh_c[j]);
        }

        let mut da_i = vec![0.0; hidden];
        let mut da_f = vec![0.0; hidden];
        let mut da_g = vec![0.0; hidden];
        let mut da_o = vec![0.0; hidden];
        for j in 0..hidden {
            let di = dc[j] * step.g[j];
            let dg = dc[j] * step.i[j];
            let df = dc[j] * step.c_prev[j];
            da_i[j] = di * step.i[j] * (1.0 - step.i[j]);
            da_f[j] = df * step.f[j] * (1.0 - step.f[j]);
            da_g[j] = dg * (1.0 - step.g[j] * step.g[j]);
            da_o[j] = d_o[j] * step.o[j] * (1.0 - step.o[j]);
            dc_next[j] = dc[j] * step.f[j];
        }

        let gate_pairs = [
            (&cell.input_gate, &mut grads.input_gate, &da_i),
            (&cell.forget_gate, &mut grads.forget_gate, &da_f),
            (&cell.cell_gate, &mut grads.cell_gate, &da_g),
            (&cell.output_gate, &mut grads.output_gate, &da_o),
        ];
        let mut dh_prev = vec![0.0; hidden];
        let dx = &mut dxs[t];
        for (gate, gate_grads, da) in gate_pairs {
            gate_grads.rec.add_outer(da, &step.h_prev);
            gate_grads.inp.add_outer(da, &step.x);
            for (b, d) in gate_grads.bias.iter_mut().zip(da.iter()) {
                *b += d;
            }
            let rec_t = gate.rec.matvec_t(da);
            for (a, b) in dh_prev.iter_mut().zip(&rec_t) {
                *a += b;
            }
            let inp_t = gate.inp.matvec_t(da);
            for (a, b) in dx.iter_mut().zip(&inp_t) {
                *a += b;
            }
        }
        dh_next = dh_prev;
    }
    dxs
}

/// Loss and analytic gradients of one page, accumulated into `grads`.
pub fn page_gradients(
    params: &TaggerParams,
    tokens: &[String],
    gold: &[Tag],
    weights: &AdaptiveWeights,
    grads: &mut ParamSet,
) -> Result<f64, TrainError> {
    let cache = forward_cache(params, tokens)?;
    let loss = adaptive_loss(&cache.probs, gold, weights)?;
    let n = tokens.len();
    let enc_units = params.encoder_units();
    let dec_units = params.decoder_units();

    // Output layer: dL/dlogit_j = w_gold * (p_j - [j == gold]); tokens whose
    // gold probability sits below the log clamp contribute zero gradient
    // (the clamped loss is locally flat there).
    let mut d_dhat: Vec<Vec<f64>> = Vec::with_capacity(n);
    for t in 0..n {
        let gold_idx = gold[t].index();
        let w = weights.weight_for(gold[t]);
        let probs = &cache.probs[t];
        let mut d_logits = vec![0.0; probs.len()];
        if probs[gold_idx] > LOG_CLAMP {
            for (j, p) in probs.iter().enumerate() {
                d_logits[j] = w * (p - if j == gold_idx { 1.0 } else { 0.0 });
            }
        }
        grads.out_weight.add_outer(&d_logits, &cache.dhat[t]);
        for (b, d) in grads.out_bias.iter_mut().zip(&d_logits) {
            *b += d;
        }
        d_dhat.push(params.set.out_weight.matvec_t(&d_logits));
    }

    // Decoder Bi-LSTM. The forward direction consumed hhat in order; the
    // backward direction consumed it reversed.
    let dec_fwd_dh: Vec<Vec<f64>> = d_dhat.iter().map(|d| d[..dec_units].to_vec()).collect();
    let mut dec_bwd_dh: Vec<Vec<f64>> = vec![vec![0.0; dec_units]; n];
    for t in 0..n {
        dec_bwd_dh[n - 1 - t] = d_dhat[t][dec_units..].to_vec();
    }
    let dx_dec_fwd = direction_backward(
        &params.set.dec_fwd,
        &cache.dec_fwd,
        &dec_fwd_dh,
        &mut grads.dec_fwd,
    );
    let dx_dec_bwd = direction_backward(
        &params.set.dec_bwd,
        &cache.dec_bwd,
        &dec_bwd_dh,
        &mut grads.dec_bwd,
    );
    let mut d_hhat: Vec<Vec<f64>> = dx_dec_fwd;
    for t in 0..n {
        for (a, b) in d_hhat[t].iter_mut().zip(&dx_dec_bwd[n - 1 - t]) {
            *a += b;
        }
    }

    // Encoder Bi-LSTM, same pattern.
    let enc_fwd_dh: Vec<Vec<f64>> = d_hhat.iter().map(|d| d[..enc_units].to_vec()).collect();
    let mut enc_bwd_dh: Vec<Vec<f64>> = vec![vec![0.0; enc_units]; n];
    for t in 0..n {
        enc_bwd_dh[n - 1 - t] = d_hhat[t][enc_units..].to_vec();
    }
    let dx_enc_fwd = direction_backward(
        &params.set.enc_fwd,
        &cache.enc_fwd,
        &enc_fwd_dh,
        &mut grads.enc_fwd,
    );
    let dx_enc_bwd = direction_backward(
        &params.set.enc_bwd,
        &cache.enc_bwd,
        &enc_bwd_dh,
        &mut grads.enc_bwd,
    );

    // Embeddings: only in-vocabulary tokens are trainable.
    for t in 0..n {
        if let Some(row) = cache.token_rows[t] {
            let dst = grads.embeddings.row_mut(row);
            for ((d, a), b) in dst.iter_mut().zip(&dx_enc_fwd[t]).zip(&dx_enc_bwd[n - 1 - t]) {
                *d += a + b;
            }
        }
    }

    let _ = &cache.hhat;
    Ok(loss)
}

/// Vocabulary of a corpus: distinct tokens, sorted.
pub fn corpus_vocabulary(pages: &[LabeledPage]) -> Vec<String> {
    let mut vocab: Vec<String> = pages
        .iter()
        .flat_map(|p| p.tokens.iter().cloned())
        .collect();
    vocab.sort();
    vocab.dedup();
    vocab
}

fn evaluate(
    params: &TaggerParams,
    pages: &[LabeledPage],
) -> Result<(ExtractionMetrics, Vec<f64>, Vec<bool>), TrainError> {
    let mut predicted = Vec::with_capacity(pages.len());
    let mut gold = Vec::with_capacity(pages.len());
    let mut tag_pairs = Vec::with_capacity(pages.len());
    for page in pages {
        let pred_tags = params.predict_tags(&page.tokens)?;
        let pred_entities =
            crate::tagger::scheme::decode_bieso(&page.tokens, &pred_tags).expect("aligned");
        predicted.push((page.id.clone(), pred_entities));
        gold.push((page.id.clone(), page.entities()));
        tag_pairs.push((pred_tags, page.tags.clone()));
    }
    let metrics = compute_metrics(&predicted, &gold)?;
    let (f1, support) = per_tag_f1(&tag_pairs);
    Ok((metrics, f1, support))
}

/// Train on `train_pages`, validating each epoch on `val_pages`. Returns the
/// checkpoint with the best validation all-type F1 plus the per-epoch record.
///
/// The loop is plain mini-batch gradient descent over the summed weighted
/// loss, with an optional global-norm gradient clip. The adaptive weights
/// start uniform and are recomputed from validation F1 after every epoch.
pub fn train(
    train_pages: &[LabeledPage],
    val_pages: &[LabeledPage],
    cfg: &TrainConfig,
) -> Result<(TaggerParams, TrainReport), TrainError> {
    if train_pages.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    if val_pages.is_empty() {
        return Err(TrainError::EmptyValidation);
    }
    let h = &cfg.hyper;
    let vocab = corpus_vocabulary(train_pages);
    let mut params = TaggerParams::init(
        vocab,
        h.embedding_dim,
        h.encoder_units,
        h.decoder_units,
        cfg.seed,
    );
    let mut weights = AdaptiveWeights::uniform(h.alpha_distinguish);

    let mut report = TrainReport {
        epochs: Vec::new(),
        best_epoch: 0,
        best_validation_f1: f64::NEG_INFINITY,
    };
    let mut best_params = params.clone();

    let mut order: Vec<usize> = (0..train_pages.len()).collect();
    for epoch in 1..=h.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(subseed_n(cfg.seed, "epoch-shuffle", epoch as u64));
        order.shuffle(&mut rng);

        let mut epoch_loss = 0.0;
        for batch in order.chunks(h.batch_size) {
            let mut grads = params.set.zeros_like();
            let mut batch_loss = 0.0;
            for &idx in batch {
                let page = &train_pages[idx];
                batch_loss +=
                    page_gradients(&params, &page.tokens, &page.tags, &weights, &mut grads)?;
            }
            if !batch_loss.is_finite() {
                return Err(TrainError::Diverged { epoch });
            }
            if h.grad_clip > 0.0 {
                let norm = grads.squared_norm().sqrt();
                if norm > h.grad_clip {
                    grads.scale(h.grad_clip / norm);
                }
            }
            params.set.axpy(-h.learning_rate, &grads);
            epoch_loss += batch_loss;
        }
        if !epoch_loss.is_finite() {
            return Err(TrainError::Diverged { epoch });
        }

        let (metrics, tag_f1, support) = evaluate(&params, val_pages)?;
        weights = update_weights_supported(&tag_f1, &support, h.alpha_distinguish)?;
        if metrics.all_types.f1 > report.best_validation_f1 {
            report.best_validation_f1 = metrics.all_types.f1;
            report.best_epoch = epoch;
            best_params = params.clone();
        }
        report.epochs.push(EpochStats {
            epoch,
            train_loss: epoch_loss,
            validation: metrics,
            tag_f1,
            weights: weights.weights.clone(),
        });
    }

    Ok((best_params, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagger::scheme::{EntityType, Position};

    fn words(text: &str) -> Vec<String> {
        text.split_whitespace().map(str::to_string).collect()
    }

    fn toy_page() -> (Vec<String>, Vec<Tag>) {
        let tokens = words("visit Ely now");
        let tags = vec![
            Tag::Outside,
            Tag::Typed(Position::Single, EntityType::City),
            Tag::Outside,
        ];
        (tokens, tags)
    }

    /// Central finite differences against the analytic gradient on a toy
    /// model: embed 4, hidden 4, 3 tokens, every parameter tensor.
    #[test]
    fn analytic_gradients_match_finite_differences() {
        let (tokens, tags) = toy_page();
        let vocab = corpus_vocabulary(&[LabeledPage::new("p", tokens.clone(), tags.clone())]);
        let params = TaggerParams::init(vocab, 4, 4, 4, 77);
        let mut weights = AdaptiveWeights::uniform(64.0);
        // Non-uniform weights so the weighted path is exercised too.
        weights.weights[Tag::Outside.index()] = 0.5;
        weights.weights[Tag::Typed(Position::Single, EntityType::City).index()] = 2.25;

        let mut grads = params.set.zeros_like();
        let loss0 = page_gradients(&params, &tokens, &tags, &weights, &mut grads).unwrap();
        assert!(loss0 > 0.0);

        let eps = 1e-4;
        let mut worst: (f64, String) = (0.0, String::new());
        for name in params.set.tensor_names() {
            let len = params.set.tensor(&name).unwrap().len();
            for k in 0..len {
                let mut plus = params.clone();
                plus.set.tensor_mut(&name).unwrap()[k] += eps;
                let lp = page_loss(&plus, &tokens, &tags, &weights).unwrap();
                let mut minus = params.clone();
                minus.set.tensor_mut(&name).unwrap()[k] -= eps;
                let lm = page_loss(&minus, &tokens, &tags, &weights).unwrap();
                let fd = (lp - lm) / (2.0 * eps);
                let analytic = grads.tensor(&name).unwrap()[k];
                // Denominator floored at 1e-4: near-zero components are held
                // to an absolute 1e-7 instead of an ill-defined ratio.
                let denom = fd.abs().max(analytic.abs()).max(1e-4);
                let rel = (fd - analytic).abs() / denom;
                if rel > worst.0 {
                    worst = (rel, format!("{name}[{k}]"));
                }
            }
        }
        assert!(
            worst.0 < 1e-3,
            "worst relative error {} at {}",
            worst.0,
            worst.1
        );
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let cfg = TrainConfig {
            hyper: TaggerHyperParams::default(),
            seed: 1,
        };
        let val = vec![LabeledPage::new("v", words("a"), vec![Tag::Outside])];
        assert!(matches!(
            train(&[], &val, &cfg),
            Err(TrainError::EmptyCorpus)
        ));
    }

    fn tiny_hyper(alpha: f64, epochs: usize) -> TaggerHyperParams {
        TaggerHyperParams {
            embedding_dim: 8,
            encoder_units: 8,
            decoder_units: 8,
            alpha_distinguish: alpha,
            epochs,
            batch_size: 4,
            learning_rate: 0.2,
            grad_clip: 10.0,
        }
    }

    fn tiny_corpus() -> Vec<LabeledPage> {
        let city = Tag::Typed(Position::Single, EntityType::City);
        let zip = Tag::Typed(Position::Single, EntityType::Zip);
        let mut pages = Vec::new();
        for i in 0..12 {
            let (tokens, tags) = if i % 2 == 0 {
                (
                    words(&format!("w{i} in Ely now")),
                    vec![Tag::Outside, Tag::Outside, city, Tag::Outside],
                )
            } else {
                (
                    words(&format!("w{i} zip 89301 here")),
                    vec![Tag::Outside, Tag::Outside, zip, Tag::Outside],
                )
            };
            pages.push(LabeledPage::new(format!("p{i}"), tokens, tags));
        }
        pages
    }

    #[test]
    fn alpha_zero_keeps_weights_at_one_every_epoch() {
        let pages = tiny_corpus();
        let cfg = TrainConfig {
            hyper: tiny_hyper(0.0, 3),
            seed: 3,
        };
        let (_, report) = train(&pages, &pages, &cfg).unwrap();
        for epoch in &report.epochs {
            assert!(epoch.weights.iter().all(|&w| w == 1.0));
        }
    }

    #[test]
    fn training_is_deterministic_under_seed() {
        let pages = tiny_corpus();
        let cfg = TrainConfig {
            hyper: tiny_hyper(8.0, 2),
            seed: 9,
        };
        let (a, ra) = train(&pages, &pages, &cfg).unwrap();
        let (b, rb) = train(&pages, &pages, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra.epochs.len(), rb.epochs.len());
        for (ea, eb) in ra.epochs.iter().zip(&rb.epochs) {
            assert_eq!(ea.train_loss.to_bits(), eb.train_loss.to_bits());
        }
    }

    #[test]
    fn tiny_corpus_is_learnable() {
        let pages = tiny_corpus();
        let cfg = TrainConfig {
            hyper: tiny_hyper(8.0, 60),
            seed: 5,
        };
        let (params, report) = train(&pages, &pages, &cfg).unwrap();
        assert!(
            report.best_validation_f1 > 0.9,
            "best F1 {}",
            report.best_validation_f1
        );
        let tags = params.predict_tags(&words("w0 in Ely now")).unwrap();
        assert_eq!(
            tags[2],
            Tag::Typed(Position::Single, EntityType::City),
            "{tags:?}"
        );
    }
}
