//! Weighted cross-entropy loss with self-adaptive per-tag weights.
//!
//! Each token contributes `-w[gold] * log p[gold]`; the weight vector is
//! recomputed from validation F1 after every epoch as
//! `w_i = exp(alpha * (mean(F1) - F1_i))`, so below-average tags get
//! exponentially more attention.

use thiserror::Error;

use crate::tagger::scheme::{Tag, TAG_COUNT};

/// Log arguments are clamped here to keep the loss finite.
pub const LOG_CLAMP: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("distribution has {dist} rows but {gold} gold tags")]
    LengthMismatch { dist: usize, gold: usize },
    #[error("distribution row {row} has {got} entries, expected {want}")]
    RowWidth { row: usize, got: usize, want: usize },
    #[error("per-tag F1 vector has {got} entries, expected {want}")]
    F1Length { got: usize, want: usize },
    #[error("F1 value {0} outside [0, 1]")]
    F1OutOfRange(f64),
}

/// Positive per-tag loss weights plus the distinguishing coefficient that
/// produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveWeights {
    pub weights: Vec<f64>,
    pub alpha_distinguish: f64,
}

impl AdaptiveWeights {
    /// All-ones weights: the state before any validation F1 exists, and the
    /// fixed point when every tag scores equally.
    pub fn uniform(alpha_distinguish: f64) -> Self {
        Self {
            weights: vec![1.0; TAG_COUNT],
            alpha_distinguish,
        }
    }

    pub fn weight_for(&self, tag: Tag) -> f64 {
        self.weights[tag.index()]
    }
}

/// `w_i = exp(alpha * (mean(F1) - F1_i))` over the given per-tag F1 vector.
/// Equal F1 everywhere yields exactly 1.0 (the mean is taken verbatim, not
/// recomputed through a lossy sum).
pub fn update_weights(per_tag_f1: &[f64], alpha: f64) -> Result<AdaptiveWeights, LossError> {
    for &f1 in per_tag_f1 {
        if !(0.0..=1.0).contains(&f1) {
            return Err(LossError::F1OutOfRange(f1));
        }
    }
    if per_tag_f1.windows(2).all(|w| w[0] == w[1]) {
        return Ok(AdaptiveWeights {
            weights: vec![1.0; per_tag_f1.len()],
            alpha_distinguish: alpha,
        });
    }
    let mean = per_tag_f1.iter().sum::<f64>() / per_tag_f1.len() as f64;
    Ok(AdaptiveWeights {
        weights: per_tag_f1
            .iter()
            .map(|f1| (alpha * (mean - f1)).exp())
            .collect(),
        alpha_distinguish: alpha,
    })
}

/// Weight update restricted to tags with gold support: unsupported tags
/// never contribute to the loss (no token carries them), so they are
/// excluded from the mean and keep weight 1.
pub fn update_weights_supported(
    per_tag_f1: &[f64],
    supported: &[bool],
    alpha: f64,
) -> Result<AdaptiveWeights, LossError> {
    if per_tag_f1.len() != supported.len() {
        return Err(LossError::F1Length {
            got: supported.len(),
            want: per_tag_f1.len(),
        });
    }
    for &f1 in per_tag_f1 {
        if !(0.0..=1.0).contains(&f1) {
            return Err(LossError::F1OutOfRange(f1));
        }
    }
    let picked: Vec<f64> = per_tag_f1
        .iter()
        .zip(supported)
        .filter(|(_, &s)| s)
        .map(|(&f1, _)| f1)
        .collect();
    if picked.is_empty() || picked.windows(2).all(|w| w[0] == w[1]) {
        return Ok(AdaptiveWeights {
            weights: vec![1.0; per_tag_f1.len()],
            alpha_distinguish: alpha,
        });
    }
    let mean = picked.iter().sum::<f64>() / picked.len() as f64;
    Ok(AdaptiveWeights {
        weights: per_tag_f1
            .iter()
            .zip(supported)
            .map(|(&f1, &s)| if s { (alpha * (mean - f1)).exp() } else { 1.0 })
            .collect(),
        alpha_distinguish: alpha,
    })
}

/// Weighted negative log-likelihood of one page: the gold label is one-hot,
/// so the inner sum collapses to the gold component and the weight applied
/// per token is the weight of its gold tag.
pub fn adaptive_loss(
    dist: &[Vec<f64>],
    gold: &[Tag],
    weights: &AdaptiveWeights,
) -> Result<f64, LossError> {
    if dist.len() != gold.len() {
        return Err(LossError::LengthMismatch {
            dist: dist.len(),
            gold: gold.len(),
        });
    }
    let mut loss = 0.0;
    for (row, (probs, tag)) in dist.iter().zip(gold).enumerate() {
        if probs.len() != TAG_COUNT {
            return Err(LossError::RowWidth {
                row,
                got: probs.len(),
                want: TAG_COUNT,
            });
        }
        let p = probs[tag.index()].max(LOG_CLAMP);
        loss -= weights.weight_for(*tag) * p.ln();
    }
    Ok(loss)
}
