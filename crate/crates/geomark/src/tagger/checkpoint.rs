//! Model checkpoint: a single portable text file of named tensors with
//! dimensions in the header. Floats use shortest-roundtrip formatting, so
//! save/load is exact and files are byte-reproducible.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::tagger::model::{ParamSet, TaggerParams};

pub const CHECKPOINT_HEADER: &str = "#geomark checkpoint v1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("cannot access checkpoint {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("file does not look like a checkpoint (missing `{CHECKPOINT_HEADER}` header)")]
    BadHeader,
    #[error("checkpoint line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("tensor {name}: expected {want} values, found {got}")]
    TensorSize {
        name: String,
        want: usize,
        got: usize,
    },
    #[error("checkpoint is missing tensor {0}")]
    MissingTensor(String),
}

pub fn checkpoint_to_text(params: &TaggerParams) -> String {
    let mut out = String::from(CHECKPOINT_HEADER);
    out.push('\n');
    out.push_str(&format!("embedding_dim {}\n", params.embedding_dim()));
    out.push_str(&format!("encoder_units {}\n", params.encoder_units()));
    out.push_str(&format!("decoder_units {}\n", params.decoder_units()));
    out.push_str(&format!("seed {}\n", params.seed));
    out.push_str(&format!("vocab {}\n", params.vocab.len()));
    for token in &params.vocab {
        out.push_str(token);
        out.push('\n');
    }
    for name in params.set.tensor_names() {
        let tensor = params.set.tensor(&name).unwrap();
        out.push_str(&format!("tensor {name} {}\n", tensor.len()));
        let values: Vec<String> = tensor.iter().map(|v| v.to_string()).collect();
        out.push_str(&values.join(" "));
        out.push('\n');
    }
    out
}

pub fn save_checkpoint(params: &TaggerParams, path: &Path) -> Result<(), CheckpointError> {
    std::fs::write(path, checkpoint_to_text(params)).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn checkpoint_from_text(text: &str) -> Result<TaggerParams, CheckpointError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == CHECKPOINT_HEADER => {}
        _ => return Err(CheckpointError::BadHeader),
    }
    let mut header = |want: &str| -> Result<u64, CheckpointError> {
        let (idx, line) = lines
            .next()
            .ok_or(CheckpointError::BadHeader)?;
        let (key, value) = line.split_once(' ').ok_or(CheckpointError::Parse {
            line: idx + 1,
            reason: format!("expected `{want} <n>`"),
        })?;
        if key != want {
            return Err(CheckpointError::Parse {
                line: idx + 1,
                reason: format!("expected key {want}, got {key}"),
            });
        }
        value.parse().map_err(|_| CheckpointError::Parse {
            line: idx + 1,
            reason: format!("bad {want} value"),
        })
    };
    let embed = header("embedding_dim")? as usize;
    let enc = header("encoder_units")? as usize;
    let dec = header("decoder_units")? as usize;
    let seed = header("seed")?;
    let vocab_len = header("vocab")? as usize;

    let mut vocab = Vec::with_capacity(vocab_len);
    for _ in 0..vocab_len {
        let (idx, token) = lines.next().ok_or(CheckpointError::Parse {
            line: 0,
            reason: "truncated vocabulary".to_string(),
        })?;
        if token.is_empty() {
            return Err(CheckpointError::Parse {
                line: idx + 1,
                reason: "empty vocabulary token".to_string(),
            });
        }
        vocab.push(token.to_string());
    }

    let mut set = ParamSet::zeros(vocab_len, embed, enc, dec);
    let expected: Vec<String> = set.tensor_names();
    let mut loaded = std::collections::BTreeSet::new();
    while let Some((idx, line)) = lines.next() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(' ');
        match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some("tensor"), Some(name), Some(len), None) => {
                let len: usize = len.parse().map_err(|_| CheckpointError::Parse {
                    line: idx + 1,
                    reason: "bad tensor length".to_string(),
                })?;
                let (vidx, values_line) = lines.next().ok_or(CheckpointError::Parse {
                    line: idx + 1,
                    reason: "missing tensor values".to_string(),
                })?;
                let dst = set
                    .tensor_mut(name)
                    .ok_or_else(|| CheckpointError::Parse {
                        line: idx + 1,
                        reason: format!("unknown tensor {name}"),
                    })?;
                if dst.len() != len {
                    return Err(CheckpointError::TensorSize {
                        name: name.to_string(),
                        want: dst.len(),
                        got: len,
                    });
                }
                let mut count = 0usize;
                for (slot, raw) in dst.iter_mut().zip(values_line.split(' ')) {
                    *slot = raw.parse().map_err(|_| CheckpointError::Parse {
                        line: vidx + 1,
                        reason: format!("bad float {raw:?}"),
                    })?;
                    count += 1;
                }
                if count != len || values_line.split(' ').count() != len {
                    return Err(CheckpointError::TensorSize {
                        name: name.to_string(),
                        want: len,
                        got: values_line.split(' ').count(),
                    });
                }
                loaded.insert(name.to_string());
            }
            _ => {
                return Err(CheckpointError::Parse {
                    line: idx + 1,
                    reason: "expected `tensor <name> <len>`".to_string(),
                })
            }
        }
    }
    for name in expected {
        if !loaded.contains(&name) {
            return Err(CheckpointError::MissingTensor(name));
        }
    }
    let token_index = vocab
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    Ok(TaggerParams {
        vocab,
        token_index,
        set,
        seed,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<TaggerParams, CheckpointError> {
    let text = std::fs::read_to_string(path).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    checkpoint_from_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip_is_exact() {
        let params = TaggerParams::init(
            vec!["alpha".into(), "beta".into(), "89301".into()],
            5,
            3,
            4,
            99,
        );
        let text = checkpoint_to_text(&params);
        let back = checkpoint_from_text(&text).unwrap();
        assert_eq!(back, params);
        assert_eq!(checkpoint_to_text(&back), text);
    }

    #[test]
    fn header_required() {
        assert!(matches!(
            checkpoint_from_text("tensor x 1\n0\n"),
            Err(CheckpointError::BadHeader)
        ));
    }

    #[test]
    fn missing_tensor_detected() {
        let params = TaggerParams::init(vec!["a".into()], 2, 2, 2, 1);
        let text = checkpoint_to_text(&params);
        // Drop the final tensor (out.bias) block: two lines.
        let lines: Vec<&str> = text.lines().collect();
        let truncated = lines[..lines.len() - 2].join("\n");
        assert!(matches!(
            checkpoint_from_text(&truncated),
            Err(CheckpointError::MissingTensor(_))
        ));
    }
}
