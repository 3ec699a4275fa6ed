//! Single-file model checkpoints.
//!
//! Layout: a magic line, a little-endian u64 header length, a JSON header
//! (format version, architecture, model config, an arbitrary config echo,
//! the vocabulary, and a manifest of named/shaped arrays), then the raw
//! parameter and buffer data as little-endian f64. Values round-trip
//! bit-exactly.

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

use super::{Arch, Model, ModelConfig};
use crate::corpus::Vocabulary;
use crate::nnet::{BufferMut, ParamMut, Tensors};
use thiserror::Error;

const MAGIC: &[u8] = b"NEGSENT-CKPT-1\n";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
}

pub type Result<T> = std::result::Result<T, CheckpointError>;

#[derive(Debug, Serialize, Deserialize)]
struct ArrayEntry {
    name: String,
    shape: Vec<usize>,
    /// Offset into the data section, in f64 units.
    offset: usize,
    len: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    arch: Arch,
    config: ModelConfig,
    /// Free-form resolved-configuration echo from the caller.
    extra: serde_json::Value,
    vocab: Vec<String>,
    params: Vec<ArrayEntry>,
    buffers: Vec<ArrayEntry>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CheckpointError + '_ {
    move |source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write a checkpoint for `model`.
pub fn save(
    model: &mut Model,
    vocab: &Vocabulary,
    extra: serde_json::Value,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut params = Vec::new();
    let mut buffers = Vec::new();
    let mut data: Vec<f64> = Vec::new();
    model.visit_params("", &mut |p: ParamMut<'_>| {
        params.push(ArrayEntry {
            name: p.name.clone(),
            shape: p.shape.clone(),
            offset: data.len(),
            len: p.value.len(),
        });
        data.extend_from_slice(p.value);
    });
    model.visit_buffers("", &mut |b: BufferMut<'_>| {
        buffers.push(ArrayEntry {
            name: b.name.clone(),
            shape: b.shape.clone(),
            offset: data.len(),
            len: b.value.len(),
        });
        data.extend_from_slice(b.value);
    });

    let header = Header {
        format_version: 1,
        arch: model.arch,
        config: model.cfg.clone(),
        extra,
        vocab: vocab.tokens().to_vec(),
        params,
        buffers,
    };
    let header_json =
        serde_json::to_vec(&header).map_err(|e| CheckpointError::Corrupt(e.to_string()))?;

    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err(path))?);
    out.write_all(MAGIC).map_err(io_err(path))?;
    out.write_u64::<LittleEndian>(header_json.len() as u64)
        .map_err(io_err(path))?;
    out.write_all(&header_json).map_err(io_err(path))?;
    for v in &data {
        out.write_f64::<LittleEndian>(*v).map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))?;
    Ok(())
}

/// Load a checkpoint; returns the model, its vocabulary, and the config
/// echo stored at save time.
pub fn load(path: impl AsRef<Path>) -> Result<(Model, Vocabulary, serde_json::Value)> {
    let path = path.as_ref();
    let mut file = std::io::BufReader::new(std::fs::File::open(path).map_err(io_err(path))?);
    let mut magic = vec![0u8; MAGIC.len()];
    file.read_exact(&mut magic).map_err(io_err(path))?;
    if magic != MAGIC {
        return Err(CheckpointError::Corrupt("bad magic".into()));
    }
    let header_len = file.read_u64::<LittleEndian>().map_err(io_err(path))? as usize;
    let mut header_json = vec![0u8; header_len];
    file.read_exact(&mut header_json).map_err(io_err(path))?;
    let header: Header = serde_json::from_slice(&header_json)
        .map_err(|e| CheckpointError::Corrupt(format!("bad header: {e}")))?;

    let total: usize = header
        .params
        .iter()
        .chain(header.buffers.iter())
        .map(|e| e.len)
        .sum();
    let mut data = vec![0.0f64; total];
    file.read_f64_into::<LittleEndian>(&mut data)
        .map_err(io_err(path))?;

    let vocab = Vocabulary::from_tokens(header.vocab)
        .map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
    let table = Array2::zeros((vocab.len(), header.config.emb_dim));
    let mut model = Model::new(header.config.clone(), header.arch, table, 0);

    let lookup = |entries: &[ArrayEntry], name: &str, len: usize| -> Result<(usize, usize)> {
        let entry = entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| CheckpointError::Corrupt(format!("missing array '{name}'")))?;
        if entry.len != len {
            return Err(CheckpointError::Corrupt(format!(
                "array '{name}' has {} values, model expects {len}",
                entry.len
            )));
        }
        Ok((entry.offset, entry.len))
    };

    let mut fill_err: Option<CheckpointError> = None;
    let mut filled = 0usize;
    model.visit_params("", &mut |p: ParamMut<'_>| {
        if fill_err.is_some() {
            return;
        }
        match lookup(&header.params, &p.name, p.value.len()) {
            Ok((offset, len)) => {
                p.value.copy_from_slice(&data[offset..offset + len]);
                filled += 1;
            }
            Err(e) => fill_err = Some(e),
        }
    });
    model.visit_buffers("", &mut |b: BufferMut<'_>| {
        if fill_err.is_some() {
            return;
        }
        match lookup(&header.buffers, &b.name, b.value.len()) {
            Ok((offset, len)) => {
                b.value.copy_from_slice(&data[offset..offset + len]);
                filled += 1;
            }
            Err(e) => fill_err = Some(e),
        }
    });
    if let Some(e) = fill_err {
        return Err(e);
    }
    if filled != header.params.len() + header.buffers.len() {
        return Err(CheckpointError::Corrupt(format!(
            "checkpoint stores {} arrays, model consumed {filled}",
            header.params.len() + header.buffers.len()
        )));
    }
    Ok((model, vocab, header.extra))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_vocab;
    use crate::models::{seed_stream, streams, SentExample, SentNoise};
    use crate::nnet::{uniform_array2, zero_grads, Adam, AdamConfig};

    #[test]
    fn round_trip_is_bit_exact_and_outputs_agree() {
        let cfg = ModelConfig {
            emb_dim: 5,
            hidden: 3,
            classes: 2,
            tag_labels: 5,
            ..ModelConfig::default()
        };
        let toks: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let vocab = build_vocab([toks.as_slice()], 1).unwrap();
        let mut rng = seed_stream(3, streams::EMBED_FALLBACK);
        let table = uniform_array2(vocab.len(), 5, 0.1, &mut rng);
        let mut model = Model::new(cfg, Arch::MultiTask, table, 3);

        // a few training steps so batch-norm buffers are non-trivial
        let mut adam = Adam::new(AdamConfig::with_lr(0.01, 0.0001));
        for _ in 0..3 {
            zero_grads(&mut model);
            let batch = [
                SentExample {
                    ids: &[2, 3],
                    flags: None,
                    gold: 0,
                },
                SentExample {
                    ids: &[4, 5, 2],
                    flags: None,
                    gold: 1,
                },
            ];
            let noises = vec![SentNoise::ones(2, &model), SentNoise::ones(3, &model)];
            model.sentiment_train_step(&batch, &noises).unwrap();
            adam.step(&mut model);
        }

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save(
            &mut model,
            &vocab,
            serde_json::json!({"note": "test"}),
            &path,
        )
        .unwrap();
        let (mut loaded, vocab2, extra) = load(&path).unwrap();

        assert_eq!(vocab2.tokens(), vocab.tokens());
        assert_eq!(extra["note"], "test");
        let snap_a = crate::nnet::snapshot(&mut model);
        let snap_b = crate::nnet::snapshot(&mut loaded);
        assert_eq!(snap_a.len(), snap_b.len());
        for (a, b) in snap_a.iter().zip(&snap_b) {
            assert_eq!(a.to_bits(), b.to_bits(), "checkpoint not bit-exact");
        }

        let ids = [2usize, 4, 3];
        let (p1, _) = model.sentiment_forward(&ids, None, None).unwrap();
        let (p2, _) = loaded.sentiment_forward(&ids, None, None).unwrap();
        assert_eq!(p1, p2);
        let (t1, _) = model.negation_forward(&ids, None).unwrap();
        let (t2, _) = loaded.negation_forward(&ids, None).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ckpt");
        std::fs::write(&path, b"NEGSENT-CKPT-1\n\x10\x00").unwrap();
        assert!(load(&path).is_err());
    }
}
