use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::model::{AutoEncoderModel, ModelConfig};
use super::params::{NamedParam, ParamStore};
use super::TrainingRecord;
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

const FORMAT: &str = "c3-autoencoder";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    config: ModelConfig,
    vocab_hash: String,
    vocabulary: Vocabulary,
    params: Vec<NamedParam>,
    history: Vec<TrainingRecord>,
}

pub fn save_checkpoint(model: &AutoEncoderModel, path: &Path) -> Result<()> {
    let ckpt = Checkpoint {
        format: FORMAT.into(),
        version: CHECKPOINT_VERSION,
        config: model.config().clone(),
        vocab_hash: model.vocab().hash(),
        vocabulary: model.vocab().clone(),
        params: model.params().to_named(),
        history: model.history.clone(),
    };
    let json = serde_json::to_string(&ckpt).map_err(|e| Error::json(path.display().to_string(), e))?;
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

/// Loads a checkpoint. When `expected_vocab_hash` is given, a checkpoint
/// trained on a different vocabulary is rejected.
pub fn load_checkpoint(path: &Path, expected_vocab_hash: Option<&str>) -> Result<AutoEncoderModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ckpt: Checkpoint =
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
    if ckpt.format != FORMAT {
        return Err(Error::InvalidConfig(format!(
            "{} is not an autoencoder checkpoint",
            path.display()
        )));
    }
    if ckpt.version != CHECKPOINT_VERSION {
        return Err(Error::CheckpointVersion(ckpt.version));
    }
    let actual = ckpt.vocabulary.hash();
    if actual != ckpt.vocab_hash {
        return Err(Error::VocabularyMismatch {
            expected: ckpt.vocab_hash,
            actual,
        });
    }
    if let Some(expected) = expected_vocab_hash {
        if expected != actual {
            return Err(Error::VocabularyMismatch {
                expected: expected.to_string(),
                actual,
            });
        }
    }
    let mut store = ParamStore::default();
    for p in ckpt.params {
        let value = Array2::from_shape_vec((p.shape[0], p.shape[1]), p.data)
            .map_err(|e| Error::ShapeMismatch(format!("parameter `{}`: {e}", p.name)))?;
        store.push(p.name, value);
    }
    AutoEncoderModel::from_parts(ckpt.config, ckpt.vocabulary, store, ckpt.history)
}
