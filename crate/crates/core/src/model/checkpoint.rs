//! Checkpoints: a JSON manifest plus two raw little-endian f64 sidecars.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ParameterStore, Variant};
use crate::data::Vocabulary;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub version: u32,
    pub n: usize,
    pub num_entities: usize,
    pub num_relations: usize,
    pub beta: usize,
    pub variant: Variant,
    pub entity_vocab_sha256: String,
    pub relation_vocab_sha256: String,
    pub entities_file: String,
    pub relations_file: String,
}

impl CheckpointManifest {
    pub fn verify_vocab(&self, vocab: &Vocabulary) -> Result<()> {
        let pairs = [
            ("entities", &self.entity_vocab_sha256, vocab.entity_digest()),
            ("relations", &self.relation_vocab_sha256, vocab.relation_digest()),
        ];
        for (kind, expected, actual) in pairs {
            if *expected != actual {
                return Err(Error::VocabMismatch {
                    kind,
                    expected: expected.clone(),
                    actual,
                });
            }
        }
        Ok(())
    }
}

/// `<manifest>.entities.f64` and `<manifest>.relations.f64`.
pub fn sidecar_paths(manifest: &Path) -> (PathBuf, PathBuf) {
    let with = |suffix: &str| {
        let mut s = manifest.as_os_str().to_owned();
        s.push(suffix);
        PathBuf::from(s)
    };
    (with(".entities.f64"), with(".relations.f64"))
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn to_le_bytes(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

fn from_le_bytes(path: &Path, bytes: &[u8], expected: usize) -> Result<Vec<f64>> {
    if bytes.len() != expected * 8 {
        return Err(Error::InvalidArgument(format!(
            "{}: expected {} bytes, found {}",
            path.display(),
            expected * 8,
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

pub fn save_checkpoint(store: &ParameterStore, vocab: &Vocabulary, path: &Path) -> Result<CheckpointManifest> {
    let (ent_path, rel_path) = sidecar_paths(path);
    let manifest = CheckpointManifest {
        version: CHECKPOINT_VERSION,
        n: store.dim(),
        num_entities: store.num_entities(),
        num_relations: store.num_relations(),
        beta: store.beta(),
        variant: store.variant(),
        entity_vocab_sha256: vocab.entity_digest(),
        relation_vocab_sha256: vocab.relation_digest(),
        entities_file: file_name(&ent_path),
        relations_file: file_name(&rel_path),
    };
    fs::write(&ent_path, to_le_bytes(store.entity_matrix())).map_err(|e| Error::io(&ent_path, e))?;
    fs::write(&rel_path, to_le_bytes(store.relation_matrix())).map_err(|e| Error::io(&rel_path, e))?;
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(manifest)
}

pub fn load_checkpoint(path: &Path) -> Result<(ParameterStore, CheckpointManifest)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: CheckpointManifest = serde_json::from_str(&text)?;
    if manifest.version != CHECKPOINT_VERSION {
        return Err(Error::InvalidArgument(format!(
            "unsupported checkpoint version {}",
            manifest.version
        )));
    }
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let read = |name: &str, rows: usize| -> Result<Vec<f64>> {
        let p = dir.join(name);
        let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
        from_le_bytes(&p, &bytes, rows * manifest.n)
    };
    let entities = read(&manifest.entities_file, manifest.num_entities)?;
    let relations = read(&manifest.relations_file, manifest.num_relations)?;
    let store = ParameterStore::from_parts(manifest.n, manifest.beta, manifest.variant, entities, relations)?;
    Ok((store, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_params;

    #[test]
    fn round_trip_is_bitwise() {
        let store = init_params(7, 3, 5, 2, Variant::MobiusAdd, 4).unwrap();
        let mut vocab = Vocabulary::new();
        for i in 0..7 {
            vocab.intern_entity(&format!("e{i}")).unwrap();
        }
        for i in 0..3 {
            vocab.intern_relation(&format!("r{i}")).unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("best.ckpt");
        let written = save_checkpoint(&store, &vocab, &path).unwrap();
        let (back, manifest) = load_checkpoint(&path).unwrap();
        assert_eq!(manifest, written);
        assert_eq!(back, store);
        assert!(back
            .entity_matrix()
            .iter()
            .zip(store.entity_matrix())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
        manifest.verify_vocab(&vocab).unwrap();

        vocab.intern_entity("extra").unwrap();
        assert!(matches!(manifest.verify_vocab(&vocab), Err(Error::VocabMismatch { .. })));
    }

    #[test]
    fn truncated_sidecar_is_rejected() {
        let store = init_params(2, 1, 3, 0, Variant::EuclideanAdd, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.ckpt");
        save_checkpoint(&store, &Vocabulary::new(), &path).unwrap();
        let (ent, _) = sidecar_paths(&path);
        fs::write(&ent, [0u8; 12]).unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}
