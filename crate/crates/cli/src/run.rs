//! Per-invocation context: resolved config, hashed inputs, recorded outputs
//! and the manifest that ties them together.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use c3_core::autoencoder::{load_checkpoint, AutoEncoderModel};
use c3_core::corpus::{read_documents, Document};
use c3_core::detector::C3Dictionary;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub struct Run {
    pub command: &'static str,
    pub seed: u64,
    pub config: RunConfig,
    options: serde_json::Value,
    inputs: BTreeMap<String, String>,
    canonical_inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

/// No timestamps, so identical runs write identical manifests.
#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    config: &'a RunConfig,
    options: &'a serde_json::Value,
    /// Path to SHA-256 of the file's bytes, for inputs and outputs alike.
    inputs: &'a BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Run {
    pub fn new(command: &'static str, seed: u64, config: RunConfig, options: impl Serialize) -> Result<Self> {
        Ok(Self {
            command,
            seed,
            config,
            options: serde_json::to_value(options)?,
            inputs: BTreeMap::new(),
            canonical_inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    /// Reads and hashes an input file.
    pub fn read(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs
            .insert(path.display().to_string(), sha256_hex(&bytes));
        if let Ok(c) = path.canonicalize() {
            self.canonical_inputs.push(c);
        }
        Ok(bytes)
    }

    pub fn docs(&mut self, path: &Path) -> Result<Vec<Document>> {
        self.read(path)?;
        Ok(read_documents(path)?)
    }

    pub fn model(&mut self, path: &Path) -> Result<AutoEncoderModel> {
        self.read(path)?;
        Ok(load_checkpoint(path, None)?)
    }

    pub fn dictionary(&mut self, path: &Path) -> Result<C3Dictionary> {
        self.read(path)?;
        Ok(C3Dictionary::load(path)?)
    }

    pub fn json<T: DeserializeOwned>(&mut self, path: &Path) -> Result<T> {
        let bytes = self.read(path)?;
        serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
    }

    /// JSON or TOML by extension.
    pub fn structured<T: DeserializeOwned>(&mut self, path: &Path) -> Result<T> {
        let bytes = self.read(path)?;
        if path.extension().is_some_and(|e| e == "toml") {
            let text = String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
        } else {
            serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
        }
    }

    /// Records an output, refusing to overwrite any input of this run.
    pub fn output(&mut self, path: &Path) -> Result<PathBuf> {
        self.prepare_output(path)?;
        self.outputs.push(path.to_path_buf());
        Ok(path.to_path_buf())
    }

    fn prepare_output(&self, path: &Path) -> Result<()> {
        let clobbers = path
            .canonicalize()
            .is_ok_and(|c| self.canonical_inputs.contains(&c));
        if clobbers {
            bail!("refusing to overwrite input {}", path.display());
        }
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, path: &Path, value: &T) -> Result<()> {
        let path = self.output(path)?;
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn write_text(&mut self, path: &Path, text: &str) -> Result<()> {
        let path = self.output(path)?;
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    /// Writes the manifest and prints every output path on stdout.
    pub fn finish(self, manifest_path: &Path) -> Result<()> {
        let mut outputs = BTreeMap::new();
        for p in &self.outputs {
            let bytes = fs::read(p).with_context(|| format!("reading back {}", p.display()))?;
            outputs.insert(p.display().to_string(), sha256_hex(&bytes));
        }
        self.prepare_output(manifest_path)?;
        let manifest = Manifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            config: &self.config,
            options: &self.options,
            inputs: &self.inputs,
            outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(manifest_path, text).with_context(|| format!("writing {}", manifest_path.display()))?;
        for p in &self.outputs {
            println!("{}", p.display());
        }
        println!("{}", manifest_path.display());
        Ok(())
    }
}

/// `<file>.manifest.json` next to a file output.
pub fn manifest_for(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_path() {
        assert_eq!(manifest_for(Path::new("out/model.json")), Path::new("out/model.json.manifest.json"));
    }

    #[test]
    fn inputs_are_never_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.json");
        fs::write(&p, "{}").unwrap();
        let mut run = Run::new("t", 0, RunConfig::default(), ()).unwrap();
        run.read(&p).unwrap();
        assert!(run.output(&p).is_err());
    }
}
