use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::EvalConfig;
use crate::{rng, Error, Result};

pub(crate) const ALS_TAG: u64 = 1;
pub(crate) const FOREST_TAG: u64 = 2;

/// Module seeds derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedSeeds {
    pub master: u64,
    pub als: u64,
    pub forest: u64,
}

impl DerivedSeeds {
    pub fn of(master: u64) -> Self {
        DerivedSeeds {
            master,
            als: rng::derive_seed(master, ALS_TAG),
            forest: rng::derive_seed(master, FOREST_TAG),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

pub fn digest_file(path: &Path) -> Result<InputDigest> {
    let mut f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut bytes = 0u64;
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        bytes += n as u64;
        h.update(&buf[..n]);
    }
    Ok(InputDigest {
        path: path.to_path_buf(),
        bytes,
        sha256: hex::encode(h.finalize()),
    })
}

/// What a run read, with which settings, and what it wrote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config: EvalConfig,
    pub seeds: DerivedSeeds,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub output_digests: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str, config: &EvalConfig) -> Self {
        Manifest {
            command: command.to_string(),
            config: config.clone(),
            seeds: DerivedSeeds::of(config.seed),
            inputs: Vec::new(),
            outputs: Vec::new(),
            output_digests: BTreeMap::new(),
        }
    }

    /// Records an input file with its digest.
    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(digest_file(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> Result<()> {
        let d = digest_file(path)?;
        self.output_digests.insert(path.display().to_string(), d.sha256);
        self.outputs.push(path.to_path_buf());
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}
