use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(FileDigest {
            path: path.to_path_buf(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        })
    }
}

/// Record of one CLI run, enough to replay it and check the outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name, minus the manifest flag.
    pub args: Vec<String>,
    pub parameters: serde_json::Value,
    pub seeds: Vec<u64>,
    pub tool_version: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl RunManifest {
    /// Output files whose current digest differs from the recorded one.
    pub fn changed_outputs(&self) -> Result<Vec<PathBuf>> {
        let mut changed = Vec::new();
        for f in &self.outputs {
            if FileDigest::of(&f.path)?.sha256 != f.sha256 {
                changed.push(f.path.clone());
            }
        }
        Ok(changed)
    }

    pub fn changed_inputs(&self) -> Result<Vec<PathBuf>> {
        let mut changed = Vec::new();
        for f in &self.inputs {
            if FileDigest::of(&f.path)?.sha256 != f.sha256 {
                changed.push(f.path.clone());
            }
        }
        Ok(changed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc");
        fs::write(&p, "abc").unwrap();
        assert_eq!(
            FileDigest::of(&p).unwrap().sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
