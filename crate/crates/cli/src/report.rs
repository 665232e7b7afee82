// SPDX-License-Identifier: MIT OR Apache-2.0

//! Run reports and atomic file output.
//!
//! A report is a JSON object with a deterministic `body`, the SHA-256 digest
//! of the body's compact encoding, and a `timings` section that is left out
//! of the digest. Floats are printed in shortest round-trip form, so a rerun
//! on identical inputs reproduces the body byte for byte.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, Result};

pub const TOOL_NAME: &str = "pwcluster";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report<B> {
    pub body: B,
    pub body_digest: String,
    pub timings: BTreeMap<String, f64>,
}

impl<B: Serialize> Report<B> {
    pub fn new(body: B, timings: &Timings) -> Result<Self> {
        let body_digest = digest(&body)?;
        Ok(Self {
            body,
            body_digest,
            timings: timings.stages.clone(),
        })
    }
}

/// Hex SHA-256 of the compact JSON encoding.
pub fn digest<B: Serialize>(body: &B) -> Result<String> {
    let bytes = serde_json::to_vec(body).map_err(|e| CliError::Internal(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Wall-clock seconds per named stage.
#[derive(Debug)]
pub struct Timings {
    stages: BTreeMap<String, f64>,
    started: Instant,
}

impl Default for Timings {
    fn default() -> Self {
        Self {
            stages: BTreeMap::new(),
            started: Instant::now(),
        }
    }
}

impl Timings {
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.stages
            .insert(stage.to_owned(), t.elapsed().as_secs_f64());
        out
    }

    pub fn finish(&mut self) {
        self.stages
            .insert("total".into(), self.started.elapsed().as_secs_f64());
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let wrap = |source| CliError::Write {
        path: path.to_owned(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(wrap)?;
    tmp.write_all(contents).map_err(wrap)?;
    tmp.as_file().sync_all().map_err(wrap)?;
    tmp.persist(path).map_err(|e| wrap(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes =
        serde_json::to_vec_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_ignores_timings() {
        let mut t1 = Timings::default();
        t1.time("a", || ());
        let mut t2 = Timings::default();
        t2.time("a", || {
            std::thread::sleep(std::time::Duration::from_millis(2))
        });
        let a = Report::new(vec![0.1, 1e-300], &t1).unwrap();
        let b = Report::new(vec![0.1, 1e-300], &t2).unwrap();
        assert_eq!(a.body_digest, b.body_digest);
        assert_ne!(a.timings, b.timings);
        assert_eq!(a.body_digest.len(), 64);
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
