//! On-disk formats: MSR matrices, imaging maps, spectra, configuration, and
//! the ASCII bistatic measurement files.
//!
//! Every text output opens with a `#` comment block carrying the tool
//! version, a configuration hash, and the noise seed. Floating-point values
//! are written with Rust's shortest round-trip formatting, so reading a file
//! back and writing it again reproduces the same bytes.

pub mod config;
pub mod fresnel;
pub mod map_file;
pub mod msr_file;

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forward::Generator;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Header metadata recorded in every output file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: Option<u64>,
    /// Data generator, recorded for simulated matrices and maps made from them.
    pub generator: Option<Generator>,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>, seed: Option<u64>) -> Self {
        Provenance {
            config_hash: config_hash.into(),
            seed,
            generator: None,
        }
    }

    pub fn with_generator(mut self, generator: Option<Generator>) -> Self {
        self.generator = generator;
        self
    }

    pub(crate) fn header_lines(&self, kind: &str) -> String {
        let mut s = format!(
            "# music-scatter {kind}\n# version: {VERSION}\n# config_hash: {}\n# seed: {}\n",
            self.config_hash,
            fmt_seed(self.seed)
        );
        if let Some(g) = self.generator {
            s.push_str(&format!("# generator: {}\n", g.as_str()));
        }
        s
    }

    /// Fill a field from a `key: value` header comment; unknown keys are ignored.
    pub(crate) fn read_header(&mut self, path: &Path, line: usize, key: &str, val: &str) -> Result<bool> {
        match key {
            "config_hash" => self.config_hash = val.to_string(),
            "seed" => self.seed = parse_seed(val).ok_or_else(|| parse_err(path, line, "bad seed"))?,
            "generator" => self.generator = Some(val.parse()?),
            _ => return Ok(false),
        }
        Ok(true)
    }
}

pub(crate) fn fmt_seed(seed: Option<u64>) -> String {
    seed.map_or_else(|| "none".to_string(), |s| s.to_string())
}

pub(crate) fn parse_seed(s: &str) -> Option<Option<u64>> {
    if s == "none" {
        Some(None)
    } else {
        s.parse().ok().map(Some)
    }
}

/// Hex SHA-256 of arbitrary bytes, truncated to 16 hex digits.
pub fn hash_bytes(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn parse_f64(path: &Path, line: usize, s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("expected a number, got '{s}'"),
    })
}

pub(crate) fn parse_usize(path: &Path, line: usize, s: &str) -> Result<usize> {
    s.trim().parse::<usize>().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("expected a nonnegative integer, got '{s}'"),
    })
}

pub(crate) fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}
