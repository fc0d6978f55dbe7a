//! Artifact directory bookkeeping: CSV/JSON writers and content hashes.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Result;

/// Output directory that remembers every file written through it.
pub struct ArtifactDir {
    root: PathBuf,
    files: BTreeSet<String>,
}

impl ArtifactDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(ArtifactDir { root: root.to_path_buf(), files: BTreeSet::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Creates `name` for writing and records it.
    pub fn open(&mut self, name: &str) -> Result<BufWriter<File>> {
        let f = File::create(self.root.join(name))?;
        self.files.insert(name.to_owned());
        Ok(BufWriter::new(f))
    }

    pub fn write_with<F>(&mut self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let mut out = BufWriter::new(File::create(self.root.join(name))?);
        f(&mut out)?;
        out.flush()?;
        self.files.insert(name.to_owned());
        Ok(())
    }

    /// CSV with `# key=value` comment lines ahead of the column header.
    pub fn csv<I>(&mut self, name: &str, params: &[(&str, String)], header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        self.write_with(name, |out| {
            for (k, v) in params {
                writeln!(out, "# {k}={v}")?;
            }
            let mut w = csv::Writer::from_writer(out);
            w.write_record(header).map_err(csv_err)?;
            for row in rows {
                w.write_record(&row).map_err(csv_err)?;
            }
            w.flush()?;
            Ok(())
        })
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write_with(name, |out| {
            serde_json::to_writer_pretty(&mut *out, value)?;
            out.write_all(b"\n")?;
            Ok(())
        })
    }

    /// SHA-256 of every file written so far, keyed by file name.
    pub fn hashes(&self) -> Result<BTreeMap<String, String>> {
        self.files.iter().map(|f| Ok((f.clone(), sha256_file(&self.root.join(f))?))).collect()
    }
}

pub fn csv_err(e: csv::Error) -> crate::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e.into(),
        other => crate::Error::Parse { line: 0, message: format!("{other:?}") },
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut h = Sha256::new();
    let mut f = File::open(path)?;
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn int<T: ToString>(x: T) -> String {
    x.to_string()
}
