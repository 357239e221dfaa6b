//! Output files are written next to their destination under a temporary
//! name and only renamed into place once the whole command succeeded.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use gisflow::Result;
use sha2::{Digest, Sha256};

#[derive(Default)]
pub struct Staged {
    pending: Vec<(PathBuf, PathBuf)>,
}

fn temp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".partial");
    path.with_file_name(name)
}

impl Staged {
    pub fn write(&mut self, path: &Path, fill: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let tmp = temp_path(path);
        self.pending.push((tmp.clone(), path.to_path_buf()));
        let mut w = BufWriter::new(File::create(&tmp)?);
        fill(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_str(&mut self, path: &Path, text: &str) -> Result<()> {
        self.write(path, |w| Ok(w.write_all(text.as_bytes())?))
    }

    pub fn commit(mut self) -> Result<()> {
        for (tmp, dest) in std::mem::take(&mut self.pending) {
            fs::rename(&tmp, &dest)?;
        }
        Ok(())
    }
}

impl Drop for Staged {
    fn drop(&mut self) {
        for (tmp, _) in &self.pending {
            let _ = fs::remove_file(tmp);
        }
    }
}

/// `<dir>/<stem>.<suffix>` for a sibling of `path`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(format!("{:x}", hasher.finalize()))
}

/// Plain `key = value` record of a run. Carries no timestamps or host
/// details so identical runs give identical manifests.
pub struct Manifest {
    lines: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Self {
            lines: vec![
                ("tool".into(), format!("gisflow {}", env!("CARGO_PKG_VERSION"))),
                ("command".into(), command.into()),
            ],
        }
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        self.lines.push((key.into(), value.to_string()));
    }

    pub fn input(&mut self, key: &str, path: &Path) -> Result<()> {
        self.set(key, path.display());
        self.set(format!("{key}.sha256"), sha256_file(path)?);
        Ok(())
    }

    pub fn config(&mut self, resolved: Vec<(String, String)>) {
        for (k, v) in resolved {
            self.set(format!("config.{k}"), v);
        }
    }

    pub fn render(&self) -> String {
        self.lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
