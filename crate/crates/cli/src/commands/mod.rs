pub mod recover;
pub mod sharpness;
pub mod stechkin;
pub mod verify;

use std::path::{Path, PathBuf};

use anyhow::Context;

/// A failed check: the case label and a short reason.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub case: String,
    pub reason: String,
}

impl Failure {
    pub fn new(case: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            case: case.into(),
            reason: reason.into(),
        }
    }
}

/// Writes every output file of one command, in call order.
pub struct Sink {
    dir: PathBuf,
}

impl Sink {
    pub fn create(dir: &Path) -> anyhow::Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))
    }

    /// Writes through a byte buffer filled by `f`.
    pub fn write_with<F>(&mut self, name: &str, f: F) -> anyhow::Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> lkcharge::Result<()>,
    {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }
}
