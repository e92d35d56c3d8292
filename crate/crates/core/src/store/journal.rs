use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use super::state::Change;

/// Where committed plans go before they are applied.
pub trait Journal: Send + Sync {
    fn record(&mut self, changes: &[Change]) -> io::Result<()>;
}

/// No persistence at all.
#[derive(Debug, Default)]
pub struct Volatile;

impl Journal for Volatile {
    fn record(&mut self, _changes: &[Change]) -> io::Result<()> {
        Ok(())
    }
}

/// Append-only JSON-lines log, one committed plan per line.
#[derive(Debug)]
pub struct FileJournal {
    path: PathBuf,
    file: File,
    sync: bool,
}

impl FileJournal {
    pub(crate) fn create(path: &Path, sync: bool) -> io::Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(path)?;
        file.sync_all()?;
        let file = OpenOptions::new().append(true).open(path)?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
            sync,
        })
    }

    pub fn syncs_every_write(&self) -> bool {
        self.sync
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Read every committed plan. A torn final line (crash mid-write) is
    /// dropped; damage anywhere else is an error.
    pub(crate) fn read_all(path: &Path) -> io::Result<Vec<Vec<Change>>> {
        let file = match File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e),
        };
        let lines: Vec<String> = BufReader::new(file).lines().collect::<Result<_, _>>()?;
        let mut plans = Vec::with_capacity(lines.len());
        let last = lines.len().saturating_sub(1);
        for (i, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str(line) {
                Ok(plan) => plans.push(plan),
                Err(_) if i == last => break,
                Err(e) => {
                    return Err(io::Error::new(
                        io::ErrorKind::InvalidData,
                        format!("journal line {}: {e}", i + 1),
                    ))
                }
            }
        }
        Ok(plans)
    }
}

impl Journal for FileJournal {
    fn record(&mut self, changes: &[Change]) -> io::Result<()> {
        let mut line = serde_json::to_vec(changes)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        if self.sync {
            self.file.sync_data()?;
        }
        Ok(())
    }
}

impl Drop for FileJournal {
    fn drop(&mut self) {
        let _ = self.file.sync_all();
    }
}

/// Write `contents` to `path` so that readers see either the old or the new
/// file, never a mix.
pub(crate) fn write_atomically(path: &Path, contents: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut file = File::create(&tmp)?;
        file.write_all(contents)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    if let Some(dir) = path.parent() {
        // directory fsync is not supported everywhere
        if let Ok(dir) = File::open(dir) {
            let _ = dir.sync_all();
        }
    }
    Ok(())
}
