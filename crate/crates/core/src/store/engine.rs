use std::fs;
use std::path::{Path, PathBuf};

use parking_lot::RwLock;

use super::journal::{write_atomically, FileJournal, Journal, Volatile};
use super::state::{Change, StoreState};
use super::{Filter, Kind, Record, RecordKey, Store, StoreDump, StoreError, StoreStats, UniqueKey};

const SNAPSHOT_FILE: &str = "snapshot.json";
const JOURNAL_FILE: &str = "journal.jsonl";

/// The shared store implementation, parameterised by its journal.
pub struct Engine<J> {
    inner: RwLock<Inner<J>>,
    dir: Option<PathBuf>,
}

struct Inner<J> {
    state: StoreState,
    journal: J,
}

/// Purely in-memory store.
pub type MemStore = Engine<Volatile>;

/// Embedded durable store: a snapshot plus an append-only journal in one
/// directory. Opening replays the journal and folds it into a new snapshot.
pub type DiskStore = Engine<FileJournal>;

#[derive(Debug, Clone, Copy)]
pub struct DiskOptions {
    /// fsync after every committed write. Without it, data still survives a
    /// clean process exit but not a power cut.
    pub sync_every_write: bool,
}

impl Default for DiskOptions {
    fn default() -> Self {
        Self {
            sync_every_write: true,
        }
    }
}

impl MemStore {
    pub fn new() -> Self {
        Self {
            inner: RwLock::new(Inner {
                state: StoreState::default(),
                journal: Volatile,
            }),
            dir: None,
        }
    }

    /// Start from a previously taken dump.
    pub fn from_dump(dump: StoreDump) -> Result<Self, StoreError> {
        Ok(Self {
            inner: RwLock::new(Inner {
                state: StoreState::from_dump(dump)?,
                journal: Volatile,
            }),
            dir: None,
        })
    }
}

impl Default for MemStore {
    fn default() -> Self {
        Self::new()
    }
}

fn io_err(e: std::io::Error) -> StoreError {
    StoreError::Io(e.to_string())
}

impl DiskStore {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        Self::open_with(dir, DiskOptions::default())
    }

    pub fn open_with(dir: impl AsRef<Path>, options: DiskOptions) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(io_err)?;
        let snapshot_path = dir.join(SNAPSHOT_FILE);
        let journal_path = dir.join(JOURNAL_FILE);

        let mut state = match fs::read_to_string(&snapshot_path) {
            Ok(raw) => {
                let dump = StoreDump::from_json(&raw)
                    .map_err(|e| StoreError::Corrupt(format!("snapshot: {e}")))?;
                StoreState::from_dump(dump)?
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => StoreState::default(),
            Err(e) => return Err(io_err(e)),
        };
        for plan in FileJournal::read_all(&journal_path).map_err(io_err)? {
            state.apply(&plan);
        }

        write_atomically(&snapshot_path, state.dump().to_canonical_json().as_bytes())
            .map_err(io_err)?;
        let journal =
            FileJournal::create(&journal_path, options.sync_every_write).map_err(io_err)?;
        Ok(Self {
            inner: RwLock::new(Inner { state, journal }),
            dir: Some(dir),
        })
    }

    /// Fold the journal into a fresh snapshot.
    pub fn compact(&self) -> Result<(), StoreError> {
        let dir = self.dir.as_ref().expect("disk store has a directory");
        let mut inner = self.inner.write();
        let snapshot = inner.state.dump().to_canonical_json();
        write_atomically(&dir.join(SNAPSHOT_FILE), snapshot.as_bytes()).map_err(io_err)?;
        let sync = inner.journal.syncs_every_write();
        inner.journal = FileJournal::create(&dir.join(JOURNAL_FILE), sync).map_err(io_err)?;
        Ok(())
    }
}

impl<J> Engine<J> {
    pub fn directory(&self) -> Option<&Path> {
        self.dir.as_deref()
    }
}

impl<J: Journal> Engine<J> {
    fn commit(inner: &mut Inner<J>, changes: Vec<Change>) -> Result<(), StoreError> {
        if changes.is_empty() {
            return Ok(());
        }
        inner.journal.record(&changes).map_err(io_err)?;
        inner.state.apply(&changes);
        Ok(())
    }
}

impl<J: Journal> Store for Engine<J> {
    fn create(&self, record: Record) -> Result<RecordKey, StoreError> {
        let mut inner = self.inner.write();
        let (key, changes) = inner.state.plan_create(record)?;
        Self::commit(&mut inner, changes)?;
        Ok(key)
    }

    fn get(&self, key: RecordKey) -> Option<Record> {
        self.inner.read().state.get(key)
    }

    fn update(&self, key: RecordKey, record: Record) -> Result<(), StoreError> {
        let mut inner = self.inner.write();
        let changes = inner.state.plan_update(key, record)?;
        Self::commit(&mut inner, changes)
    }

    fn compare_and_update(
        &self,
        key: RecordKey,
        expected: &Record,
        record: Record,
    ) -> Result<(), StoreError> {
        let mut inner = self.inner.write();
        match inner.state.get(key) {
            None => return Err(StoreError::NotFound(key)),
            Some(current) if &current != expected => return Err(StoreError::Stale),
            Some(_) => {}
        }
        let changes = inner.state.plan_update(key, record)?;
        Self::commit(&mut inner, changes)
    }

    fn delete(&self, key: RecordKey) -> Result<(), StoreError> {
        let mut inner = self.inner.write();
        let changes = inner.state.plan_delete(key)?;
        Self::commit(&mut inner, changes)
    }

    fn find_unique(&self, key: &UniqueKey) -> Option<RecordKey> {
        self.inner.read().state.find_unique(key)
    }

    fn scan(&self, kind: Kind, filter: &Filter) -> Vec<Record> {
        self.inner.read().state.scan(kind, filter)
    }

    fn dump(&self) -> StoreDump {
        self.inner.read().state.dump()
    }

    fn stats(&self) -> StoreStats {
        self.inner.read().state.stats()
    }
}
