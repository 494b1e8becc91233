//! Byte-level persistence behind the log and journal.

use std::fs::{File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

/// Append-only byte store. `truncate` exists only to heal torn tails and to
/// roll back a failed append; the log never rewrites complete records.
pub trait Storage {
    fn read_all(&mut self) -> io::Result<Vec<u8>>;
    fn append(&mut self, bytes: &[u8]) -> io::Result<()>;
    fn truncate(&mut self, len: u64) -> io::Result<()>;
}

#[derive(Debug)]
pub struct FileStorage {
    path: PathBuf,
    file: File,
}

impl FileStorage {
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new().read(true).append(true).create(true).open(&path)?;
        Ok(Self { path, file })
    }

    /// Opens an existing file without creating it.
    pub fn open_existing(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new().read(true).append(true).open(&path)?;
        Ok(Self { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl Storage for FileStorage {
    fn read_all(&mut self) -> io::Result<Vec<u8>> {
        let mut buf = Vec::new();
        File::open(&self.path)?.read_to_end(&mut buf)?;
        Ok(buf)
    }

    fn append(&mut self, bytes: &[u8]) -> io::Result<()> {
        self.file.write_all(bytes)?;
        self.file.sync_data()
    }

    fn truncate(&mut self, len: u64) -> io::Result<()> {
        self.file.set_len(len)?;
        self.file.sync_data()
    }
}

/// Injected storage failures for [`MemStorage`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StorageFaults {
    /// Fail this many upcoming appends without writing anything.
    pub fail_appends: u32,
    /// Write only this many bytes of the next append, then fail.
    pub tear_next_append_at: Option<usize>,
    /// Make every truncate fail.
    pub fail_truncate: bool,
}

/// In-memory storage with fault injection, used by the simulator.
#[derive(Debug, Clone, Default)]
pub struct MemStorage {
    data: Vec<u8>,
    pub faults: StorageFaults,
}

impl MemStorage {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_bytes(data: Vec<u8>) -> Self {
        Self { data, faults: StorageFaults::default() }
    }

    pub fn bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.data
    }
}

impl Storage for MemStorage {
    fn read_all(&mut self) -> io::Result<Vec<u8>> {
        Ok(self.data.clone())
    }

    fn append(&mut self, bytes: &[u8]) -> io::Result<()> {
        if self.faults.fail_appends > 0 {
            self.faults.fail_appends -= 1;
            return Err(io::Error::other("injected append failure"));
        }
        if let Some(n) = self.faults.tear_next_append_at.take() {
            self.data.extend_from_slice(&bytes[..n.min(bytes.len())]);
            return Err(io::Error::other("injected torn write"));
        }
        self.data.extend_from_slice(bytes);
        Ok(())
    }

    fn truncate(&mut self, len: u64) -> io::Result<()> {
        if self.faults.fail_truncate {
            return Err(io::Error::other("injected truncate failure"));
        }
        self.data.truncate(len as usize);
        Ok(())
    }
}
