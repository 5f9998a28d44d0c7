//! Durable backend: snapshot file plus a write-ahead journal.
//!
//! Each committed batch becomes one journal record:
//! `len:u32 | payload | sha256(payload):32`. On open the snapshot is loaded
//! and records are replayed until the first torn or corrupt one, which is
//! truncated away.

use std::fs::{self, File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::snapshot::{decode_value, encode_value, encoded_value_len, snapshot_export, snapshot_import, Reader};
use super::{KvStore, Mutation, Namespace, StorageError, Tables, Value};

const SNAPSHOT_FILE: &str = "data.acedb";
const WAL_FILE: &str = "data.wal";
const RECORD_OVERHEAD: usize = 4 + 32;

pub struct JournaledStore {
    dir: PathBuf,
    tables: Tables,
    wal: File,
    wal_len: u64,
    crash_after: Option<usize>,
    poisoned: bool,
}

impl std::fmt::Debug for JournaledStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("JournaledStore").field("dir", &self.dir).field("wal_len", &self.wal_len).finish()
    }
}

impl JournaledStore {
    /// Opens or creates a store rooted at `dir`.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StorageError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let snap_path = dir.join(SNAPSHOT_FILE);
        let mut tables = if snap_path.exists() {
            snapshot_import(&fs::read(&snap_path)?)?
        } else {
            Tables::default()
        };

        let mut wal = OpenOptions::new().read(true).write(true).create(true).truncate(false).open(dir.join(WAL_FILE))?;
        let mut raw = Vec::new();
        wal.read_to_end(&mut raw)?;
        let mut good = 0usize;
        while let Some((payload, next)) = next_record(&raw, good) {
            let mutations = decode_mutations(payload)?;
            tables.apply(&mutations, None)?;
            good = next;
        }
        if good != raw.len() {
            wal.set_len(good as u64)?;
            wal.sync_all()?;
        }
        Ok(JournaledStore { dir, tables, wal, wal_len: good as u64, crash_after: None, poisoned: false })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Bytes currently held in the journal.
    pub fn journal_len(&self) -> u64 {
        self.wal_len
    }

    /// Folds the journal into a fresh snapshot.
    pub fn checkpoint(&mut self) -> Result<(), StorageError> {
        if self.poisoned {
            return Err(StorageError::Poisoned);
        }
        let tmp = self.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        {
            let mut f = File::create(&tmp)?;
            f.write_all(&snapshot_export(&self.tables))?;
            f.sync_all()?;
        }
        fs::rename(&tmp, self.dir.join(SNAPSHOT_FILE))?;
        self.wal.set_len(0)?;
        self.wal.sync_all()?;
        self.wal_len = 0;
        Ok(())
    }

    /// Simulates a crash during the next journal write: only the first
    /// `bytes` of the record reach disk and the store refuses further use.
    pub fn crash_next_write_after(&mut self, bytes: usize) {
        self.crash_after = Some(bytes);
    }

    fn write_record(&mut self, payload: &[u8]) -> Result<(), StorageError> {
        let mut record = Vec::with_capacity(payload.len() + RECORD_OVERHEAD);
        record.extend_from_slice(&(payload.len() as u32).to_be_bytes());
        record.extend_from_slice(payload);
        record.extend_from_slice(&Sha256::digest(payload));

        use std::io::{Seek, SeekFrom};
        self.wal.seek(SeekFrom::Start(self.wal_len))?;
        if let Some(n) = self.crash_after.take() {
            self.wal.write_all(&record[..n.min(record.len())])?;
            self.wal.sync_data()?;
            self.poisoned = true;
            return Err(StorageError::Poisoned);
        }
        if let Err(e) = self.wal.write_all(&record).and_then(|_| self.wal.sync_data()) {
            // best effort: drop whatever partial record made it out
            let _ = self.wal.set_len(self.wal_len);
            return Err(e.into());
        }
        self.wal_len += record.len() as u64;
        Ok(())
    }
}

impl KvStore for JournaledStore {
    fn tables(&self) -> &Tables {
        &self.tables
    }

    fn apply_atomic(&mut self, mutations: &[Mutation]) -> Result<(), StorageError> {
        if self.poisoned {
            return Err(StorageError::Poisoned);
        }
        if mutations.is_empty() {
            return Ok(());
        }
        // apply in memory first so invalid batches never reach the journal
        let before = self.tables.clone();
        self.tables.apply(mutations, None)?;
        if let Err(e) = self.write_record(&encode_mutations(mutations)) {
            self.tables = before;
            return Err(e);
        }
        Ok(())
    }
}

fn next_record(raw: &[u8], at: usize) -> Option<(&[u8], usize)> {
    let rest = &raw[at..];
    if rest.len() < RECORD_OVERHEAD {
        return None;
    }
    let len = u32::from_be_bytes(rest[..4].try_into().unwrap()) as usize;
    if rest.len() < RECORD_OVERHEAD + len {
        return None;
    }
    let payload = &rest[4..4 + len];
    if Sha256::digest(payload).as_slice() != &rest[4 + len..4 + len + 32] {
        return None;
    }
    Some((payload, at + RECORD_OVERHEAD + len))
}

fn encode_mutations(mutations: &[Mutation]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&(mutations.len() as u32).to_be_bytes());
    let put_key = |out: &mut Vec<u8>, op: u8, ns: Namespace, key: &[u8]| {
        out.push(op);
        out.push(ns.tag());
        out.extend_from_slice(&(key.len() as u32).to_be_bytes());
        out.extend_from_slice(key);
    };
    let put_value = |out: &mut Vec<u8>, value: &Value| {
        out.extend_from_slice(&(encoded_value_len(value) as u32).to_be_bytes());
        encode_value(value, out);
    };
    for m in mutations {
        match m {
            Mutation::Put { ns, key, value } => {
                put_key(&mut out, 1, *ns, key);
                put_value(&mut out, value);
            }
            Mutation::Insert { ns, key, value } => {
                put_key(&mut out, 2, *ns, key);
                put_value(&mut out, value);
            }
            Mutation::Delete { ns, key } => put_key(&mut out, 3, *ns, key),
            Mutation::Append { ns, key, items } => {
                put_key(&mut out, 4, *ns, key);
                put_value(&mut out, &Value::List(items.clone()));
            }
        }
    }
    out
}

fn decode_mutations(payload: &[u8]) -> Result<Vec<Mutation>, StorageError> {
    let mut r = Reader::new(payload);
    let n = r.u32()? as usize;
    let mut out = Vec::with_capacity(n.min(payload.len()));
    for _ in 0..n {
        let op = r.u8()?;
        let ns = Namespace::from_tag(r.u8()?).ok_or_else(|| StorageError::Corrupt("unknown namespace".into()))?;
        let klen = r.u32()? as usize;
        let key = r.take(klen)?.to_vec();
        let mut value = |ns: Namespace| -> Result<Value, StorageError> {
            let vlen = r.u32()? as usize;
            decode_value(ns, r.take(vlen)?)
        };
        out.push(match op {
            1 => Mutation::Put { value: value(ns)?, ns, key },
            2 => Mutation::Insert { value: value(ns)?, ns, key },
            3 => Mutation::Delete { ns, key },
            4 => match value(Namespace::Fset)? {
                Value::List(items) => Mutation::Append { ns, key, items },
                Value::Bytes(_) => unreachable!(),
            },
            _ => return Err(StorageError::Corrupt(format!("unknown journal op {op}"))),
        });
    }
    r.finish()?;
    Ok(out)
}
