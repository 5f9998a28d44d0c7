//! Canonical snapshot format.
//!
//! ```text
//! "ACEDB" | version:u8
//! per namespace (fset, iset, wmap, keys):
//!     tag:u8 | count:u64
//!     count x ( key_len:u32 | key | value_len:u32 | value )
//! sha256(all preceding bytes):32
//! ```
//!
//! A list value is `items:u32` followed by `len:u32 | item` for each item.
//! All integers are big-endian.

use sha2::{Digest, Sha256};

use super::{Namespace, StorageError, Tables, Value};

pub const MAGIC: &[u8; 5] = b"ACEDB";
pub const VERSION: u8 = 1;
pub const CHECKSUM_LEN: usize = 32;
/// Bytes of a section header (tag and entry count).
pub const SECTION_HEADER_LEN: usize = 9;

pub(crate) fn encode_value(value: &Value, out: &mut Vec<u8>) {
    match value {
        Value::Bytes(b) => out.extend_from_slice(b),
        Value::List(items) => {
            out.extend_from_slice(&(items.len() as u32).to_be_bytes());
            for item in items {
                out.extend_from_slice(&(item.len() as u32).to_be_bytes());
                out.extend_from_slice(item);
            }
        }
    }
}

pub(crate) fn encoded_value_len(value: &Value) -> usize {
    match value {
        Value::Bytes(b) => b.len(),
        Value::List(items) => 4 + items.iter().map(|i| 4 + i.len()).sum::<usize>(),
    }
}

pub(crate) fn decode_value(ns: Namespace, bytes: &[u8]) -> Result<Value, StorageError> {
    if !ns.holds_lists() {
        return Ok(Value::Bytes(bytes.to_vec()));
    }
    let mut r = Reader::new(bytes);
    let n = r.u32()? as usize;
    let mut items = Vec::with_capacity(n.min(bytes.len() / 4));
    for _ in 0..n {
        let len = r.u32()? as usize;
        items.push(r.take(len)?.to_vec());
    }
    r.finish()?;
    Ok(Value::List(items))
}

/// Serialized size of one entry inside a section.
pub(crate) fn entry_len(key: &[u8], value: &Value) -> usize {
    4 + key.len() + 4 + encoded_value_len(value)
}

pub fn snapshot_export(tables: &Tables) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    for ns in Namespace::ALL {
        out.push(ns.tag());
        out.extend_from_slice(&(tables.len(ns) as u64).to_be_bytes());
        for (key, value) in tables.iter(ns) {
            out.extend_from_slice(&(key.len() as u32).to_be_bytes());
            out.extend_from_slice(key);
            out.extend_from_slice(&(encoded_value_len(value) as u32).to_be_bytes());
            encode_value(value, &mut out);
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

pub fn snapshot_import(bytes: &[u8]) -> Result<Tables, StorageError> {
    if bytes.len() < MAGIC.len() + 1 + CHECKSUM_LEN {
        return Err(StorageError::Corrupt("snapshot too short".into()));
    }
    let (body, checksum) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    if Sha256::digest(body).as_slice() != checksum {
        return Err(StorageError::Checksum);
    }
    let mut r = Reader::new(body);
    if r.take(MAGIC.len())? != MAGIC {
        return Err(StorageError::Corrupt("bad magic".into()));
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(StorageError::Corrupt(format!("unsupported version {version}")));
    }
    let mut tables = Tables::default();
    for ns in Namespace::ALL {
        let tag = r.u8()?;
        if tag != ns.tag() {
            return Err(StorageError::Corrupt(format!("expected section {ns}, found tag {tag}")));
        }
        let count = r.u64()?;
        let map = &mut tables.maps[ns.index()];
        let mut last: Option<&[u8]> = None;
        for _ in 0..count {
            let klen = r.u32()? as usize;
            let key = r.take(klen)?;
            ns.check_key(key)?;
            if last.is_some_and(|prev| prev >= key) {
                return Err(StorageError::Corrupt(format!("{ns} keys not in canonical order")));
            }
            last = Some(key);
            let vlen = r.u32()? as usize;
            let value = decode_value(ns, r.take(vlen)?)?;
            map.insert(key.to_vec(), value);
        }
    }
    r.finish()?;
    Ok(tables)
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8], StorageError> {
        if self.buf.len() - self.pos < n {
            return Err(StorageError::Corrupt("truncated".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u8(&mut self) -> Result<u8, StorageError> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u32(&mut self) -> Result<u32, StorageError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64, StorageError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn finish(&self) -> Result<(), StorageError> {
        if self.pos != self.buf.len() {
            return Err(StorageError::Corrupt("trailing bytes".into()));
        }
        Ok(())
    }
}
