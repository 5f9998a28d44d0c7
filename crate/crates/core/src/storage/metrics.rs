use super::snapshot::entry_len;
use super::{Namespace, Tables, Value};

/// Exact byte accounting of the serialized sections.
///
/// `*_bytes` count the entries of a section as they appear in a snapshot
/// (length prefixes included) but not the 9-byte section header.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StorageMetrics {
    pub fset_bytes: u64,
    pub iset_bytes: u64,
    pub wmap_bytes: u64,
    pub keys_bytes: u64,
    pub fset_rows: u64,
    pub fset_items: u64,
    pub iset_entries: u64,
    pub wmap_entries: u64,
    pub keys_entries: u64,
}

impl StorageMetrics {
    /// Server-side footprint: FSet plus ISet.
    pub fn egdb_bytes(&self) -> u64 {
        self.fset_bytes + self.iset_bytes
    }
}

pub fn storage_metrics(tables: &Tables) -> StorageMetrics {
    let section = |ns: Namespace| -> u64 { tables.iter(ns).map(|(k, v)| entry_len(k, v) as u64).sum() };
    StorageMetrics {
        fset_bytes: section(Namespace::Fset),
        iset_bytes: section(Namespace::Iset),
        wmap_bytes: section(Namespace::Wmap),
        keys_bytes: section(Namespace::Keys),
        fset_rows: tables.len(Namespace::Fset) as u64,
        fset_items: tables
            .iter(Namespace::Fset)
            .map(|(_, v)| match v {
                Value::List(l) => l.len() as u64,
                Value::Bytes(_) => 0,
            })
            .sum(),
        iset_entries: tables.len(Namespace::Iset) as u64,
        wmap_entries: tables.len(Namespace::Wmap) as u64,
        keys_entries: tables.len(Namespace::Keys) as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::storage::snapshot::{CHECKSUM_LEN, SECTION_HEADER_LEN};
    use crate::storage::{KvStore, MemoryStore};

    #[test]
    fn empty_state_is_all_zero() {
        assert_eq!(MemoryStore::new().metrics(), StorageMetrics::default());
    }

    #[test]
    fn sections_add_up_to_snapshot_length() {
        let mut s = MemoryStore::new();
        for i in 0..4u8 {
            for j in 0..3u8 {
                s.append(Namespace::Fset, &[i; 16], vec![j; 32]).unwrap();
            }
            s.put(Namespace::Iset, &[i; 32], Value::Bytes(vec![0; 30])).unwrap();
        }
        let m = s.metrics();
        assert_eq!(m.fset_rows, 4);
        assert_eq!(m.fset_items, 12);
        // row: 4 + 16 + 4 + 4 + 3 * (4 + 32)
        assert_eq!(m.fset_bytes, 4 * (4 + 16 + 4 + 4 + 3 * 36));
        assert_eq!(m.iset_bytes, 4 * (4 + 32 + 4 + 30));
        let total = 6 + 4 * SECTION_HEADER_LEN as u64 + m.fset_bytes + m.iset_bytes + CHECKSUM_LEN as u64;
        assert_eq!(s.export().len() as u64, total);
    }
}
