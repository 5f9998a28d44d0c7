//! Namespaced key-value storage with atomic batches and canonical snapshots.
//!
//! Four namespaces cover everything the roles persist: `fset` (row key to an
//! ordered list of deltas), `iset` (label to ciphertext), `wmap` (keyword
//! state) and `keys` (key material). Both backends keep the live tables in
//! memory; [`JournaledStore`] adds a write-ahead journal for durability.

mod journal;
mod memory;
pub mod metrics;
pub mod snapshot;

use std::collections::BTreeMap;

use thiserror::Error;

pub use journal::JournaledStore;
pub use memory::MemoryStore;
pub use metrics::{storage_metrics, StorageMetrics};
pub use snapshot::{snapshot_export, snapshot_import};

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("key of {len} bytes violates the {ns} width policy")]
    KeyWidth { ns: Namespace, len: usize },
    #[error("{ns} expects {expected} values")]
    Schema { ns: Namespace, expected: &'static str },
    #[error("key already present in {ns}")]
    KeyExists { ns: Namespace, key: Vec<u8> },
    #[error("injected fault at mutation {0}")]
    Injected(usize),
    #[error("snapshot checksum mismatch")]
    Checksum,
    #[error("corrupt data: {0}")]
    Corrupt(String),
    #[error("store is poisoned after a failed journal write")]
    Poisoned,
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Namespace {
    Fset,
    Iset,
    Wmap,
    Keys,
}

impl std::fmt::Display for Namespace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

enum KeyWidth {
    Fixed(usize),
    Variable { max: usize },
}

impl Namespace {
    pub const ALL: [Namespace; 4] = [Namespace::Fset, Namespace::Iset, Namespace::Wmap, Namespace::Keys];

    pub fn name(self) -> &'static str {
        match self {
            Namespace::Fset => "fset",
            Namespace::Iset => "iset",
            Namespace::Wmap => "wmap",
            Namespace::Keys => "keys",
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Namespace::Fset => 1,
            Namespace::Iset => 2,
            Namespace::Wmap => 3,
            Namespace::Keys => 4,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|ns| ns.tag() == tag)
    }

    fn index(self) -> usize {
        self.tag() as usize - 1
    }

    fn key_width(self) -> KeyWidth {
        match self {
            Namespace::Fset => KeyWidth::Fixed(16),
            Namespace::Iset => KeyWidth::Fixed(32),
            Namespace::Wmap => KeyWidth::Variable { max: 1024 },
            Namespace::Keys => KeyWidth::Variable { max: 64 },
        }
    }

    /// Whether values in this namespace are ordered lists.
    pub fn holds_lists(self) -> bool {
        self == Namespace::Fset
    }

    pub fn check_key(self, key: &[u8]) -> Result<(), StorageError> {
        let ok = match self.key_width() {
            KeyWidth::Fixed(n) => key.len() == n,
            KeyWidth::Variable { max } => !key.is_empty() && key.len() <= max,
        };
        if ok {
            Ok(())
        } else {
            Err(StorageError::KeyWidth { ns: self, len: key.len() })
        }
    }

    fn check_value(self, value: &Value) -> Result<(), StorageError> {
        match (self.holds_lists(), value) {
            (true, Value::List(_)) | (false, Value::Bytes(_)) => Ok(()),
            (true, _) => Err(StorageError::Schema { ns: self, expected: "list" }),
            (false, _) => Err(StorageError::Schema { ns: self, expected: "bytes" }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Bytes(Vec<u8>),
    List(Vec<Vec<u8>>),
}

impl Value {
    pub fn as_bytes(&self) -> Option<&[u8]> {
        match self {
            Value::Bytes(b) => Some(b),
            Value::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Vec<u8>]> {
        match self {
            Value::List(l) => Some(l),
            Value::Bytes(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mutation {
    /// Insert or overwrite.
    Put { ns: Namespace, key: Vec<u8>, value: Value },
    /// Insert; fails if the key exists.
    Insert { ns: Namespace, key: Vec<u8>, value: Value },
    /// Remove; absent keys are a no-op.
    Delete { ns: Namespace, key: Vec<u8> },
    /// Extend a list value, creating it if absent.
    Append { ns: Namespace, key: Vec<u8>, items: Vec<Vec<u8>> },
}

impl Mutation {
    pub fn namespace(&self) -> Namespace {
        match self {
            Mutation::Put { ns, .. }
            | Mutation::Insert { ns, .. }
            | Mutation::Delete { ns, .. }
            | Mutation::Append { ns, .. } => *ns,
        }
    }

    fn validate(&self) -> Result<(), StorageError> {
        match self {
            Mutation::Put { ns, key, value } | Mutation::Insert { ns, key, value } => {
                ns.check_key(key)?;
                ns.check_value(value)
            }
            Mutation::Delete { ns, key } => ns.check_key(key),
            Mutation::Append { ns, key, .. } => {
                ns.check_key(key)?;
                if ns.holds_lists() {
                    Ok(())
                } else {
                    Err(StorageError::Schema { ns: *ns, expected: "bytes" })
                }
            }
        }
    }
}

enum Undo {
    Restore { ns: Namespace, key: Vec<u8>, prev: Option<Value> },
    Truncate { ns: Namespace, key: Vec<u8>, len: Option<usize> },
}

/// The in-memory tables shared by both backends. Keys are kept in
/// lexicographic order so exports are canonical.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tables {
    maps: [BTreeMap<Vec<u8>, Value>; 4],
}

impl Tables {
    pub fn get(&self, ns: Namespace, key: &[u8]) -> Option<&Value> {
        self.maps[ns.index()].get(key)
    }

    pub fn len(&self, ns: Namespace) -> usize {
        self.maps[ns.index()].len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.iter().all(BTreeMap::is_empty)
    }

    pub fn iter(&self, ns: Namespace) -> impl Iterator<Item = (&Vec<u8>, &Value)> {
        self.maps[ns.index()].iter()
    }

    /// Applies all mutations or none. `fail_at` injects a failure right
    /// before the mutation with that index.
    pub(crate) fn apply(&mut self, mutations: &[Mutation], fail_at: Option<usize>) -> Result<(), StorageError> {
        let mut undo = Vec::with_capacity(mutations.len());
        for (i, m) in mutations.iter().enumerate() {
            let step = if fail_at == Some(i) {
                Err(StorageError::Injected(i))
            } else {
                self.apply_one(m)
            };
            match step {
                Ok(u) => undo.push(u),
                Err(e) => {
                    self.rollback(undo);
                    return Err(e);
                }
            }
        }
        Ok(())
    }

    fn apply_one(&mut self, m: &Mutation) -> Result<Undo, StorageError> {
        m.validate()?;
        let ns = m.namespace();
        let map = &mut self.maps[ns.index()];
        Ok(match m {
            Mutation::Put { key, value, .. } => {
                let prev = map.insert(key.clone(), value.clone());
                Undo::Restore { ns, key: key.clone(), prev }
            }
            Mutation::Insert { key, value, .. } => {
                if map.contains_key(key) {
                    return Err(StorageError::KeyExists { ns, key: key.clone() });
                }
                map.insert(key.clone(), value.clone());
                Undo::Restore { ns, key: key.clone(), prev: None }
            }
            Mutation::Delete { key, .. } => {
                let prev = map.remove(key);
                Undo::Restore { ns, key: key.clone(), prev }
            }
            Mutation::Append { key, items, .. } => match map.get_mut(key) {
                Some(Value::List(list)) => {
                    let len = list.len();
                    list.extend(items.iter().cloned());
                    Undo::Truncate { ns, key: key.clone(), len: Some(len) }
                }
                Some(Value::Bytes(_)) => return Err(StorageError::Schema { ns, expected: "list" }),
                None => {
                    map.insert(key.clone(), Value::List(items.clone()));
                    Undo::Truncate { ns, key: key.clone(), len: None }
                }
            },
        })
    }

    fn rollback(&mut self, undo: Vec<Undo>) {
        for u in undo.into_iter().rev() {
            match u {
                Undo::Restore { ns, key, prev } => {
                    let map = &mut self.maps[ns.index()];
                    match prev {
                        Some(v) => map.insert(key, v),
                        None => map.remove(&key),
                    };
                }
                Undo::Truncate { ns, key, len } => {
                    let map = &mut self.maps[ns.index()];
                    match len {
                        Some(n) => {
                            if let Some(Value::List(list)) = map.get_mut(&key) {
                                list.truncate(n);
                            }
                        }
                        None => {
                            map.remove(&key);
                        }
                    }
                }
            }
        }
    }
}

/// Storage contract used by the protocol roles.
pub trait KvStore: Send + Sync {
    fn tables(&self) -> &Tables;

    /// All-or-nothing application of `mutations`.
    fn apply_atomic(&mut self, mutations: &[Mutation]) -> Result<(), StorageError>;

    fn get(&self, ns: Namespace, key: &[u8]) -> Option<&Value> {
        self.tables().get(ns, key)
    }

    fn len(&self, ns: Namespace) -> usize {
        self.tables().len(ns)
    }

    fn put(&mut self, ns: Namespace, key: &[u8], value: Value) -> Result<(), StorageError> {
        self.apply_atomic(&[Mutation::Put { ns, key: key.to_vec(), value }])
    }

    fn delete(&mut self, ns: Namespace, key: &[u8]) -> Result<(), StorageError> {
        self.apply_atomic(&[Mutation::Delete { ns, key: key.to_vec() }])
    }

    fn append(&mut self, ns: Namespace, key: &[u8], item: Vec<u8>) -> Result<(), StorageError> {
        self.apply_atomic(&[Mutation::Append { ns, key: key.to_vec(), items: vec![item] }])
    }

    fn export(&self) -> Vec<u8> {
        snapshot_export(self.tables())
    }

    fn metrics(&self) -> StorageMetrics {
        storage_metrics(self.tables())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(i: u8) -> Vec<u8> {
        vec![i; 16]
    }

    #[test]
    fn put_get_and_absent() {
        let mut s = MemoryStore::new();
        s.put(Namespace::Iset, &[1; 32], Value::Bytes(b"ct".to_vec())).unwrap();
        assert_eq!(s.get(Namespace::Iset, &[1; 32]), Some(&Value::Bytes(b"ct".to_vec())));
        assert_eq!(s.get(Namespace::Iset, &[2; 32]), None);
    }

    #[test]
    fn append_preserves_order() {
        let mut s = MemoryStore::new();
        for d in [b"d1", b"d2", b"d3"] {
            s.append(Namespace::Fset, &row(7), d.to_vec()).unwrap();
        }
        let list = s.get(Namespace::Fset, &row(7)).unwrap().as_list().unwrap();
        assert_eq!(list, &[b"d1".to_vec(), b"d2".to_vec(), b"d3".to_vec()]);
    }

    #[test]
    fn width_and_schema_violations() {
        let mut s = MemoryStore::new();
        assert!(matches!(
            s.put(Namespace::Iset, &[0; 31], Value::Bytes(vec![])),
            Err(StorageError::KeyWidth { .. })
        ));
        assert!(matches!(
            s.put(Namespace::Fset, &row(1), Value::Bytes(vec![])),
            Err(StorageError::Schema { .. })
        ));
        assert!(matches!(
            s.append(Namespace::Wmap, b"w", vec![1]),
            Err(StorageError::Schema { .. })
        ));
        assert!(matches!(
            s.put(Namespace::Keys, b"", Value::Bytes(vec![])),
            Err(StorageError::KeyWidth { .. })
        ));
    }

    #[test]
    fn insert_refuses_existing_key_atomically() {
        let mut s = MemoryStore::new();
        s.put(Namespace::Iset, &[9; 32], Value::Bytes(vec![1])).unwrap();
        let before = s.tables().clone();
        let batch = vec![
            Mutation::Insert { ns: Namespace::Iset, key: vec![1; 32], value: Value::Bytes(vec![2]) },
            Mutation::Append { ns: Namespace::Fset, key: row(1), items: vec![vec![3]] },
            Mutation::Insert { ns: Namespace::Iset, key: vec![9; 32], value: Value::Bytes(vec![4]) },
        ];
        assert!(matches!(s.apply_atomic(&batch), Err(StorageError::KeyExists { .. })));
        assert_eq!(s.tables(), &before);
    }

    #[test]
    fn injected_failure_rolls_back_everything() {
        let mut s = MemoryStore::new();
        s.append(Namespace::Fset, &row(0), b"old".to_vec()).unwrap();
        s.put(Namespace::Iset, &[5; 32], Value::Bytes(b"keep".to_vec())).unwrap();
        let before = s.tables().clone();
        let batch: Vec<Mutation> = (0..10u8)
            .map(|i| match i % 4 {
                0 => Mutation::Append { ns: Namespace::Fset, key: row(0), items: vec![vec![i]] },
                1 => Mutation::Put { ns: Namespace::Iset, key: vec![i; 32], value: Value::Bytes(vec![i]) },
                2 => Mutation::Delete { ns: Namespace::Iset, key: vec![5; 32] },
                _ => Mutation::Append { ns: Namespace::Fset, key: row(i), items: vec![vec![i]] },
            })
            .collect();
        s.fail_next_batch_at(7);
        assert!(matches!(s.apply_atomic(&batch), Err(StorageError::Injected(7))));
        assert_eq!(s.tables(), &before);
        // the fault is one-shot
        s.apply_atomic(&batch).unwrap();
        assert_ne!(s.tables(), &before);
    }

    #[test]
    fn empty_batch_is_noop() {
        let mut s = MemoryStore::new();
        s.apply_atomic(&[]).unwrap();
        assert!(s.tables().is_empty());
    }
}
