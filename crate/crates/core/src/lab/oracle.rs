use std::collections::{BTreeMap, BTreeSet};

use crate::protocol::Record;

/// Cleartext reference: identifier to keyword set, with revocation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PlainDatabase {
    rows: BTreeMap<Vec<u8>, BTreeSet<Vec<u8>>>,
}

impl PlainDatabase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, records: &[Record]) {
        for r in records {
            self.rows.entry(r.id.clone()).or_default().extend(r.keywords.iter().cloned());
        }
    }

    /// Removes the identifier entirely; unknown IDs are ignored.
    pub fn revoke(&mut self, id: &[u8]) {
        self.rows.remove(id);
    }

    pub fn search(&self, keyword: &[u8]) -> BTreeSet<Vec<u8>> {
        self.rows.iter().filter(|(_, kws)| kws.contains(keyword)).map(|(id, _)| id.clone()).collect()
    }

    pub fn contains(&self, id: &[u8]) -> bool {
        self.rows.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &Vec<u8>> {
        self.rows.keys()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn pair_count(&self) -> usize {
        self.rows.values().map(BTreeSet::len).sum()
    }
}
