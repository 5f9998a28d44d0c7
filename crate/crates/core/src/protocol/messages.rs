use std::collections::BTreeSet;

use crate::crypto::{PermDomainValue, PrimeOrderGroup, Scalar, HASH_OUTPUT_LEN, PRF_OUTPUT_LEN};

use super::ProtocolError;

/// Longest accepted keyword, in bytes.
pub const MAX_KEYWORD_LEN: usize = 1024;
/// Longest accepted identifier, in bytes.
pub const MAX_ID_LEN: usize = 4096;

/// One identifier and its keyword set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub id: Vec<u8>,
    pub keywords: BTreeSet<Vec<u8>>,
}

impl Record {
    pub fn new<I, K>(id: impl Into<Vec<u8>>, keywords: I) -> Result<Self, ProtocolError>
    where
        I: IntoIterator<Item = K>,
        K: Into<Vec<u8>>,
    {
        let id = id.into();
        let keywords: BTreeSet<Vec<u8>> = keywords.into_iter().map(Into::into).collect();
        if id.is_empty() || id.len() > MAX_ID_LEN {
            return Err(ProtocolError::InvalidRecord(format!("identifier length {} out of range", id.len())));
        }
        if keywords.is_empty() {
            return Err(ProtocolError::InvalidRecord(format!("{} has no keywords", String::from_utf8_lossy(&id))));
        }
        if let Some(bad) = keywords.iter().find(|w| w.is_empty() || w.len() > MAX_KEYWORD_LEN) {
            return Err(ProtocolError::InvalidRecord(format!("keyword length {} out of range", bad.len())));
        }
        Ok(Record { id, keywords })
    }
}

/// Everything the server receives for one batch insertion.
///
/// Index entries are sorted by label so their order says nothing about
/// which row they belong to. Rows are sorted by `r_ID`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AddBatch {
    pub iset: Vec<([u8; HASH_OUTPUT_LEN], Vec<u8>)>,
    pub fset: Vec<([u8; PRF_OUTPUT_LEN], Vec<Vec<u8>>)>,
}

impl AddBatch {
    pub fn is_empty(&self) -> bool {
        self.iset.is_empty() && self.fset.is_empty()
    }

    pub fn delta_count(&self) -> usize {
        self.fset.iter().map(|(_, d)| d.len()).sum()
    }
}

/// Revocation token: `(tag_ID, r_ID)`.
pub struct DeleteToken<G: PrimeOrderGroup> {
    pub tag_id: Scalar<G>,
    pub r_id: [u8; PRF_OUTPUT_LEN],
}

impl<G: PrimeOrderGroup> Clone for DeleteToken<G> {
    fn clone(&self) -> Self {
        DeleteToken { tag_id: self.tag_id, r_id: self.r_id }
    }
}

impl<G: PrimeOrderGroup> PartialEq for DeleteToken<G> {
    fn eq(&self, other: &Self) -> bool {
        self.tag_id == other.tag_id && self.r_id == other.r_id
    }
}

impl<G: PrimeOrderGroup> Eq for DeleteToken<G> {}

impl<G: PrimeOrderGroup> std::fmt::Debug for DeleteToken<G> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DeleteToken").field("r_id", &self.r_id).finish_non_exhaustive()
    }
}

/// Search token `(tk, ST_c, c)`.
pub struct SearchToken<G: PrimeOrderGroup> {
    pub tk: G::Element,
    pub st: PermDomainValue,
    pub c: u64,
}

impl<G: PrimeOrderGroup> Clone for SearchToken<G> {
    fn clone(&self) -> Self {
        SearchToken { tk: self.tk.clone(), st: self.st.clone(), c: self.c }
    }
}

impl<G: PrimeOrderGroup> PartialEq for SearchToken<G> {
    fn eq(&self, other: &Self) -> bool {
        self.tk == other.tk && self.st == other.st && self.c == other.c
    }
}

impl<G: PrimeOrderGroup> Eq for SearchToken<G> {}

impl<G: PrimeOrderGroup> std::fmt::Debug for SearchToken<G> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SearchToken").field("st", &self.st).field("c", &self.c).finish()
    }
}

/// Encrypted identifiers returned by a search, newest first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RSet(pub Vec<Vec<u8>>);

/// What a search cost the server.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub rset: RSet,
    /// Chain steps walked; always the token's `c`.
    pub iterations: u64,
    pub hits: u64,
}

impl SearchOutcome {
    /// Counter slots whose entries were deleted.
    pub fn skipped(&self) -> u64 {
        self.iterations - self.hits
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DeletionReport {
    /// Index entries removed, one per delta in the row.
    pub removed_count: u64,
    pub row_removed: bool,
}
