use crate::crypto::{group_exp, keyed_hash, perm_forward, reduce_to_scalar, PrimeOrderGroup, HASH_OUTPUT_LEN};
use crate::storage::{KvStore, Mutation, Namespace, StorageError, Value};

use super::keys::PublicParams;
use super::messages::{AddBatch, DeleteToken, DeletionReport, RSet, SearchOutcome, SearchToken};
use super::ProtocolError;

/// Stores the encrypted database and answers searches. Sees only public
/// parameters.
pub struct Server<G: PrimeOrderGroup, S: KvStore> {
    params: PublicParams<G>,
    store: S,
}

impl<G: PrimeOrderGroup, S: KvStore> std::fmt::Debug for Server<G, S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Server")
            .field("fset_rows", &self.fset_rows())
            .field("iset_entries", &self.iset_len())
            .finish()
    }
}

impl<G: PrimeOrderGroup, S: KvStore> Server<G, S> {
    pub fn new(params: PublicParams<G>, store: S) -> Self {
        Server { params, store }
    }

    /// Fresh server that records its public parameters in `store`.
    pub fn create(params: PublicParams<G>, mut store: S) -> Result<Self, ProtocolError> {
        params.save(&mut store)?;
        Ok(Server { params, store })
    }

    /// Reopens a server whose store already holds its public parameters.
    pub fn open(store: S) -> Result<Self, ProtocolError> {
        Ok(Server { params: PublicParams::load(&store)?, store })
    }

    pub fn params(&self) -> &PublicParams<G> {
        &self.params
    }

    pub fn store(&self) -> &S {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut S {
        &mut self.store
    }

    pub fn into_store(self) -> S {
        self.store
    }

    pub fn fset_rows(&self) -> usize {
        self.store.len(Namespace::Fset)
    }

    pub fn iset_len(&self) -> usize {
        self.store.len(Namespace::Iset)
    }

    pub fn fset_row(&self, r_id: &[u8]) -> Option<&[Vec<u8>]> {
        self.store.get(Namespace::Fset, r_id).and_then(Value::as_list)
    }

    /// Inserts a whole batch or nothing. An existing label is never
    /// overwritten.
    pub fn apply_add(&mut self, batch: &AddBatch) -> Result<(), ProtocolError> {
        let group = &self.params.group;
        let mut muts = Vec::with_capacity(batch.iset.len() + batch.fset.len());
        for (label, ct) in &batch.iset {
            muts.push(Mutation::Insert { ns: Namespace::Iset, key: label.to_vec(), value: Value::Bytes(ct.clone()) });
        }
        for (r_id, deltas) in &batch.fset {
            if deltas.iter().any(|d| group.decode_element(d).is_none()) {
                return Err(ProtocolError::Malformed("delta is not a group element"));
            }
            muts.push(Mutation::Append { ns: Namespace::Fset, key: r_id.to_vec(), items: deltas.clone() });
        }
        self.store.apply_atomic(&muts).map_err(|e| match e {
            StorageError::KeyExists { ns: Namespace::Iset, .. } => ProtocolError::DuplicateIndex,
            e => e.into(),
        })
    }

    /// Removes the row for `r_ID` and every index entry its deltas point to.
    pub fn apply_delete(&mut self, token: &DeleteToken<G>) -> Result<DeletionReport, ProtocolError> {
        let Some(row) = self.fset_row(&token.r_id) else {
            return Ok(DeletionReport::default());
        };
        let group = &self.params.group;
        let mut muts = Vec::with_capacity(row.len() + 1);
        for d in row {
            let delta = group.decode_element(d).ok_or(ProtocolError::Malformed("stored delta"))?;
            let label = keyed_hash(group, &self.params.k_h, &group_exp(group, &delta, &token.tag_id));
            if self.store.get(Namespace::Iset, &label).is_none() {
                return Err(ProtocolError::IndexMissing);
            }
            muts.push(Mutation::Delete { ns: Namespace::Iset, key: label.to_vec() });
        }
        let removed = muts.len() as u64;
        muts.push(Mutation::Delete { ns: Namespace::Fset, key: token.r_id.to_vec() });
        self.store.apply_atomic(&muts)?;
        Ok(DeletionReport { removed_count: removed, row_removed: true })
    }

    /// Walks the chain from `ST_c` for exactly `c` steps, collecting live
    /// entries. Read-only.
    pub fn search(&self, token: &SearchToken<G>) -> Result<SearchOutcome, ProtocolError> {
        if token.c == 0 {
            return Err(ProtocolError::Malformed("search counter is zero"));
        }
        let group = &self.params.group;
        let pk = &self.params.pk;
        pk.check(&token.st)?;
        let mut st = token.st.clone();
        let mut hits = Vec::new();
        for _ in 0..token.c {
            let label: [u8; HASH_OUTPUT_LEN] =
                keyed_hash(group, &self.params.k_h, &group_exp(group, &token.tk, &reduce_to_scalar(group, &st)?));
            if let Some(ct) = self.store.get(Namespace::Iset, &label).and_then(Value::as_bytes) {
                hits.push(ct.to_vec());
            }
            st = perm_forward(pk, &st)?;
        }
        Ok(SearchOutcome { iterations: token.c, hits: hits.len() as u64, rset: RSet(hits) })
    }
}
