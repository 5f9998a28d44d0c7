use std::collections::BTreeSet;

use crate::crypto::{generator_exp, prf_bytes, prf_scalar, se_decrypt, CipherKey, PrimeOrderGroup};
use crate::storage::KvStore;

use super::keys::VetterKeys;
use super::messages::{RSet, SearchToken};
use super::state::{load_wmap, wmap_mutations, WDelta, WMap};
use super::ProtocolError;

/// Issues search tokens and decrypts results. Holds no revocation keys and
/// no permutation secret.
pub struct Vetter<G: PrimeOrderGroup> {
    keys: VetterKeys<G>,
    w: WMap,
    applied: u64,
}

impl<G: PrimeOrderGroup> std::fmt::Debug for Vetter<G> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Vetter").field("keywords", &self.w.len()).field("applied", &self.applied).finish()
    }
}

impl<G: PrimeOrderGroup> Vetter<G> {
    pub fn new(keys: VetterKeys<G>) -> Self {
        Vetter { keys, w: WMap::new(), applied: 0 }
    }

    pub fn keys(&self) -> &VetterKeys<G> {
        &self.keys
    }

    pub fn wmap(&self) -> &WMap {
        &self.w
    }

    /// Sequence number of the last delta applied.
    pub fn applied_seq(&self) -> u64 {
        self.applied
    }

    /// `None` when the keyword was never added; the server need not be asked.
    pub fn issue_search(&self, keyword: &[u8]) -> Option<SearchToken<G>> {
        let state = self.w.get(keyword)?;
        let group = &self.keys.public.group;
        let tag_w = prf_scalar(group, &self.keys.k_t, keyword);
        Some(SearchToken { tk: generator_exp(group, &tag_w), st: state.st.clone(), c: state.c })
    }

    pub fn decrypt_results(&self, keyword: &[u8], rset: &RSet) -> Result<BTreeSet<Vec<u8>>, ProtocolError> {
        if rset.0.is_empty() {
            return Ok(BTreeSet::new());
        }
        let k_w = CipherKey::from_bytes(prf_bytes(&self.keys.k_s, keyword));
        rset.0
            .iter()
            .enumerate()
            .map(|(index, ct)| se_decrypt(&k_w, ct).map_err(|_| ProtocolError::ResultIntegrity { index }))
            .collect()
    }

    /// Applies a trustee delta. Nonempty deltas must arrive in issuance order.
    pub fn sync(&mut self, delta: &WDelta) -> Result<(), ProtocolError> {
        if delta.is_empty() {
            return Ok(());
        }
        if delta.seq != self.applied + 1 {
            return Err(ProtocolError::Stale { expected: self.applied + 1, got: delta.seq });
        }
        for (w, state) in &delta.entries {
            if self.w.get(w).is_some_and(|old| old.c >= state.c) {
                return Err(ProtocolError::CounterRegression { keyword: String::from_utf8_lossy(w).into_owned() });
            }
        }
        for (w, state) in &delta.entries {
            self.w.insert(w.clone(), state.clone());
        }
        self.applied = delta.seq;
        Ok(())
    }

    pub fn save(&self, store: &mut impl KvStore) -> Result<(), ProtocolError> {
        let entries: Vec<_> = self.w.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        let mut muts = self.keys.to_mutations();
        muts.extend(wmap_mutations(&entries, self.applied, self.keys.public.pk.domain_width()));
        store.apply_atomic(&muts)?;
        Ok(())
    }

    pub fn persist_delta(&self, store: &mut impl KvStore, delta: &WDelta) -> Result<(), ProtocolError> {
        store.apply_atomic(&wmap_mutations(&delta.entries, self.applied, self.keys.public.pk.domain_width()))?;
        Ok(())
    }

    pub fn load(store: &impl KvStore) -> Result<Self, ProtocolError> {
        let keys = VetterKeys::load(store)?;
        let (w, applied) = load_wmap(store, &keys.public.pk)?;
        Ok(Vetter { keys, w, applied })
    }
}
