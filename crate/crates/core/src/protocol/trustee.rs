use std::collections::{BTreeMap, HashMap};

use rand::{CryptoRng, RngCore};

use crate::crypto::{
    generator_exp, keyed_hash, perm_forward, perm_inverse, perm_inverse_iterated, prf_bytes, prf_scalar,
    reduce_to_scalar, scalar_inv, scalar_mul, se_encrypt, CipherKey, PermDomainValue, PrimeOrderGroup, Scalar,
    PRF_OUTPUT_LEN,
};
use crate::storage::KvStore;

use super::keys::TrusteeKeys;
use super::messages::{AddBatch, DeleteToken, Record};
use super::state::{load_wmap, wmap_mutations, KeywordState, WDelta, WMap};
use super::ProtocolError;

/// How the trustee extends a keyword's chain by `k` steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChainStrategy {
    /// One secret-key inverse per added pair.
    #[default]
    Sequential,
    /// One iterated inverse to the new head (none for a fresh keyword, whose
    /// head is sampled directly), then public forwards down to the
    /// intermediate values. Produces the same chains at a fraction of the
    /// secret-key work.
    Jump,
}

/// Holder of all keys; issues add batches and revocation tokens.
pub struct Trustee<G: PrimeOrderGroup> {
    keys: TrusteeKeys<G>,
    w: WMap,
    seq: u64,
    strategy: ChainStrategy,
}

impl<G: PrimeOrderGroup> std::fmt::Debug for Trustee<G> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Trustee").field("keywords", &self.w.len()).field("seq", &self.seq).finish()
    }
}

impl<G: PrimeOrderGroup> Trustee<G> {
    pub fn new(keys: TrusteeKeys<G>) -> Self {
        Trustee { keys, w: WMap::new(), seq: 0, strategy: ChainStrategy::default() }
    }

    pub fn with_strategy(mut self, strategy: ChainStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn set_strategy(&mut self, strategy: ChainStrategy) {
        self.strategy = strategy;
    }

    pub fn keys(&self) -> &TrusteeKeys<G> {
        &self.keys
    }

    pub fn wmap(&self) -> &WMap {
        &self.w
    }

    /// Sequence number of the last nonempty delta issued.
    pub fn seq(&self) -> u64 {
        self.seq
    }

    /// Encrypts a batch of records. On error nothing changes.
    pub fn add_batch<R: RngCore + CryptoRng>(
        &mut self,
        records: &[Record],
        rng: &mut R,
    ) -> Result<(AddBatch, WDelta), ProtocolError> {
        if records.is_empty() {
            return Ok((AddBatch::default(), WDelta { seq: self.seq, entries: Vec::new() }));
        }
        let public = &self.keys.public;
        let group = &public.group;

        // keyword -> indices of records carrying it, in record order
        let mut by_keyword: BTreeMap<&[u8], Vec<usize>> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            for w in &r.keywords {
                by_keyword.entry(w.as_slice()).or_default().push(i);
            }
        }

        let mut id_tags: HashMap<&[u8], ([u8; PRF_OUTPUT_LEN], Scalar<G>)> = HashMap::new();
        for r in records {
            id_tags
                .entry(r.id.as_slice())
                .or_insert_with(|| (prf_bytes(&self.keys.k_1, &r.id), prf_scalar(group, &self.keys.k_2, &r.id)));
        }

        let mut iset = Vec::with_capacity(records.len());
        let mut rows: BTreeMap<[u8; PRF_OUTPUT_LEN], Vec<Vec<u8>>> = BTreeMap::new();
        let mut entries = Vec::with_capacity(by_keyword.len());

        for (w, holders) in by_keyword {
            let tag_w = prf_scalar(group, &self.keys.k_t, w);
            let k_w = CipherKey::from_bytes(prf_bytes(&self.keys.k_s, w));
            let prev = self.w.get(w);
            let chain = self.extend_chain(prev, holders.len() as u64, rng)?;
            let c0 = prev.map_or(0, |s| s.c);

            for (st, &i) in chain.iter().zip(&holders) {
                let record = &records[i];
                let (r_id, tag_id) = &id_tags[record.id.as_slice()];
                let exp = scalar_mul(group, &reduce_to_scalar(group, st)?, &tag_w);
                let label = keyed_hash(group, &public.k_h, &generator_exp(group, &exp));
                let delta = generator_exp(group, &scalar_mul(group, &exp, &scalar_inv(group, tag_id)));
                iset.push((label, se_encrypt(&k_w, &record.id, rng)));
                rows.entry(*r_id).or_default().push(group.encode_element(&delta));
            }

            let head = chain.last().expect("at least one holder").clone();
            entries.push((w.to_vec(), KeywordState { st: head, c: c0 + holders.len() as u64 }));
        }

        iset.sort_unstable_by_key(|e| e.0);
        for (w, state) in &entries {
            self.w.insert(w.clone(), state.clone());
        }
        self.seq += 1;
        Ok((AddBatch { iset, fset: rows.into_iter().collect() }, WDelta { seq: self.seq, entries }))
    }

    /// Returns `ST_{c+1} .. ST_{c+k}` in that order.
    fn extend_chain<R: RngCore + CryptoRng>(
        &self,
        prev: Option<&KeywordState>,
        k: u64,
        rng: &mut R,
    ) -> Result<Vec<PermDomainValue>, ProtocolError> {
        let sk = &self.keys.sk;
        let pk = &self.keys.public.pk;
        let mut out = Vec::with_capacity(k as usize);
        match self.strategy {
            ChainStrategy::Sequential => {
                let mut st = match prev {
                    Some(s) => s.st.clone(),
                    None => pk.sample_nontrivial(rng),
                };
                for _ in 0..k {
                    st = perm_inverse(sk, &st)?;
                    out.push(st.clone());
                }
            }
            ChainStrategy::Jump => {
                // a uniform head has a uniform k-th forward image, so a fresh
                // chain can start at its top
                let mut st = match prev {
                    Some(s) => perm_inverse_iterated(sk, &s.st, k)?,
                    None => pk.sample_nontrivial(rng),
                };
                out.push(st.clone());
                for _ in 1..k {
                    st = perm_forward(pk, &st)?;
                    out.push(st.clone());
                }
                out.reverse();
            }
        }
        Ok(out)
    }

    /// `(F_p(K_2, ID), F(K_1, ID))`, derivable whether or not the ID was added.
    pub fn issue_delete(&self, id: &[u8]) -> DeleteToken<G> {
        DeleteToken {
            tag_id: prf_scalar(&self.keys.public.group, &self.keys.k_2, id),
            r_id: prf_bytes(&self.keys.k_1, id),
        }
    }

    /// Writes keys, the whole keyword map and the sequence number.
    pub fn save(&self, store: &mut impl KvStore) -> Result<(), ProtocolError> {
        let entries: Vec<_> = self.w.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        let mut muts = self.keys.to_mutations();
        muts.extend(wmap_mutations(&entries, self.seq, self.keys.public.pk.domain_width()));
        store.apply_atomic(&muts)?;
        Ok(())
    }

    /// Persists only the states touched by `delta`.
    pub fn persist_delta(&self, store: &mut impl KvStore, delta: &WDelta) -> Result<(), ProtocolError> {
        store.apply_atomic(&wmap_mutations(&delta.entries, self.seq, self.keys.public.pk.domain_width()))?;
        Ok(())
    }

    pub fn load(store: &impl KvStore) -> Result<Self, ProtocolError> {
        let keys = TrusteeKeys::load(store)?;
        let (w, seq) = load_wmap(store, &keys.public.pk)?;
        Ok(Trustee { keys, w, seq, strategy: ChainStrategy::default() })
    }
}
