use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::crypto::{PrimeOrderGroup, Ristretto255};
use crate::protocol::{
    setup, ChainStrategy, DeleteToken, DeletionReport, ProtocolError, Record, SearchOutcome, Server, Trustee, Vetter,
};
use crate::storage::{KvStore, MemoryStore};
use crate::wire;

use super::transcript::{EventKind, Transcript};

/// All three roles wired together in one process, with an optional
/// recorder at the server boundary.
pub struct System<G: PrimeOrderGroup, S: KvStore = MemoryStore> {
    pub trustee: Trustee<G>,
    pub vetter: Vetter<G>,
    pub server: Server<G, S>,
    pub rng: ChaCha20Rng,
    transcript: Option<Transcript>,
}

/// Decrypted result of a search plus what it cost the server.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchReport {
    pub ids: BTreeSet<Vec<u8>>,
    pub iterations: u64,
    pub hits: u64,
}

impl SearchReport {
    fn empty() -> Self {
        SearchReport { ids: BTreeSet::new(), iterations: 0, hits: 0 }
    }
}

impl System<Ristretto255> {
    /// Fresh in-memory system with a random ristretto generator.
    pub fn new(seed: u64, perm_bits: usize) -> Result<Self, ProtocolError> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let group = Ristretto255::random(&mut rng);
        Self::with_group(group, perm_bits, rng)
    }
}

impl<G: PrimeOrderGroup> System<G> {
    pub fn with_group(group: G, perm_bits: usize, mut rng: ChaCha20Rng) -> Result<Self, ProtocolError> {
        let (trustee, vetter, params) = setup(group, perm_bits, &mut rng)?;
        let server = Server::create(params, MemoryStore::new())?;
        Ok(System { trustee, vetter, server, rng, transcript: None })
    }
}

impl<G: PrimeOrderGroup, S: KvStore> System<G, S> {
    pub fn with_strategy(mut self, strategy: ChainStrategy) -> Self {
        self.trustee.set_strategy(strategy);
        self
    }

    /// Starts recording server-visible traffic.
    pub fn record(mut self) -> Self {
        self.transcript = Some(Transcript::default());
        self
    }

    pub fn transcript(&self) -> Option<&Transcript> {
        self.transcript.as_ref()
    }

    pub fn group(&self) -> &G {
        &self.server.params().group
    }

    pub fn add(&mut self, records: &[Record]) -> Result<(), ProtocolError> {
        let (batch, delta) = self.trustee.add_batch(records, &mut self.rng)?;
        self.server.apply_add(&batch)?;
        self.vetter.sync(&delta)?;
        if let Some(t) = &mut self.transcript {
            let msg = wire::encode(&self.server.params().group, &batch);
            t.push(EventKind::Add, msg, batch.iset.len() as u64);
        }
        Ok(())
    }

    pub fn revoke(&mut self, id: &[u8]) -> Result<DeletionReport, ProtocolError> {
        let token = self.trustee.issue_delete(id);
        self.revoke_with(&token)
    }

    pub fn revoke_with(&mut self, token: &DeleteToken<G>) -> Result<DeletionReport, ProtocolError> {
        let report = self.server.apply_delete(token)?;
        if let Some(t) = &mut self.transcript {
            let msg = wire::encode(&self.server.params().group, token);
            t.push(EventKind::Delete, msg, report.removed_count);
        }
        Ok(report)
    }

    /// Server half of a search; `None` when the vetter knows the keyword is
    /// absent.
    pub fn server_search(&mut self, keyword: &[u8]) -> Result<Option<SearchOutcome>, ProtocolError> {
        let Some(token) = self.vetter.issue_search(keyword) else {
            return Ok(None);
        };
        let out = self.server.search(&token)?;
        if let Some(t) = &mut self.transcript {
            let msg = wire::encode(&self.server.params().group, &token);
            t.push(EventKind::Search, msg, out.hits);
        }
        Ok(Some(out))
    }

    pub fn search(&mut self, keyword: &[u8]) -> Result<SearchReport, ProtocolError> {
        let Some(out) = self.server_search(keyword)? else {
            return Ok(SearchReport::empty());
        };
        let ids = self.vetter.decrypt_results(keyword, &out.rset)?;
        Ok(SearchReport { ids, iterations: out.iterations, hits: out.hits })
    }
}
