use std::collections::BTreeMap;

use crate::crypto::{PermDomainValue, PermPublicKey};
use crate::storage::{KvStore, Mutation, Namespace, Value};

use super::ProtocolError;

/// Current chain head of one keyword.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordState {
    pub st: PermDomainValue,
    /// Number of pairs ever added for the keyword; never decremented.
    pub c: u64,
}

impl KeywordState {
    fn encode(&self, width: usize) -> Vec<u8> {
        let mut out = self.st.to_bytes(width);
        out.extend_from_slice(&self.c.to_be_bytes());
        out
    }

    fn decode(bytes: &[u8], pk: &PermPublicKey) -> Result<Self, ProtocolError> {
        let width = pk.domain_width();
        if bytes.len() != width + 8 {
            return Err(ProtocolError::MissingState("keyword state has the wrong length"));
        }
        let st = PermDomainValue::from_bytes(&bytes[..width]);
        pk.check(&st)?;
        let c = u64::from_be_bytes(bytes[width..].try_into().unwrap());
        if c == 0 {
            return Err(ProtocolError::MissingState("keyword state with zero counter"));
        }
        Ok(KeywordState { st, c })
    }
}

/// Keyword to chain head, shared by trustee and vetter.
pub type WMap = BTreeMap<Vec<u8>, KeywordState>;

/// Keyword states changed by one add batch, shipped from trustee to vetter.
///
/// `seq` numbers nonempty deltas from 1; an empty delta carries the
/// trustee's current sequence number and is always accepted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WDelta {
    pub seq: u64,
    pub entries: Vec<(Vec<u8>, KeywordState)>,
}

impl WDelta {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

const SEQ_KEY: &[u8] = b"seq";

pub(crate) fn wmap_mutations(entries: &[(Vec<u8>, KeywordState)], seq: u64, width: usize) -> Vec<Mutation> {
    let mut out: Vec<Mutation> = entries
        .iter()
        .map(|(w, s)| Mutation::Put { ns: Namespace::Wmap, key: w.clone(), value: Value::Bytes(s.encode(width)) })
        .collect();
    out.push(super::keys::put_key(SEQ_KEY, seq.to_be_bytes().to_vec()));
    out
}

pub(crate) fn load_wmap(store: &impl KvStore, pk: &PermPublicKey) -> Result<(WMap, u64), ProtocolError> {
    let mut w = WMap::new();
    for (k, v) in store.tables().iter(Namespace::Wmap) {
        let bytes = v.as_bytes().ok_or(ProtocolError::MissingState("keyword state"))?;
        w.insert(k.clone(), KeywordState::decode(bytes, pk)?);
    }
    let seq = super::keys::read_key(store, SEQ_KEY)?;
    let seq = u64::from_be_bytes(seq.try_into().map_err(|_| ProtocolError::MissingState("seq"))?);
    Ok((w, seq))
}
