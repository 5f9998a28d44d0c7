//! Framed binary encodings of every message that crosses between roles.
//!
//! ```text
//! "ACE1" | type:u8 | body_len:u32 | body | sha256(magic..body):32
//! ```
//!
//! Integers are big-endian. Scalars take 32 bytes and permutation values
//! 256 bytes. Group elements use the group's fixed width.

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::crypto::{PermDomainValue, PrimeOrderGroup, Scalar, HASH_OUTPUT_LEN, PERM_DOMAIN_WIDTH, PRF_OUTPUT_LEN, SCALAR_WIDTH};
use crate::protocol::{AddBatch, DeleteToken, DeletionReport, KeywordState, RSet, SearchToken, WDelta};

pub const MAGIC: &[u8; 4] = b"ACE1";
pub const CHECKSUM_LEN: usize = 32;
/// Bytes a frame adds around its body.
pub const FRAME_OVERHEAD: usize = 4 + 1 + 4 + CHECKSUM_LEN;
/// Body length of an encoded [`DeleteToken`].
pub const DELETE_TOKEN_BODY_LEN: usize = SCALAR_WIDTH + PRF_OUTPUT_LEN;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("message truncated")]
    Truncated,
    #[error("bad magic")]
    BadMagic,
    #[error("unknown message type {0:#04x}")]
    UnknownType(u8),
    #[error("expected {expected:?}, found {found:?}")]
    WrongType { expected: MessageType, found: MessageType },
    #[error("checksum mismatch")]
    Checksum,
    #[error("length field disagrees with frame size")]
    Length,
    #[error("invalid body: {0}")]
    Invalid(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageType {
    AddBatch = 0x01,
    DeleteToken = 0x02,
    SearchToken = 0x03,
    RSet = 0x04,
    WDelta = 0x05,
    DeletionReport = 0x06,
}

impl MessageType {
    pub fn from_byte(b: u8) -> Result<Self, WireError> {
        Ok(match b {
            0x01 => MessageType::AddBatch,
            0x02 => MessageType::DeleteToken,
            0x03 => MessageType::SearchToken,
            0x04 => MessageType::RSet,
            0x05 => MessageType::WDelta,
            0x06 => MessageType::DeletionReport,
            other => return Err(WireError::UnknownType(other)),
        })
    }
}

pub fn frame(ty: MessageType, body: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(body.len() + FRAME_OVERHEAD);
    out.extend_from_slice(MAGIC);
    out.push(ty as u8);
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(body);
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

/// Checks framing and checksum; returns the type and body.
pub fn unframe(bytes: &[u8]) -> Result<(MessageType, &[u8]), WireError> {
    if bytes.len() < FRAME_OVERHEAD {
        return Err(WireError::Truncated);
    }
    let (covered, checksum) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    if Sha256::digest(covered).as_slice() != checksum {
        return Err(WireError::Checksum);
    }
    if &covered[..4] != MAGIC {
        return Err(WireError::BadMagic);
    }
    let ty = MessageType::from_byte(covered[4])?;
    let len = u32::from_be_bytes(covered[5..9].try_into().unwrap()) as usize;
    if len != covered.len() - 9 {
        return Err(WireError::Length);
    }
    Ok((ty, &covered[9..]))
}

/// A message with a wire encoding. Decoding needs the group to parse
/// elements and scalars.
pub trait WireCodec<G: PrimeOrderGroup>: Sized {
    const TYPE: MessageType;
    fn encode_body(&self, group: &G, out: &mut Vec<u8>);
    fn decode_body(group: &G, body: &mut Body<'_>) -> Result<Self, WireError>;
}

pub fn encode<G: PrimeOrderGroup, M: WireCodec<G>>(group: &G, msg: &M) -> Vec<u8> {
    let mut body = Vec::new();
    msg.encode_body(group, &mut body);
    frame(M::TYPE, &body)
}

pub fn decode<G: PrimeOrderGroup, M: WireCodec<G>>(group: &G, bytes: &[u8]) -> Result<M, WireError> {
    let (ty, body) = unframe(bytes)?;
    if ty != M::TYPE {
        return Err(WireError::WrongType { expected: M::TYPE, found: ty });
    }
    let mut r = Body { buf: body };
    let msg = M::decode_body(group, &mut r)?;
    if !r.buf.is_empty() {
        return Err(WireError::Invalid("trailing bytes"));
    }
    Ok(msg)
}

/// Cursor over a message body.
pub struct Body<'a> {
    buf: &'a [u8],
}

impl<'a> Body<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.buf.len() < n {
            return Err(WireError::Truncated);
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], WireError> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_be_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64, WireError> {
        Ok(u64::from_be_bytes(self.array()?))
    }

    fn bytes(&mut self) -> Result<Vec<u8>, WireError> {
        let n = self.u32()? as usize;
        Ok(self.take(n)?.to_vec())
    }

    /// Element count bounded by what the remaining bytes could hold.
    fn count(&mut self, min_item: usize) -> Result<usize, WireError> {
        let n = self.u32()? as usize;
        if n.saturating_mul(min_item) > self.buf.len() {
            return Err(WireError::Truncated);
        }
        Ok(n)
    }
}

fn put_bytes(out: &mut Vec<u8>, b: &[u8]) {
    out.extend_from_slice(&(b.len() as u32).to_be_bytes());
    out.extend_from_slice(b);
}

fn put_st(out: &mut Vec<u8>, st: &PermDomainValue) {
    out.extend_from_slice(&st.to_bytes(PERM_DOMAIN_WIDTH));
}

fn take_st(r: &mut Body<'_>) -> Result<PermDomainValue, WireError> {
    Ok(PermDomainValue::from_bytes(r.take(PERM_DOMAIN_WIDTH)?))
}

impl<G: PrimeOrderGroup> WireCodec<G> for DeleteToken<G> {
    const TYPE: MessageType = MessageType::DeleteToken;

    fn encode_body(&self, group: &G, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.tag_id.to_bytes(group));
        out.extend_from_slice(&self.r_id);
    }

    fn decode_body(group: &G, r: &mut Body<'_>) -> Result<Self, WireError> {
        let tag_id = Scalar::from_bytes(group, r.take(SCALAR_WIDTH)?).map_err(|_| WireError::Invalid("scalar"))?;
        Ok(DeleteToken { tag_id, r_id: r.array()? })
    }
}

impl<G: PrimeOrderGroup> WireCodec<G> for SearchToken<G> {
    const TYPE: MessageType = MessageType::SearchToken;

    fn encode_body(&self, group: &G, out: &mut Vec<u8>) {
        out.extend_from_slice(&group.encode_element(&self.tk));
        put_st(out, &self.st);
        out.extend_from_slice(&self.c.to_be_bytes());
    }

    fn decode_body(group: &G, r: &mut Body<'_>) -> Result<Self, WireError> {
        let tk = group.decode_element(r.take(group.element_width())?).ok_or(WireError::Invalid("group element"))?;
        let st = take_st(r)?;
        let c = r.u64()?;
        if c == 0 {
            return Err(WireError::Invalid("zero counter"));
        }
        Ok(SearchToken { tk, st, c })
    }
}

impl<G: PrimeOrderGroup> WireCodec<G> for AddBatch {
    const TYPE: MessageType = MessageType::AddBatch;

    fn encode_body(&self, _group: &G, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.iset.len() as u32).to_be_bytes());
        for (label, ct) in &self.iset {
            out.extend_from_slice(label);
            put_bytes(out, ct);
        }
        out.extend_from_slice(&(self.fset.len() as u32).to_be_bytes());
        for (r_id, deltas) in &self.fset {
            out.extend_from_slice(r_id);
            out.extend_from_slice(&(deltas.len() as u32).to_be_bytes());
            for d in deltas {
                put_bytes(out, d);
            }
        }
    }

    fn decode_body(_group: &G, r: &mut Body<'_>) -> Result<Self, WireError> {
        let n = r.count(HASH_OUTPUT_LEN + 4)?;
        let mut iset = Vec::with_capacity(n);
        for _ in 0..n {
            iset.push((r.array()?, r.bytes()?));
        }
        let n = r.count(PRF_OUTPUT_LEN + 4)?;
        let mut fset = Vec::with_capacity(n);
        for _ in 0..n {
            let r_id = r.array()?;
            let k = r.count(4)?;
            let deltas = (0..k).map(|_| r.bytes()).collect::<Result<_, _>>()?;
            fset.push((r_id, deltas));
        }
        Ok(AddBatch { iset, fset })
    }
}

impl<G: PrimeOrderGroup> WireCodec<G> for RSet {
    const TYPE: MessageType = MessageType::RSet;

    fn encode_body(&self, _group: &G, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.0.len() as u32).to_be_bytes());
        for ct in &self.0 {
            put_bytes(out, ct);
        }
    }

    fn decode_body(_group: &G, r: &mut Body<'_>) -> Result<Self, WireError> {
        let n = r.count(4)?;
        Ok(RSet((0..n).map(|_| r.bytes()).collect::<Result<_, _>>()?))
    }
}

impl<G: PrimeOrderGroup> WireCodec<G> for WDelta {
    const TYPE: MessageType = MessageType::WDelta;

    fn encode_body(&self, _group: &G, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.seq.to_be_bytes());
        out.extend_from_slice(&(self.entries.len() as u32).to_be_bytes());
        for (w, s) in &self.entries {
            put_bytes(out, w);
            put_st(out, &s.st);
            out.extend_from_slice(&s.c.to_be_bytes());
        }
    }

    fn decode_body(_group: &G, r: &mut Body<'_>) -> Result<Self, WireError> {
        let seq = r.u64()?;
        let n = r.count(4 + PERM_DOMAIN_WIDTH + 8)?;
        let mut entries = Vec::with_capacity(n);
        for _ in 0..n {
            let w = r.bytes()?;
            let st = take_st(r)?;
            let c = r.u64()?;
            if c == 0 {
                return Err(WireError::Invalid("zero counter"));
            }
            entries.push((w, KeywordState { st, c }));
        }
        Ok(WDelta { seq, entries })
    }
}

impl<G: PrimeOrderGroup> WireCodec<G> for DeletionReport {
    const TYPE: MessageType = MessageType::DeletionReport;

    fn encode_body(&self, _group: &G, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.removed_count.to_be_bytes());
        out.push(self.row_removed as u8);
    }

    fn decode_body(_group: &G, r: &mut Body<'_>) -> Result<Self, WireError> {
        let removed_count = r.u64()?;
        let row_removed = match r.u8()? {
            0 => false,
            1 => true,
            _ => return Err(WireError::Invalid("flag")),
        };
        Ok(DeletionReport { removed_count, row_removed })
    }
}
