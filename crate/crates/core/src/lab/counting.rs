use crate::crypto::{counters, OpCounters, Ristretto255};
use crate::protocol::{ProtocolError, Record};

use super::System;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostedOp {
    /// Add one identifier carrying `x` keywords, all new.
    Add { x: usize },
    /// Revoke one identifier carrying `x` keywords.
    Delete { x: usize },
    /// Search a keyword matched by `alpha` live identifiers.
    Search { alpha: usize },
}

/// Primitive counts split by who does the work.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OperationCost {
    /// Trustee for adds and deletes, vetter token issuance for searches.
    pub issuer: OpCounters,
    pub server: OpCounters,
    /// Vetter work after the server answers (sync or decryption).
    pub retrieval: OpCounters,
}

/// Runs one operation on a fresh system and counts primitive calls.
/// Sequential chains are used so the counts follow the per-pair algorithm.
pub fn count_operation(op: CostedOp, perm_bits: usize) -> Result<OperationCost, ProtocolError> {
    let mut sys = System::<Ristretto255>::new(0x5eed, perm_bits)?;
    let keywords = |n: usize| (0..n).map(|i| format!("kw{i}").into_bytes()).collect::<Vec<_>>();
    match op {
        CostedOp::Add { x } => {
            let record = Record::new("subject", keywords(x))?;
            let (added, issuer) = counters::measure(|| sys.trustee.add_batch(&[record], &mut sys.rng));
            let (batch, delta) = added?;
            let (r, server) = counters::measure(|| sys.server.apply_add(&batch));
            r?;
            let (r, retrieval) = counters::measure(|| sys.vetter.sync(&delta));
            r?;
            Ok(OperationCost { issuer, server, retrieval })
        }
        CostedOp::Delete { x } => {
            sys.add(&[Record::new("subject", keywords(x))?])?;
            let (token, issuer) = counters::measure(|| sys.trustee.issue_delete(b"subject"));
            let (r, server) = counters::measure(|| sys.server.apply_delete(&token));
            r?;
            Ok(OperationCost { issuer, server, retrieval: OpCounters::default() })
        }
        CostedOp::Search { alpha } => {
            let records = (0..alpha)
                .map(|i| Record::new(format!("subject{i}"), [b"target".to_vec()]))
                .collect::<Result<Vec<_>, _>>()?;
            sys.add(&records)?;
            let (token, issuer) = counters::measure(|| sys.vetter.issue_search(b"target"));
            let Some(token) = token else {
                return Ok(OperationCost::default());
            };
            let (out, server) = counters::measure(|| sys.server.search(&token));
            let out = out?;
            let (r, retrieval) = counters::measure(|| sys.vetter.decrypt_results(b"target", &out.rset));
            r?;
            Ok(OperationCost { issuer, server, retrieval })
        }
    }
}

/// Counts derived from the per-pair algorithm.
pub fn expected_cost(op: CostedOp) -> OperationCost {
    let mut cost = OperationCost::default();
    match op {
        CostedOp::Add { x } => {
            let x = x as u64;
            // K_w and tag_w per keyword, r_ID and tag_ID once for the identifier
            cost.issuer.prf_calls = x + 1;
            cost.issuer.scalar_prf_calls = x + 1;
            cost.issuer.perm_inverses = x;
            cost.issuer.group_exps = 2 * x;
            cost.issuer.hashes = x;
            cost.issuer.encryptions = x;
        }
        CostedOp::Delete { x } => {
            cost.issuer.prf_calls = 1;
            cost.issuer.scalar_prf_calls = 1;
            cost.server.group_exps = x as u64;
            cost.server.hashes = x as u64;
        }
        CostedOp::Search { alpha } => {
            let a = alpha as u64;
            cost.issuer.scalar_prf_calls = 1;
            cost.issuer.group_exps = 1;
            cost.server.group_exps = a;
            cost.server.hashes = a;
            cost.server.perm_forwards = a;
            cost.retrieval.prf_calls = 1;
            cost.retrieval.decryptions = a;
        }
    }
    cost
}
