//! Per-thread primitive-call counters.
//!
//! Every primitive wrapper in [`crate::crypto`] bumps one of these counters, so
//! the cost of a protocol step can be measured by resetting, running the step
//! and taking a snapshot. Counters are thread-local: a measurement only sees
//! work done on the measuring thread.

use std::cell::Cell;
use std::ops::{Add, Sub};

/// Counts of primitive invocations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct OpCounters {
    /// `F` evaluations (AES-CMAC).
    pub prf_calls: u64,
    /// `F_p` evaluations (HMAC-SHA512 reduced into the scalar field).
    pub scalar_prf_calls: u64,
    pub group_exps: u64,
    pub perm_inverses: u64,
    pub perm_forwards: u64,
    /// Keyed hash `H` evaluations.
    pub hashes: u64,
    pub encryptions: u64,
    pub decryptions: u64,
}

impl OpCounters {
    /// Total PRF evaluations of either kind.
    pub fn all_prf_calls(&self) -> u64 {
        self.prf_calls + self.scalar_prf_calls
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::default()
    }
}

impl Add for OpCounters {
    type Output = OpCounters;

    fn add(self, o: OpCounters) -> OpCounters {
        OpCounters {
            prf_calls: self.prf_calls + o.prf_calls,
            scalar_prf_calls: self.scalar_prf_calls + o.scalar_prf_calls,
            group_exps: self.group_exps + o.group_exps,
            perm_inverses: self.perm_inverses + o.perm_inverses,
            perm_forwards: self.perm_forwards + o.perm_forwards,
            hashes: self.hashes + o.hashes,
            encryptions: self.encryptions + o.encryptions,
            decryptions: self.decryptions + o.decryptions,
        }
    }
}

impl Sub for OpCounters {
    type Output = OpCounters;

    fn sub(self, o: OpCounters) -> OpCounters {
        OpCounters {
            prf_calls: self.prf_calls - o.prf_calls,
            scalar_prf_calls: self.scalar_prf_calls - o.scalar_prf_calls,
            group_exps: self.group_exps - o.group_exps,
            perm_inverses: self.perm_inverses - o.perm_inverses,
            perm_forwards: self.perm_forwards - o.perm_forwards,
            hashes: self.hashes - o.hashes,
            encryptions: self.encryptions - o.encryptions,
            decryptions: self.decryptions - o.decryptions,
        }
    }
}

#[derive(Clone, Copy)]
pub(crate) enum Op {
    Prf,
    ScalarPrf,
    Exp,
    PermInverse,
    PermForward,
    Hash,
    Encrypt,
    Decrypt,
}

thread_local! {
    static COUNTERS: Cell<OpCounters> = Cell::new(OpCounters::default());
}

pub(crate) fn bump(op: Op) {
    bump_by(op, 1);
}

pub(crate) fn bump_by(op: Op, n: u64) {
    COUNTERS.with(|c| {
        let mut v = c.get();
        match op {
            Op::Prf => v.prf_calls += n,
            Op::ScalarPrf => v.scalar_prf_calls += n,
            Op::Exp => v.group_exps += n,
            Op::PermInverse => v.perm_inverses += n,
            Op::PermForward => v.perm_forwards += n,
            Op::Hash => v.hashes += n,
            Op::Encrypt => v.encryptions += n,
            Op::Decrypt => v.decryptions += n,
        }
        c.set(v);
    });
}

/// Current counter values on this thread.
pub fn snapshot() -> OpCounters {
    COUNTERS.with(|c| c.get())
}

pub fn reset() {
    COUNTERS.with(|c| c.set(OpCounters::default()));
}

/// Runs `f` and returns its result together with the primitive calls it made.
pub fn measure<R>(f: impl FnOnce() -> R) -> (R, OpCounters) {
    let before = snapshot();
    let out = f();
    (out, snapshot() - before)
}
