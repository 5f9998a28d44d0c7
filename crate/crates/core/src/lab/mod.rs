//! Verification tooling: plaintext oracle, seeded workloads, primitive
//! counting, benchmarks, decisional-problem instances and the server-view
//! transcript audit.

pub mod bench;
mod counting;
pub mod dace;
mod oracle;
mod system;
pub mod transcript;
pub mod workload;

pub use counting::{count_operation, expected_cost, CostedOp, OperationCost};
pub use dace::{dace_verify_real, DAceGenerator, DAceInstance};
pub use oracle::PlainDatabase;
pub use system::{SearchReport, System};
pub use transcript::{audit_transcript, AuditReport, EventKind, Transcript, TranscriptEvent};
pub use workload::{run_workload, EquivalenceReport, WorkloadConfig};
