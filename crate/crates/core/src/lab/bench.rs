//! Desk-scale timing and size scenarios: batch addition, revocation,
//! search by result count, and storage growth.

use std::io::Write;
use std::time::{Duration, Instant};

use crate::crypto::{Ristretto255, PERM_MODULUS_BITS};
use crate::dataset::synthetic_dataset;
use crate::protocol::{ChainStrategy, ProtocolError, Record};
use crate::storage::{KvStore, MemoryStore, StorageMetrics};
use crate::wire;

use super::System;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Add,
    Revoke,
    Search,
    Storage,
    All,
}

impl std::str::FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "add" => Scenario::Add,
            "revoke" => Scenario::Revoke,
            "search" => Scenario::Search,
            "storage" => Scenario::Storage,
            "all" => Scenario::All,
            other => return Err(format!("unknown scenario {other:?} (add, revoke, search, storage, all)")),
        })
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub seed: u64,
    /// Small grids for smoke runs.
    pub quick: bool,
    pub perm_bits: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { seed: 1, quick: false, perm_bits: PERM_MODULUS_BITS }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub scenario: String,
    pub param: u64,
    pub repetitions: u32,
    pub mean_ns: u64,
    pub p95_ns: u64,
    pub bytes: u64,
}

impl BenchRow {
    fn timed(scenario: &str, param: u64, samples: &[Duration], bytes: u64) -> Self {
        let mut ns: Vec<u64> = samples.iter().map(|d| d.as_nanos() as u64).collect();
        ns.sort_unstable();
        let mean = ns.iter().sum::<u64>() / ns.len().max(1) as u64;
        let p95 = ns[((ns.len() * 95).div_ceil(100)).saturating_sub(1).min(ns.len() - 1)];
        BenchRow { scenario: scenario.into(), param, repetitions: ns.len() as u32, mean_ns: mean, p95_ns: p95, bytes }
    }
}

pub fn run_scenario(scenario: Scenario, cfg: &BenchConfig) -> Result<Vec<BenchRow>, ProtocolError> {
    match scenario {
        Scenario::Add => bench_add(cfg),
        Scenario::Revoke => bench_revoke(cfg),
        Scenario::Search => bench_search(cfg),
        Scenario::Storage => bench_storage(cfg),
        Scenario::All => {
            let mut rows = bench_add(cfg)?;
            rows.extend(bench_revoke(cfg)?);
            rows.extend(bench_search(cfg)?);
            rows.extend(bench_storage(cfg)?);
            Ok(rows)
        }
    }
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scenario", "param", "repetitions", "mean_ns", "p95_ns", "bytes"])?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.param.to_string(),
            r.repetitions.to_string(),
            r.mean_ns.to_string(),
            r.p95_ns.to_string(),
            r.bytes.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn keywords(prefix: &str, n: usize) -> Vec<Vec<u8>> {
    (0..n).map(|i| format!("{prefix}:{i}").into_bytes()).collect()
}

fn bench_add(cfg: &BenchConfig) -> Result<Vec<BenchRow>, ProtocolError> {
    let grid: Vec<usize> = if cfg.quick { vec![10, 50, 100] } else { (1..=10).map(|i| i * 100).collect() };
    let reps = 3;
    let mut rows = Vec::new();
    for x in grid {
        let mut sys = System::<Ristretto255>::new(cfg.seed ^ x as u64, cfg.perm_bits)?;
        let mut samples = Vec::new();
        let mut bytes = 0;
        for rep in 0..reps {
            let recs = [
                Record::new(format!("a{rep}"), keywords("snp", x))?,
                Record::new(format!("b{rep}"), keywords("snp", x))?,
            ];
            let start = Instant::now();
            let (batch, delta) = sys.trustee.add_batch(&recs, &mut sys.rng)?;
            sys.server.apply_add(&batch)?;
            samples.push(start.elapsed());
            sys.vetter.sync(&delta)?;
            bytes = wire::encode(sys.group(), &batch).len() as u64;
        }
        rows.push(BenchRow::timed("add_2_ids", x as u64, &samples, bytes));
    }
    Ok(rows)
}

fn bench_revoke(cfg: &BenchConfig) -> Result<Vec<BenchRow>, ProtocolError> {
    let reps = if cfg.quick { 2 } else { 5 };
    let mut rows = Vec::new();
    for x in [1usize, 10, 100, 1000] {
        let mut sys = System::<Ristretto255>::new(cfg.seed ^ x as u64, cfg.perm_bits)?.with_strategy(ChainStrategy::Jump);
        let mut samples = Vec::new();
        let mut bytes = 0;
        for _ in 0..reps {
            sys.add(&[Record::new("subject", keywords("snp", x))?])?;
            let start = Instant::now();
            let token = sys.trustee.issue_delete(b"subject");
            let report = sys.server.apply_delete(&token)?;
            samples.push(start.elapsed());
            assert_eq!(report.removed_count, x as u64);
            bytes = wire::encode(sys.group(), &token).len() as u64;
        }
        rows.push(BenchRow::timed("revoke", x as u64, &samples, bytes));
    }
    Ok(rows)
}

/// System where keyword `target` is held by `alpha` identifiers.
pub fn search_fixture(alpha: usize, seed: u64, perm_bits: usize) -> Result<System<Ristretto255>, ProtocolError> {
    let mut sys = System::<Ristretto255>::new(seed, perm_bits)?.with_strategy(ChainStrategy::Jump);
    let records =
        (0..alpha).map(|i| Record::new(format!("subject{i}"), [b"target".to_vec()])).collect::<Result<Vec<_>, _>>()?;
    for chunk in records.chunks(500) {
        sys.add(chunk)?;
    }
    Ok(sys)
}

/// Token issuance, server search and decryption for `target`.
pub fn timed_search(sys: &mut System<Ristretto255>) -> Result<(Duration, usize, u64), ProtocolError> {
    let start = Instant::now();
    let token = sys.vetter.issue_search(b"target").ok_or(ProtocolError::MissingState("target keyword"))?;
    let out = sys.server.search(&token)?;
    let ids = sys.vetter.decrypt_results(b"target", &out.rset)?;
    let elapsed = start.elapsed();
    Ok((elapsed, ids.len(), wire::encode(sys.group(), &out.rset).len() as u64))
}

fn bench_search(cfg: &BenchConfig) -> Result<Vec<BenchRow>, ProtocolError> {
    let grid: &[usize] = if cfg.quick { &[10, 100, 500] } else { &[10, 100, 500, 1000, 2000] };
    let reps = if cfg.quick { 2 } else { 5 };
    let mut rows = Vec::new();
    for &alpha in grid {
        let mut sys = search_fixture(alpha, cfg.seed ^ alpha as u64, cfg.perm_bits)?;
        let mut samples = Vec::new();
        let mut bytes = 0;
        for _ in 0..reps {
            let (t, n, b) = timed_search(&mut sys)?;
            assert_eq!(n, alpha);
            samples.push(t);
            bytes = b;
        }
        rows.push(BenchRow::timed("search", alpha as u64, &samples, bytes));
    }
    Ok(rows)
}

/// Builds `r` identifiers with `x` keywords each in a single batch and
/// reports the server and vetter footprint together with the build time.
pub fn storage_point(r: usize, x: usize, seed: u64, perm_bits: usize) -> Result<(StorageMetrics, u64, Duration), ProtocolError> {
    let mut sys = System::<Ristretto255>::new(seed, perm_bits)?.with_strategy(ChainStrategy::Jump);
    let records =
        synthetic_dataset(r, x, seed).iter().map(|g| g.to_record()).collect::<Result<Vec<_>, _>>()?;
    // one batch: every chain is fresh, so no secret-key work is needed
    let start = Instant::now();
    sys.add(&records)?;
    let elapsed = start.elapsed();
    let mut vetter_store = MemoryStore::new();
    sys.vetter.save(&mut vetter_store)?;
    Ok((sys.server.store().metrics(), vetter_store.metrics().wmap_bytes, elapsed))
}

fn bench_storage(cfg: &BenchConfig) -> Result<Vec<BenchRow>, ProtocolError> {
    let (r, grid): (usize, &[usize]) = if cfg.quick { (50, &[20, 40]) } else { (1000, &[500, 1000]) };
    let mut rows = Vec::new();
    for &x in grid {
        let (m, w_bytes, t) = storage_point(r, x, cfg.seed, cfg.perm_bits)?;
        let one = |name: &str, bytes: u64| BenchRow::timed(name, x as u64, &[t], bytes);
        rows.push(one("storage_egdb", m.egdb_bytes()));
        rows.push(one("storage_fset", m.fset_bytes));
        rows.push(one("storage_iset", m.iset_bytes));
        rows.push(one("storage_vetter_w", w_bytes));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> BenchConfig {
        BenchConfig { seed: 3, quick: true, perm_bits: 512 }
    }

    #[test]
    fn revoke_token_bytes_are_constant() {
        let rows = run_scenario(Scenario::Revoke, &quick()).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.bytes == rows[0].bytes));
        assert_eq!(rows[0].bytes as usize, wire::FRAME_OVERHEAD + wire::DELETE_TOKEN_BODY_LEN);
    }

    #[test]
    fn storage_doubles_with_keywords() {
        let rows = run_scenario(Scenario::Storage, &quick()).unwrap();
        let fset: Vec<u64> = rows.iter().filter(|r| r.scenario == "storage_fset").map(|r| r.bytes).collect();
        // per row: 28 bytes of framing plus 36 per delta
        assert_eq!(fset, vec![50 * (28 + 20 * 36), 50 * (28 + 40 * 36)]);
    }

    #[test]
    fn csv_has_the_documented_columns() {
        let rows = vec![BenchRow::timed("search", 10, &[Duration::from_nanos(5), Duration::from_nanos(7)], 99)];
        let mut out = Vec::new();
        write_csv(&rows, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "scenario,param,repetitions,mean_ns,p95_ns,bytes\nsearch,10,2,6,7,99\n");
    }

    #[test]
    fn scenario_names_parse() {
        assert_eq!("all".parse::<Scenario>().unwrap(), Scenario::All);
        assert!("nope".parse::<Scenario>().is_err());
    }
}
