use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::crypto::{group_exp, keyed_hash, PrimeOrderGroup, Ristretto255, PERM_MODULUS_BITS};
use crate::protocol::{ChainStrategy, DeleteToken, ProtocolError, Record};
use crate::storage::KvStore;

use super::{PlainDatabase, System};

/// Shape of a randomized add/revoke/search workload.
#[derive(Debug, Clone)]
pub struct WorkloadConfig {
    pub seed: u64,
    /// Identifiers spread over the add batches.
    pub ids: usize,
    /// Size of the keyword vocabulary.
    pub vocabulary: usize,
    /// Each identifier gets between 1 and this many keywords.
    pub max_keywords_per_id: usize,
    pub adds: usize,
    pub revokes: usize,
    pub searches: usize,
    pub perm_bits: usize,
    pub strategy: ChainStrategy,
    /// Byte-scan a snapshot after every revocation.
    pub check_deletion: bool,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            seed: 1,
            ids: 500,
            vocabulary: 50,
            max_keywords_per_id: 6,
            adds: 200,
            revokes: 50,
            searches: 300,
            perm_bits: PERM_MODULUS_BITS,
            strategy: ChainStrategy::Sequential,
            check_deletion: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub step: usize,
    pub keyword: String,
    pub expected: usize,
    pub got: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub searches: usize,
    pub divergences: Vec<Divergence>,
    pub revocations: usize,
    /// Revocations after which revoked bytes were still found.
    pub deletion_violations: Vec<String>,
    /// Searches whose iteration count differed from the hit count.
    pub searches_with_skips: usize,
    /// Searches whose iteration count differed from the keyword's counter.
    pub iteration_mismatches: usize,
    pub final_iset_entries: usize,
    pub final_pairs: usize,
}

impl EquivalenceReport {
    pub fn is_clean(&self) -> bool {
        self.divergences.is_empty() && self.deletion_violations.is_empty() && self.iteration_mismatches == 0
    }
}

#[derive(Debug, Clone)]
enum Step {
    Add(Vec<Record>),
    Revoke,
    Search(String),
}

pub fn keyword_name(i: usize) -> String {
    format!("snp_rs{}:{}", 4_000_000 + i * 7919, ["AA", "AG", "GG"][i % 3])
}

pub fn id_name(i: usize) -> String {
    format!("patient-{i:05}")
}

fn plan(cfg: &WorkloadConfig, rng: &mut ChaCha20Rng) -> Vec<Step> {
    let adds = cfg.adds.max(1);
    let mut steps = Vec::with_capacity(cfg.adds + cfg.revokes + cfg.searches);
    for b in 0..adds {
        let lo = b * cfg.ids / adds;
        let hi = (b + 1) * cfg.ids / adds;
        let records = (lo..hi)
            .map(|i| {
                let k = rng.gen_range(1..=cfg.max_keywords_per_id.min(cfg.vocabulary));
                let kws = rand::seq::index::sample(rng, cfg.vocabulary, k).into_iter().map(keyword_name);
                Record::new(id_name(i), kws.map(String::into_bytes)).expect("generated records are valid")
            })
            .collect();
        steps.push(Step::Add(records));
    }
    steps.extend((0..cfg.revokes).map(|_| Step::Revoke));
    // a few searches go to keywords that were never used
    steps.extend((0..cfg.searches).map(|_| Step::Search(keyword_name(rng.gen_range(0..cfg.vocabulary + 2)))));
    // keep the first add in front so early steps have data to act on
    steps[1..].shuffle(rng);
    steps
}

/// Runs a seeded workload against both the encrypted system and the
/// plaintext oracle, comparing every search.
pub fn run_workload(cfg: &WorkloadConfig) -> Result<EquivalenceReport, ProtocolError> {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let steps = plan(cfg, &mut rng);
    let mut sys = System::<Ristretto255>::new(rng.gen(), cfg.perm_bits)?.with_strategy(cfg.strategy);
    let mut oracle = PlainDatabase::new();
    let mut report = EquivalenceReport::default();
    let mut added: Vec<Vec<u8>> = Vec::new();

    for (step, op) in steps.into_iter().enumerate() {
        match op {
            Step::Add(records) => {
                sys.add(&records)?;
                oracle.add(&records);
                added.extend(records.iter().map(|r| r.id.clone()));
            }
            Step::Revoke => {
                // with nothing live, revoke an earlier identifier again (a no-op)
                let live: Vec<Vec<u8>> = oracle.ids().cloned().collect();
                let pool = if live.is_empty() { &added } else { &live };
                let Some(id) = pool.choose(&mut rng).cloned() else { continue };
                let token = sys.trustee.issue_delete(&id);
                let needles = if cfg.check_deletion { deletion_needles(&sys, &token) } else { Vec::new() };
                sys.revoke_with(&token)?;
                oracle.revoke(&id);
                report.revocations += 1;
                if cfg.check_deletion {
                    let snap = sys.server.store().export();
                    let left = needles.iter().filter(|n| memchr::memmem::find(&snap, n).is_some()).count();
                    if left > 0 {
                        report
                            .deletion_violations
                            .push(format!("step {step}: {left} byte patterns of {} survive", String::from_utf8_lossy(&id)));
                    }
                }
            }
            Step::Search(w) => {
                let expected = oracle.search(w.as_bytes());
                let counter = sys.vetter.wmap().get(w.as_bytes()).map_or(0, |s| s.c);
                let got = sys.search(w.as_bytes())?;
                report.searches += 1;
                if got.iterations != got.hits {
                    report.searches_with_skips += 1;
                }
                if got.iterations != counter {
                    report.iteration_mismatches += 1;
                }
                if got.ids != expected {
                    report.divergences.push(Divergence {
                        step,
                        keyword: w,
                        expected: expected.len(),
                        got: got.ids.len(),
                    });
                }
            }
        }
    }
    report.final_iset_entries = sys.server.iset_len();
    report.final_pairs = oracle.pair_count();
    Ok(report)
}

/// Byte patterns a key-holding harness expects to vanish after deleting the
/// row behind `token`: the row key, each delta and each derived label.
pub fn deletion_needles<G: PrimeOrderGroup, S: KvStore>(sys: &System<G, S>, token: &DeleteToken<G>) -> Vec<Vec<u8>> {
    let params = sys.server.params();
    let group = &params.group;
    let mut out = vec![token.r_id.to_vec()];
    for d in sys.server.fset_row(&token.r_id).unwrap_or_default() {
        out.push(d.clone());
        if let Some(delta) = group.decode_element(d) {
            out.push(keyed_hash(group, &params.k_h, &group_exp(group, &delta, &token.tag_id)).to_vec());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> WorkloadConfig {
        WorkloadConfig {
            seed,
            ids: 60,
            vocabulary: 12,
            max_keywords_per_id: 4,
            adds: 20,
            revokes: 8,
            searches: 40,
            perm_bits: 512,
            ..WorkloadConfig::default()
        }
    }

    #[test]
    fn small_workloads_match_oracle() {
        for seed in 1..=3 {
            let r = run_workload(&small(seed)).unwrap();
            assert!(r.is_clean(), "{r:?}");
            assert_eq!(r.searches, 40);
            assert!(r.revocations > 0);
        }
    }

    #[test]
    fn without_revocations_iterations_equal_hits() {
        let r = run_workload(&WorkloadConfig { revokes: 0, ..small(4) }).unwrap();
        assert!(r.is_clean());
        assert_eq!(r.searches_with_skips, 0);
        assert_eq!(r.final_iset_entries, r.final_pairs);
    }

    #[test]
    fn revoking_everything_empties_the_index() {
        let mut sys = System::<Ristretto255>::new(9, 512).unwrap();
        let cfg = small(9);
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let mut oracle = PlainDatabase::new();
        for step in plan(&cfg, &mut rng) {
            if let Step::Add(r) = step {
                sys.add(&r).unwrap();
                oracle.add(&r);
            }
        }
        let ids: Vec<_> = oracle.ids().cloned().collect();
        for id in ids {
            sys.revoke(&id).unwrap();
        }
        assert_eq!(sys.server.iset_len(), 0);
        assert_eq!(sys.server.fset_rows(), 0);
        for i in 0..cfg.vocabulary {
            assert!(sys.search(keyword_name(i).as_bytes()).unwrap().ids.is_empty());
        }
    }

    #[test]
    fn jump_strategy_is_equally_correct() {
        let r = run_workload(&WorkloadConfig { strategy: ChainStrategy::Jump, ..small(5) }).unwrap();
        assert!(r.is_clean(), "{r:?}");
    }
}
