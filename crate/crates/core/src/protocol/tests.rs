use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::*;
use crate::crypto::{counters, group_exp, keyed_hash, perm_forward, ModPGroup, PermDomainValue};
use crate::storage::{KvStore, MemoryStore, Namespace};

type G = Ristretto255;

struct Rig<G: PrimeOrderGroup> {
    trustee: Trustee<G>,
    vetter: Vetter<G>,
    server: Server<G, MemoryStore>,
    rng: ChaCha20Rng,
}

impl<G: PrimeOrderGroup> Rig<G> {
    fn with_group(group: G, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (trustee, vetter, params) = setup(group, 512, &mut rng).unwrap();
        let server = Server::create(params, MemoryStore::new()).unwrap();
        Rig { trustee, vetter, server, rng }
    }

    fn add(&mut self, records: &[Record]) {
        let (batch, delta) = self.trustee.add_batch(records, &mut self.rng).unwrap();
        self.server.apply_add(&batch).unwrap();
        self.vetter.sync(&delta).unwrap();
    }

    fn revoke(&mut self, id: &str) -> DeletionReport {
        self.server.apply_delete(&self.trustee.issue_delete(id.as_bytes())).unwrap()
    }

    fn search(&self, w: &str) -> BTreeSet<String> {
        let Some(tk) = self.vetter.issue_search(w.as_bytes()) else {
            return BTreeSet::new();
        };
        let out = self.server.search(&tk).unwrap();
        self.vetter
            .decrypt_results(w.as_bytes(), &out.rset)
            .unwrap()
            .into_iter()
            .map(|id| String::from_utf8(id).unwrap())
            .collect()
    }
}

fn rig(seed: u64) -> Rig<G> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0xabc);
    Rig::with_group(Ristretto255::random(&mut rng), seed)
}

fn rec(id: &str, kws: &[&str]) -> Record {
    Record::new(id, kws.iter().map(|k| k.as_bytes().to_vec())).unwrap()
}

fn three_records() -> Vec<Record> {
    vec![rec("ID1", &["w1", "w2"]), rec("ID2", &["w1", "w3"]), rec("ID3", &["w1", "w3"])]
}

fn set(ids: &[&str]) -> BTreeSet<String> {
    ids.iter().map(|s| s.to_string()).collect()
}

#[test]
fn golden_three_records() {
    let mut r = rig(1);
    r.add(&three_records());
    assert_eq!(r.server.fset_rows(), 3);
    assert_eq!(r.server.iset_len(), 6);
    for id in ["ID1", "ID2", "ID3"] {
        let tok = r.trustee.issue_delete(id.as_bytes());
        assert_eq!(r.server.fset_row(&tok.r_id).unwrap().len(), 2);
    }
    let w = r.trustee.wmap();
    assert_eq!((w[&b"w1".to_vec()].c, w[&b"w2".to_vec()].c, w[&b"w3".to_vec()].c), (3, 1, 2));
    assert_eq!(r.vetter.wmap(), r.trustee.wmap());
    assert_eq!(r.vetter.issue_search(b"w1").unwrap().c, 3);
    assert_eq!(r.search("w1"), set(&["ID1", "ID2", "ID3"]));
    assert_eq!(r.search("w3"), set(&["ID2", "ID3"]));

    let report = r.revoke("ID2");
    assert_eq!(report.removed_count, 2);
    assert_eq!(r.server.iset_len(), 4);
    assert_eq!(r.server.fset_rows(), 2);
    assert!(r.server.fset_row(&r.trustee.issue_delete(b"ID2").r_id).is_none());
    assert_eq!(r.search("w1"), set(&["ID1", "ID3"]));
    assert_eq!(r.search("w3"), set(&["ID3"]));

    let tk = r.vetter.issue_search(b"w1").unwrap();
    let out = r.server.search(&tk).unwrap();
    assert_eq!((out.iterations, out.hits, out.skipped()), (3, 2, 1));
}

#[test]
fn absent_keyword_needs_no_server() {
    let mut r = rig(2);
    assert!(r.vetter.issue_search(b"w1").is_none());
    r.add(&three_records());
    assert!(r.vetter.issue_search(b"w9").is_none());
}

#[test]
fn search_tokens_are_deterministic_between_adds() {
    let mut r = rig(3);
    r.add(&three_records());
    assert_eq!(r.vetter.issue_search(b"w1"), r.vetter.issue_search(b"w1"));
}

#[test]
fn empty_batch_changes_nothing() {
    let mut r = rig(4);
    r.add(&three_records());
    let before = r.trustee.wmap().clone();
    let (batch, delta) = r.trustee.add_batch(&[], &mut r.rng).unwrap();
    assert!(batch.is_empty() && delta.is_empty());
    assert_eq!(r.trustee.wmap(), &before);
    let snap = r.server.store().export();
    r.server.apply_add(&batch).unwrap();
    assert_eq!(r.server.store().export(), snap);
    r.vetter.sync(&delta).unwrap();
    assert_eq!(r.vetter.applied_seq(), 1);
}

#[test]
fn replayed_batch_is_a_duplicate_fault() {
    let mut r = rig(5);
    let (batch, _) = r.trustee.add_batch(&three_records(), &mut r.rng).unwrap();
    r.server.apply_add(&batch).unwrap();
    let snap = r.server.store().export();
    assert!(matches!(r.server.apply_add(&batch), Err(ProtocolError::DuplicateIndex)));
    assert_eq!(r.server.store().export(), snap);
}

#[test]
fn deletes_are_idempotent_and_constant_size() {
    let mut r = rig(6);
    r.add(&three_records());
    let snap = r.server.store().export();
    assert_eq!(r.revoke("nobody").removed_count, 0);
    assert_eq!(r.server.store().export(), snap);
    assert_eq!(r.revoke("ID1").removed_count, 2);
    assert_eq!(r.revoke("ID1").removed_count, 0);
    assert_eq!(r.trustee.issue_delete(b"ID1"), r.trustee.issue_delete(b"ID1"));
    assert_ne!(r.trustee.issue_delete(b"ID1").r_id, r.trustee.issue_delete(b"ID2").r_id);
}

#[test]
fn readd_after_revoke_is_found_again() {
    let mut r = rig(7);
    r.add(&three_records());
    r.revoke("ID2");
    r.add(&[rec("ID2", &["w3"])]);
    assert_eq!(r.search("w3"), set(&["ID2", "ID3"]));
    assert_eq!(r.search("w1"), set(&["ID1", "ID3"]));
    assert_eq!(r.vetter.issue_search(b"w3").unwrap().c, 3);
}

#[test]
fn duplicate_pair_is_deduplicated() {
    let mut r = rig(8);
    r.add(&[rec("ID1", &["w1"])]);
    r.add(&[rec("ID1", &["w1"])]);
    assert_eq!(r.server.iset_len(), 2);
    assert_eq!(r.search("w1"), set(&["ID1"]));
    assert_eq!(r.revoke("ID1").removed_count, 2);
    assert_eq!(r.server.iset_len(), 0);
}

#[test]
fn wrong_keyword_ciphertext_is_an_integrity_error() {
    let mut r = rig(9);
    r.add(&three_records());
    let w2 = r.server.search(&r.vetter.issue_search(b"w2").unwrap()).unwrap();
    let mut w1 = r.server.search(&r.vetter.issue_search(b"w1").unwrap()).unwrap().rset;
    w1.0.insert(1, w2.rset.0[0].clone());
    assert!(matches!(r.vetter.decrypt_results(b"w1", &w1), Err(ProtocolError::ResultIntegrity { index: 1 })));
    assert!(r.vetter.decrypt_results(b"w1", &RSet::default()).unwrap().is_empty());
}

#[test]
fn vetter_sync_enforces_order() {
    let mut r = rig(10);
    let (_, d1) = r.trustee.add_batch(&three_records(), &mut r.rng).unwrap();
    let (_, d2) = r.trustee.add_batch(&[rec("ID4", &["w1"])], &mut r.rng).unwrap();
    assert!(matches!(r.vetter.sync(&d2), Err(ProtocolError::Stale { expected: 1, got: 2 })));
    r.vetter.sync(&d1).unwrap();
    assert!(matches!(r.vetter.sync(&d1), Err(ProtocolError::Stale { .. })));
    r.vetter.sync(&d2).unwrap();
    assert_eq!(r.vetter.wmap(), r.trustee.wmap());

    let mut forged = d2.clone();
    forged.seq = 3;
    assert!(matches!(r.vetter.sync(&forged), Err(ProtocolError::CounterRegression { .. })));
}

#[test]
fn add_counts_per_pair() {
    for x in [1usize, 3, 7] {
        let mut r = rig(11);
        let kws: Vec<String> = (0..x).map(|i| format!("k{i}")).collect();
        let record = Record::new("ID", kws.iter().map(|k| k.as_bytes().to_vec())).unwrap();
        let (_, c) = counters::measure(|| r.trustee.add_batch(&[record], &mut r.rng).unwrap());
        let x = x as u64;
        assert_eq!(c.perm_inverses, x);
        assert_eq!(c.group_exps, 2 * x);
        assert_eq!(c.hashes, x);
        assert_eq!(c.encryptions, x);
        assert_eq!(c.all_prf_calls(), 2 * x + 2);
        assert_eq!(c.perm_forwards, 0);
    }
}

#[test]
fn delete_and_search_counts() {
    let mut r = rig(12);
    let kws = ["a", "b", "c"];
    r.add(&[rec("ID", &kws)]);
    let (tok, c) = counters::measure(|| r.trustee.issue_delete(b"ID"));
    assert_eq!((c.prf_calls, c.scalar_prf_calls), (1, 1));
    let (_, c) = counters::measure(|| r.server.apply_delete(&tok).unwrap());
    assert_eq!((c.group_exps, c.hashes), (3, 3));
    assert_eq!(c.all_prf_calls(), 0);

    let alpha = 5;
    let ids: Vec<Record> = (0..alpha).map(|i| rec(&format!("ID{i}"), &["s"])).collect();
    r.add(&ids);
    let (tk, c) = counters::measure(|| r.vetter.issue_search(b"s").unwrap());
    assert_eq!((c.scalar_prf_calls, c.group_exps), (1, 1));
    let (out, c) = counters::measure(|| r.server.search(&tk).unwrap());
    assert_eq!((c.hashes, c.group_exps, c.perm_forwards), (alpha, alpha, alpha));
    assert_eq!(out.iterations, alpha);
    let (_, c) = counters::measure(|| r.vetter.decrypt_results(b"s", &out.rset).unwrap());
    assert_eq!((c.prf_calls, c.decryptions), (1, alpha));
}

fn chain_origin(pk: &crate::crypto::PermPublicKey, st: &PermDomainValue, c: u64) -> PermDomainValue {
    (0..c).fold(st.clone(), |s, _| perm_forward(pk, &s).unwrap())
}

#[test]
fn chains_walk_back_to_their_origin_under_both_strategies() {
    for strategy in [ChainStrategy::Sequential, ChainStrategy::Jump] {
        let mut r = rig(13);
        r.trustee.set_strategy(strategy);
        let pk = r.server.params().pk.clone();
        let mut origins: BTreeMap<Vec<u8>, PermDomainValue> = BTreeMap::new();
        for round in 0..4 {
            let recs: Vec<Record> =
                (0..3).map(|i| rec(&format!("r{round}i{i}"), &["w1", if i % 2 == 0 { "w2" } else { "w3" }])).collect();
            let (batch, delta) = r.trustee.add_batch(&recs, &mut r.rng).unwrap();
            r.server.apply_add(&batch).unwrap();
            r.vetter.sync(&delta).unwrap();
            for (w, s) in &delta.entries {
                let origin = chain_origin(&pk, &s.st, s.c);
                assert_eq!(origins.entry(w.clone()).or_insert(origin.clone()), &origin, "{strategy:?}");
            }
        }
        assert_eq!(r.search("w1").len(), 12);
        assert_eq!(r.search("w2").len(), 8);
    }
}

#[test]
fn jump_strategy_needs_one_inverse_per_existing_keyword() {
    let mut r = rig(14);
    r.trustee.set_strategy(ChainStrategy::Jump);
    let recs: Vec<Record> = (0..10).map(|i| rec(&format!("ID{i}"), &["w"])).collect();
    let (_, c) = counters::measure(|| r.add(&recs));
    assert_eq!((c.perm_inverses, c.perm_forwards), (0, 9));
    let (_, c) = counters::measure(|| r.add(&recs[..4]));
    assert_eq!((c.perm_inverses, c.perm_forwards), (1, 3));
    assert_eq!(r.vetter.issue_search(b"w").unwrap().c, 14);
    assert_eq!(r.search("w").len(), 10);
}

#[test]
fn zero_residue_aborts_the_whole_batch() {
    // order 11 makes a zero residue likely within a few pairs
    let mut r = Rig::with_group(ModPGroup::tiny(), 15);
    let mut saw_fault = false;
    for round in 0..20 {
        let recs: Vec<Record> = (0..6).map(|i| rec(&format!("r{round}i{i}"), &["w"])).collect();
        let before = (r.trustee.wmap().clone(), r.trustee.seq());
        match r.trustee.add_batch(&recs, &mut r.rng) {
            Err(ProtocolError::Crypto(crate::crypto::CryptoError::ZeroResidue)) => {
                saw_fault = true;
                assert_eq!((r.trustee.wmap().clone(), r.trustee.seq()), before);
            }
            Err(e) => panic!("{e}"),
            Ok(_) => {}
        }
    }
    assert!(saw_fault);
}

#[test]
fn works_over_the_modp_test_group() {
    let mut r = Rig::with_group(ModPGroup::medium(), 16);
    r.add(&three_records());
    assert_eq!(r.search("w1"), set(&["ID1", "ID2", "ID3"]));
    r.revoke("ID2");
    assert_eq!(r.search("w3"), set(&["ID3"]));
}

#[test]
fn every_delta_maps_to_one_live_label() {
    let mut r = rig(17);
    r.add(&three_records());
    r.add(&[rec("ID1", &["w4"]), rec("ID4", &["w1"])]);
    let params = r.server.params().clone();
    let mut total = 0;
    for id in ["ID1", "ID2", "ID3", "ID4"] {
        let tok = r.trustee.issue_delete(id.as_bytes());
        for d in r.server.fset_row(&tok.r_id).unwrap() {
            let delta = params.group.decode_element(d).unwrap();
            let label = keyed_hash(&params.group, &params.k_h, &group_exp(&params.group, &delta, &tok.tag_id));
            assert!(r.server.store().get(Namespace::Iset, &label).is_some());
            total += 1;
        }
    }
    assert_eq!(total, r.server.iset_len());
}

#[test]
fn revoked_bytes_leave_the_snapshot() {
    let mut r = rig(18);
    r.add(&three_records());
    let params = r.server.params().clone();
    let tok = r.trustee.issue_delete(b"ID2");
    let row: Vec<Vec<u8>> = r.server.fset_row(&tok.r_id).unwrap().to_vec();
    let labels: Vec<[u8; 32]> = row
        .iter()
        .map(|d| {
            let delta = params.group.decode_element(d).unwrap();
            keyed_hash(&params.group, &params.k_h, &group_exp(&params.group, &delta, &tok.tag_id))
        })
        .collect();
    r.server.apply_delete(&tok).unwrap();
    let snap = r.server.store().export();
    let absent = |needle: &[u8]| memchr::memmem::find(&snap, needle).is_none();
    assert!(absent(&tok.r_id));
    assert!(row.iter().all(|d| absent(d)));
    assert!(labels.iter().all(|l| absent(l)));
}

#[test]
fn role_states_persist_and_server_holds_no_secrets() {
    let mut r = rig(19);
    r.add(&three_records());
    let mut ts = MemoryStore::new();
    let mut vs = MemoryStore::new();
    r.trustee.save(&mut ts).unwrap();
    r.vetter.save(&mut vs).unwrap();

    let mut t2 = Trustee::<G>::load(&ts).unwrap();
    let v2 = Vetter::<G>::load(&vs).unwrap();
    assert_eq!(t2.wmap(), r.trustee.wmap());
    assert_eq!(t2.seq(), 1);
    assert_eq!(v2.applied_seq(), 1);
    assert_eq!(t2.issue_delete(b"ID1"), r.trustee.issue_delete(b"ID1"));
    assert_eq!(v2.issue_search(b"w1"), r.vetter.issue_search(b"w1"));
    assert!(vs.get(Namespace::Keys, b"k_1").is_none());
    assert!(vs.get(Namespace::Keys, b"sk_p").is_none());

    let (batch, delta) = t2.add_batch(&[rec("ID9", &["w2"])], &mut r.rng).unwrap();
    t2.persist_delta(&mut ts, &delta).unwrap();
    assert_eq!(Trustee::<G>::load(&ts).unwrap().wmap(), t2.wmap());
    r.server.apply_add(&batch).unwrap();

    let server2 = Server::<G, _>::open(MemoryStore::from_tables(r.server.store().tables().clone())).unwrap();
    assert_eq!(server2.params(), r.server.params());

    let snap = r.server.store().export();
    let keys = r.trustee.keys();
    let (p, q) = keys.secret_key().primes();
    let secrets: Vec<Vec<u8>> = vec![
        keys.k_s.as_bytes().to_vec(),
        keys.k_1.as_bytes().to_vec(),
        keys.k_t.as_bytes().to_vec(),
        keys.k_2.as_bytes().to_vec(),
        p.to_bytes_be(),
        q.to_bytes_be(),
    ];
    for s in secrets {
        assert!(memchr::memmem::find(&snap, &s).is_none());
    }
}

#[test]
fn independent_setups_have_distinct_keys() {
    let a = rig(20);
    let b = rig(21);
    let (ka, kb) = (a.trustee.keys(), b.trustee.keys());
    assert_ne!(ka.k_s.as_bytes(), kb.k_s.as_bytes());
    assert_ne!(ka.k_1.as_bytes(), kb.k_1.as_bytes());
    assert_ne!(ka.k_t.as_bytes(), kb.k_t.as_bytes());
    assert_ne!(ka.k_2.as_bytes(), kb.k_2.as_bytes());
    assert_ne!(ka.public().k_h, kb.public().k_h);
    assert_ne!(ka.public().pk, kb.public().pk);
}

#[test]
fn invalid_records_are_rejected() {
    assert!(Record::new("", [b"w".to_vec()]).is_err());
    assert!(Record::new("ID", Vec::<Vec<u8>>::new()).is_err());
    assert!(Record::new("ID", [Vec::new()]).is_err());
    assert!(Record::new("ID", [vec![b'a'; MAX_KEYWORD_LEN + 1]]).is_err());
}

#[derive(Debug, Clone)]
enum Op {
    Add(Vec<(u8, Vec<u8>)>),
    Revoke(u8),
    Search(u8),
}

fn op() -> impl Strategy<Value = Op> {
    let record = (0u8..12, prop::collection::vec(0u8..6, 1..4));
    prop_oneof![
        3 => prop::collection::vec(record, 0..4).prop_map(Op::Add),
        1 => (0u8..12).prop_map(Op::Revoke),
        3 => (0u8..6).prop_map(Op::Search),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn matches_plaintext_oracle(ops in prop::collection::vec(op(), 1..25), seed in any::<u64>()) {
        let mut r = Rig::with_group(ModPGroup::medium(), seed);
        let mut oracle: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for op in ops {
            match op {
                Op::Add(recs) => {
                    let mut merged: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
                    for (id, kws) in recs {
                        merged.entry(format!("ID{id}")).or_default().extend(kws.iter().map(|k| format!("w{k}")));
                    }
                    let records: Vec<Record> = merged
                        .iter()
                        .map(|(id, kws)| Record::new(id.as_str(), kws.iter().map(|k| k.as_bytes().to_vec())).unwrap())
                        .collect();
                    match r.trustee.add_batch(&records, &mut r.rng) {
                        Ok((batch, delta)) => {
                            r.server.apply_add(&batch).unwrap();
                            r.vetter.sync(&delta).unwrap();
                            for (id, kws) in merged {
                                oracle.entry(id).or_default().extend(kws);
                            }
                        }
                        // about one in 2^31 pairs; skipping keeps both sides equal
                        Err(ProtocolError::Crypto(crate::crypto::CryptoError::ZeroResidue)) => {}
                        Err(e) => panic!("{e}"),
                    }
                }
                Op::Revoke(id) => {
                    let id = format!("ID{id}");
                    r.revoke(&id);
                    oracle.remove(&id);
                }
                Op::Search(w) => {
                    let w = format!("w{w}");
                    let want: BTreeSet<String> =
                        oracle.iter().filter(|(_, k)| k.contains(&w)).map(|(id, _)| id.clone()).collect();
                    prop_assert_eq!(r.search(&w), want);
                }
            }
        }
        let pairs: usize = oracle.values().map(BTreeSet::len).sum();
        prop_assert!(r.server.iset_len() >= pairs);
    }
}
