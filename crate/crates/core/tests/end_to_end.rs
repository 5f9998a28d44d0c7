use std::collections::{BTreeMap, BTreeSet};

use ace_core::crypto::{ModPGroup, Ristretto255};
use ace_core::dataset::ingest_reader;
use ace_core::lab::System;
use ace_core::protocol::{setup, ChainStrategy, Record, Server, Trustee, Vetter};
use ace_core::storage::{JournaledStore, KvStore};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn ids(v: &[&str]) -> BTreeSet<Vec<u8>> {
    v.iter().map(|s| s.as_bytes().to_vec()).collect()
}

fn search<S: KvStore>(vetter: &Vetter<Ristretto255>, server: &Server<Ristretto255, S>, w: &str) -> BTreeSet<Vec<u8>> {
    match vetter.issue_search(w.as_bytes()) {
        Some(token) => vetter.decrypt_results(w.as_bytes(), &server.search(&token).unwrap().rset).unwrap(),
        None => BTreeSet::new(),
    }
}

#[test]
fn journaled_roles_survive_restarts() {
    let dir = tempfile::tempdir().unwrap();
    let (tdir, vdir, sdir) = (dir.path().join("t"), dir.path().join("v"), dir.path().join("s"));
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    {
        let (trustee, vetter, params) = setup(Ristretto255::random(&mut rng), 512, &mut rng).unwrap();
        trustee.save(&mut JournaledStore::open(&tdir).unwrap()).unwrap();
        vetter.save(&mut JournaledStore::open(&vdir).unwrap()).unwrap();
        Server::create(params, JournaledStore::open(&sdir).unwrap()).unwrap();
    }

    let batches = [
        vec![Record::new("ID1", [b"w1".to_vec(), b"w2".to_vec()]).unwrap()],
        vec![Record::new("ID2", [b"w1".to_vec(), b"w3".to_vec()]).unwrap()],
        vec![Record::new("ID3", [b"w1".to_vec(), b"w3".to_vec()]).unwrap()],
    ];
    // every batch runs in a fresh "process"
    for (i, batch) in batches.iter().enumerate() {
        let mut ts = JournaledStore::open(&tdir).unwrap();
        let mut vs = JournaledStore::open(&vdir).unwrap();
        let mut trustee = Trustee::<Ristretto255>::load(&ts).unwrap();
        let mut vetter = Vetter::<Ristretto255>::load(&vs).unwrap();
        let mut server = Server::<Ristretto255, _>::open(JournaledStore::open(&sdir).unwrap()).unwrap();
        let (add, delta) = trustee.add_batch(batch, &mut rng).unwrap();
        server.apply_add(&add).unwrap();
        trustee.persist_delta(&mut ts, &delta).unwrap();
        vetter.sync(&delta).unwrap();
        vetter.persist_delta(&mut vs, &delta).unwrap();
        if i == 1 {
            ts.checkpoint().unwrap();
            server.store_mut().checkpoint().unwrap();
        }
    }

    let trustee = Trustee::<Ristretto255>::load(&JournaledStore::open(&tdir).unwrap()).unwrap();
    let vetter = Vetter::<Ristretto255>::load(&JournaledStore::open(&vdir).unwrap()).unwrap();
    assert_eq!(trustee.seq(), 3);
    assert_eq!(vetter.applied_seq(), 3);
    assert_eq!(trustee.wmap(), vetter.wmap());

    let mut server = Server::<Ristretto255, _>::open(JournaledStore::open(&sdir).unwrap()).unwrap();
    assert_eq!(search(&vetter, &server, "w1"), ids(&["ID1", "ID2", "ID3"]));
    server.apply_delete(&trustee.issue_delete(b"ID2")).unwrap();
    drop(server);

    let server = Server::<Ristretto255, _>::open(JournaledStore::open(&sdir).unwrap()).unwrap();
    assert_eq!(search(&vetter, &server, "w1"), ids(&["ID1", "ID3"]));
    assert_eq!(search(&vetter, &server, "w3"), ids(&["ID3"]));
    assert_eq!(search(&vetter, &server, "w2"), ids(&["ID1"]));
    assert_eq!(server.iset_len(), 4);
}

fn plaintext_scan(csv: &str) -> BTreeMap<String, BTreeSet<Vec<u8>>> {
    let mut index: BTreeMap<String, BTreeSet<Vec<u8>>> = BTreeMap::new();
    for rec in ingest_reader(csv.as_bytes()).unwrap() {
        for k in rec.keywords {
            index.entry(k).or_default().insert(rec.id.as_bytes().to_vec());
        }
    }
    index
}

#[test]
fn genomic_csv_matches_plaintext_scan() {
    let csv = "\
patient,snp_rs4477212,snp_rs3094315,phenotype,Gender
P001,AA,AG,Hypertension,F
P002,AG,AG,,M
P003,AA,GG,Diabetes,F
P004,GG,,Hypertension,F
";
    let expected = plaintext_scan(csv);
    assert_eq!(expected["gender:F"], ids(&["P001", "P003", "P004"]));

    let mut sys = System::<Ristretto255>::new(4, 512).unwrap();
    let records: Vec<Record> = ingest_reader(csv.as_bytes()).unwrap().iter().map(|r| r.to_record().unwrap()).collect();
    sys.add(&records[..2]).unwrap();
    sys.add(&records[2..]).unwrap();
    for (kw, want) in &expected {
        assert_eq!(&sys.search(kw.as_bytes()).unwrap().ids, want, "{kw}");
    }
    assert!(sys.search(b"phenotype:Asthma").unwrap().ids.is_empty());
}

fn csv_strategy() -> impl Strategy<Value = String> {
    let row = prop::collection::vec(prop::option::of(prop::sample::select(vec!["A", "B", "C"])), 3);
    prop::collection::vec(row, 1..12).prop_map(|rows| {
        let mut s = String::from("id,f1,f2,f3\n");
        for (i, cells) in rows.iter().enumerate() {
            // at least one keyword per row
            let cells: Vec<&str> = cells.iter().enumerate().map(|(j, c)| c.unwrap_or(if j == 0 { "Z" } else { "" })).collect();
            s.push_str(&format!("r{i},{}\n", cells.join(",")));
        }
        s
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn any_csv_matches_plaintext_scan(csv in csv_strategy(), split in 0usize..12, seed in any::<u64>()) {
        let expected = plaintext_scan(&csv);
        let records: Vec<Record> =
            ingest_reader(csv.as_bytes()).unwrap().iter().map(|r| r.to_record().unwrap()).collect();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut sys = System::with_group(ModPGroup::medium(), 512, ChaCha20Rng::seed_from_u64(seed))
            .unwrap()
            .with_strategy(if rng.gen_bool(0.5) { ChainStrategy::Jump } else { ChainStrategy::Sequential });
        let cut = split.min(records.len());
        sys.add(&records[..cut]).unwrap();
        sys.add(&records[cut..]).unwrap();
        for (kw, want) in &expected {
            prop_assert_eq!(&sys.search(kw.as_bytes()).unwrap().ids, want);
        }
    }
}
