//! Browser bindings: one in-page deployment with add, search and revoke,
//! plus a JSON view of the server's FSet and ISet.

use ace_core::crypto::Ristretto255;
use ace_core::dataset::{canonical_keyword, ingest_reader};
use ace_core::lab::System;
use ace_core::protocol::{ChainStrategy, Record};
use ace_core::storage::{KvStore, Namespace};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Smaller than the production modulus so key generation stays interactive.
pub const DEMO_PERM_BITS: usize = 1024;

/// Bytes of each handle shown in the state view.
const SHOWN: usize = 8;

#[derive(Debug, Serialize)]
pub struct AddResult {
    pub records: usize,
    pub entries: usize,
}

#[derive(Debug, Serialize)]
pub struct SearchResult {
    pub keyword: String,
    pub ids: Vec<String>,
    pub iterations: u64,
    pub hits: u64,
}

#[derive(Debug, Serialize)]
pub struct FSetRow {
    pub r_id: String,
    pub deltas: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct ISetEntry {
    pub label: String,
    pub ciphertext_len: usize,
}

#[derive(Debug, Serialize)]
pub struct StateView {
    pub keywords: usize,
    pub batches: u64,
    pub fset: Vec<FSetRow>,
    pub iset: Vec<ISetEntry>,
}

fn short(bytes: &[u8]) -> String {
    let mut s = hex::encode(&bytes[..bytes.len().min(SHOWN)]);
    if bytes.len() > SHOWN {
        s.push('…');
    }
    s
}

/// Platform-independent half of the demo, usable from native tests.
pub struct DemoCore {
    sys: System<Ristretto255>,
}

impl DemoCore {
    pub fn new(seed: u64) -> Result<Self, String> {
        let sys = System::new(seed, DEMO_PERM_BITS).map_err(|e| e.to_string())?;
        Ok(DemoCore { sys: sys.with_strategy(ChainStrategy::Jump) })
    }

    pub fn add_records(&mut self, csv: &str) -> Result<AddResult, String> {
        let records = ingest_reader(csv.as_bytes())
            .map_err(|e| e.to_string())?
            .iter()
            .map(|g| g.to_record())
            .collect::<Result<Vec<Record>, _>>()
            .map_err(|e| e.to_string())?;
        let before = self.sys.server.iset_len();
        self.sys.add(&records).map_err(|e| e.to_string())?;
        Ok(AddResult { records: records.len(), entries: self.sys.server.iset_len() - before })
    }

    pub fn search(&mut self, keyword: &str) -> Result<SearchResult, String> {
        let keyword = canonical_keyword(keyword);
        let report = self.sys.search(keyword.as_bytes()).map_err(|e| e.to_string())?;
        Ok(SearchResult {
            ids: report.ids.iter().map(|id| String::from_utf8_lossy(id).into_owned()).collect(),
            iterations: report.iterations,
            hits: report.hits,
            keyword,
        })
    }

    /// Number of index entries removed.
    pub fn revoke(&mut self, id: &str) -> Result<u64, String> {
        Ok(self.sys.revoke(id.trim().as_bytes()).map_err(|e| e.to_string())?.removed_count)
    }

    pub fn state(&self) -> StateView {
        let tables = self.sys.server.store().tables();
        let fset = tables
            .iter(Namespace::Fset)
            .map(|(k, v)| FSetRow {
                r_id: short(k),
                deltas: v.as_list().unwrap_or_default().iter().map(|d| short(d)).collect(),
            })
            .collect();
        let iset = tables
            .iter(Namespace::Iset)
            .map(|(k, v)| ISetEntry { label: short(k), ciphertext_len: v.as_bytes().map_or(0, <[u8]>::len) })
            .collect();
        StateView { keywords: self.sys.vetter.wmap().len(), batches: self.sys.trustee.seq(), fset, iset }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String, JsError> {
    serde_json::to_string(v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub struct Demo {
    core: DemoCore,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32) -> Result<Demo, JsError> {
        DemoCore::new(seed.into()).map(|core| Demo { core }).map_err(|e| JsError::new(&e))
    }

    /// CSV with an identifier column first; returns `{records, entries}`.
    pub fn add_records(&mut self, csv: &str) -> Result<String, JsError> {
        to_json(&self.core.add_records(csv).map_err(|e| JsError::new(&e))?)
    }

    /// Returns `{keyword, ids, iterations, hits}`.
    pub fn search(&mut self, keyword: &str) -> Result<String, JsError> {
        to_json(&self.core.search(keyword).map_err(|e| JsError::new(&e))?)
    }

    pub fn revoke(&mut self, id: &str) -> Result<u32, JsError> {
        self.core.revoke(id).map(|n| n as u32).map_err(|e| JsError::new(&e))
    }

    /// Returns `{keywords, batches, fset, iset}`.
    pub fn state(&self) -> Result<String, JsError> {
        to_json(&self.core.state())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE_RECORDS: &str = "id,keyword,keyword\nID1,w1,w2\nID2,w1,w3\nID3,w1,w3\n";

    #[test]
    fn add_search_revoke() {
        let mut d = DemoCore::new(1).unwrap();
        let added = d.add_records(THREE_RECORDS).unwrap();
        assert_eq!((added.records, added.entries), (3, 6));
        assert_eq!(d.search("w1").unwrap().ids, ["ID1", "ID2", "ID3"]);

        assert_eq!(d.revoke("ID2").unwrap(), 2);
        let after = d.search("w1").unwrap();
        assert_eq!(after.ids, ["ID1", "ID3"]);
        assert_eq!((after.iterations, after.hits), (3, 2));
    }

    #[test]
    fn state_mirrors_the_server_tables() {
        let mut d = DemoCore::new(2).unwrap();
        d.add_records(THREE_RECORDS).unwrap();
        let s = d.state();
        assert_eq!((s.keywords, s.batches, s.fset.len(), s.iset.len()), (3, 1, 3, 6));
        assert!(s.fset.iter().all(|r| r.deltas.len() == 2));
        d.revoke("ID1").unwrap();
        let s = d.state();
        assert_eq!((s.fset.len(), s.iset.len()), (2, 4));
        let json = serde_json::to_string(&s).unwrap();
        assert!(!json.contains("ID"));
    }

    #[test]
    fn bad_csv_is_reported() {
        let mut d = DemoCore::new(3).unwrap();
        assert!(d.add_records("id\n").is_err());
        assert!(d.add_records("id,keyword\nA,\n").unwrap_err().contains("A"));
    }
}
