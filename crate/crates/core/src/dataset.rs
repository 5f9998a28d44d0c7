//! Genomic record ingestion and synthetic data.
//!
//! A CSV file has a header row; the first column holds the identifier. Every
//! other non-empty cell becomes the keyword `field:value`, except under a
//! column named `keyword`, whose cells are taken as keywords verbatim.

use std::collections::{BTreeSet, HashSet};
use std::io::Read;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::protocol::{ProtocolError, Record};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: duplicate identifier {id:?}")]
    DuplicateId { line: u64, id: String },
    #[error("line {line}: record {id:?} has no keywords")]
    NoKeywords { line: u64, id: String },
    #[error("line {line}: empty identifier")]
    EmptyId { line: u64 },
    #[error("header needs an identifier column and at least one keyword column")]
    Header,
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenomicRecord {
    pub id: String,
    pub keywords: BTreeSet<String>,
}

impl GenomicRecord {
    pub fn to_record(&self) -> Result<Record, ProtocolError> {
        Record::new(self.id.as_bytes(), self.keywords.iter().map(|k| k.as_bytes().to_vec()))
    }
}

/// Trims both parts, lowercases the field name and keeps the value's case.
/// Idempotent.
pub fn canonical_keyword(raw: &str) -> String {
    match raw.split_once(':') {
        Some((field, value)) => format!("{}:{}", field.trim().to_lowercase(), value.trim()),
        None => raw.trim().to_string(),
    }
}

pub fn ingest_dataset(path: impl AsRef<Path>) -> Result<Vec<GenomicRecord>, DatasetError> {
    ingest_reader(std::fs::File::open(path)?)
}

pub fn ingest_reader(reader: impl Read) -> Result<Vec<GenomicRecord>, DatasetError> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(reader);
    let malformed = |e: csv::Error| DatasetError::Malformed {
        line: e.position().map_or(1, |p| p.line()),
        message: e.to_string(),
    };
    let header = csv.headers().map_err(malformed)?.clone();
    if header.len() < 2 {
        return Err(DatasetError::Header);
    }
    let fields: Vec<Option<String>> = header
        .iter()
        .skip(1)
        .map(|h| {
            let h = h.trim();
            (!h.eq_ignore_ascii_case("keyword")).then(|| h.to_lowercase())
        })
        .collect();

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for row in csv.records() {
        let row = row.map_err(malformed)?;
        let line = row.position().map_or(0, |p| p.line());
        let id = row[0].trim().to_string();
        if id.is_empty() {
            return Err(DatasetError::EmptyId { line });
        }
        let mut keywords = BTreeSet::new();
        for (cell, field) in row.iter().skip(1).zip(&fields) {
            let cell = cell.trim();
            if cell.is_empty() {
                continue;
            }
            keywords.insert(match field {
                Some(f) => canonical_keyword(&format!("{f}:{cell}")),
                None => canonical_keyword(cell),
            });
        }
        if keywords.is_empty() {
            return Err(DatasetError::NoKeywords { line, id });
        }
        if !seen.insert(id.clone()) {
            return Err(DatasetError::DuplicateId { line, id });
        }
        out.push(GenomicRecord { id, keywords });
    }
    Ok(out)
}

const GENOTYPES: [&str; 6] = ["AA", "AG", "GG", "CC", "CT", "TT"];

/// `r` identifiers with exactly `x` distinct SNP keywords each, drawn from a
/// pool of `2x` SNP sites (at least 1000).
pub fn synthetic_dataset(r: usize, x: usize, seed: u64) -> Vec<GenomicRecord> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let pool = (2 * x).max(1000);
    (0..r)
        .map(|i| {
            let keywords = sample(&mut rng, pool, x)
                .into_iter()
                .map(|site| format!("snp_rs{}:{}", 1000 + site, GENOTYPES[rng.gen_range(0..GENOTYPES.len())]))
                .collect();
            GenomicRecord { id: format!("P{i:06}"), keywords }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn three_row_keyword_file() {
        let csv = "id,keyword,keyword\nID1,w1,w2\nID2,w1,w3\nID3,w1,w3\n";
        let recs = ingest_reader(csv.as_bytes()).unwrap();
        assert_eq!(recs.len(), 3);
        assert!(recs.iter().all(|r| r.keywords.len() == 2));
        assert_eq!(recs[1].keywords, ["w1", "w3"].iter().map(|s| s.to_string()).collect());
    }

    #[test]
    fn fields_become_canonical_keywords() {
        let csv = "ID, SNP_rs4477212 ,Phenotype,Gender\nP1, AA ,Hypertension,F\nP2,AG,,M\n";
        let recs = ingest_reader(csv.as_bytes()).unwrap();
        let kws: Vec<&str> = recs[0].keywords.iter().map(String::as_str).collect();
        assert_eq!(kws, ["gender:F", "phenotype:Hypertension", "snp_rs4477212:AA"]);
        assert_eq!(recs[1].keywords.len(), 2);
    }

    #[test]
    fn row_without_keywords_is_rejected_with_line() {
        let csv = "id,a\nX,1\nY,\n";
        match ingest_reader(csv.as_bytes()) {
            Err(DatasetError::NoKeywords { line: 3, id }) => assert_eq!(id, "Y"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicates_and_malformed_rows() {
        assert!(matches!(
            ingest_reader("id,a\nX,1\nX,2\n".as_bytes()),
            Err(DatasetError::DuplicateId { line: 3, .. })
        ));
        assert!(matches!(
            ingest_reader("id,a\nX,1\nY,2,3\n".as_bytes()),
            Err(DatasetError::Malformed { line: 3, .. })
        ));
        assert!(matches!(ingest_reader("id\nX\n".as_bytes()), Err(DatasetError::Header)));
        assert!(matches!(ingest_reader("id,a\n ,1\n".as_bytes()), Err(DatasetError::EmptyId { line: 2 })));
    }

    #[test]
    fn synthetic_counts_are_exact() {
        let recs = synthetic_dataset(1000, 500, 7);
        assert_eq!(recs.iter().map(|r| r.keywords.len()).sum::<usize>(), 500_000);
        assert_eq!(synthetic_dataset(5, 10, 7), synthetic_dataset(5, 10, 7));
        assert_ne!(synthetic_dataset(5, 10, 7), synthetic_dataset(5, 10, 8));
    }

    proptest! {
        #[test]
        fn canonicalization_is_idempotent(s in "[ a-zA-Z0-9:_]{0,24}") {
            let once = canonical_keyword(&s);
            prop_assert_eq!(canonical_keyword(&once), once);
        }
    }
}
