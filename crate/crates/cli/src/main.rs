mod db;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use ace_core::crypto::PERM_MODULUS_BITS;
use ace_core::dataset::ingest_dataset;
use ace_core::lab::bench::{run_scenario, write_csv, BenchConfig, Scenario};
use ace_core::lab::{audit_transcript, EventKind};
use ace_core::protocol::{ChainStrategy, Record};
use ace_core::storage::KvStore;
use ace_core::wire;
use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use db::{maybe_checkpoint, Deployment};

#[derive(Parser)]
#[command(name = "ace", version, about = "Searchable encrypted genomic index with consent revocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate keys and create the trustee, vetter and server state directories.
    Setup {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Size of the trapdoor permutation modulus.
        #[arg(long, default_value_t = PERM_MODULUS_BITS)]
        perm_bits: usize,
    },
    /// Data-owner operations.
    Trustee {
        #[command(subcommand)]
        op: TrusteeOp,
    },
    /// Query operations.
    Vetter {
        #[command(subcommand)]
        op: VetterOp,
    },
    /// Inspect the encrypted database.
    Server {
        #[command(subcommand)]
        op: ServerOp,
    },
    /// Run a timing scenario and write CSV rows.
    Bench {
        scenario: Scenario,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Small grids, for smoke runs.
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = PERM_MODULUS_BITS)]
        perm_bits: usize,
    },
    /// Audit what the server has observed.
    Audit {
        #[command(subcommand)]
        op: AuditOp,
    },
}

#[derive(Subcommand)]
enum TrusteeOp {
    /// Encrypt and upload every record of a CSV file.
    Add {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Chain::Sequential)]
        chain: Chain,
    },
    /// Erase one identifier and all of its index entries.
    Revoke {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        id: String,
    },
}

#[derive(Subcommand)]
enum VetterOp {
    /// Print the identifiers holding a keyword, one per line, sorted.
    Search {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        keyword: String,
    },
}

#[derive(Subcommand)]
enum ServerOp {
    Stats {
        #[arg(long)]
        db: PathBuf,
    },
}

#[derive(Subcommand)]
enum AuditOp {
    /// One finding per line; exits nonzero on violations.
    Transcript {
        #[arg(long)]
        db: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Chain {
    Sequential,
    Jump,
}

impl From<Chain> for ChainStrategy {
    fn from(c: Chain) -> Self {
        match c {
            Chain::Sequential => ChainStrategy::Sequential,
            Chain::Jump => ChainStrategy::Jump,
        }
    }
}

/// Seeded runs get a distinct stream per `stream` value so repeated commands
/// do not reuse randomness.
fn rng(seed: Option<u64>, stream: u64) -> ChaCha20Rng {
    match seed {
        Some(s) => {
            let mut r = ChaCha20Rng::seed_from_u64(s);
            r.set_stream(stream);
            r
        }
        None => ChaCha20Rng::from_entropy(),
    }
}

fn run(cli: Cli) -> Result<bool> {
    let mut out = io::stdout().lock();
    match cli.command {
        Command::Setup { out: dir, seed, perm_bits } => {
            Deployment::create(&dir, perm_bits, &mut rng(seed, 0))?;
            writeln!(out, "created {}/{{trustee,vetter,server}}", dir.display())?;
        }

        Command::Trustee { op: TrusteeOp::Add { db, input, seed, chain } } => {
            let dep = Deployment::open(&db)?;
            let records = ingest_dataset(&input)
                .with_context(|| format!("reading {}", input.display()))?
                .iter()
                .map(|g| g.to_record())
                .collect::<Result<Vec<Record>, _>>()?;
            let (mut trustee, mut ts) = dep.trustee()?;
            let (mut vetter, mut vs) = dep.vetter()?;
            let mut server = dep.server()?;
            trustee.set_strategy(chain.into());

            let (batch, delta) = trustee.add_batch(&records, &mut rng(seed, trustee.seq() + 1))?;
            server.apply_add(&batch)?;
            trustee.persist_delta(&mut ts, &delta)?;
            vetter.sync(&delta)?;
            vetter.persist_delta(&mut vs, &delta)?;
            dep.log(EventKind::Add, wire::encode(&server.params().group, &batch), batch.iset.len() as u64)?;
            for store in [&mut ts, &mut vs, server.store_mut()] {
                maybe_checkpoint(store)?;
            }
            writeln!(out, "added {} records, {} index entries", records.len(), batch.iset.len())?;
        }

        Command::Trustee { op: TrusteeOp::Revoke { db, id } } => {
            let dep = Deployment::open(&db)?;
            let (trustee, _) = dep.trustee()?;
            let mut server = dep.server()?;
            let token = trustee.issue_delete(id.as_bytes());
            let report = server.apply_delete(&token)?;
            dep.log(EventKind::Delete, wire::encode(&server.params().group, &token), report.removed_count)?;
            maybe_checkpoint(server.store_mut())?;
            writeln!(out, "revoked {id}: {} index entries removed", report.removed_count)?;
        }

        Command::Vetter { op: VetterOp::Search { db, keyword } } => {
            let dep = Deployment::open(&db)?;
            let (vetter, _) = dep.vetter()?;
            let keyword = ace_core::dataset::canonical_keyword(&keyword);
            let Some(token) = vetter.issue_search(keyword.as_bytes()) else {
                return Ok(true);
            };
            let server = dep.server()?;
            let outcome = server.search(&token)?;
            dep.log(EventKind::Search, wire::encode(&server.params().group, &token), outcome.hits)?;
            for id in vetter.decrypt_results(keyword.as_bytes(), &outcome.rset)? {
                writeln!(out, "{}", String::from_utf8_lossy(&id))?;
            }
        }

        Command::Server { op: ServerOp::Stats { db } } => {
            let server = Deployment::open(&db)?.server()?;
            let m = server.store().metrics();
            writeln!(out, "fset_rows {}", m.fset_rows)?;
            writeln!(out, "fset_items {}", m.fset_items)?;
            writeln!(out, "fset_bytes {}", m.fset_bytes)?;
            writeln!(out, "iset_entries {}", m.iset_entries)?;
            writeln!(out, "iset_bytes {}", m.iset_bytes)?;
            writeln!(out, "egdb_bytes {}", m.egdb_bytes())?;
        }

        Command::Bench { scenario, seed, out: path, quick, perm_bits } => {
            let rows = run_scenario(scenario, &BenchConfig { seed, quick, perm_bits })?;
            let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_csv(&rows, BufWriter::new(file))?;
            writeln!(out, "wrote {} rows to {}", rows.len(), path.display())?;
        }

        Command::Audit { op: AuditOp::Transcript { db, out: path } } => {
            let dep = Deployment::open(&db)?;
            let server = dep.server()?;
            let report = audit_transcript(&server.params().group, &dep.transcript()?);
            match path {
                Some(p) => std::fs::write(&p, report.render())?,
                None => out.write_all(report.render().as_bytes())?,
            }
            return Ok(report.is_clean());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
