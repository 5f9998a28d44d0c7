//! On-disk layout of a deployment: one journaled store per role plus the
//! server-boundary transcript.

use std::fs;
use std::path::{Path, PathBuf};

use ace_core::crypto::Ristretto255;
use ace_core::lab::{EventKind, Transcript};
use ace_core::protocol::{setup, Server, Trustee, Vetter};
use ace_core::storage::JournaledStore;
use anyhow::{bail, Context, Result};
use rand_chacha::ChaCha20Rng;

const TRUSTEE_DIR: &str = "trustee";
const VETTER_DIR: &str = "vetter";
const SERVER_DIR: &str = "server";
const TRANSCRIPT_FILE: &str = "transcript.bin";

/// Journals longer than this are folded into a snapshot after a command.
const CHECKPOINT_THRESHOLD: u64 = 1 << 20;

pub struct Deployment {
    root: PathBuf,
}

impl Deployment {
    pub fn open(root: &Path) -> Result<Self> {
        for dir in [TRUSTEE_DIR, VETTER_DIR, SERVER_DIR] {
            if !root.join(dir).is_dir() {
                bail!("{} is not a deployment (missing {dir}/); run `ace setup` first", root.display());
            }
        }
        Ok(Deployment { root: root.to_path_buf() })
    }

    /// Generates keys and writes the three role directories.
    pub fn create(root: &Path, perm_bits: usize, rng: &mut ChaCha20Rng) -> Result<Self> {
        if root.exists() && fs::read_dir(root)?.next().is_some() {
            bail!("{} already exists and is not empty", root.display());
        }
        let group = Ristretto255::random(rng);
        let (trustee, vetter, params) = setup(group, perm_bits, rng)?;

        let mut ts = JournaledStore::open(root.join(TRUSTEE_DIR))?;
        trustee.save(&mut ts)?;
        ts.checkpoint()?;
        let mut vs = JournaledStore::open(root.join(VETTER_DIR))?;
        vetter.save(&mut vs)?;
        vs.checkpoint()?;
        let mut server = Server::create(params, JournaledStore::open(root.join(SERVER_DIR))?)?;
        server.store_mut().checkpoint()?;
        fs::write(root.join(TRANSCRIPT_FILE), [])?;
        Ok(Deployment { root: root.to_path_buf() })
    }

    pub fn trustee(&self) -> Result<(Trustee<Ristretto255>, JournaledStore)> {
        let store = JournaledStore::open(self.root.join(TRUSTEE_DIR))?;
        let trustee = Trustee::load(&store).context("loading trustee state")?;
        Ok((trustee, store))
    }

    pub fn vetter(&self) -> Result<(Vetter<Ristretto255>, JournaledStore)> {
        let store = JournaledStore::open(self.root.join(VETTER_DIR))?;
        let vetter = Vetter::load(&store).context("loading vetter state")?;
        Ok((vetter, store))
    }

    pub fn server(&self) -> Result<Server<Ristretto255, JournaledStore>> {
        let store = JournaledStore::open(self.root.join(SERVER_DIR))?;
        Server::open(store).context("loading server state")
    }

    pub fn transcript(&self) -> Result<Transcript> {
        let path = self.root.join(TRANSCRIPT_FILE);
        if !path.exists() {
            return Ok(Transcript::default());
        }
        Transcript::from_bytes(&fs::read(&path)?).context("reading transcript")
    }

    /// Records one server-visible message.
    pub fn log(&self, kind: EventKind, message: Vec<u8>, response_count: u64) -> Result<()> {
        let mut t = self.transcript()?;
        t.push(kind, message, response_count);
        let path = self.root.join(TRANSCRIPT_FILE);
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, t.to_bytes())?;
        fs::rename(tmp, path)?;
        Ok(())
    }
}

pub fn maybe_checkpoint(store: &mut JournaledStore) -> Result<()> {
    if store.journal_len() > CHECKPOINT_THRESHOLD {
        store.checkpoint()?;
    }
    Ok(())
}
