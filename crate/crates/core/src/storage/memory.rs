use super::{KvStore, Mutation, StorageError, Tables};

/// Volatile backend.
#[derive(Debug, Clone, Default)]
pub struct MemoryStore {
    tables: Tables,
    fail_at: Option<usize>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_tables(tables: Tables) -> Self {
        MemoryStore { tables, fail_at: None }
    }

    /// Makes the next `apply_atomic` fail right before mutation `index`.
    pub fn fail_next_batch_at(&mut self, index: usize) {
        self.fail_at = Some(index);
    }
}

impl KvStore for MemoryStore {
    fn tables(&self) -> &Tables {
        &self.tables
    }

    fn apply_atomic(&mut self, mutations: &[Mutation]) -> Result<(), StorageError> {
        let fail_at = self.fail_at.take();
        self.tables.apply(mutations, fail_at)
    }
}
