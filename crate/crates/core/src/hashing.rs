//! Seeded hash family for the CH(k, b, l, s) scheme.
//!
//! Each of the k sub-tables owns b/k entries of l cells. A single keyed
//! hash, domain-separated per sub-table, maps an item identifier to one
//! entry per sub-table. The full probe set of an item is the kl table
//! cells plus the s stash slots, in a fixed canonical order, and never
//! depends on table contents.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const KEY_LABEL: &[u8] = b"cuckoo/key/v1";
const ENTRY_LABEL: &[u8] = b"cuckoo/entry/v1";
const SEED_LABEL: &[u8] = b"cuckoo/child-seed/v1";

/// 256-bit hash key. Equal seeds give identical outputs on every platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HashKey(pub [u8; 32]);

impl HashKey {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

/// Parameters of a CH(k, b, l, s) scheme over n items.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CuckooParams {
    /// Number of items to allocate.
    pub n: usize,
    /// Number of hash functions / disjoint sub-tables.
    pub k: usize,
    /// Total number of entries across all sub-tables; k must divide b.
    pub b: usize,
    /// Cells per entry.
    pub ell: usize,
    /// Stash capacity.
    pub s: usize,
}

impl CuckooParams {
    pub fn new(n: usize, k: usize, b: usize, ell: usize, s: usize) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidParams("k must be at least 1".into()));
        }
        if b < k {
            return Err(Error::InvalidParams(format!("b = {b} must be at least k = {k}")));
        }
        if b % k != 0 {
            return Err(Error::InvalidParams(format!("k = {k} must divide b = {b} evenly")));
        }
        if ell < 1 {
            return Err(Error::InvalidParams("ell must be at least 1".into()));
        }
        Ok(Self { n, k, b, ell, s })
    }

    /// Entries per sub-table.
    pub fn entries_per_table(&self) -> usize {
        self.b / self.k
    }

    /// Slots probed per query: kl + s.
    pub fn query_overhead(&self) -> usize {
        self.k * self.ell + self.s
    }

    /// Total slots: bl + s.
    pub fn total_slots(&self) -> usize {
        self.b * self.ell + self.s
    }
}

/// One storage slot: a cell of a table entry, or a stash position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotId {
    Table {
        /// Sub-table index in [0, k).
        table: usize,
        /// Entry index within the sub-table, in [0, b/k).
        entry: usize,
        /// Cell index within the entry, in [0, l).
        cell: usize,
    },
    Stash {
        /// Stash position in [0, s).
        index: usize,
    },
}

impl SlotId {
    /// Flat slot index in [0, bl + s): table cells first in canonical
    /// order, stash slots last.
    pub fn flat_index(&self, params: &CuckooParams) -> usize {
        match *self {
            SlotId::Table { table, entry, cell } => {
                (table * params.entries_per_table() + entry) * params.ell + cell
            }
            SlotId::Stash { index } => params.b * params.ell + index,
        }
    }

    /// Inverse of [`SlotId::flat_index`].
    pub fn from_flat_index(idx: usize, params: &CuckooParams) -> Self {
        let table_cells = params.b * params.ell;
        if idx < table_cells {
            let entry_global = idx / params.ell;
            SlotId::Table {
                table: entry_global / params.entries_per_table(),
                entry: entry_global % params.entries_per_table(),
                cell: idx % params.ell,
            }
        } else {
            SlotId::Stash { index: idx - table_cells }
        }
    }
}

/// Expands a 64-bit master seed into a hash key.
pub fn sample_key(master_seed: u64) -> HashKey {
    let mut h = Sha256::new();
    h.update(KEY_LABEL);
    h.update(master_seed.to_be_bytes());
    HashKey(h.finalize().into())
}

/// Derives the child seed for trial/run `t` of a seeded experiment.
pub fn child_seed(master_seed: u64, t: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(SEED_LABEL);
    h.update(master_seed.to_be_bytes());
    h.update(t.to_be_bytes());
    let digest = h.finalize();
    u64::from_be_bytes(digest[..8].try_into().unwrap())
}

/// Entry chosen for `id` in sub-table `i`, in [0, b/k).
///
/// 128 hash bits are reduced modulo b/k; the bias is at most (b/k)/2^128.
pub fn entry_index(key: &HashKey, i: usize, id: &[u8], params: &CuckooParams) -> Result<usize> {
    if i >= params.k {
        return Err(Error::InvalidParams(format!(
            "sub-table index {i} out of range for k = {}",
            params.k
        )));
    }
    Ok(entry_index_unchecked(key, i, id, params))
}

pub(crate) fn entry_index_unchecked(
    key: &HashKey,
    i: usize,
    id: &[u8],
    params: &CuckooParams,
) -> usize {
    let mut h = Sha256::new();
    h.update(ENTRY_LABEL);
    h.update(key.0);
    h.update((i as u32).to_be_bytes());
    h.update(id);
    let digest = h.finalize();
    let wide = u128::from_be_bytes(digest[..16].try_into().unwrap());
    (wide % params.entries_per_table() as u128) as usize
}

/// All kl + s slots that may hold `id`, in canonical order: sub-tables
/// ascending, cells ascending within the chosen entry, stash last.
pub fn probe_set(key: &HashKey, id: &[u8], params: &CuckooParams) -> Vec<SlotId> {
    let mut slots = Vec::with_capacity(params.query_overhead());
    for table in 0..params.k {
        let entry = entry_index_unchecked(key, table, id, params);
        for cell in 0..params.ell {
            slots.push(SlotId::Table { table, entry, cell });
        }
    }
    for index in 0..params.s {
        slots.push(SlotId::Stash { index });
    }
    slots
}

/// Probe set as flat right-vertex indices in [0, bl + s).
pub fn probe_indices(key: &HashKey, id: &[u8], params: &CuckooParams) -> Vec<usize> {
    probe_set(key, id, params)
        .into_iter()
        .map(|slot| slot.flat_index(params))
        .collect()
}
