//! The user-facing CH(k, b, l, s) hash table: build from (id, value)
//! pairs, query non-adaptively over exactly kl + s slots, serialize.

use std::io::{self, Read, Write};

use crate::construct::{construct, Algorithm, ConstructionStats};
use crate::error::{Error, Result};
use crate::hashing::{probe_set, CuckooParams, HashKey, SlotId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CuckooTable {
    pub params: CuckooParams,
    pub key: HashKey,
    /// bl table cells in flat slot order.
    cells: Vec<Option<(Vec<u8>, Vec<u8>)>>,
    /// Up to s stash pairs, indexed by stash position.
    stash: Vec<Option<(Vec<u8>, Vec<u8>)>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BuildOutcome {
    Built { table: CuckooTable, stats: ConstructionStats },
    Failure { stats: ConstructionStats },
}

/// Allocates `items` with the chosen algorithm and materializes values
/// into their assigned slots.
pub fn build_table(
    params: &CuckooParams,
    key: &HashKey,
    items: &[(Vec<u8>, Vec<u8>)],
    algorithm: Algorithm,
    rng_seed: u64,
) -> Result<BuildOutcome> {
    let ids: Vec<Vec<u8>> = items.iter().map(|(id, _)| id.clone()).collect();
    let result = construct(params, key, &ids, algorithm, rng_seed)?;
    let stats = result.stats;
    let allocation = match result.allocation() {
        Some(a) => a,
        None => return Ok(BuildOutcome::Failure { stats }),
    };
    let mut table = CuckooTable {
        params: *params,
        key: *key,
        cells: vec![None; params.b * params.ell],
        stash: vec![None; params.s],
    };
    let table_cells = params.b * params.ell;
    for (j, assigned) in allocation.assignment.iter().enumerate() {
        let r = assigned.expect("left-perfect allocation");
        let pair = items[j].clone();
        if r < table_cells {
            table.cells[r] = Some(pair);
        } else {
            table.stash[r - table_cells] = Some(pair);
        }
    }
    Ok(BuildOutcome::Built { table, stats })
}

impl CuckooTable {
    /// Empty table for the given parameters.
    pub fn empty(params: CuckooParams, key: HashKey) -> Self {
        Self {
            params,
            key,
            cells: vec![None; params.b * params.ell],
            stash: vec![None; params.s],
        }
    }

    fn slot_contents(&self, slot: &SlotId) -> &Option<(Vec<u8>, Vec<u8>)> {
        match slot {
            SlotId::Table { .. } => &self.cells[slot.flat_index(&self.params)],
            SlotId::Stash { index } => &self.stash[*index],
        }
    }

    /// Looks up `id`, inspecting exactly the kl + s probe slots in
    /// canonical order and returning the first match.
    pub fn query(&self, id: &[u8]) -> Option<&[u8]> {
        for slot in probe_set(&self.key, id, &self.params) {
            if let Some((stored_id, value)) = self.slot_contents(&slot) {
                if stored_id == id {
                    return Some(value);
                }
            }
        }
        None
    }

    /// Instrumented lookup: also returns the full probe trace, which by
    /// construction never depends on table contents.
    pub fn query_traced(&self, id: &[u8]) -> (Option<&[u8]>, Vec<SlotId>) {
        let trace = probe_set(&self.key, id, &self.params);
        let mut found = None;
        for slot in &trace {
            if found.is_none() {
                if let Some((stored_id, value)) = self.slot_contents(slot) {
                    if stored_id == id {
                        found = Some(value.as_slice());
                    }
                }
            }
        }
        (found, trace)
    }

    pub fn occupancy(&self) -> usize {
        self.cells.iter().chain(self.stash.iter()).filter(|c| c.is_some()).count()
    }

    /// All bl + s slots in flat order; empty cells are None.
    pub fn slots(&self) -> impl Iterator<Item = &Option<(Vec<u8>, Vec<u8>)>> {
        self.cells.iter().chain(self.stash.iter())
    }

    /// Binary serialization: magic, header (n, k, b, l, s), key, then
    /// slots in flat order.
    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(b"CHT1")?;
        for field in [self.params.n, self.params.k, self.params.b, self.params.ell, self.params.s]
        {
            w.write_all(&(field as u64).to_le_bytes())?;
        }
        w.write_all(&self.key.0)?;
        for slot in self.slots() {
            match slot {
                None => w.write_all(&[0u8])?,
                Some((id, value)) => {
                    w.write_all(&[1u8])?;
                    w.write_all(&(id.len() as u32).to_le_bytes())?;
                    w.write_all(id)?;
                    w.write_all(&(value.len() as u32).to_le_bytes())?;
                    w.write_all(value)?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let bad = |msg: &str| Error::Decode(msg.into());
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != b"CHT1" {
            return Err(bad("bad magic"));
        }
        let mut u64buf = [0u8; 8];
        let mut fields = [0usize; 5];
        for field in &mut fields {
            r.read_exact(&mut u64buf).map_err(|_| bad("truncated header"))?;
            *field = u64::from_le_bytes(u64buf) as usize;
        }
        let params = CuckooParams::new(fields[0], fields[1], fields[2], fields[3], fields[4])?;
        let mut key = [0u8; 32];
        r.read_exact(&mut key).map_err(|_| bad("truncated key"))?;
        let mut table = CuckooTable::empty(params, HashKey(key));
        let table_cells = params.b * params.ell;
        for idx in 0..params.total_slots() {
            let mut tag = [0u8; 1];
            r.read_exact(&mut tag).map_err(|_| bad("truncated slot"))?;
            if tag[0] == 0 {
                continue;
            }
            let mut len_buf = [0u8; 4];
            r.read_exact(&mut len_buf).map_err(|_| bad("truncated id"))?;
            let mut id = vec![0u8; u32::from_le_bytes(len_buf) as usize];
            r.read_exact(&mut id).map_err(|_| bad("truncated id"))?;
            r.read_exact(&mut len_buf).map_err(|_| bad("truncated value"))?;
            let mut value = vec![0u8; u32::from_le_bytes(len_buf) as usize];
            r.read_exact(&mut value).map_err(|_| bad("truncated value"))?;
            if idx < table_cells {
                table.cells[idx] = Some((id, value));
            } else {
                table.stash[idx - table_cells] = Some((id, value));
            }
        }
        Ok(table)
    }
}
