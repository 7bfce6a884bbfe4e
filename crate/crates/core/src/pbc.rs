//! Systematic probabilistic batch codes from cuckoo hashing: a database
//! index joins one bucket per sub-table; stash buckets replicate the
//! whole database. Small batches fall back to plain replication, which
//! has zero error.

use std::collections::HashSet;

use crate::construct::{construct, Algorithm};
use crate::error::{Error, Result};
use crate::hashing::{sample_key, CuckooParams, HashKey, SlotId};
use crate::params::{k_for_failure, k_robust, round_up_to_multiple, Calibration};

/// Fixed index-to-id encoding shared by encode, schedule and the attack
/// harness: 8-byte big-endian integers.
pub fn encode_index(index: usize) -> Vec<u8> {
    (index as u64).to_be_bytes().to_vec()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Standard,
    Robust,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Mode::Standard),
            "robust" => Ok(Mode::Robust),
            other => Err(Error::InvalidParams(format!("unknown mode: {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Inner {
    /// q buckets, each holding the whole database. Zero error.
    Replication,
    /// Cuckoo allocation of the q queried indices.
    Cuckoo { cuckoo: CuckooParams, key: HashKey },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PbcParams {
    pub n: usize,
    pub q: usize,
    pub lambda: u32,
    pub mode: Mode,
    pub inner: Inner,
}

impl PbcParams {
    /// Bucket count m.
    pub fn bucket_count(&self) -> usize {
        match &self.inner {
            Inner::Replication => self.q,
            Inner::Cuckoo { cuckoo, .. } => cuckoo.b + cuckoo.s.div_ceil(cuckoo.ell),
        }
    }

    /// Total codeword budget N.
    pub fn codeword_count(&self) -> usize {
        match &self.inner {
            Inner::Replication => self.q * self.n,
            Inner::Cuckoo { cuckoo, .. } => {
                (cuckoo.k + cuckoo.s.div_ceil(cuckoo.ell)) * self.n
            }
        }
    }

    /// Reads allowed per bucket (t).
    pub fn reads_per_bucket(&self) -> usize {
        match &self.inner {
            Inner::Replication => 1,
            Inner::Cuckoo { cuckoo, .. } => cuckoo.ell,
        }
    }

    /// Builds parameters with an explicit cuckoo configuration; used by
    /// benchmarks that pin k instead of deriving it.
    pub fn with_cuckoo(n: usize, q: usize, lambda: u32, mode: Mode, cuckoo: CuckooParams, key: HashKey) -> Result<Self> {
        if q < 1 || q > n {
            return Err(Error::Domain(format!("q = {q} must satisfy 1 <= q <= n = {n}")));
        }
        if cuckoo.n != q {
            return Err(Error::InvalidParams("cuckoo instance must allocate q items".into()));
        }
        Ok(Self { n, q, lambda, mode, inner: Inner::Cuckoo { cuckoo, key } })
    }
}

/// Chooses PBC parameters for batch size q at error 2^-lambda. The k
/// formula matching `mode` is used with l = 1, s = 0 and b = 2q rounded
/// up to a multiple of k; when the required k exceeds q (so k disjoint
/// sub-tables are impossible) the zero-error replication fallback is
/// used instead.
pub fn pbc_init(
    n: usize,
    q: usize,
    lambda: u32,
    mode: Mode,
    master_seed: u64,
    cal: &Calibration,
) -> Result<PbcParams> {
    if q < 1 || q > n {
        return Err(Error::Domain(format!("q = {q} must satisfy 1 <= q <= n = {n}")));
    }
    let epsilon = 2f64.powi(-(lambda as i32));
    let k = if q < 2 {
        None
    } else {
        let k = match mode {
            Mode::Standard => k_for_failure(q, epsilon, cal.k_for_failure)?,
            // The adversary's candidate universe is the n database indices.
            Mode::Robust => k_robust(n as u64, epsilon, cal.k_robust)?,
        };
        (k <= q).then_some(k)
    };
    let inner = match k {
        None => Inner::Replication,
        Some(k) => {
            let b = round_up_to_multiple(2 * q, k).max(k);
            Inner::Cuckoo {
                cuckoo: CuckooParams::new(q, k, b, 1, 0)?,
                key: sample_key(master_seed),
            }
        }
    };
    Ok(PbcParams { n, q, lambda, mode, inner })
}

/// Encoded buckets: each codeword is a verbatim (index, value) database
/// pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Buckets {
    pub buckets: Vec<Vec<(usize, Vec<u8>)>>,
}

impl Buckets {
    pub fn total_codewords(&self) -> usize {
        self.buckets.iter().map(|b| b.len()).sum()
    }

    pub fn max_load(&self) -> usize {
        self.buckets.iter().map(|b| b.len()).max().unwrap_or(0)
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.buckets.iter().map(|b| b.len()).collect()
    }
}

/// Encodes the database: cuckoo mode adds index j to its chosen entry
/// bucket in every sub-table; every stash bucket (and every replication
/// bucket) holds the whole database.
pub fn pbc_encode(prms: &PbcParams, db: &[Vec<u8>]) -> Result<Buckets> {
    if db.len() != prms.n {
        return Err(Error::InvalidParams(format!(
            "database has {} entries, expected n = {}",
            db.len(),
            prms.n
        )));
    }
    let full_copy = || -> Vec<(usize, Vec<u8>)> {
        db.iter().cloned().enumerate().collect()
    };
    let buckets = match &prms.inner {
        Inner::Replication => vec![full_copy(); prms.q],
        Inner::Cuckoo { cuckoo, key } => {
            let mut buckets = vec![Vec::new(); prms.bucket_count()];
            for (j, value) in db.iter().enumerate() {
                let id = encode_index(j);
                for i in 0..cuckoo.k {
                    let entry = crate::hashing::entry_index_unchecked(key, i, &id, cuckoo);
                    let bucket = i * cuckoo.entries_per_table() + entry;
                    buckets[bucket].push((j, value.clone()));
                }
            }
            for stash_bucket in cuckoo.b..prms.bucket_count() {
                buckets[stash_bucket] = full_copy();
            }
            buckets
        }
    };
    Ok(Buckets { buckets })
}

/// One scheduled bucket read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduledRead {
    /// The queried database index this read serves.
    pub db_index: usize,
    /// Codeword position within the bucket.
    pub position: usize,
}

/// Per-bucket read plan; reads[i] has at most t entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub reads: Vec<Vec<ScheduledRead>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScheduleOutcome {
    Scheduled(Schedule),
    /// The cuckoo allocation of the queried indices failed.
    Failure,
}

fn check_query(prms: &PbcParams, query: &[usize]) -> Result<()> {
    if query.len() != prms.q {
        return Err(Error::InvalidParams(format!(
            "query has {} indices, expected q = {}",
            query.len(),
            prms.q
        )));
    }
    let mut seen = HashSet::with_capacity(query.len());
    for &idx in query {
        if idx >= prms.n {
            return Err(Error::Domain(format!("query index {idx} out of range [0, {})", prms.n)));
        }
        if !seen.insert(idx) {
            return Err(Error::DuplicateIds);
        }
    }
    Ok(())
}

/// Plans the per-bucket reads for query `Q` by cuckoo-allocating the q
/// indices. The schedule only depends on bucket index layouts, which the
/// querier recomputes from the key; values are not needed.
pub fn pbc_schedule(prms: &PbcParams, query: &[usize]) -> Result<ScheduleOutcome> {
    check_query(prms, query)?;
    let mut reads = vec![Vec::new(); prms.bucket_count()];
    match &prms.inner {
        Inner::Replication => {
            for (i, &j) in query.iter().enumerate() {
                reads[i].push(ScheduledRead { db_index: j, position: j });
            }
        }
        Inner::Cuckoo { cuckoo, key } => {
            let ids: Vec<Vec<u8>> = query.iter().map(|&j| encode_index(j)).collect();
            let result = construct(cuckoo, key, &ids, Algorithm::Bfs, 0)?;
            let allocation = match result.allocation() {
                Some(a) => a,
                None => return Ok(ScheduleOutcome::Failure),
            };
            // Index layout of each table bucket, mirroring pbc_encode.
            let mut layouts: Vec<Vec<usize>> = vec![Vec::new(); cuckoo.b];
            for j in 0..prms.n {
                let id = encode_index(j);
                for i in 0..cuckoo.k {
                    let entry = crate::hashing::entry_index_unchecked(key, i, &id, cuckoo);
                    layouts[i * cuckoo.entries_per_table() + entry].push(j);
                }
            }
            for (pos, assigned) in allocation.assignment.iter().enumerate() {
                let j = query[pos];
                let slot = SlotId::from_flat_index(assigned.expect("left-perfect"), cuckoo);
                match slot {
                    SlotId::Table { table, entry, .. } => {
                        let bucket = table * cuckoo.entries_per_table() + entry;
                        let position = layouts[bucket]
                            .iter()
                            .position(|&idx| idx == j)
                            .expect("item was encoded into its own bucket");
                        reads[bucket].push(ScheduledRead { db_index: j, position });
                    }
                    SlotId::Stash { index } => {
                        // Stash buckets hold the whole database in index order.
                        let bucket = cuckoo.b + index / cuckoo.ell;
                        reads[bucket].push(ScheduledRead { db_index: j, position: j });
                    }
                }
            }
        }
    }
    Ok(ScheduleOutcome::Scheduled(Schedule { reads }))
}

/// Recovers the q queried values, in query order, from the codewords
/// fetched per schedule: fetched[i][r] must be the codeword at
/// schedule.reads[i][r].
pub fn pbc_decode(
    prms: &PbcParams,
    query: &[usize],
    schedule: &Schedule,
    fetched: &[Vec<Vec<u8>>],
) -> Result<Vec<Vec<u8>>> {
    check_query(prms, query)?;
    if fetched.len() != schedule.reads.len() {
        return Err(Error::Decode("fetched bucket count mismatch".into()));
    }
    let mut values: Vec<Option<Vec<u8>>> = vec![None; query.len()];
    for (bucket_reads, bucket_fetched) in schedule.reads.iter().zip(fetched) {
        if bucket_reads.len() != bucket_fetched.len() {
            return Err(Error::Decode("missing codeword for a scheduled read".into()));
        }
        for (read, value) in bucket_reads.iter().zip(bucket_fetched) {
            let pos = query
                .iter()
                .position(|&j| j == read.db_index)
                .ok_or_else(|| Error::Decode("scheduled read for unqueried index".into()))?;
            values[pos] = Some(value.clone());
        }
    }
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| Error::Decode(format!("no codeword for query position {i}"))))
        .collect()
}

/// Direct (non-private) fetch of the scheduled codewords, used for PBC
/// round-trip checks without the PIR layer.
pub fn fetch_plain(buckets: &Buckets, schedule: &Schedule) -> Result<Vec<Vec<Vec<u8>>>> {
    schedule
        .reads
        .iter()
        .zip(&buckets.buckets)
        .map(|(reads, bucket)| {
            reads
                .iter()
                .map(|read| {
                    bucket
                        .get(read.position)
                        .map(|(_, v)| v.clone())
                        .ok_or_else(|| Error::Decode("scheduled position out of bucket".into()))
                })
                .collect()
        })
        .collect()
}
