//! Blackbox single-query-to-batch PIR composition over the batch code,
//! with a concrete 2-server information-theoretic XOR PIR. The two
//! simulated servers are in-process pure functions so every cost is
//! exactly measurable: upload is the two indicator vectors (2w bits for a
//! bucket of w codewords), download is two value-length responses, and
//! server work is the number of entries XORed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::wilson_interval;
use crate::hashing::child_seed;
use crate::pbc::{
    encode_index, pbc_decode, pbc_encode, pbc_schedule, Buckets, Inner, PbcParams, Schedule,
    ScheduleOutcome,
};
use crate::robustness::{attack_enumerate, pad_found_set, AttackOutcome};

/// Exact cost accounting for one batch retrieval.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CostReport {
    pub upload_bits: u64,
    pub download_bits: u64,
    /// Total entries XORed/scanned across both servers and all buckets.
    pub server_entry_touches: u64,
    pub bucket_sizes: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryCost {
    pub upload_bits: u64,
    pub download_bits: u64,
    pub entry_touches: u64,
}

fn xor_into(acc: &mut [u8], value: &[u8]) {
    for (a, v) in acc.iter_mut().zip(value) {
        *a ^= v;
    }
}

/// A server's half of the XOR PIR: XOR of the selected codewords.
fn xor_server(bucket: &[Vec<u8>], selector: &[bool], value_len: usize) -> (Vec<u8>, u64) {
    let mut acc = vec![0u8; value_len];
    let mut touches = 0u64;
    for (value, &selected) in bucket.iter().zip(selector) {
        if selected {
            xor_into(&mut acc, value);
            touches += 1;
        }
    }
    (acc, touches)
}

/// Retrieves `bucket[target]` from two non-colluding simulated servers:
/// the client sends a random subset S to one server and S with the target
/// toggled to the other, then XORs the responses.
pub fn xor_pir_retrieve(
    bucket: &[Vec<u8>],
    target: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<u8>, QueryCost)> {
    if bucket.is_empty() {
        return Err(Error::Domain("cannot query an empty bucket".into()));
    }
    if target >= bucket.len() {
        return Err(Error::Domain(format!(
            "target {target} out of range for bucket of {}",
            bucket.len()
        )));
    }
    let value_len = bucket[0].len();
    if bucket.iter().any(|v| v.len() != value_len) {
        return Err(Error::Domain("bucket values must share one length".into()));
    }
    let selector_a: Vec<bool> = (0..bucket.len()).map(|_| rng.gen()).collect();
    let mut selector_b = selector_a.clone();
    selector_b[target] = !selector_b[target];
    let (resp_a, touches_a) = xor_server(bucket, &selector_a, value_len);
    let (resp_b, touches_b) = xor_server(bucket, &selector_b, value_len);
    let mut value = resp_a;
    xor_into(&mut value, &resp_b);
    Ok((
        value,
        QueryCost {
            upload_bits: 2 * bucket.len() as u64,
            download_bits: 2 * 8 * value_len as u64,
            entry_touches: touches_a + touches_b,
        },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub enum BatchOutcome {
    Success { values: Vec<Vec<u8>>, cost: CostReport },
    ScheduleFailure,
}

/// Encoded database plus parameters, reusable across batch queries.
#[derive(Debug, Clone)]
pub struct BatchPirServer {
    pub prms: PbcParams,
    pub buckets: Buckets,
}

impl BatchPirServer {
    pub fn new(prms: PbcParams, db: &[Vec<u8>]) -> Result<Self> {
        let buckets = pbc_encode(&prms, db)?;
        Ok(Self { prms, buckets })
    }

    /// Retrieves the q queried values. Every non-empty bucket receives
    /// exactly t retrievals (scheduled reads padded with dummy reads of
    /// position 0), so the access pattern is independent of the query.
    pub fn batch_retrieve(&self, query: &[usize], client_seed: u64) -> Result<BatchOutcome> {
        let schedule = match pbc_schedule(&self.prms, query)? {
            ScheduleOutcome::Scheduled(s) => s,
            ScheduleOutcome::Failure => return Ok(BatchOutcome::ScheduleFailure),
        };
        let t = self.prms.reads_per_bucket();
        let mut cost = CostReport { bucket_sizes: self.buckets.sizes(), ..Default::default() };
        let mut fetched: Vec<Vec<Vec<u8>>> = Vec::with_capacity(schedule.reads.len());
        let mut rng = ChaCha8Rng::seed_from_u64(client_seed);
        for (bucket, reads) in self.buckets.buckets.iter().zip(&schedule.reads) {
            let mut bucket_fetched = Vec::with_capacity(reads.len());
            for round in 0..t {
                let read = reads.get(round);
                if bucket.is_empty() {
                    if read.is_some() {
                        return Err(Error::Domain("scheduled read into empty bucket".into()));
                    }
                    continue;
                }
                let position = read.map_or(0, |r| r.position);
                let values_only: Vec<Vec<u8>> =
                    bucket.iter().map(|(_, v)| v.clone()).collect();
                let (value, qcost) = xor_pir_retrieve(&values_only, position, &mut rng)?;
                cost.upload_bits += qcost.upload_bits;
                cost.download_bits += qcost.download_bits;
                cost.server_entry_touches += qcost.entry_touches;
                if read.is_some() {
                    bucket_fetched.push(value);
                }
            }
            fetched.push(bucket_fetched);
        }
        let values = pbc_decode(&self.prms, query, &schedule, &fetched)?;
        Ok(BatchOutcome::Success { values, cost })
    }

    /// Retrieval counts per bucket for one query: t for every non-empty
    /// bucket regardless of the query, used by the access-pattern tests.
    pub fn access_pattern(&self, schedule: &Schedule) -> Vec<usize> {
        let t = self.prms.reads_per_bucket();
        self.buckets
            .buckets
            .iter()
            .zip(&schedule.reads)
            .map(|(bucket, _)| if bucket.is_empty() { 0 } else { t })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialBench {
    pub runs: u64,
    pub schedule_failures: u64,
    pub rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Publishes each run's key to the scripted attacker, lets it pick the
/// batch query (its found set padded to q distinct indices), and counts
/// schedule failures. Decode fails exactly when the schedule does.
pub fn adversarial_error_bench<F>(
    build: F,
    budget: u64,
    runs: u64,
    master_seed: u64,
) -> Result<AdversarialBench>
where
    F: Fn(u64) -> Result<PbcParams> + Sync,
{
    let failures: u64 = (0..runs)
        .into_par_iter()
        .map(|r| {
            let seed = child_seed(master_seed, r);
            let prms = build(seed).expect("parameter build must succeed");
            let found = match &prms.inner {
                Inner::Cuckoo { cuckoo, key } => {
                    let result = attack_enumerate(
                        key,
                        cuckoo,
                        budget,
                        prms.q,
                        (0..prms.n).map(encode_index),
                    );
                    match result.outcome {
                        AttackOutcome::FoundSet(ids) => ids,
                        AttackOutcome::Exhausted => Vec::new(),
                    }
                }
                // Replication has no hash functions to attack.
                Inner::Replication => Vec::new(),
            };
            let mut indices: Vec<usize> = found
                .iter()
                .map(|id| u64::from_be_bytes(id.as_slice().try_into().unwrap()) as usize)
                .collect();
            indices.sort_unstable();
            indices.dedup();
            let n = prms.n;
            let padded = pad_found_set(
                indices.iter().map(|&j| encode_index(j)).collect(),
                prms.q,
                seed ^ 0x5eed,
                |rng| encode_index(rng.gen_range(0..n)),
            );
            let query: Vec<usize> = padded
                .iter()
                .map(|id| u64::from_be_bytes(id.as_slice().try_into().unwrap()) as usize)
                .collect();
            let failed = matches!(
                pbc_schedule(&prms, &query).expect("padded query is valid"),
                ScheduleOutcome::Failure
            );
            u64::from(failed)
        })
        .sum();
    let (ci_lo, ci_hi) = wilson_interval(failures, runs);
    Ok(AdversarialBench {
        runs,
        schedule_failures: failures,
        rate: failures as f64 / runs as f64,
        ci_lo,
        ci_hi,
    })
}
