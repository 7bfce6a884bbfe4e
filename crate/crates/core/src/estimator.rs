//! Monte Carlo measurement of construction failure probability, the
//! lower-bound probe, and grid experiments. Every trial derives its own
//! child seed from the master seed, so results are reproducible and
//! independent of trial execution order or parallelism degree.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::construct::{construct_on_graph, Algorithm};
use crate::error::{Error, Result};
use crate::graph::build_graph;
use crate::hashing::{child_seed, entry_index_unchecked, sample_key, CuckooParams};

/// z for a 99% two-sided Wilson interval.
const WILSON_Z: f64 = 2.575_829_303_548_900_4;

#[derive(Debug, Clone, PartialEq)]
pub struct FailureEstimate {
    pub params: CuckooParams,
    pub algorithm: Algorithm,
    pub trials: u64,
    pub failures: u64,
    pub rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub master_seed: u64,
}

/// 99% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    assert!(trials >= 1);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z = WILSON_Z;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// One-sided 3-sigma tolerance for comparing two Monte Carlo rates;
/// sigma is taken at the larger rate.
pub fn three_sigma(rate_a: f64, rate_b: f64, trials: u64) -> f64 {
    let p = rate_a.max(rate_b);
    3.0 * (p * (1.0 - p) / trials as f64).sqrt()
}

/// Fresh pairwise-distinct 16-byte ids for one trial.
pub fn random_ids(seed: u64, n: usize) -> Vec<Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::HashSet::with_capacity(n);
    let mut ids = Vec::with_capacity(n);
    while ids.len() < n {
        let id: [u8; 16] = rng.gen();
        if seen.insert(id) {
            ids.push(id.to_vec());
        }
    }
    ids
}

fn trial_fails(params: &CuckooParams, algorithm: Algorithm, seed: u64) -> bool {
    let key = sample_key(seed);
    let ids = random_ids(seed, params.n);
    let graph = build_graph(params, &ids, &key).expect("fresh ids are distinct");
    !construct_on_graph(&graph, algorithm, seed).expect("valid params").is_success()
}

/// Estimates the construction failure probability over `trials`
/// independently keyed trials.
pub fn estimate_failure(
    params: &CuckooParams,
    algorithm: Algorithm,
    trials: u64,
    master_seed: u64,
) -> Result<FailureEstimate> {
    if trials < 1 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    if algorithm == Algorithm::Lsa && params.ell != 1 {
        return Err(Error::Unsupported("LSA requires ell = 1".into()));
    }
    let failures = (0..trials)
        .into_par_iter()
        .map(|t| u64::from(trial_fails(params, algorithm, child_seed(master_seed, t))))
        .sum();
    let (ci_lo, ci_hi) = wilson_interval(failures, trials);
    Ok(FailureEstimate {
        params: *params,
        algorithm,
        trials,
        failures,
        rate: failures as f64 / trials as f64,
        ci_lo,
        ci_hi,
        master_seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundProbe {
    pub params: CuckooParams,
    pub trials: u64,
    /// Rate of the proof's bad event: the kl + s designated items after
    /// the first all hash into the first item's k-entry set.
    pub event_rate: f64,
    /// Overall construction failure rate on the same trials.
    pub failure_rate: f64,
    /// Theoretical floor (k/b)^(k^2 l + k s).
    pub floor: f64,
}

/// Probes the failure lower bound: counts the confinement event of
/// kl + s + 1 designated items and the overall construction failure rate,
/// which must dominate the floor.
pub fn probe_err_lb(params: &CuckooParams, trials: u64, master_seed: u64) -> Result<LowerBoundProbe> {
    let designated = params.query_overhead() + 1;
    if designated > params.n {
        return Err(Error::Domain(format!(
            "need kl + s + 1 = {designated} <= n = {}",
            params.n
        )));
    }
    if trials < 1 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let (events, failures): (u64, u64) = (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = child_seed(master_seed, t);
            let key = sample_key(seed);
            let ids = random_ids(seed, params.n);
            let event = (0..params.k).all(|i| {
                let anchor = entry_index_unchecked(&key, i, &ids[0], params);
                ids[1..designated]
                    .iter()
                    .all(|id| entry_index_unchecked(&key, i, id, params) == anchor)
            });
            let graph = build_graph(params, &ids, &key).expect("fresh ids");
            let failed = !construct_on_graph(&graph, Algorithm::Matching, seed)
                .expect("valid params")
                .is_success();
            (u64::from(event), u64::from(failed))
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let exponent = (params.k * params.k * params.ell + params.k * params.s) as f64;
    Ok(LowerBoundProbe {
        params: *params,
        trials,
        event_rate: events as f64 / trials as f64,
        failure_rate: failures as f64 / trials as f64,
        floor: (params.k as f64 / params.b as f64).powf(exponent),
    })
}

/// Entry-count specification in a grid: explicit, or the module default
/// 2n/l rounded up to a multiple of k.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BSpec {
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub n: Vec<usize>,
    pub k: Vec<usize>,
    pub b: Vec<BSpec>,
    pub ell: Vec<usize>,
    pub s: Vec<usize>,
    pub algo: Vec<Algorithm>,
    pub trials: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRowError {
    pub row: usize,
    pub message: String,
}

/// Runs every grid point in row-major order (n, k, b, l, s, algo) starting
/// at `start_row`; each row draws its seed from the master seed and the
/// row index, so a resumed run reproduces the original rows.
pub fn run_grid(
    spec: &GridSpec,
    master_seed: u64,
    start_row: usize,
) -> Vec<std::result::Result<FailureEstimate, GridRowError>> {
    let mut rows = Vec::new();
    let mut row = 0usize;
    for &n in &spec.n {
        for &k in &spec.k {
            for &b in &spec.b {
                for &ell in &spec.ell {
                    for &s in &spec.s {
                        for &algo in &spec.algo {
                            if row < start_row {
                                row += 1;
                                continue;
                            }
                            let row_seed = child_seed(master_seed, row as u64);
                            let b = match b {
                                BSpec::Auto => crate::params::default_b(n, k, ell),
                                BSpec::Fixed(v) => v,
                            };
                            let out = CuckooParams::new(n, k, b, ell, s)
                                .and_then(|p| estimate_failure(&p, algo, spec.trials, row_seed))
                                .map_err(|e| GridRowError { row, message: e.to_string() });
                            rows.push(out);
                            row += 1;
                        }
                    }
                }
            }
        }
    }
    rows
}

/// Formats a float with 6 significant digits for CSV output.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{x:.5e}")
}

pub const CSV_HEADER: &str = "n,k,b,ell,s,algo,trials,failures,rate,ci_lo,ci_hi,master_seed";

impl FailureEstimate {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.params.n,
            self.params.k,
            self.params.b,
            self.params.ell,
            self.params.s,
            self.algorithm.name(),
            self.trials,
            self.failures,
            fmt_sig6(self.rate),
            fmt_sig6(self.ci_lo),
            fmt_sig6(self.ci_hi),
            self.master_seed,
        )
    }
}
