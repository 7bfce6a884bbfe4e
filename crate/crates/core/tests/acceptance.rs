//! Acceptance suite: ten end-to-end criteria covering construction
//! equivalence, the Hall oracle, quantitative failure-probability probes,
//! the enumeration attack, batch codes, batch PIR, and CLI determinism.
//! Each criterion prints one PASS/FAIL line; the test fails if any do.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cuckoo::batchpir::{adversarial_error_bench, BatchOutcome, BatchPirServer};
use cuckoo::construct::{construct, construct_on_graph, Algorithm};
use cuckoo::estimator::{estimate_failure, probe_err_lb, random_ids, three_sigma};
use cuckoo::graph::{build_graph, find_hall_violation, max_left_matching, CuckooGraph};
use cuckoo::hashing::child_seed;
use cuckoo::params::{round_up_to_multiple, Calibration};
use cuckoo::pbc::{pbc_decode, pbc_encode, pbc_init, pbc_schedule, Inner, Mode, ScheduleOutcome};
use cuckoo::robustness::{attack_first_half, evaluate_attack, AttackOutcome};
use cuckoo::{sample_key, CuckooParams};

fn params(n: usize, k: usize, b: usize, ell: usize, s: usize) -> CuckooParams {
    CuckooParams::new(n, k, b, ell, s).unwrap()
}

fn check(results: &mut Vec<(usize, &'static str, Result<(), String>)>, idx: usize, name: &'static str, r: Result<(), String>) {
    println!(
        "criterion {idx:2} {:4} {name}{}",
        if r.is_ok() { "PASS" } else { "FAIL" },
        r.as_ref().err().map(|e| format!(" ({e})")).unwrap_or_default(),
    );
    results.push((idx, name, r));
}

fn within(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let elapsed = start.elapsed();
    if elapsed <= limit {
        Ok(())
    } else {
        Err(format!("{what} took {elapsed:?}, limit {limit:?}"))
    }
}

/// 1. Every construction algorithm agrees with the matching oracle on
/// 10^4 random instances; LSA agrees on the l = 1 subset.
fn oracle_equivalence() -> Result<(), String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for i in 0..10_000u64 {
        let n = rng.gen_range(1..=64);
        let k = rng.gen_range(2..=6);
        let ell = rng.gen_range(1..=2);
        let s = rng.gen_range(0..=2);
        let b = round_up_to_multiple(rng.gen_range(2 * n..=4 * n), k);
        let p = params(n, k, b, ell, s);
        let key = sample_key(i);
        let ids = random_ids(i, n);
        let graph = build_graph(&p, &ids, &key).unwrap();
        let expected = max_left_matching(&graph).is_left_perfect();
        for algo in [Algorithm::Bfs, Algorithm::RandomWalk, Algorithm::Matching] {
            let got = construct_on_graph(&graph, algo, i).unwrap().is_success();
            if got != expected {
                return Err(format!("{} disagrees with oracle on instance {i}", algo.name()));
            }
        }
        if ell == 1 {
            let got = construct_on_graph(&graph, Algorithm::Lsa, i).unwrap().is_success();
            if got != expected {
                return Err(format!("lsa disagrees with oracle on instance {i}"));
            }
        }
    }
    within(start, Duration::from_secs(120), "oracle equivalence")
}

/// 2. find_hall_violation returns a witness iff the maximum matching is
/// not left-perfect, on 1000 random small graphs.
fn hall_iff_matching() -> Result<(), String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for i in 0..1000 {
        let k = rng.gen_range(1..=3);
        let b = k * rng.gen_range(1..=4);
        let ell = rng.gen_range(1..=2);
        let s = rng.gen_range(0..=2);
        let n = rng.gen_range(1..=10);
        let p = params(n, k, b, ell, s);
        let total = p.total_slots();
        let adjacency: Vec<Vec<usize>> = (0..n)
            .map(|_| {
                let degree = rng.gen_range(1..=3.min(total));
                let mut neighbors: Vec<usize> =
                    (0..degree).map(|_| rng.gen_range(0..total)).collect();
                neighbors.sort_unstable();
                neighbors.dedup();
                neighbors
            })
            .collect();
        let graph = CuckooGraph::from_adjacency(p, adjacency).unwrap();
        let perfect = max_left_matching(&graph).is_left_perfect();
        let witness = find_hall_violation(&graph, n).unwrap();
        if perfect == witness.is_some() {
            return Err(format!("hall/matching disagreement on graph {i}"));
        }
    }
    within(start, Duration::from_secs(60), "hall check")
}

/// 3. Sets of exactly n = kl + s items always allocate, across 10^3
/// seed-searched instances per the small-set guarantee.
fn small_set_guarantee() -> Result<(), String> {
    let shapes = [(2, 1, 0), (2, 1, 2), (2, 2, 1), (3, 1, 0), (3, 2, 2), (4, 1, 1), (5, 1, 0)];
    for seed in 0..1000u64 {
        let (k, ell, s) = shapes[(seed as usize) % shapes.len()];
        let b = if seed % 2 == 0 { k } else { 2 * k };
        let n = k * ell + s;
        let p = params(n, k, b, ell, s);
        let key = sample_key(seed);
        let ids = random_ids(seed, n);
        for algo in Algorithm::ALL {
            if algo == Algorithm::Lsa && ell != 1 {
                continue;
            }
            if !construct(&p, &key, &ids, algo, seed).unwrap().is_success() {
                return Err(format!("{} failed at seed {seed} (k={k} l={ell} s={s})", algo.name()));
            }
        }
    }
    Ok(())
}

/// 4. Measured failure rate at k=2, l=1, s=0, b=8, n=3 dominates the
/// 1/256 lower-bound floor within Monte Carlo noise.
fn lower_bound_probe() -> Result<(), String> {
    let start = Instant::now();
    let trials = 1_000_000u64;
    let probe = probe_err_lb(&params(3, 2, 8, 1, 0), trials, 404).map_err(|e| e.to_string())?;
    let floor = 1.0 / 256.0;
    if (probe.floor - floor).abs() > 1e-15 {
        return Err(format!("floor arithmetic off: {}", probe.floor));
    }
    let sigma = (floor * (1.0 - floor) / trials as f64).sqrt();
    if probe.failure_rate < floor - 3.0 * sigma {
        return Err(format!("failure rate {} below floor {floor} - 3 sigma", probe.failure_rate));
    }
    within(start, Duration::from_secs(60), "lower-bound probe")
}

/// 5. Failure rate is non-increasing in k at fixed load, k in 2..=5.
fn k_monotonicity() -> Result<(), String> {
    let trials = 100_000u64;
    let mut prev: Option<f64> = None;
    for k in 2..=5 {
        let b = round_up_to_multiple(2048, k);
        let p = params(1024, k, b, 1, 0);
        let est = estimate_failure(&p, Algorithm::Matching, trials, 500 + k as u64)
            .map_err(|e| e.to_string())?;
        if let Some(prev) = prev {
            let tol = three_sigma(prev, est.rate, trials);
            if est.rate > prev + tol {
                return Err(format!("rate increased at k={k}: {} > {prev} + {tol}", est.rate));
            }
        }
        prev = Some(est.rate);
    }
    Ok(())
}

/// 6. At equal query overhead kl + s = 4, more hash functions beat more
/// cells and a stash.
fn overhead_comparison() -> Result<(), String> {
    let trials = 100_000u64;
    let rate = |k: usize, ell: usize, s: usize, seed: u64| -> Result<f64, String> {
        let b = round_up_to_multiple(2 * 1024 / ell, k);
        let p = params(1024, k, b, ell, s);
        Ok(estimate_failure(&p, Algorithm::Matching, trials, seed).map_err(|e| e.to_string())?.rate)
    };
    let r_k4 = rate(4, 1, 0, 601)?;
    let r_stash = rate(2, 1, 2, 602)?;
    let r_cells = rate(2, 2, 0, 603)?;
    if r_k4 > r_stash + three_sigma(r_k4, r_stash, trials) {
        return Err(format!("k=4 rate {r_k4} above stash rate {r_stash}"));
    }
    if r_k4 > r_cells + three_sigma(r_k4, r_cells, trials) {
        return Err(format!("k=4 rate {r_k4} above cells rate {r_cells}"));
    }
    Ok(())
}

/// 7. The enumeration attack splits sharply by k, and every found set
/// deterministically fails construction.
fn attack_split() -> Result<(), String> {
    let budget = 100_000u64;
    let runs = 100u64;
    let p2 = params(16, 2, 32, 1, 0);
    let p8 = params(16, 8, 32, 1, 0);
    let e2 = evaluate_attack(&p2, budget, runs, 700).map_err(|e| e.to_string())?;
    let e8 = evaluate_attack(&p8, budget, runs, 701).map_err(|e| e.to_string())?;
    if e2.rate < 0.99 {
        return Err(format!("k=2 attack success {} < 0.99", e2.rate));
    }
    if e8.rate > 0.01 {
        return Err(format!("k=8 attack success {} > 0.01", e8.rate));
    }
    for (p, seed_base) in [(&p2, 700u64), (&p8, 701)] {
        for r in 0..runs {
            let seed = child_seed(seed_base, r);
            let key = sample_key(seed);
            if let AttackOutcome::FoundSet(ids) = attack_first_half(&key, p, budget).outcome {
                let ok = construct(p, &key, &ids, Algorithm::Matching, seed)
                    .map_err(|e| e.to_string())?
                    .is_success();
                if ok {
                    return Err(format!("found set at run {r} did not break construction"));
                }
            }
        }
    }
    Ok(())
}

/// 8. Batch-code round trip at n=256, q=16, lambda=20: exact codeword
/// count, no schedule failures, perfect decoding over 10^4 batches.
fn pbc_round_trip() -> Result<(), String> {
    let start = Instant::now();
    let prms = pbc_init(256, 16, 20, Mode::Standard, 800, &Calibration::default())
        .map_err(|e| e.to_string())?;
    let k = match &prms.inner {
        Inner::Cuckoo { cuckoo, .. } => cuckoo.k,
        Inner::Replication => return Err("expected cuckoo inner code".into()),
    };
    if prms.codeword_count() != k * prms.n {
        return Err(format!("codewords {} != k*n = {}", prms.codeword_count(), k * prms.n));
    }
    let db: Vec<Vec<u8>> = (0..prms.n).map(|i| (i as u64).to_le_bytes().to_vec()).collect();
    let buckets = pbc_encode(&prms, &db).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(801);
    for t in 0..10_000 {
        let query = rand::seq::index::sample(&mut rng, prms.n, prms.q).into_vec();
        let schedule = match pbc_schedule(&prms, &query).map_err(|e| e.to_string())? {
            ScheduleOutcome::Scheduled(s) => s,
            ScheduleOutcome::Failure => return Err(format!("schedule failure at batch {t}")),
        };
        let fetched = cuckoo::pbc::fetch_plain(&buckets, &schedule).map_err(|e| e.to_string())?;
        let values = pbc_decode(&prms, &query, &schedule, &fetched).map_err(|e| e.to_string())?;
        for (idx, value) in query.iter().zip(&values) {
            if value != &db[*idx] {
                return Err(format!("decode mismatch at batch {t}, index {idx}"));
            }
        }
    }
    within(start, Duration::from_secs(120), "pbc round trip")
}

/// 9. Batch PIR on the same instance: correct answers, exact cost
/// identity, bounded buckets, and the adversarial split between robust
/// parameters and a forced-small k.
fn batch_pir() -> Result<(), String> {
    let prms = pbc_init(256, 16, 20, Mode::Standard, 900, &Calibration::default())
        .map_err(|e| e.to_string())?;
    let n_codewords = prms.codeword_count();
    let db: Vec<Vec<u8>> = (0..prms.n).map(|i| vec![(i % 251) as u8; 32]).collect();
    let server = BatchPirServer::new(prms, &db).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(901);
    let mut max_bucket = 0usize;
    for t in 0..10_000u64 {
        let query = rand::seq::index::sample(&mut rng, server.prms.n, server.prms.q).into_vec();
        match server.batch_retrieve(&query, t).map_err(|e| e.to_string())? {
            BatchOutcome::ScheduleFailure => return Err(format!("schedule failure at batch {t}")),
            BatchOutcome::Success { values, cost } => {
                for (idx, value) in query.iter().zip(&values) {
                    if value != &db[*idx] {
                        return Err(format!("wrong answer at batch {t}, index {idx}"));
                    }
                }
                if cost.bucket_sizes.iter().sum::<usize>() != n_codewords {
                    return Err(format!("cost identity broken at batch {t}"));
                }
                max_bucket = max_bucket.max(cost.bucket_sizes.iter().copied().max().unwrap());
            }
        }
    }
    println!("  max bucket size observed: {max_bucket} (nk/q = {})", 256 * 4 / 16);

    // Robust parameters shrug off the scripted attacker.
    let robust = adversarial_error_bench(
        |seed| pbc_init(256, 16, 20, Mode::Robust, seed, &Calibration::default()),
        100_000,
        100,
        902,
    )
    .map_err(|e| e.to_string())?;
    if robust.schedule_failures != 0 {
        return Err(format!("robust mode had {} adversarial failures", robust.schedule_failures));
    }
    // A deliberately small k collapses against the same attacker.
    let weak = adversarial_error_bench(
        |seed| {
            cuckoo::pbc::PbcParams::with_cuckoo(
                4096,
                16,
                20,
                Mode::Standard,
                params(16, 2, 32, 1, 0),
                sample_key(seed),
            )
        },
        100_000,
        100,
        903,
    )
    .map_err(|e| e.to_string())?;
    if weak.rate < 0.99 {
        return Err(format!("k=2 adversarial failure rate {} < 0.99", weak.rate));
    }
    Ok(())
}

/// 10. Repeating CLI commands with the same seed yields byte-identical
/// output, including across --jobs widths.
fn cli_determinism() -> Result<(), String> {
    let run = |args: &[&str]| -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_cuckoo"))
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("command {args:?} exited {:?}", out.status.code()));
        }
        Ok(out.stdout)
    };
    let est = ["estimate", "--n", "256", "--k", "3", "--trials", "3000", "--seed", "42"];
    let mut jobs1 = est.to_vec();
    jobs1.extend(["--jobs", "1"]);
    let mut jobs8 = est.to_vec();
    jobs8.extend(["--jobs", "8"]);
    let a = run(&jobs1)?;
    if a != run(&jobs1)? {
        return Err("repeat run differed".into());
    }
    if a != run(&jobs8)? {
        return Err("--jobs 8 differed from --jobs 1".into());
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("grid.cfg");
    std::fs::write(&config, "n = 128\nk = 2,4\nb = auto\ns = 0,1\ntrials = 1000\n")
        .map_err(|e| e.to_string())?;
    let cfg = config.to_str().unwrap();
    let g1 = run(&["grid", "--config", cfg, "--seed", "13", "--jobs", "1"])?;
    let g8 = run(&["grid", "--config", cfg, "--seed", "13", "--jobs", "8"])?;
    if g1 != g8 {
        return Err("grid output depends on --jobs".into());
    }
    let p1 = run(&["pir-bench", "--n", "64", "--q", "8", "--trials", "20", "--seed", "3"])?;
    let p2 = run(&["pir-bench", "--n", "64", "--q", "8", "--trials", "20", "--seed", "3"])?;
    if p1 != p2 {
        return Err("pir-bench output not reproducible".into());
    }
    Ok(())
}

#[test]
fn acceptance() {
    let mut results = Vec::new();
    check(&mut results, 1, "construction algorithms match the matching oracle", oracle_equivalence());
    check(&mut results, 2, "hall violation iff no left-perfect matching", hall_iff_matching());
    check(&mut results, 3, "sets of kl + s items always allocate", small_set_guarantee());
    check(&mut results, 4, "failure rate dominates the 1/256 floor", lower_bound_probe());
    check(&mut results, 5, "failure rate non-increasing in k", k_monotonicity());
    check(&mut results, 6, "more hash functions beat cells/stash at equal overhead", overhead_comparison());
    check(&mut results, 7, "enumeration attack splits by k and breaks construction", attack_split());
    check(&mut results, 8, "batch code round trip is exact and failure-free", pbc_round_trip());
    check(&mut results, 9, "batch PIR correct, cost-exact, and robust under attack", batch_pir());
    check(&mut results, 10, "CLI output byte-identical across runs and --jobs", cli_determinism());
    let failed: Vec<String> = results
        .iter()
        .filter(|(_, _, r)| r.is_err())
        .map(|(i, name, _)| format!("criterion {i}: {name}"))
        .collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}
