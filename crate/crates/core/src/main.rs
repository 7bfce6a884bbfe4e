//! Command-line front end: reproducible experiments over the library,
//! emitting CSV artifacts. All randomness flows from `--seed`; repeated
//! invocations with the same arguments produce byte-identical output
//! regardless of `--jobs`.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cuckoo::batchpir::{BatchOutcome, BatchPirServer};
use cuckoo::construct::Algorithm;
use cuckoo::estimator::{
    estimate_failure, random_ids, run_grid, BSpec, GridSpec, CSV_HEADER,
};
use cuckoo::hashing::child_seed;
use cuckoo::params::{b_single_hash, default_b, k_for_failure, k_robust, Calibration};
use cuckoo::pbc::{pbc_init, pbc_schedule, Inner, Mode, PbcParams, ScheduleOutcome};
use cuckoo::robustness::evaluate_attack;
use cuckoo::table::{build_table, BuildOutcome};
use cuckoo::{sample_key, CuckooParams};

#[derive(Parser)]
#[command(name = "cuckoo", about = "Generalized cuckoo hashing experiments", version)]
struct Cli {
    /// Worker threads for Monte Carlo trials; output is independent of this.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct TableArgs {
    /// Number of items.
    #[arg(long)]
    n: usize,
    /// Number of hash functions / sub-tables.
    #[arg(long)]
    k: usize,
    /// Total entries across sub-tables; defaults to 2n/ell rounded up to a
    /// multiple of k.
    #[arg(long)]
    b: Option<usize>,
    /// Cells per entry.
    #[arg(long, default_value_t = 1)]
    ell: usize,
    /// Stash capacity.
    #[arg(long, default_value_t = 0)]
    s: usize,
}

impl TableArgs {
    fn params(&self) -> cuckoo::Result<CuckooParams> {
        let b = self.b.unwrap_or_else(|| default_b(self.n, self.k, self.ell));
        CuckooParams::new(self.n, self.k, b, self.ell, self.s)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Build one table on seeded random ids and report the outcome.
    Construct {
        #[command(flatten)]
        table: TableArgs,
        #[arg(long, default_value = "bfs")]
        algo: Algorithm,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the built table to this file on success.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo failure-probability estimate; emits one CSV row.
    Estimate {
        #[command(flatten)]
        table: TableArgs,
        #[arg(long, default_value = "bfs")]
        algo: Algorithm,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a grid of estimates from a config file; emits CSV rows in grid
    /// order, reporting bad rows on stderr.
    Grid {
        /// Line-oriented `key = value` config; lists are comma-separated,
        /// `b` accepts `auto`. Keys: n, k, b, ell, s, algo, trials.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// First grid row to run (for resuming).
        #[arg(long, default_value_t = 0)]
        start_row: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the enumeration attack over independently keyed runs.
    Attack {
        #[command(flatten)]
        table: TableArgs,
        /// Hash-evaluation budget per run.
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
        #[arg(long, default_value_t = 100)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Batch-code round trip: schedule random batches and verify decoding.
    PbcBench {
        #[command(flatten)]
        pbc: PbcArgs,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print each bucket's database indices before the CSV.
        #[arg(long)]
        dump_buckets: bool,
    },
    /// Batch PIR over the batch code: costs and schedule failures.
    PirBench {
        #[command(flatten)]
        pbc: PbcArgs,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Find the smallest passing constant for each parameter formula and
    /// write the calibration file.
    Calibrate {
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "calibration.txt")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct PbcArgs {
    /// Database size.
    #[arg(long)]
    n: usize,
    /// Batch size.
    #[arg(long)]
    q: usize,
    /// Failure exponent: target error 2^-lambda.
    #[arg(long, default_value_t = 20)]
    lambda: u32,
    #[arg(long, default_value = "standard")]
    mode: Mode,
    /// Calibration file for the parameter formulas; defaults when omitted.
    #[arg(long)]
    calibration: Option<PathBuf>,
}

impl PbcArgs {
    fn init(&self, seed: u64) -> Result<PbcParams, String> {
        let cal = match &self.calibration {
            None => Calibration::default(),
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
                Calibration::parse(&text).map_err(|e| e.to_string())?
            }
        };
        pbc_init(self.n, self.q, self.lambda, self.mode, seed, &cal).map_err(|e| e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(cli.cmd)) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), String> {
    match out {
        None => {
            print!("{text}");
            std::io::stdout().flush().map_err(|e| e.to_string())
        }
        Some(path) => fs::write(path, text).map_err(|e| e.to_string()),
    }
}

fn run(cmd: Cmd) -> Result<ExitCode, String> {
    match cmd {
        Cmd::Construct { table, algo, seed, out } => {
            let params = table.params().map_err(|e| e.to_string())?;
            let key = sample_key(seed);
            let items: Vec<(Vec<u8>, Vec<u8>)> = random_ids(seed, params.n)
                .into_iter()
                .map(|id| (id.clone(), id))
                .collect();
            let outcome = build_table(&params, &key, &items, algo, seed)
                .map_err(|e| e.to_string())?;
            match outcome {
                BuildOutcome::Built { table, stats } => {
                    println!(
                        "Success: n={} k={} b={} ell={} s={} algo={} steps={} evictions={} fallback={}",
                        params.n, params.k, params.b, params.ell, params.s,
                        algo.name(), stats.steps, stats.evictions, stats.fallback_used,
                    );
                    if let Some(path) = out {
                        let mut f = fs::File::create(path).map_err(|e| e.to_string())?;
                        table.write_to(&mut f).map_err(|e| e.to_string())?;
                    }
                    Ok(ExitCode::SUCCESS)
                }
                BuildOutcome::Failure { stats } => {
                    println!(
                        "Failure: n={} k={} b={} ell={} s={} algo={} steps={} evictions={} fallback={}",
                        params.n, params.k, params.b, params.ell, params.s,
                        algo.name(), stats.steps, stats.evictions, stats.fallback_used,
                    );
                    Ok(ExitCode::FAILURE)
                }
            }
        }
        Cmd::Estimate { table, algo, trials, seed, out } => {
            let params = table.params().map_err(|e| e.to_string())?;
            let est = estimate_failure(&params, algo, trials, seed).map_err(|e| e.to_string())?;
            emit(&out, &format!("{CSV_HEADER}\n{}\n", est.to_csv_row()))?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Grid { config, seed, start_row, out } => {
            let text = fs::read_to_string(&config).map_err(|e| e.to_string())?;
            let spec = parse_grid_config(&text)?;
            let rows = run_grid(&spec, seed, start_row);
            let mut csv = String::from(CSV_HEADER);
            csv.push('\n');
            for row in rows {
                match row {
                    Ok(est) => {
                        csv.push_str(&est.to_csv_row());
                        csv.push('\n');
                    }
                    Err(e) => eprintln!("row {}: {}", e.row, e.message),
                }
            }
            emit(&out, &csv)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Attack { table, budget, runs, seed } => {
            let params = table.params().map_err(|e| e.to_string())?;
            let eval = evaluate_attack(&params, budget, runs, seed).map_err(|e| e.to_string())?;
            println!(
                "runs={} successes={} rate={} ci_lo={} ci_hi={}",
                eval.runs,
                eval.successes,
                cuckoo::estimator::fmt_sig6(eval.rate),
                cuckoo::estimator::fmt_sig6(eval.ci_lo),
                cuckoo::estimator::fmt_sig6(eval.ci_hi),
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::PbcBench { pbc, trials, seed, dump_buckets } => {
            let prms = pbc.init(seed)?;
            let db = seeded_db(prms.n, seed);
            let buckets = cuckoo::pbc::pbc_encode(&prms, &db).map_err(|e| e.to_string())?;
            if dump_buckets {
                for (i, bucket) in buckets.buckets.iter().enumerate() {
                    let indices: Vec<String> = bucket
                        .iter()
                        .map(|(idx, _)| idx.to_string())
                        .collect();
                    println!("bucket {i}: {}", indices.join(","));
                }
            }
            let mut failures = 0u64;
            for t in 0..trials {
                let query = sample_query(prms.n, prms.q, child_seed(seed, t));
                match pbc_schedule(&prms, &query).map_err(|e| e.to_string())? {
                    ScheduleOutcome::Failure => failures += 1,
                    ScheduleOutcome::Scheduled(schedule) => {
                        let fetched = cuckoo::pbc::fetch_plain(&buckets, &schedule)
                            .map_err(|e| e.to_string())?;
                        let values = cuckoo::pbc::pbc_decode(&prms, &query, &schedule, &fetched)
                            .map_err(|e| e.to_string())?;
                        for (idx, value) in query.iter().zip(&values) {
                            if value != &db[*idx] {
                                return Err(format!("decode mismatch at index {idx}"));
                            }
                        }
                    }
                }
            }
            let k = match &prms.inner {
                Inner::Replication => 0,
                Inner::Cuckoo { cuckoo, .. } => cuckoo.k,
            };
            println!("n,q,lambda,mode,k,buckets,codewords,trials,schedule_failures,max_bucket");
            println!(
                "{},{},{},{},{},{},{},{},{},{}",
                prms.n,
                prms.q,
                prms.lambda,
                mode_name(prms.mode),
                k,
                prms.bucket_count(),
                buckets.total_codewords(),
                trials,
                failures,
                buckets.max_load(),
            );
            Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Cmd::PirBench { pbc, trials, seed } => {
            let prms = pbc.init(seed)?;
            let db = seeded_db(prms.n, seed);
            let server = BatchPirServer::new(prms, &db).map_err(|e| e.to_string())?;
            let mut failures = 0u64;
            let (mut up, mut down, mut touches) = (0u64, 0u64, 0u64);
            let mut max_bucket = 0usize;
            for t in 0..trials {
                let query = sample_query(server.prms.n, server.prms.q, child_seed(seed, t));
                match server
                    .batch_retrieve(&query, child_seed(seed, trials + t))
                    .map_err(|e| e.to_string())?
                {
                    BatchOutcome::ScheduleFailure => failures += 1,
                    BatchOutcome::Success { values, cost } => {
                        for (idx, value) in query.iter().zip(&values) {
                            if value != &db[*idx] {
                                return Err(format!("retrieval mismatch at index {idx}"));
                            }
                        }
                        up += cost.upload_bits;
                        down += cost.download_bits;
                        touches += cost.server_entry_touches;
                        max_bucket =
                            max_bucket.max(cost.bucket_sizes.iter().copied().max().unwrap_or(0));
                    }
                }
            }
            println!(
                "n,q,lambda,mode,trials,schedule_failures,upload_bits,download_bits,entry_touches,max_bucket"
            );
            println!(
                "{},{},{},{},{},{},{},{},{},{}",
                server.prms.n,
                server.prms.q,
                server.prms.lambda,
                mode_name(server.prms.mode),
                trials,
                failures,
                up,
                down,
                touches,
                max_bucket,
            );
            Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Cmd::Calibrate { trials, seed, out } => {
            let cal = calibrate(trials, seed)?;
            fs::write(&out, cal.to_file_string()).map_err(|e| e.to_string())?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Standard => "standard",
        Mode::Robust => "robust",
    }
}

/// Deterministic 32-byte values for a bench database.
fn seeded_db(n: usize, seed: u64) -> Vec<Vec<u8>> {
    use rand::RngCore;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    (0..n)
        .map(|_| {
            let mut v = vec![0u8; 32];
            rng.fill_bytes(&mut v);
            v
        })
        .collect()
}

/// q distinct indices in [0, n), seeded.
fn sample_query(n: usize, q: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rand::seq::index::sample(&mut rng, n, q).into_vec()
}

fn parse_list<T: std::str::FromStr>(value: &str, key: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(|item| {
            item.trim()
                .parse::<T>()
                .map_err(|e| format!("grid config: bad `{key}` value `{}`: {e}", item.trim()))
        })
        .collect()
}

fn parse_grid_config(text: &str) -> Result<GridSpec, String> {
    let mut spec = GridSpec {
        n: Vec::new(),
        k: Vec::new(),
        b: vec![BSpec::Auto],
        ell: vec![1],
        s: vec![0],
        algo: vec![Algorithm::Bfs],
        trials: 10_000,
    };
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("grid config line {}: expected `key = value`", lineno + 1))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "n" => spec.n = parse_list(value, key)?,
            "k" => spec.k = parse_list(value, key)?,
            "b" => {
                spec.b = value
                    .split(',')
                    .map(|item| {
                        let item = item.trim();
                        if item == "auto" {
                            Ok(BSpec::Auto)
                        } else {
                            item.parse::<usize>()
                                .map(BSpec::Fixed)
                                .map_err(|e| format!("grid config: bad `b` value `{item}`: {e}"))
                        }
                    })
                    .collect::<Result<_, _>>()?;
            }
            "ell" => spec.ell = parse_list(value, key)?,
            "s" => spec.s = parse_list(value, key)?,
            "algo" => spec.algo = parse_list(value, key)?,
            "trials" => {
                spec.trials = value
                    .parse()
                    .map_err(|e| format!("grid config: bad `trials` value `{value}`: {e}"))?;
            }
            other => return Err(format!("grid config: unknown key `{other}`")),
        }
    }
    if spec.n.is_empty() || spec.k.is_empty() {
        return Err("grid config: `n` and `k` are required".into());
    }
    Ok(spec)
}

const CALIBRATION_STEP: f64 = 0.25;
const CALIBRATION_MAX_C: f64 = 4.0;

/// Finds the smallest constant (from 1.0 in steps of 0.25) for which every
/// probe point meets its error target.
fn calibrate_constant<F>(name: &str, mut probe: F) -> Result<f64, String>
where
    F: FnMut(f64) -> Result<bool, String>,
{
    let mut c = 1.0;
    loop {
        if probe(c)? {
            println!("{name}: c = {c:.2} passes");
            return Ok(c);
        }
        println!("{name}: c = {c:.2} fails, raising");
        c += CALIBRATION_STEP;
        if c > CALIBRATION_MAX_C {
            return Err(format!("{name}: no constant up to {CALIBRATION_MAX_C} passes"));
        }
    }
}

fn calibrate(trials: u64, seed: u64) -> Result<Calibration, String> {
    // k_for_failure: the formula's k with the default table size must meet
    // the target failure probability empirically.
    let k_points = [(1024usize, 10i32), (1024, 13), (4096, 10), (4096, 13)];
    let c_k = calibrate_constant("k_for_failure", |c| {
        for (i, &(n, lg)) in k_points.iter().enumerate() {
            let eps = 2f64.powi(-lg);
            let k = k_for_failure(n, eps, c).map_err(|e| e.to_string())?;
            let b = default_b(n, k, 1);
            let params = CuckooParams::new(n, k, b, 1, 0).map_err(|e| e.to_string())?;
            let est = estimate_failure(&params, Algorithm::Bfs, trials, child_seed(seed, i as u64))
                .map_err(|e| e.to_string())?;
            if est.rate > eps {
                return Ok(false);
            }
        }
        Ok(true)
    })?;

    // k_robust: the enumeration attacker with the stated budget must find
    // nothing across independently keyed runs.
    let c_r = calibrate_constant("k_robust", |c| {
        let (n, budget, eps) = (1024usize, 10_000u64, 2f64.powi(-10));
        let k = k_robust(budget, eps, c).map_err(|e| e.to_string())?;
        let b = cuckoo::params::round_up_to_multiple(default_b(n, k, 1), k);
        let params = CuckooParams::new(n, k, b, 1, 0).map_err(|e| e.to_string())?;
        let eval = evaluate_attack(&params, budget, 100, child_seed(seed, 100))
            .map_err(|e| e.to_string())?;
        Ok(eval.successes == 0)
    })?;

    // b_single_hash: probed at small n and moderate targets so the
    // quadratic table stays in memory and the target rate is resolvable
    // at this trial count.
    let b_points = [(16usize, 4i32), (16, 6), (32, 4), (32, 6)];
    let c_b = calibrate_constant("b_single_hash", |c| {
        for (i, &(n, lg)) in b_points.iter().enumerate() {
            let eps = 2f64.powi(-lg);
            let b = b_single_hash(n, eps, c).map_err(|e| e.to_string())?;
            let params = CuckooParams::new(n, 1, b, 1, 0).map_err(|e| e.to_string())?;
            let est =
                estimate_failure(&params, Algorithm::Bfs, trials, child_seed(seed, 200 + i as u64))
                    .map_err(|e| e.to_string())?;
            if est.rate > eps {
                return Ok(false);
            }
        }
        Ok(true)
    })?;

    Ok(Calibration { k_for_failure: c_k, k_robust: c_r, b_single_hash: c_b })
}
