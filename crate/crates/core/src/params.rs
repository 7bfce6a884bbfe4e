//! Parameter-selection formulas. The underlying guarantees are
//! asymptotic, so every formula carries an explicit calibration constant
//! `c`; the committed calibration file records the empirically confirmed
//! operating point (see the `calibrate` CLI subcommand).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::hashing::CuckooParams;

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    Ok(())
}

/// Number of hash functions needed for construction failure probability
/// at most `epsilon` on n items:
/// k = max(4, ceil(c * (1 + sqrt(log2(1/eps) / log2 n)))).
pub fn k_for_failure(n: usize, epsilon: f64, c: f64) -> Result<usize> {
    check_epsilon(epsilon)?;
    if n < 2 {
        return Err(Error::Domain(format!("n = {n} must be at least 2")));
    }
    let ratio = (1.0 / epsilon).log2() / (n as f64).log2();
    let k = (c * (1.0 + ratio.sqrt())).ceil() as usize;
    Ok(k.max(4))
}

/// Number of hash functions for (Q, epsilon)-robustness:
/// k = ceil(c * log2(Q / epsilon)) + 4.
pub fn k_robust(q_budget: u64, epsilon: f64, c: f64) -> Result<usize> {
    check_epsilon(epsilon)?;
    if q_budget < 1 {
        return Err(Error::Domain("Q must be at least 1".into()));
    }
    let k = (c * (q_budget as f64 / epsilon).log2()).ceil() as usize;
    Ok(k + 4)
}

/// Entry count for the single-hash (k = 1, l = 1, s = 0) regime:
/// b = ceil(c * n^2 / epsilon).
pub fn b_single_hash(n: usize, epsilon: f64, c: f64) -> Result<usize> {
    check_epsilon(epsilon)?;
    if n < 1 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    Ok((c * (n as f64) * (n as f64) / epsilon).ceil() as usize)
}

/// Smallest k satisfying the overhead lower bound
/// k^2 * l + k * s >= log2(1/epsilon) / log2 n. Reported alongside chosen
/// parameters to show optimality gaps.
pub fn overhead_lower_bound(n: usize, epsilon: f64, ell: usize, s: usize) -> Result<usize> {
    check_epsilon(epsilon)?;
    if n < 2 {
        return Err(Error::Domain(format!("n = {n} must be at least 2")));
    }
    if ell < 1 {
        return Err(Error::Domain("ell must be at least 1".into()));
    }
    let bound = (1.0 / epsilon).log2() / (n as f64).log2();
    let mut k = 1usize;
    while ((k * k * ell + k * s) as f64) < bound {
        k += 1;
    }
    Ok(k)
}

/// Default entry count: b = 2n/l rounded up to a multiple of k.
pub fn default_b(n: usize, k: usize, ell: usize) -> usize {
    let target = (2 * n.max(1)).div_ceil(ell);
    round_up_to_multiple(target.max(k), k)
}

pub fn round_up_to_multiple(x: usize, k: usize) -> usize {
    x.div_ceil(k) * k
}

/// Convenience: full parameter set for n items at the given failure
/// target, using the calibrated constant.
pub fn params_for_failure(n: usize, epsilon: f64, calibration: &Calibration) -> Result<CuckooParams> {
    let k = k_for_failure(n, epsilon, calibration.k_for_failure)?;
    CuckooParams::new(n, k, default_b(n, k, 1), 1, 0)
}

/// Calibration constants, one per formula. Defaults to c = 1 everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub k_for_failure: f64,
    pub k_robust: f64,
    pub b_single_hash: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Self { k_for_failure: 1.0, k_robust: 1.0, b_single_hash: 1.0 }
    }
}

impl Calibration {
    /// Parses the committed plain-text format: one `formula_name = c`
    /// line per constant, `#` comments allowed.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Decode(format!("calibration line {}: missing '='", lineno + 1)))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Decode(format!("calibration line {}: bad number", lineno + 1)))?;
            values.insert(name.trim().to_string(), value);
        }
        let mut cal = Calibration::default();
        for (name, value) in values {
            match name.as_str() {
                "k_for_failure" => cal.k_for_failure = value,
                "k_robust" => cal.k_robust = value,
                "b_single_hash" => cal.b_single_hash = value,
                other => return Err(Error::Decode(format!("unknown calibration key: {other}"))),
            }
        }
        Ok(cal)
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        writeln!(out, "k_for_failure = {:.2}", self.k_for_failure).unwrap();
        writeln!(out, "k_robust = {:.2}", self.k_robust).unwrap();
        writeln!(out, "b_single_hash = {:.2}", self.b_single_hash).unwrap();
        out
    }
}
