//! Generalized cuckoo hashing CH(k, b, l, s) with k disjoint sub-tables:
//! perfect construction algorithms backed by a bipartite matching oracle,
//! Monte Carlo failure estimation, a concrete robustness adversary, and
//! probabilistic batch codes with a 2-server XOR batch PIR on top.

pub mod batchpir;
pub mod construct;
pub mod error;
pub mod estimator;
pub mod graph;
pub mod hashing;
pub mod params;
pub mod pbc;
pub mod robustness;
pub mod table;

pub use error::{Error, Result};
pub use hashing::{sample_key, CuckooParams, HashKey, SlotId};
