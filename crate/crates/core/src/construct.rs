//! Perfect construction algorithms: BFS augmentation, bounded random walk
//! with BFS fallback, local search allocation (LSA), and the maximum
//! matching oracle. All four return Success exactly when the cuckoo graph
//! admits a left-perfect matching.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{build_graph, max_left_matching, Allocation, CuckooGraph};
use crate::hashing::{CuckooParams, HashKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Bfs,
    RandomWalk,
    Lsa,
    Matching,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] =
        [Algorithm::Bfs, Algorithm::RandomWalk, Algorithm::Lsa, Algorithm::Matching];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Bfs => "bfs",
            Algorithm::RandomWalk => "random_walk",
            Algorithm::Lsa => "lsa",
            Algorithm::Matching => "matching",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bfs" => Ok(Algorithm::Bfs),
            "random_walk" => Ok(Algorithm::RandomWalk),
            "lsa" => Ok(Algorithm::Lsa),
            "matching" => Ok(Algorithm::Matching),
            other => Err(Error::InvalidParams(format!("unknown algorithm: {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConstructionStats {
    pub steps: u64,
    pub evictions: u64,
    pub fallback_used: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Success(Allocation),
    Failure,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructionResult {
    pub outcome: Outcome,
    pub stats: ConstructionStats,
}

impl ConstructionResult {
    pub fn is_success(&self) -> bool {
        matches!(self.outcome, Outcome::Success(_))
    }

    pub fn allocation(&self) -> Option<&Allocation> {
        match &self.outcome {
            Outcome::Success(a) => Some(a),
            Outcome::Failure => None,
        }
    }
}

/// Random-walk step bound before falling back to BFS.
pub fn random_walk_step_bound(n: usize) -> u64 {
    4 * n.max(1) as u64
}

/// Runs the chosen construction algorithm on `ids` under `key`.
pub fn construct(
    params: &CuckooParams,
    key: &HashKey,
    ids: &[Vec<u8>],
    algorithm: Algorithm,
    rng_seed: u64,
) -> Result<ConstructionResult> {
    if ids.len() != params.n {
        return Err(Error::InvalidParams(format!(
            "expected n = {} ids, got {}",
            params.n,
            ids.len()
        )));
    }
    let graph = build_graph(params, ids, key)?;
    construct_on_graph(&graph, algorithm, rng_seed)
}

/// Same as [`construct`] but reuses an already-built graph, so that
/// several algorithms can share one round of hashing.
pub fn construct_on_graph(
    graph: &CuckooGraph,
    algorithm: Algorithm,
    rng_seed: u64,
) -> Result<ConstructionResult> {
    match algorithm {
        Algorithm::Matching => Ok(matching_construct(graph)),
        Algorithm::Bfs => Ok(bfs_construct(graph)),
        Algorithm::RandomWalk => Ok(random_walk_construct(graph, rng_seed)),
        Algorithm::Lsa => lsa_construct(graph),
    }
}

fn matching_construct(graph: &CuckooGraph) -> ConstructionResult {
    let matching = max_left_matching(graph);
    let stats = ConstructionStats { steps: graph.left_count() as u64, ..Default::default() };
    if matching.is_left_perfect() {
        ConstructionResult { outcome: Outcome::Success(matching), stats }
    } else {
        ConstructionResult { outcome: Outcome::Failure, stats }
    }
}

/// Mutable allocation state shared by the insertion algorithms:
/// occupant[r] is the left vertex stored in right slot r.
#[derive(Debug, Clone)]
pub struct TableState {
    pub occupant: Vec<Option<usize>>,
}

impl TableState {
    pub fn new(graph: &CuckooGraph) -> Self {
        Self { occupant: vec![None; graph.right_count()] }
    }

    fn into_allocation(self, n: usize) -> Allocation {
        let mut assignment = vec![None; n];
        for (r, occ) in self.occupant.iter().enumerate() {
            if let Some(j) = occ {
                assignment[*j] = Some(r);
            }
        }
        Allocation { assignment }
    }
}

/// Breadth-first search for a shortest augmenting path from unmatched
/// left vertex `start` to a free right slot. Unmatched edges run left to
/// right; matched edges run right to left. Returns the reassignment list
/// in eviction order, or None when every reachable slot is saturated.
pub fn bfs_insert(
    graph: &CuckooGraph,
    state: &TableState,
    start: usize,
) -> Option<Vec<(usize, usize)>> {
    let mut visited = vec![false; graph.right_count()];
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; graph.left_count()];
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(start);
    while let Some(u) = queue.pop_front() {
        for &r in &graph.adjacency[u] {
            if visited[r] {
                continue;
            }
            visited[r] = true;
            match state.occupant[r] {
                None => {
                    // Free slot reached; unwind the path.
                    let mut path = vec![(u, r)];
                    let mut cur = u;
                    while cur != start {
                        let (pl, pr) = parent[cur].expect("parent chain");
                        path.push((pl, pr));
                        cur = pl;
                    }
                    path.reverse();
                    return Some(path);
                }
                Some(v) => {
                    if parent[v].is_none() && v != start {
                        parent[v] = Some((u, r));
                        queue.push_back(v);
                    }
                }
            }
        }
    }
    None
}

/// Applies an augmenting path produced by [`bfs_insert`].
pub fn apply_path(state: &mut TableState, path: &[(usize, usize)]) {
    // Assign from the free end backwards so no occupant is overwritten
    // before it has moved.
    for &(left, right) in path.iter().rev() {
        state.occupant[right] = Some(left);
    }
}

fn bfs_construct(graph: &CuckooGraph) -> ConstructionResult {
    let n = graph.left_count();
    let mut state = TableState::new(graph);
    let mut stats = ConstructionStats::default();
    for j in 0..n {
        match bfs_insert(graph, &state, j) {
            Some(path) => {
                stats.steps += 1;
                stats.evictions += (path.len() - 1) as u64;
                apply_path(&mut state, &path);
            }
            None => return ConstructionResult { outcome: Outcome::Failure, stats },
        }
    }
    ConstructionResult { outcome: Outcome::Success(state.into_allocation(n)), stats }
}

#[derive(Debug, PartialEq, Eq)]
pub enum WalkOutcome {
    Placed { evictions: u64 },
    /// The walk hit its step bound while holding `held`.
    Exhausted { held: usize, evictions: u64 },
}

/// Standard eviction walk for one item. Free probed slots (table cells
/// first, stash last, canonical order) are taken immediately; otherwise a
/// uniformly random occupant among the kl probed table cells is evicted
/// and the walk continues with it, up to `max_steps` evictions.
pub fn random_walk_insert(
    graph: &CuckooGraph,
    state: &mut TableState,
    item: usize,
    max_steps: u64,
    rng: &mut ChaCha8Rng,
) -> Result<WalkOutcome> {
    if max_steps < 1 {
        return Err(Error::InvalidParams("max_steps must be at least 1".into()));
    }
    let table_cells = graph.params.k * graph.params.ell;
    let mut held = item;
    let mut evictions = 0u64;
    loop {
        let probes = &graph.adjacency[held];
        if let Some(&free) = probes.iter().find(|&&r| state.occupant[r].is_none()) {
            state.occupant[free] = Some(held);
            return Ok(WalkOutcome::Placed { evictions });
        }
        if evictions >= max_steps {
            return Ok(WalkOutcome::Exhausted { held, evictions });
        }
        let victim_slot = probes[rng.gen_range(0..table_cells)];
        let evicted = state.occupant[victim_slot].expect("slot occupied");
        state.occupant[victim_slot] = Some(held);
        held = evicted;
        evictions += 1;
    }
}

fn random_walk_construct(graph: &CuckooGraph, rng_seed: u64) -> ConstructionResult {
    let n = graph.left_count();
    let mut state = TableState::new(graph);
    let mut stats = ConstructionStats::default();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let bound = random_walk_step_bound(n);
    for j in 0..n {
        stats.steps += 1;
        match random_walk_insert(graph, &mut state, j, bound, &mut rng).expect("bound >= 1") {
            WalkOutcome::Placed { evictions } => stats.evictions += evictions,
            WalkOutcome::Exhausted { held, evictions } => {
                stats.evictions += evictions;
                stats.fallback_used = true;
                match bfs_insert(graph, &state, held) {
                    Some(path) => apply_path(&mut state, &path),
                    None => return ConstructionResult { outcome: Outcome::Failure, stats },
                }
            }
        }
    }
    ConstructionResult { outcome: Outcome::Success(state.into_allocation(n)), stats }
}

/// Per-entry labels used by local search allocation.
#[derive(Debug, Clone)]
pub struct LabelState {
    pub labels: Vec<u64>,
}

impl LabelState {
    pub fn new(b: usize) -> Self {
        Self { labels: vec![0; b] }
    }
}

#[derive(Debug, PartialEq, Eq)]
pub enum LsaOutcome {
    Placed,
    Failure,
}

/// One LSA insertion: repeatedly place the held item into its
/// minimum-label entry (first such entry in sub-table order on ties),
/// bump that entry's label to one more than the minimum of the item's
/// other k-1 entries, and continue with any evicted occupant. When the
/// held item's minimum label exceeds b no augmenting path remains; the
/// item goes to the stash if a slot is free, otherwise the insertion
/// fails.
pub fn lsa_insert(
    graph: &CuckooGraph,
    labels: &mut LabelState,
    state: &mut TableState,
    item: usize,
) -> Result<LsaOutcome> {
    let params = &graph.params;
    if params.ell != 1 {
        return Err(Error::Unsupported("LSA requires ell = 1".into()));
    }
    let b = params.b as u64;
    let stash_base = params.b * params.ell;
    let mut held = item;
    loop {
        // With ell = 1 the first k probe slots are exactly the k entries.
        let entries = &graph.adjacency[held][..params.k];
        let (pos, &entry) = entries
            .iter()
            .enumerate()
            .min_by_key(|&(_, &e)| labels.labels[e])
            .expect("k >= 1");
        if labels.labels[entry] > b {
            // No table placement possible; overflow to the stash.
            for idx in 0..params.s {
                let slot = stash_base + idx;
                if state.occupant[slot].is_none() {
                    state.occupant[slot] = Some(held);
                    return Ok(LsaOutcome::Placed);
                }
            }
            return Ok(LsaOutcome::Failure);
        }
        // With k = 1 there are no other options; the entry's own label
        // stands in so that it still strictly increases per placement.
        let min_other = entries
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != pos)
            .map(|(_, &e)| labels.labels[e])
            .min()
            .unwrap_or(labels.labels[entry]);
        labels.labels[entry] = 1 + min_other;
        let evicted = state.occupant[entry];
        state.occupant[entry] = Some(held);
        match evicted {
            None => return Ok(LsaOutcome::Placed),
            Some(v) => held = v,
        }
    }
}

fn lsa_construct(graph: &CuckooGraph) -> Result<ConstructionResult> {
    let params = &graph.params;
    if params.ell != 1 {
        return Err(Error::Unsupported("LSA requires ell = 1".into()));
    }
    let n = graph.left_count();
    let mut labels = LabelState::new(params.b);
    let mut state = TableState::new(graph);
    let mut stats = ConstructionStats::default();
    for j in 0..n {
        stats.steps += 1;
        match lsa_insert(graph, &mut labels, &mut state, j)? {
            LsaOutcome::Placed => {}
            LsaOutcome::Failure => {
                return Ok(ConstructionResult { outcome: Outcome::Failure, stats })
            }
        }
    }
    stats.evictions = labels.labels.iter().sum();
    Ok(ConstructionResult { outcome: Outcome::Success(state.into_allocation(n)), stats })
}
