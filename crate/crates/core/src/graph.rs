//! The cuckoo bipartite graph: n item vertices on the left, bl + s slot
//! vertices on the right (stash slots last). Successful allocations are
//! exactly the left-perfect matchings, so the module carries a maximum
//! matching oracle (Hopcroft-Karp) and, for small instances, an
//! exhaustive Hall-violation finder.

use std::collections::{HashSet, VecDeque};

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::hashing::{probe_indices, CuckooParams, HashKey};

/// Left vertices above this bound are refused by the exhaustive search.
pub const HALL_SEARCH_GUARD: usize = 24;

#[derive(Debug, Clone)]
pub struct CuckooGraph {
    pub params: CuckooParams,
    /// adjacency[j] lists the right-vertex indices of left vertex j, in
    /// canonical probe order.
    pub adjacency: Vec<Vec<usize>>,
}

impl CuckooGraph {
    pub fn left_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn right_count(&self) -> usize {
        self.params.total_slots()
    }

    /// Builds the graph from raw adjacency. Used for crafted instances;
    /// right indices must lie in [0, bl + s).
    pub fn from_adjacency(params: CuckooParams, adjacency: Vec<Vec<usize>>) -> Result<Self> {
        let rights = params.total_slots();
        for neighbors in &adjacency {
            if neighbors.iter().any(|&r| r >= rights) {
                return Err(Error::InvalidParams("right vertex index out of range".into()));
            }
        }
        Ok(Self { params, adjacency })
    }
}

/// A partial assignment of left vertices to right vertices along graph
/// edges, injective on the right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    /// assignment[j] is the right vertex of left vertex j, if matched.
    pub assignment: Vec<Option<usize>>,
}

impl Allocation {
    pub fn size(&self) -> usize {
        self.assignment.iter().filter(|a| a.is_some()).count()
    }

    pub fn is_left_perfect(&self) -> bool {
        self.assignment.iter().all(|a| a.is_some())
    }

    /// Checks that every assignment is a graph edge and no right vertex
    /// is used twice.
    pub fn is_valid_for(&self, graph: &CuckooGraph) -> bool {
        if self.assignment.len() != graph.left_count() {
            return false;
        }
        let mut used = HashSet::new();
        for (j, assigned) in self.assignment.iter().enumerate() {
            if let Some(r) = assigned {
                if !graph.adjacency[j].contains(r) || !used.insert(*r) {
                    return false;
                }
            }
        }
        true
    }
}

/// Builds the cuckoo graph for `ids` under `key`: left vertex j touches
/// the l cells of its chosen entry in each sub-table plus every stash slot.
pub fn build_graph(params: &CuckooParams, ids: &[Vec<u8>], key: &HashKey) -> Result<CuckooGraph> {
    let distinct: HashSet<&[u8]> = ids.iter().map(|id| id.as_slice()).collect();
    if distinct.len() != ids.len() {
        return Err(Error::DuplicateIds);
    }
    let adjacency = ids.iter().map(|id| probe_indices(key, id, params)).collect();
    Ok(CuckooGraph { params: *params, adjacency })
}

/// Maximum-cardinality matching via Hopcroft-Karp. The result is
/// left-perfect iff its size equals the left vertex count.
pub fn max_left_matching(graph: &CuckooGraph) -> Allocation {
    let n = graph.left_count();
    let rights = graph.right_count();
    let mut match_left: Vec<Option<usize>> = vec![None; n];
    let mut match_right: Vec<Option<usize>> = vec![None; rights];

    let mut dist = vec![usize::MAX; n];
    loop {
        // BFS layering over free left vertices.
        let mut queue = VecDeque::new();
        for j in 0..n {
            if match_left[j].is_none() {
                dist[j] = 0;
                queue.push_back(j);
            } else {
                dist[j] = usize::MAX;
            }
        }
        let mut found_free = false;
        while let Some(j) = queue.pop_front() {
            for &r in &graph.adjacency[j] {
                match match_right[r] {
                    None => found_free = true,
                    Some(j2) => {
                        if dist[j2] == usize::MAX {
                            dist[j2] = dist[j] + 1;
                            queue.push_back(j2);
                        }
                    }
                }
            }
        }
        if !found_free {
            break;
        }
        // DFS along the layering for a maximal set of disjoint shortest
        // augmenting paths.
        let mut progressed = false;
        for j in 0..n {
            if match_left[j].is_none() && dfs_augment(graph, j, &mut match_left, &mut match_right, &mut dist) {
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    Allocation { assignment: match_left }
}

fn dfs_augment(
    graph: &CuckooGraph,
    j: usize,
    match_left: &mut [Option<usize>],
    match_right: &mut [Option<usize>],
    dist: &mut [usize],
) -> bool {
    for &r in &graph.adjacency[j] {
        let ok = match match_right[r] {
            None => true,
            Some(j2) => {
                dist[j2] == dist[j].wrapping_add(1)
                    && dfs_augment(graph, j2, match_left, match_right, dist)
            }
        };
        if ok {
            match_left[j] = Some(r);
            match_right[r] = Some(j);
            return true;
        }
    }
    dist[j] = usize::MAX;
    false
}

/// A set of left vertices with fewer neighbors than members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HallWitness {
    pub left_vertices: Vec<usize>,
    pub neighborhood_size: usize,
}

/// Exhaustively searches for a Hall violation among subsets of size at
/// most `t_max`, smallest subsets first. Subset sizes up to kl + s cannot
/// violate the condition (every left vertex alone has kl + s neighbors),
/// so the search starts above that. Only feasible for small n.
pub fn find_hall_violation(graph: &CuckooGraph, t_max: usize) -> Result<Option<HallWitness>> {
    let n = graph.left_count();
    if n > HALL_SEARCH_GUARD {
        return Err(Error::SizeGuard { n, guard: HALL_SEARCH_GUARD });
    }
    let t_max = t_max.min(n);
    let min_degree = graph.adjacency.iter().map(|a| neighbor_set(a).len()).min().unwrap_or(0);

    // A smallest violating set never spans two components with disjoint
    // neighborhoods, so search within components only.
    let components = left_components(graph);

    let words = graph.right_count().div_ceil(64);
    let bitsets: Vec<Vec<u64>> = graph
        .adjacency
        .iter()
        .map(|neighbors| {
            let mut bits = vec![0u64; words];
            for &r in neighbors {
                bits[r / 64] |= 1 << (r % 64);
            }
            bits
        })
        .collect();

    let start = min_degree + 1;
    let mut scratch = vec![0u64; words];
    for t in start..=t_max {
        for component in &components {
            if component.len() < t {
                continue;
            }
            for subset in component.iter().combinations(t) {
                scratch.iter_mut().for_each(|w| *w = 0);
                for &&j in &subset {
                    for (w, bits) in scratch.iter_mut().zip(&bitsets[j]) {
                        *w |= bits;
                    }
                }
                let count: usize = scratch.iter().map(|w| w.count_ones() as usize).sum();
                if count < t {
                    return Ok(Some(HallWitness {
                        left_vertices: subset.into_iter().copied().collect(),
                        neighborhood_size: count,
                    }));
                }
            }
        }
    }
    Ok(None)
}

fn neighbor_set(adjacency: &[usize]) -> HashSet<usize> {
    adjacency.iter().copied().collect()
}

/// Connected components of the left vertex set, where two lefts are
/// connected when they share a right vertex.
fn left_components(graph: &CuckooGraph) -> Vec<Vec<usize>> {
    let n = graph.left_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    let mut right_owner: Vec<Option<usize>> = vec![None; graph.right_count()];
    for j in 0..n {
        for &r in &graph.adjacency[j] {
            match right_owner[r] {
                None => right_owner[r] = Some(j),
                Some(j2) => {
                    let (a, b) = (find(&mut parent, j), find(&mut parent, j2));
                    if a != b {
                        parent[a] = b;
                    }
                }
            }
        }
    }
    let mut components: std::collections::HashMap<usize, Vec<usize>> = Default::default();
    for j in 0..n {
        let root = find(&mut parent, j);
        components.entry(root).or_default().push(j);
    }
    let mut out: Vec<Vec<usize>> = components.into_values().collect();
    out.sort_by_key(|c| c[0]);
    out
}
