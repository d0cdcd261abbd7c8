//! Placement of graph vertices onto physical qubits.
//!
//! Every subgraph embedding of the target graph into the coupling topology is
//! enumerated by backtracking with VF2-style vertex ordering (most-constrained
//! vertex first) and degree pruning; each embedding is scored by the product
//! of the current gate fidelities it would use.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::device::{topology_graph, DeviceCalibration, Topology};
use crate::graph::GraphSpec;

#[derive(Debug, Error, PartialEq)]
pub enum PlacementError {
    #[error("graph is not native to the device topology")]
    NotNative,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Embedding {
    /// `mapping[v]` is the physical qubit hosting graph vertex `v`.
    pub mapping: Vec<usize>,
    pub score: f64,
}

impl Embedding {
    pub fn unscored(mapping: Vec<usize>) -> Self {
        Self {
            mapping,
            score: f64::NAN,
        }
    }

    pub fn is_valid_for(&self, g: &GraphSpec, topo: &Topology) -> bool {
        if self.mapping.len() != g.n() {
            return false;
        }
        let mut seen = std::collections::BTreeSet::new();
        if !self.mapping.iter().all(|q| seen.insert(*q)) {
            return false;
        }
        g.edges()
            .iter()
            .all(|&(a, b)| topo.has_edge(self.mapping[a], self.mapping[b]))
    }
}

/// Visit order: start at the highest-degree vertex, then always take the
/// unvisited vertex with the most already-ordered neighbours.
fn search_order(g: &GraphSpec) -> Vec<usize> {
    let n = g.n();
    let adj = g.adjacency_masks();
    let mut order = Vec::with_capacity(n);
    let mut placed = 0u64;
    while order.len() < n {
        let next = (0..n)
            .filter(|&v| placed & (1 << v) == 0)
            .max_by_key(|&v| {
                (
                    (adj[v] & placed).count_ones(),
                    adj[v].count_ones(),
                    std::cmp::Reverse(v),
                )
            })
            .expect("unplaced vertex");
        placed |= 1 << next;
        order.push(next);
    }
    order
}

struct Matcher<'a> {
    g: &'a GraphSpec,
    topo: &'a Topology,
    order: Vec<usize>,
    neighbors: Vec<Vec<usize>>,
}

impl Matcher<'_> {
    fn extend(
        &self,
        depth: usize,
        mapping: &mut Vec<Option<usize>>,
        used: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if depth == self.order.len() {
            out.push(
                mapping
                    .iter()
                    .map(|q| q.expect("complete mapping"))
                    .collect(),
            );
            return;
        }
        let v = self.order[depth];
        let anchor = self.neighbors[v].iter().find_map(|&u| mapping[u]);
        let candidates: Vec<usize> = match anchor {
            Some(q) => self.topo.neighbors(q).collect(),
            None => self.topo.nodes().collect(),
        };
        for q in candidates {
            if used.contains(&q) || self.topo.degree(q) < self.g.degree(v) {
                continue;
            }
            let consistent = self.neighbors[v]
                .iter()
                .all(|&u| mapping[u].is_none_or(|pu| self.topo.has_edge(pu, q)));
            if !consistent {
                continue;
            }
            mapping[v] = Some(q);
            used.push(q);
            self.extend(depth + 1, mapping, used, out);
            used.pop();
            mapping[v] = None;
        }
    }
}

/// All injective vertex-to-qubit maps that send every edge onto a coupler,
/// sorted lexicographically.
pub fn embeddings(g: &GraphSpec, topo: &Topology) -> Vec<Vec<usize>> {
    let matcher = Matcher {
        g,
        topo,
        order: search_order(g),
        neighbors: (0..g.n()).map(|v| g.neighbors(v)).collect(),
    };
    let first = matcher.order[0];
    let roots: Vec<usize> = topo
        .nodes()
        .filter(|&q| topo.degree(q) >= g.degree(first))
        .collect();
    let mut all: Vec<Vec<usize>> = roots
        .par_iter()
        .flat_map_iter(|&q| {
            let mut mapping = vec![None; g.n()];
            mapping[first] = Some(q);
            let mut used = vec![q];
            let mut out = Vec::new();
            matcher.extend(1, &mut mapping, &mut used, &mut out);
            out
        })
        .collect();
    all.sort_unstable();
    all
}

pub fn enumerate_embeddings(g: &GraphSpec, cal: &DeviceCalibration) -> Vec<Embedding> {
    embeddings(g, &topology_graph(cal))
        .into_iter()
        .map(Embedding::unscored)
        .collect()
}

/// Product of `(1 - error)` over the couplers used by graph edges and over the
/// single-qubit gates of every mapped qubit. Readout and coherence are not
/// part of the score.
pub fn score_embedding(mapping: &[usize], g: &GraphSpec, cal: &DeviceCalibration) -> f64 {
    let mut score = 1.0;
    for &(a, b) in g.edges() {
        let c = cal
            .coupler(mapping[a], mapping[b])
            .expect("embedding maps edges onto couplers");
        score *= 1.0 - c.error;
    }
    for &q in mapping {
        score *= 1.0 - cal.qubit(q).expect("mapped qubit exists").sq_error;
    }
    score
}

/// Highest-scoring embedding; ties go to the lexicographically smallest mapping.
pub fn best_placement(g: &GraphSpec, cal: &DeviceCalibration) -> Result<Embedding, PlacementError> {
    let mut best: Option<Embedding> = None;
    for mapping in embeddings(g, &topology_graph(cal)) {
        let score = score_embedding(&mapping, g, cal);
        // candidates arrive in lexicographic order, so only strict gains replace
        if best.as_ref().is_none_or(|b| score > b.score) {
            best = Some(Embedding { mapping, score });
        }
    }
    best.ok_or(PlacementError::NotNative)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{Coupler, PhysicalQubit};
    use crate::graph::{builtin, linear_graph};

    fn cal_with(n: usize, edges: &[(usize, usize)], errors: &[f64]) -> DeviceCalibration {
        let qubits = (0..n)
            .map(|index| PhysicalQubit {
                index,
                coherence_time_us: 100.0,
                readout_p01: 0.0,
                readout_p10: 0.0,
                sq_duration_ns: 35,
                sq_error: 0.0,
            })
            .collect();
        let couplers = edges
            .iter()
            .zip(errors)
            .map(|(&(a, b), &error)| Coupler {
                a,
                b,
                duration_ab_ns: 300,
                duration_ba_ns: 300,
                error,
            })
            .collect();
        DeviceCalibration::new("t", qubits, couplers).unwrap()
    }

    #[test]
    fn single_edge_into_path() {
        let cal = cal_with(3, &[(0, 1), (1, 2)], &[0.0, 0.0]);
        let maps: Vec<_> = enumerate_embeddings(&linear_graph(2).unwrap(), &cal)
            .into_iter()
            .map(|e| e.mapping)
            .collect();
        assert_eq!(maps, vec![vec![0, 1], vec![1, 0], vec![1, 2], vec![2, 1]]);
    }

    #[test]
    fn triangle_into_tree_is_empty() {
        let cal = cal_with(5, &[(0, 1), (0, 2), (0, 3), (3, 4)], &[0.0; 4]);
        let tri = builtin("triangle").unwrap();
        assert!(enumerate_embeddings(&tri, &cal).is_empty());
        assert_eq!(best_placement(&tri, &cal), Err(PlacementError::NotNative));
    }

    #[test]
    fn scores() {
        let cal = cal_with(3, &[(0, 1), (1, 2)], &[0.5, 0.0]);
        let g = linear_graph(2).unwrap();
        assert_eq!(score_embedding(&[1, 2], &g, &cal), 1.0);
        assert_eq!(score_embedding(&[0, 1], &g, &cal), 0.5);
    }

    #[test]
    fn uniform_calibration_picks_smallest_mapping() {
        let cal = cal_with(4, &[(0, 1), (1, 2), (2, 3)], &[0.01; 3]);
        let best = best_placement(&linear_graph(3).unwrap(), &cal).unwrap();
        assert_eq!(best.mapping, vec![0, 1, 2]);
    }

    #[test]
    fn avoids_the_bad_coupler() {
        let cal = cal_with(4, &[(0, 1), (1, 2), (2, 3)], &[0.9, 0.01, 0.01]);
        let best = best_placement(&linear_graph(3).unwrap(), &cal).unwrap();
        assert_eq!(best.mapping, vec![1, 2, 3]);
    }

    #[test]
    fn score_ignores_calibration_order() {
        let edges = [(0, 1), (1, 2), (2, 3)];
        let errs = [0.02, 0.05, 0.07];
        let a = cal_with(4, &edges, &errs);
        let mut couplers = a.couplers().to_vec();
        couplers.reverse();
        let mut qubits = a.qubits().to_vec();
        qubits.reverse();
        let b = DeviceCalibration::new("t", qubits, couplers).unwrap();
        let g = linear_graph(3).unwrap();
        for e in enumerate_embeddings(&g, &a) {
            assert_eq!(
                score_embedding(&e.mapping, &g, &a),
                score_embedding(&e.mapping, &g, &b)
            );
        }
    }
}
