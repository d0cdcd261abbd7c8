//! Target graphs, their stabilizers, and nativeness against a device topology.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::Topology;
use crate::pauli::{PauliString, MAX_QUBITS};

pub const GRAPH_SCHEMA_VERSION: u32 = 1;

/// Default cap on `n` for enumerating all `2^n` stabilizer-group elements.
pub const DEFAULT_GROUP_CAP: usize = 12;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph must have at least {min} vertices, got {n}")]
    TooSmall { n: usize, min: usize },
    #[error("graph with {0} vertices exceeds the supported maximum of {MAX_QUBITS}")]
    TooLarge(usize),
    #[error("edge ({0}, {1}) references a vertex outside 0..{2}")]
    VertexOutOfRange(usize, usize, usize),
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("stabilizer group of {n} qubits exceeds the enumeration cap {cap}")]
    GroupCapExceeded { n: usize, cap: usize },
    #[error("unknown builtin graph `{0}` (expected linear:<n>, ring:<n>, star:<n>, fig1-seven or triangle)")]
    UnknownBuiltin(String),
    #[error("cannot read graph file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed graph file: {0}")]
    Parse(#[from] serde_json::Error),
}

/// A connected simple undirected graph on vertices `0..n`.
///
/// Edges are stored as `(low, high)` pairs in ascending order, which fixes the
/// CNOT numbering used by the scheduling model.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GraphSpec {
    n: usize,
    edges: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl GraphSpec {
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::TooSmall { n, min: 1 });
        }
        if n > MAX_QUBITS {
            return Err(GraphError::TooLarge(n));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(GraphError::VertexOutOfRange(a, b, n));
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(GraphError::DuplicateEdge(a, b));
            }
        }
        let g = Self {
            n,
            edges: set.into_iter().collect(),
        };
        if !g.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == v || b == v)
            .count()
    }

    /// Bit `u` of entry `v` is set when `u` and `v` are adjacent.
    pub fn adjacency_masks(&self) -> Vec<u64> {
        let mut adj = vec![0u64; self.n];
        for &(a, b) in &self.edges {
            adj[a] |= 1 << b;
            adj[b] |= 1 << a;
        }
        adj
    }

    fn is_connected(&self) -> bool {
        let adj = self.adjacency_masks();
        let mut seen = 1u64;
        let mut frontier = 1u64;
        while frontier != 0 {
            let v = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let fresh = adj[v] & !seen;
            seen |= fresh;
            frontier |= fresh;
        }
        seen.count_ones() as usize == self.n
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let file: GraphFile = serde_json::from_str(text)?;
        Self::new(file.n, file.edges.into_iter().map(|[a, b]| (a, b)))
    }

    pub fn to_json(&self) -> String {
        let file = GraphFile {
            n: self.n,
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
        };
        serde_json::to_string(&file).expect("graph serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Resolve a builtin name (`linear:8`, `fig1-seven`, ...) or else a graph file path.
    pub fn from_source(source: &str) -> Result<Self, GraphError> {
        match builtin(source) {
            Ok(g) => Ok(g),
            Err(GraphError::UnknownBuiltin(_)) if Path::new(source).exists() => Self::load(source),
            Err(e) => Err(e),
        }
    }
}

pub fn linear_graph(n: usize) -> Result<GraphSpec, GraphError> {
    if n < 2 {
        return Err(GraphError::TooSmall { n, min: 2 });
    }
    GraphSpec::new(n, (0..n - 1).map(|i| (i, i + 1)))
}

pub fn ring_graph(n: usize) -> Result<GraphSpec, GraphError> {
    if n < 3 {
        return Err(GraphError::TooSmall { n, min: 3 });
    }
    GraphSpec::new(n, (0..n).map(|i| (i, (i + 1) % n)))
}

/// Star on `n` vertices with vertex 0 as the hub.
pub fn star_graph(n: usize) -> Result<GraphSpec, GraphError> {
    if n < 2 {
        return Err(GraphError::TooSmall { n, min: 2 });
    }
    GraphSpec::new(n, (1..n).map(|i| (0, i)))
}

/// Seven-vertex "H" tree: hubs 1 and 4 (degree 3) joined through vertex 3,
/// leaves 0, 2, 5, 6.
pub fn fig1_seven() -> GraphSpec {
    GraphSpec::new(7, [(0, 1), (1, 2), (1, 3), (3, 4), (4, 5), (4, 6)]).expect("valid tree")
}

pub fn builtin(name: &str) -> Result<GraphSpec, GraphError> {
    let unknown = || GraphError::UnknownBuiltin(name.to_string());
    match name {
        "fig1-seven" => return Ok(fig1_seven()),
        "triangle" => return ring_graph(3),
        _ => {}
    }
    let (kind, size) = name.split_once(':').ok_or_else(unknown)?;
    let n: usize = size.parse().map_err(|_| unknown())?;
    match kind {
        "linear" => linear_graph(n),
        "ring" => ring_graph(n),
        "star" => star_graph(n),
        _ => Err(unknown()),
    }
}

/// One generator per vertex: X on the vertex, Z on each neighbour.
pub fn stabilizer_generators(g: &GraphSpec) -> Vec<PauliString> {
    let adj = g.adjacency_masks();
    (0..g.n)
        .map(|v| PauliString::from_masks(g.n, 1 << v, adj[v], false))
        .collect()
}

/// All `2^n` products of generator subsets; element `k` is the product of the
/// generators whose bits are set in `k`.
pub fn stabilizer_group(g: &GraphSpec, cap: usize) -> Result<Vec<PauliString>, GraphError> {
    if g.n > cap {
        return Err(GraphError::GroupCapExceeded { n: g.n, cap });
    }
    let gens = stabilizer_generators(g);
    let size = 1usize << g.n;
    let mut group = Vec::with_capacity(size);
    group.push(PauliString::identity(g.n));
    for k in 1..size {
        let low = k.trailing_zeros() as usize;
        let rest = group[k & (k - 1)];
        group.push(gens[low].mul(&rest));
    }
    Ok(group)
}

/// Search for a subgraph embedding of `g` into `topo`.
///
/// Returns the lexicographically smallest vertex-to-qubit mapping, or `None`
/// if `g` is not native to the topology.
pub fn is_native(g: &GraphSpec, topo: &Topology) -> Option<Vec<usize>> {
    crate::placement::embeddings(g, topo).into_iter().next()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[PauliString]) -> Vec<String> {
        v.iter().map(|p| p.to_string()).collect()
    }

    #[test]
    fn linear_shapes() {
        assert_eq!(linear_graph(3).unwrap().edges(), &[(0, 1), (1, 2)]);
        assert_eq!(linear_graph(8).unwrap().edges().len(), 7);
        assert!(matches!(linear_graph(1), Err(GraphError::TooSmall { .. })));
        let g = linear_graph(6).unwrap();
        let degrees: Vec<_> = (0..6).map(|v| g.degree(v)).collect();
        assert_eq!(degrees, vec![1, 2, 2, 2, 2, 1]);
    }

    #[test]
    fn rejects_malformed_graphs() {
        assert!(matches!(
            GraphSpec::new(3, [(0, 1)]),
            Err(GraphError::Disconnected)
        ));
        assert!(matches!(
            GraphSpec::new(2, [(0, 0)]),
            Err(GraphError::SelfLoop(0))
        ));
        assert!(matches!(
            GraphSpec::new(2, [(0, 1), (1, 0)]),
            Err(GraphError::DuplicateEdge(1, 0))
        ));
        assert!(GraphSpec::new(2, [(0, 2)]).is_err());
    }

    #[test]
    fn generators_of_small_graphs() {
        assert_eq!(
            strings(&stabilizer_generators(&linear_graph(3).unwrap())),
            ["+XZI", "+ZXZ", "+IZX"]
        );
        assert_eq!(
            strings(&stabilizer_generators(&linear_graph(2).unwrap())),
            ["+XZ", "+ZX"]
        );
    }

    #[test]
    fn fig1_hubs_carry_three_z_factors() {
        let g = fig1_seven();
        let mut degrees: Vec<_> = (0..7).map(|v| g.degree(v)).collect();
        degrees.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(degrees, vec![3, 3, 2, 1, 1, 1, 1]);
        let gens = stabilizer_generators(&g);
        let three_z: Vec<usize> = (0..7)
            .filter(|&v| gens[v].z_mask().count_ones() == 3)
            .collect();
        assert_eq!(three_z, vec![1, 4]);
    }

    #[test]
    fn group_of_linear_three() {
        let group = stabilizer_group(&linear_graph(3).unwrap(), DEFAULT_GROUP_CAP).unwrap();
        assert_eq!(group.len(), 8);
        assert_eq!(group[0], PauliString::identity(3));
        assert_eq!(group[0b011].to_string(), "+YYZ");
    }

    #[test]
    fn group_cap() {
        let g = linear_graph(13).unwrap();
        assert!(matches!(
            stabilizer_group(&g, DEFAULT_GROUP_CAP),
            Err(GraphError::GroupCapExceeded { n: 13, cap: 12 })
        ));
    }

    #[test]
    fn group_properties_on_builtins() {
        for name in ["linear:5", "fig1-seven", "ring:6", "star:5"] {
            let g = builtin(name).unwrap();
            let group = stabilizer_group(&g, DEFAULT_GROUP_CAP).unwrap();
            assert_eq!(group.len(), 1 << g.n());
            let distinct: BTreeSet<_> = group.iter().map(|p| (p.x_mask(), p.z_mask())).collect();
            // independence: no two subsets give the same operator
            assert_eq!(distinct.len(), group.len());
            for a in &group {
                assert_eq!(a.mul(a), PauliString::identity(g.n()));
                for b in &group {
                    assert!(a.commutes_with(b));
                }
            }
            // closure
            let set: BTreeSet<_> = group.iter().copied().collect();
            for a in group.iter().step_by(3) {
                for b in group.iter().step_by(5) {
                    assert!(set.contains(&a.mul(b)));
                }
            }
        }
    }

    #[test]
    fn builtin_names() {
        assert_eq!(builtin("ring:6").unwrap().edges().len(), 6);
        assert_eq!(builtin("star:5").unwrap().degree(0), 4);
        assert_eq!(builtin("triangle").unwrap().edges().len(), 3);
        assert!(matches!(
            builtin("cube:8"),
            Err(GraphError::UnknownBuiltin(_))
        ));
        assert!(matches!(
            builtin("linear:x"),
            Err(GraphError::UnknownBuiltin(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let g = fig1_seven();
        assert_eq!(GraphSpec::from_json(&g.to_json()).unwrap(), g);
        assert!(GraphSpec::from_json(r#"{"n": 2, "edges": [[0, 1]], "w": 1}"#).is_err());
    }

    #[test]
    fn nativeness() {
        let path = Topology::from_edges(0..3, &[(0, 1), (1, 2)]);
        assert_eq!(
            is_native(&linear_graph(3).unwrap(), &path),
            Some(vec![0, 1, 2])
        );
        let tree = Topology::from_edges(0..5, &[(0, 1), (0, 2), (0, 3), (3, 4)]);
        assert_eq!(is_native(&builtin("triangle").unwrap(), &tree), None);
    }
}
