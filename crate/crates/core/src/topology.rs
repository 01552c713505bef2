//! Undirected communication graph, its Laplacian and spectral helpers.
//!
//! Agent indices are 0-based here; configuration files use 1-based indices
//! and are translated by the config parser.

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

use crate::linalg::symmetric_eigenvalues;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("graph needs at least one agent")]
    NoAgents,
    #[error("invalid edge ({0}, {1}): self-loop or index out of range for {2} agents")]
    InvalidEdge(usize, usize, usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("DisconnectedGraph: no path from agent index 0 to agent index {unreachable} (0-based)")]
    DisconnectedGraph { unreachable: usize },
}

/// Validated connected undirected graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    n_agents: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<u8>,
    neighbors: Vec<Vec<usize>>,
}

impl Topology {
    pub fn new(n_agents: usize, edges: &[(usize, usize)]) -> Result<Self, TopologyError> {
        if n_agents == 0 {
            return Err(TopologyError::NoAgents);
        }
        let mut seen = BTreeSet::new();
        let mut adjacency = vec![0u8; n_agents * n_agents];
        for &(i, j) in edges {
            if i == j || i >= n_agents || j >= n_agents {
                return Err(TopologyError::InvalidEdge(i, j, n_agents));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(TopologyError::DuplicateEdge(i, j));
            }
            adjacency[i * n_agents + j] = 1;
            adjacency[j * n_agents + i] = 1;
        }
        let neighbors: Vec<Vec<usize>> = (0..n_agents)
            .map(|i| (0..n_agents).filter(|&j| adjacency[i * n_agents + j] == 1).collect())
            .collect();

        let mut visited = vec![false; n_agents];
        let mut queue = VecDeque::from([0usize]);
        visited[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &neighbors[v] {
                if !visited[w] {
                    visited[w] = true;
                    queue.push_back(w);
                }
            }
        }
        if let Some(unreachable) = visited.iter().position(|v| !v) {
            return Err(TopologyError::DisconnectedGraph { unreachable });
        }

        Ok(Self { n_agents, edges: seen.into_iter().collect(), adjacency, neighbors })
    }

    /// Ring `0-1-...-(n-1)-0`; a single edge for `n = 2`, no edges for `n = 1`.
    pub fn ring(n_agents: usize) -> Result<Self, TopologyError> {
        let edges: Vec<_> = match n_agents {
            0 | 1 => vec![],
            2 => vec![(0, 1)],
            n => (0..n).map(|i| (i, (i + 1) % n)).collect(),
        };
        Self::new(n_agents, &edges)
    }

    pub fn complete(n_agents: usize) -> Result<Self, TopologyError> {
        let edges: Vec<_> =
            (0..n_agents).flat_map(|i| ((i + 1)..n_agents).map(move |j| (i, j))).collect();
        Self::new(n_agents, &edges)
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    /// Edges as sorted `(min, max)` pairs.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.n_agents + j] == 1
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    /// Dense row-major adjacency matrix.
    pub fn adjacency<T: Real>(&self) -> Vec<T> {
        self.adjacency.iter().map(|&a| if a == 1 { T::one() } else { T::zero() }).collect()
    }

    /// Dense row-major Laplacian `D - A`.
    pub fn laplacian<T: Real>(&self) -> Vec<T> {
        let n = self.n_agents;
        let mut l = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                l[i * n + j] = if i == j {
                    T::from_usize(self.degree(i)).unwrap()
                } else if self.adjacent(i, j) {
                    -T::one()
                } else {
                    T::zero()
                };
            }
        }
        l
    }

    /// `(L x)_i = Σ_{j∈N_i} (x_i − x_j)`.
    pub fn laplacian_apply<T: Real>(&self, x: &[T], out: &mut [T]) {
        for (i, o) in out.iter_mut().enumerate() {
            let xi = x[i];
            *o = self.neighbors[i].iter().map(|&j| xi - x[j]).sum();
        }
    }

    pub fn laplacian_spectrum<T: Real>(&self) -> Vec<T> {
        symmetric_eigenvalues(&self.laplacian::<T>(), self.n_agents)
    }
}

/// Smallest eigenvalue of `L + I`; equals one for every connected graph.
pub fn laplacian_min_eig_shifted<T: Real>(topology: &Topology) -> T {
    let n = topology.n_agents();
    let mut m = topology.laplacian::<T>();
    for i in 0..n {
        m[i * n + i] += T::one();
    }
    symmetric_eigenvalues(&m, n)[0]
}

/// Algebraic connectivity (second-smallest Laplacian eigenvalue).
///
/// Returns zero for a single agent.
pub fn laplacian_fiedler<T: Real>(topology: &Topology) -> T {
    let spectrum = topology.laplacian_spectrum::<T>();
    spectrum.get(1).copied().unwrap_or_else(T::zero)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring4() -> Topology {
        Topology::new(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap()
    }

    #[test]
    fn ring4_degrees_and_laplacian() {
        let t = ring4();
        assert!((0..4).all(|i| t.degree(i) == 2));
        let l = t.laplacian::<f64>();
        for i in 0..4 {
            let row_sum: f64 = l[i * 4..i * 4 + 4].iter().sum();
            assert_eq!(row_sum, 0.0);
            assert_eq!(l[i * 4 + i], 2.0);
        }
        assert_eq!(t.neighbors(0), &[1, 3]);
    }

    #[test]
    fn single_node_graph() {
        let t = Topology::new(1, &[]).unwrap();
        assert_eq!(t.laplacian::<f64>(), vec![0.0]);
        assert_eq!(laplacian_min_eig_shifted::<f64>(&t), 1.0);
    }

    #[test]
    fn disconnected_and_invalid_edges() {
        assert_eq!(
            Topology::new(4, &[(0, 1), (2, 3)]),
            Err(TopologyError::DisconnectedGraph { unreachable: 2 })
        );
        assert!(matches!(Topology::new(3, &[(1, 1)]), Err(TopologyError::InvalidEdge(..))));
        assert!(matches!(Topology::new(3, &[(0, 3)]), Err(TopologyError::InvalidEdge(..))));
        assert!(matches!(
            Topology::new(3, &[(0, 1), (1, 0), (1, 2)]),
            Err(TopologyError::DuplicateEdge(1, 0))
        ));
        assert_eq!(Topology::new(0, &[]), Err(TopologyError::NoAgents));
    }

    #[test]
    fn spectral_examples() {
        assert!((laplacian_min_eig_shifted::<f64>(&ring4()) - 1.0).abs() < 1e-9);
        assert!((laplacian_min_eig_shifted::<f64>(&Topology::complete(3).unwrap()) - 1.0).abs() < 1e-9);
        assert!((laplacian_fiedler::<f64>(&ring4()) - 2.0).abs() < 1e-12);
        assert!((laplacian_fiedler::<f64>(&Topology::complete(2).unwrap()) - 2.0).abs() < 1e-12);
        assert!((laplacian_fiedler::<f64>(&Topology::complete(4).unwrap()) - 4.0).abs() < 1e-12);
        let spectrum = ring4().laplacian_spectrum::<f64>();
        for (got, want) in spectrum.iter().zip([0.0, 2.0, 2.0, 4.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn works_in_single_precision() {
        assert!((laplacian_fiedler::<f32>(&ring4()) - 2.0).abs() < 1e-5);
    }

    #[test]
    fn laplacian_apply_matches_dense() {
        let t = Topology::complete(3).unwrap();
        let x = [0.3, -1.0, 2.0];
        let mut out = [0.0; 3];
        t.laplacian_apply(&x, &mut out);
        let l = t.laplacian::<f64>();
        for i in 0..3 {
            let dense: f64 = (0..3).map(|j| l[i * 3 + j] * x[j]).sum();
            assert!((dense - out[i]).abs() < 1e-15);
        }
    }
}
