//! Undirected simple graphs in compressed-row form.
//!
//! Every undirected edge is stored once in canonical form `(u, v)` with
//! `u < v`, and mirrored into a CSR adjacency for traversal. Hamiltonian
//! sums iterate the canonical list, message passing iterates the CSR.

mod generate;
mod io;

pub use generate::{generate_regular, queen_graph, MAX_REGULAR_RETRIES};
pub use io::{
    load_dimacs_col, load_gset, parse_dimacs_col, parse_gset, write_dimacs_col, write_gset,
    GsetOptions,
};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n_nodes: usize,
    row_offsets: Vec<usize>,
    neighbor_ids: Vec<usize>,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from undirected edges in any orientation.
    ///
    /// Self-loops, duplicates (in either orientation) and out-of-range
    /// endpoints are rejected.
    pub fn from_edges<I>(n_nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut canon = Vec::new();
        for (u, v) in edges {
            if u >= n_nodes || v >= n_nodes {
                return Err(Error::param(format!(
                    "edge ({u}, {v}) out of range for {n_nodes} nodes"
                )));
            }
            if u == v {
                return Err(Error::param(format!("self-loop on node {u}")));
            }
            canon.push((u.min(v), u.max(v)));
        }
        canon.sort_unstable();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::param(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }
        Ok(Self::from_canonical(n_nodes, canon))
    }

    /// `edges` must be sorted, unique, canonical and in range.
    fn from_canonical(n_nodes: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut degree = vec![0usize; n_nodes];
        for &(u, v) in &edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut row_offsets = Vec::with_capacity(n_nodes + 1);
        row_offsets.push(0);
        for d in &degree {
            row_offsets.push(row_offsets.last().unwrap() + d);
        }
        let mut fill = row_offsets[..n_nodes].to_vec();
        let mut neighbor_ids = vec![0usize; 2 * edges.len()];
        // Canonical order is sorted by (u, v); inserting v into u's row and
        // u into v's row keeps both rows ascending.
        for &(u, v) in &edges {
            neighbor_ids[fill[v]] = u;
            fill[v] += 1;
        }
        for &(u, v) in &edges {
            neighbor_ids[fill[u]] = v;
            fill[u] += 1;
        }
        Graph {
            n_nodes,
            row_offsets,
            neighbor_ids,
            edges,
        }
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    #[inline]
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.row_offsets[i + 1] - self.row_offsets[i]
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbor_ids[self.row_offsets[i]..self.row_offsets[i + 1]]
    }

    /// Canonical `(u, v)` pairs with `u < v`, sorted.
    #[inline]
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    #[inline]
    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n_nodes && self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n_nodes).map(|i| self.degree(i)).collect()
    }

    /// Re-checks every structural invariant.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::contract(m));
        if self.row_offsets.len() != self.n_nodes + 1 || self.row_offsets[0] != 0 {
            return bad("row offsets malformed".into());
        }
        if *self.row_offsets.last().unwrap() != 2 * self.edges.len() {
            return bad("degree sum differs from 2·n_edges".into());
        }
        for i in 0..self.n_nodes {
            let nb = self.neighbors(i);
            if nb.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("neighbors of {i} not strictly ascending"));
            }
            for &j in nb {
                if j >= self.n_nodes || j == i {
                    return bad(format!("bad neighbor {j} of {i}"));
                }
                if self.neighbors(j).binary_search(&i).is_err() {
                    return bad(format!("asymmetric adjacency between {i} and {j}"));
                }
            }
        }
        for w in self.edges.windows(2) {
            if w[0] >= w[1] {
                return bad("edge list not sorted/unique".into());
            }
        }
        for &(u, v) in &self.edges {
            if u >= v || !self.has_edge(u, v) {
                return bad(format!("edge ({u}, {v}) not canonical or missing"));
            }
        }
        Ok(())
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.n_nodes {
            return Err(Error::param("permutation length mismatch"));
        }
        let mut seen = vec![false; self.n_nodes];
        for &p in perm {
            if p >= self.n_nodes || std::mem::replace(&mut seen[p], true) {
                return Err(Error::param("not a permutation"));
            }
        }
        Graph::from_edges(
            self.n_nodes,
            self.edges.iter().map(|&(u, v)| (perm[u], perm[v])),
        )
    }
}

/// Symmetric GCN normalisation `1 / (√deg(i)·√deg(j))`, aligned with the
/// CSR neighbor array.
#[derive(Clone, Debug, PartialEq)]
pub struct NormTable<T> {
    inv_c: Vec<T>,
}

impl<T: Scalar> NormTable<T> {
    /// Placeholder for aggregations that do not use degree normalisation.
    pub fn empty() -> Self {
        NormTable { inv_c: Vec::new() }
    }

    #[inline]
    pub fn row<'a>(&'a self, g: &Graph, i: usize) -> &'a [T] {
        &self.inv_c[g.row_offsets[i]..g.row_offsets[i + 1]]
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.inv_c
    }

    /// Coefficient for the stored adjacency `(i, j)`, if present.
    pub fn get(&self, g: &Graph, i: usize, j: usize) -> Option<T> {
        let k = g.neighbors(i).binary_search(&j).ok()?;
        Some(self.row(g, i)[k])
    }
}

pub fn degree_norm<T: Scalar>(g: &Graph) -> NormTable<T> {
    // √(deg i · deg j) in one rounding keeps perfect squares exact.
    let mut inv_c = Vec::with_capacity(g.neighbor_ids.len());
    for i in 0..g.n_nodes {
        for &j in g.neighbors(i) {
            let prod = T::from_usize_lossy(g.degree(i) * g.degree(j));
            inv_c.push(T::one() / prod.sqrt());
        }
    }
    NormTable { inv_c }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn triangle() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    #[test]
    fn csr_is_symmetric_and_sorted() {
        let g = Graph::from_edges(5, [(3, 1), (0, 4), (1, 0), (2, 4), (4, 1)]).unwrap();
        g.validate().unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 4), (1, 3), (1, 4), (2, 4)]);
        assert_eq!(g.neighbors(1), &[0, 3, 4]);
        assert_eq!(g.neighbors(4), &[0, 1, 2]);
        assert_eq!(g.degrees().iter().sum::<usize>(), 2 * g.n_edges());
    }

    #[test]
    fn rejects_loops_duplicates_and_range() {
        assert!(Graph::from_edges(3, [(1, 1)]).is_err());
        assert!(Graph::from_edges(3, [(0, 1), (1, 0)]).is_err());
        assert!(Graph::from_edges(3, [(0, 3)]).is_err());
    }

    #[test]
    fn isolated_nodes_allowed() {
        let g = Graph::from_edges(4, [(0, 1)]).unwrap();
        g.validate().unwrap();
        assert_eq!(g.degree(3), 0);
        assert!(g.neighbors(3).is_empty());
        let norm = degree_norm::<f64>(&g);
        assert!(norm.row(&g, 3).is_empty());
    }

    #[test]
    fn norm_table_values() {
        let t = degree_norm::<f64>(&triangle());
        assert!(t.as_slice().iter().all(|&c| c == 0.5));

        let star = Graph::from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let t = degree_norm::<f64>(&star);
        assert!(t.as_slice().iter().all(|&c| c == 0.5));

        let k4 = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        let t = degree_norm::<f64>(&k4);
        assert!(t.as_slice().iter().all(|&c| (c - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn norm_table_symmetric() {
        let g = Graph::from_edges(6, [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (4, 5), (1, 5)])
            .unwrap();
        let t = degree_norm::<f64>(&g);
        for &(u, v) in g.edges() {
            let a = t.get(&g, u, v).unwrap();
            assert!(a > 0.0 && a.is_finite());
            assert_eq!(a, t.get(&g, v, u).unwrap());
        }
    }

    #[test]
    fn permutation_relabels() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let p = g.permuted(&[3, 2, 1, 0]).unwrap();
        assert_eq!(p.edges(), &[(0, 1), (1, 2), (2, 3)]);
        assert!(g.permuted(&[0, 0, 1, 2]).is_err());
    }
}
