use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Graph;
use crate::error::{Error, Result};

pub const MAX_REGULAR_RETRIES: usize = 1000;

/// Uniform random `d`-regular graph via the configuration model.
///
/// The `n·d` stubs are shuffled and paired; any pairing with a self-loop or
/// a repeated edge is discarded and redrawn from the same stream.
pub fn generate_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if !(n * d).is_multiple_of(2) {
        return Err(Error::param(format!("n·d must be even (n={n}, d={d})")));
    }
    if d >= n && !(n == 0 && d == 0) {
        return Err(Error::param(format!("degree {d} must be below node count {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..n).flat_map(|i| std::iter::repeat_n(i, d)).collect();
    let mut seen = HashSet::with_capacity(n * d / 2);
    'attempt: for _ in 0..MAX_REGULAR_RETRIES {
        stubs.shuffle(&mut rng);
        seen.clear();
        let mut edges = Vec::with_capacity(n * d / 2);
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || !seen.insert((u, v)) {
                continue 'attempt;
            }
            edges.push((u, v));
        }
        return Graph::from_edges(n, edges);
    }
    Err(Error::RetryExhausted {
        attempts: MAX_REGULAR_RETRIES,
        what: format!("simple {d}-regular pairing on {n} nodes"),
    })
}

/// Queen graph on a `rows × cols` board: squares are adjacent when a queen
/// could move between them. Node id is `r·cols + c`.
pub fn queen_graph(rows: usize, cols: usize) -> Graph {
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r1 in 0..rows {
        for c1 in 0..cols {
            for r2 in r1..rows {
                for c2 in 0..cols {
                    if (r2, c2) <= (r1, c1) {
                        continue;
                    }
                    let dr = r2.abs_diff(r1);
                    let dc = c2.abs_diff(c1);
                    if dr == 0 || dc == 0 || dr == dc {
                        edges.push((id(r1, c1), id(r2, c2)));
                    }
                }
            }
        }
    }
    Graph::from_edges(rows * cols, edges).expect("queen moves form a simple graph")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_regular_graphs_are_forced() {
        let k4 = generate_regular(4, 3, 11).unwrap();
        assert_eq!(k4.n_edges(), 6);
        assert_eq!(k4.edges(), &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let tri = generate_regular(3, 2, 99).unwrap();
        assert_eq!(tri.edges(), &[(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn cubic_graph_on_100_nodes() {
        let g = generate_regular(100, 3, 7).unwrap();
        g.validate().unwrap();
        assert_eq!(g.n_edges(), 150);
        assert!((0..100).all(|i| g.degree(i) == 3));
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_regular(200, 3, 5).unwrap();
        let b = generate_regular(200, 3, 5).unwrap();
        let c = generate_regular(200, 3, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.edges(), c.edges());
    }

    #[test]
    fn infeasible_parameters() {
        assert!(matches!(generate_regular(5, 3, 0), Err(Error::Parameter(_))));
        assert!(matches!(generate_regular(3, 3, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn dense_regular_exhausts_retries() {
        // Simple pairings of 40 stubs of degree 20 are vanishingly rare.
        assert!(matches!(
            generate_regular(40, 30, 1),
            Err(Error::RetryExhausted { .. })
        ));
    }

    #[test]
    fn queen_edge_counts() {
        for (r, c, m) in [
            (5, 5, 160),
            (6, 6, 290),
            (7, 7, 476),
            (8, 8, 728),
            (9, 9, 1056),
            (8, 12, 1368),
            (11, 11, 1980),
            (13, 13, 3328),
        ] {
            let g = queen_graph(r, c);
            assert_eq!((g.n_nodes(), g.n_edges()), (r * c, m), "queen{r}-{c}");
        }
    }
}
