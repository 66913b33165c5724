//! Structural invariants of the objectives, parsers and network.

use cgbp::graph::{
    generate_regular, parse_dimacs_col, parse_gset, write_dimacs_col, write_gset, Graph, GsetOptions,
};
use cgbp::hamiltonian::{discrete_objective, loss_and_grad, ProblemEncoding};
use cgbp::matrix::Matrix;
use cgbp::nn::{init_model, network_forward, Arch, Mode};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arb_graph() -> impl Strategy<Value = Graph> {
    (2usize..14).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..40).prop_map(move |pairs| {
            let mut edges: Vec<(usize, usize)> = pairs
                .into_iter()
                .filter(|(u, v)| u != v)
                .map(|(u, v)| (u.min(v), u.max(v)))
                .collect();
            edges.sort_unstable();
            edges.dedup();
            Graph::from_edges(n, edges).unwrap()
        })
    })
}

fn arb_graph_with_bits() -> impl Strategy<Value = (Graph, Vec<usize>)> {
    arb_graph().prop_flat_map(|g| {
        let n = g.n_nodes();
        (Just(g), proptest::collection::vec(0usize..2, n))
    })
}

fn arb_graph_with_colors() -> impl Strategy<Value = (Graph, usize, Vec<usize>, u64)> {
    (arb_graph(), 2usize..5).prop_flat_map(|(g, q)| {
        let n = g.n_nodes();
        (Just(g), Just(q), proptest::collection::vec(0..q, n), any::<u64>())
    })
}

proptest! {
    #[test]
    fn cut_is_invariant_under_global_flip((g, x) in arb_graph_with_bits()) {
        let flipped: Vec<usize> = x.iter().map(|&b| 1 - b).collect();
        let a = discrete_objective(&ProblemEncoding::<f64>::MaxCut, &x, &g).unwrap();
        let b = discrete_objective(&ProblemEncoding::<f64>::MaxCut, &flipped, &g).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a.objective <= g.n_edges() as u64);
    }

    #[test]
    fn mis_counts_are_bounded((g, x) in arb_graph_with_bits()) {
        let enc = ProblemEncoding::<f64>::mis(2.0).unwrap();
        let r = discrete_objective(&enc, &x, &g).unwrap();
        prop_assert_eq!(r.objective, x.iter().sum::<usize>() as u64);
        prop_assert!(r.violations <= g.n_edges() as u64);
        prop_assert_eq!(r.hamiltonian, -(r.objective as f64) + 2.0 * r.violations as f64);
    }

    #[test]
    fn conflicts_ignore_color_names((g, q, c, seed) in arb_graph_with_colors()) {
        let mut perm: Vec<usize> = (0..q).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let renamed: Vec<usize> = c.iter().map(|&k| perm[k]).collect();
        let enc = ProblemEncoding::<f64>::coloring(q).unwrap();
        let a = discrete_objective(&enc, &c, &g).unwrap();
        let b = discrete_objective(&enc, &renamed, &g).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a.objective <= g.n_edges() as u64);
    }

    #[test]
    fn relaxed_losses_agree_at_binary_points((g, x) in arb_graph_with_bits()) {
        let p = Matrix::from_fn(g.n_nodes(), 1, |i, _| x[i] as f64);
        for enc in [ProblemEncoding::mis(2.0).unwrap(), ProblemEncoding::MaxCut] {
            let (loss, _) = loss_and_grad(&enc, &p, &g).unwrap();
            let h = discrete_objective(&enc, &x, &g).unwrap().hamiltonian;
            prop_assert!((loss - h).abs() < 1e-12, "{} vs {}", loss, h);
        }
    }

    #[test]
    fn relaxed_coloring_agrees_at_one_hot_points((g, q, c, _s) in arb_graph_with_colors()) {
        let p = Matrix::from_fn(g.n_nodes(), q, |i, k| if c[i] == k { 1.0 } else { 0.0 });
        let enc = ProblemEncoding::coloring(q).unwrap();
        let (loss, _) = loss_and_grad(&enc, &p, &g).unwrap();
        prop_assert_eq!(loss, discrete_objective(&enc, &c, &g).unwrap().hamiltonian);
    }

    #[test]
    fn gset_round_trip(g in arb_graph()) {
        let mut buf = Vec::new();
        write_gset(&g, &mut buf).unwrap();
        let back = parse_gset(buf.as_slice(), "mem", GsetOptions::default()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn dimacs_round_trip(g in arb_graph()) {
        let mut buf = Vec::new();
        write_dimacs_col(&g, &mut buf).unwrap();
        let back = parse_dimacs_col(buf.as_slice(), "mem").unwrap();
        prop_assert_eq!(back, g);
    }
}

#[test]
fn regular_graph_round_trips_through_both_formats() {
    let g = generate_regular(200, 3, 9).unwrap();
    let mut a = Vec::new();
    write_gset(&g, &mut a).unwrap();
    assert_eq!(parse_gset(a.as_slice(), "mem", GsetOptions::default()).unwrap(), g);
    let mut b = Vec::new();
    write_dimacs_col(&g, &mut b).unwrap();
    assert_eq!(parse_dimacs_col(b.as_slice(), "mem").unwrap(), g);
}

/// Relabelling nodes and moving their embedding rows along permutes the
/// output rows in the same way.
#[test]
fn network_is_permutation_equivariant() {
    let g = generate_regular(30, 3, 2).unwrap();
    let mut perm: Vec<usize> = (0..30).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(8));
    let gp = g.permuted(&perm).unwrap();
    for (arch, d2) in [(Arch::Gcn, 1), (Arch::Sage, 1), (Arch::Gcn, 4), (Arch::Sage, 4)] {
        let m = init_model::<f64>(&g, arch, d2, 5).unwrap();
        let mut mp = m.clone();
        for i in 0..30 {
            mp.params.embedding.row_mut(perm[i]).copy_from_slice(m.params.embedding.row(i));
        }
        for mode in [Mode::Train, Mode::Eval] {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let (out, _) = network_forward(&m, &g, mode, &mut rng).unwrap();
            let (outp, _) = network_forward(&mp, &gp, mode, &mut rng).unwrap();
            for i in 0..30 {
                for k in 0..d2 {
                    let (a, b) = (out[(i, k)], outp[(perm[i], k)]);
                    assert!((a - b).abs() < 1e-12, "{arch} {mode:?} node {i}: {a} vs {b}");
                }
            }
        }
    }
}
