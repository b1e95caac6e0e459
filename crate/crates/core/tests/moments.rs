use netecon::graph::{load_edgelist, write_edgelist, Graph, Graphlet};
use netecon::moments::{
    census, choose_u128, count_patterns, degree_moment_empirical, degree_moment_theoretical, moment_covariance, surjections,
    transitivity, triad_census, CovMode, StarDensities,
};
use proptest::prelude::*;

/// Undirected graph on `n` nodes from a list of candidate pairs.
fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (4..=max_n).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..n * 3).prop_map(move |pairs| {
            let edges: Vec<(usize, usize)> = pairs.into_iter().filter(|(a, b)| a != b).collect();
            Graph::from_edges(n, false, &edges).unwrap()
        })
    })
}

/// Triad census by looking at every triple directly.
fn naive_triads(g: &Graph) -> [u64; 4] {
    let n = g.n();
    let mut c = [0u64; 4];
    for a in 0..n {
        for b in a + 1..n {
            for d in b + 1..n {
                let e = g.has_edge(a, b) as usize + g.has_edge(a, d) as usize + g.has_edge(b, d) as usize;
                c[e] += 1;
            }
        }
    }
    c
}

fn relabel(g: &Graph, perm: &[usize]) -> Graph {
    let edges: Vec<(usize, usize)> = g.edges().iter().map(|&(u, v)| (perm[u], perm[v])).collect();
    Graph::from_edges(g.n(), false, &edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn triad_census_matches_direct_count(g in graph_strategy(24)) {
        let c = triad_census(&g);
        prop_assert_eq!(c, naive_triads(&g));
        prop_assert_eq!(c.iter().map(|&x| x as u128).sum::<u128>(), choose_u128(g.n(), 3));
    }

    #[test]
    fn injective_two_star_adds_closed_triads(g in graph_strategy(30)) {
        let est = count_patterns(&g, &[Graphlet::two_star(), Graphlet::triangle()]).unwrap();
        prop_assert_eq!(est[0].injective_count, est[0].induced_count + 3 * est[1].induced_count);
        prop_assert!((est[0].q_n - est[0].p_n - est[1].p_n).abs() <= 1e-15);
        if let Ok(t) = transitivity(&g) {
            prop_assert!((t.index - t.index_injective).abs() <= 1e-15);
        }
    }

    #[test]
    fn four_node_census_is_a_partition(g in graph_strategy(14)) {
        let c = census(&g, 4);
        prop_assert_eq!(c.total(), choose_u128(g.n(), 4));
    }

    #[test]
    fn densities_are_label_free(g in graph_strategy(16), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut perm: Vec<usize> = (0..g.n()).collect();
        perm.shuffle(&mut netecon::rng::stream(seed, "test/perm", &[]));
        let h = relabel(&g, &perm);
        let shapes = [Graphlet::triangle(), Graphlet::two_star(), Graphlet::path(4), Graphlet::cycle(4)];
        let a = count_patterns(&g, &shapes).unwrap();
        let b = count_patterns(&h, &shapes).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.induced_count, y.induced_count);
            prop_assert_eq!(x.injective_count, y.injective_count);
        }
    }

    #[test]
    fn degree_powers_expand_into_stars(g in graph_strategy(40)) {
        for &d in g.degree_sequence().as_slice() {
            for m in 1..=6usize {
                let rhs: u128 = (1..=m).map(|k| surjections(m, k) as u128 * choose_u128(d, k)).sum();
                prop_assert_eq!((d as u128).pow(m as u32), rhs);
            }
        }
    }

    #[test]
    fn degree_moments_from_empirical_stars(g in graph_strategy(30)) {
        prop_assume!(g.n() >= 5);
        let dens = StarDensities::from_graph(&g, 4).unwrap();
        for m in 1..=4 {
            let theory = degree_moment_theoretical(g.n(), m, &dens).unwrap();
            let direct = degree_moment_empirical(&g, m);
            prop_assert!((theory - direct).abs() <= 1e-9 * direct.max(1.0));
        }
    }

    #[test]
    fn edge_list_round_trip(g in graph_strategy(30)) {
        let text = write_edgelist(&g, None);
        let back = load_edgelist(&text, false, Some(g.n())).unwrap().graph;
        prop_assert_eq!(back.edges(), g.edges());
    }
}

#[test]
fn subsampled_covariance_tracks_exact() {
    let g = netecon::graphon::sample_er(30, 0.3, 4).unwrap();
    let shapes = [Graphlet::triangle(), Graphlet::two_star()];
    let exact = moment_covariance(&g, &shapes, CovMode::Exact).unwrap();
    let sub = moment_covariance(&g, &shapes, CovMode::Subsample { draws: 200_000, seed: 1 }).unwrap();
    for q in 0..2 {
        for k in 0..4 {
            let (a, b, se) = (exact.xi[q][k], sub.xi[q][k], sub.xi_se[q][k]);
            assert!((a - b).abs() <= 4.0 * se + 1e-12, "q={} entry {k}: {a} vs {b} (se {se})", q + 1);
        }
    }
    assert!(exact.xi_se.iter().take(2).all(|m| m.iter().all(|x| *x == 0.0)));
}
