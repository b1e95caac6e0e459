use netecon::graph::Graphlet;
use netecon::moments::{count_patterns, CovMode};
use netecon::strategic::*;

const PATTERNS: fn() -> [Graphlet; 2] = || [Graphlet::two_star(), Graphlet::triangle()];

fn grid() -> Vec<(f64, f64)> {
    let mut g = Vec::new();
    for a in [-1.5, -1.0, -0.5] {
        for b in [0.0, 0.02, 0.04] {
            g.push((a, b));
        }
    }
    g
}

#[test]
fn smd_recovers_truth_under_max_selection() {
    let truth = (-1.0, 0.02);
    let n = 50;
    let seeds = 20;
    let mut hits = 0;
    let mut inside = 0;
    for s in 0..seeds {
        let p = MiyauchiParams { alpha: truth.0, beta: truth.1, dist: ShockDist::Logistic };
        let u = Shocks::draw(n, p.dist, 1000 + s, 0);
        let eq = min_max_equilibria(&p, &u, 0).unwrap();
        let g = eq.upper.to_graph();
        let obs: Vec<f64> = count_patterns(&g, &PATTERNS()).unwrap().iter().map(|m| m.q_n).collect();
        let omega = injective_triad_covariance(&g, CovMode::Exact).unwrap();
        let fit = smd_fit(&obs, &omega, &grid(), ShockDist::Logistic, n, 50, &PATTERNS(), SmdMode::Equality, 2.0, s).unwrap();
        let (a, b) = fit.best.unwrap();
        hits += ((a - truth.0).abs() <= 0.5 + 1e-9 && (b - truth.1).abs() <= 0.02 + 1e-9) as usize;
        let set = smd_fit(&obs, &omega, &grid(), ShockDist::Logistic, n, 50, &PATTERNS(), SmdMode::Inequality, 2.0, s).unwrap();
        inside += set.identified_set.contains(&truth) as usize;
    }
    assert!(hits * 10 >= seeds as usize * 8, "{hits}/{seeds}");
    assert!(inside * 10 >= seeds as usize * 8, "{inside}/{seeds}");
}

fn stable_codes(n: usize, p: &MiyauchiParams, u: &Shocks) -> Vec<u64> {
    (0..1u64 << (n * (n - 1) / 2))
        .filter(|&c| is_pairwise_stable(&Net::from_code(n, c), p, u, true, 1).stable)
        .collect()
}

#[test]
fn exhaustive_bracketing_at_five_agents() {
    let p = MiyauchiParams { alpha: -0.6, beta: 0.8, dist: ShockDist::Normal };
    for b in 0..100 {
        let u = Shocks::draw(5, p.dist, 21, b);
        let eq = min_max_equilibria(&p, &u, b).unwrap();
        assert!(eq.lower.is_subset_of(&eq.upper));
        assert_eq!(phi(&eq.lower, &p, &u), eq.lower);
        assert_eq!(phi(&eq.upper, &p, &u), eq.upper);
        for c in stable_codes(5, &p, &u) {
            let d = Net::from_code(5, c);
            assert!(eq.lower.is_subset_of(&d) && d.is_subset_of(&eq.upper));
        }
    }
}

#[test]
fn mele_chain_matches_exact_law() {
    let n = 4;
    let r: Vec<Vec<f64>> = (0..6).map(|p| vec![1.0, (p % 2) as f64]).collect();
    let model = MeleModel::new(n, &r, &[-0.3, 0.4], 1.6, None).unwrap();
    let pi = ergm_exact(&model, Potential::Chain).unwrap();
    let mut freq = vec![0.0; 64];
    let steps = 1_000_000;
    mele_chain(&model, Net::complete(n), 10_000, steps, 8, |d| freq[d.code() as usize] += 1.0).unwrap();
    assert!(freq.iter().all(|&f| f > 0.0), "every state visited");
    freq.iter_mut().for_each(|f| *f /= steps as f64);
    assert!(total_variation(&freq, &pi) < 0.02);
    let literal = ergm_exact(&model, Potential::UtilitySum).unwrap();
    assert!(total_variation(&freq, &literal) > 0.05);
}

#[test]
fn leung_without_interactions_is_dyadic_probit() {
    use netecon::dyadic::{fit_composite, DyadicDataset, Family, FitOptions, NodeTable, Recipe};
    let n = 40;
    let x: Vec<f64> = (0..n).map(|i| (i % 4) as f64).collect();
    let nodes = NodeTable::from_columns(&[("x", x)]).unwrap();
    let recipe = Recipe::parse("same:x; absdiff:x").unwrap();
    let model = LeungModel { alpha: -0.7, beta: 0.0, gamma: 0.0, delta: vec![0.5, -0.2] };
    let sim = simulate_leung(&model, &nodes, &recipe, 2).unwrap();
    assert!(sim.residual < 1e-10);
    let g = &sim.graph;
    // Independent feature construction for the second step.
    let mut cells: std::collections::HashMap<(u64, u64), (f64, f64)> = Default::default();
    let t = |i: usize, j: usize| {
        let (a, b) = (nodes.get(i, 0), nodes.get(j, 0));
        (((a == b) as u8 as f64), (a - b).abs())
    };
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let k = t(i, j);
            let e = cells.entry((k.0.to_bits(), k.1.to_bits())).or_default();
            e.0 += g.has_edge(i, j) as u8 as f64;
            e.1 += 1.0;
        }
    }
    let ph = |i: usize, j: usize| {
        if i == j {
            return 0.0;
        }
        let k = t(i, j);
        let c = cells[&(k.0.to_bits(), k.1.to_bits())];
        c.0 / c.1
    };
    let names: Vec<String> = ["c", "pji", "s", "same", "absdiff"].iter().map(|s| s.to_string()).collect();
    let data = DyadicDataset::complete(n, true, names, |i, j| {
        let s: f64 = (0..n).filter(|&k| k != i && k != j).map(|k| ph(k, i) * ph(k, j)).sum();
        let (a, b) = t(i, j);
        (g.has_edge(i, j) as u8 as f64, vec![1.0, ph(j, i), s, a, b])
    })
    .unwrap();
    let brute = fit_composite(&data, Family::Probit, &FitOptions::default()).unwrap();
    let two_step = leung_fit(g, &nodes, &recipe, true).unwrap();
    assert!((&two_step.fit.theta - &brute.theta).amax() < 1e-8);

    let plain = DyadicDataset::complete(n, true, vec!["c".into(), "same".into(), "absdiff".into()], |i, j| {
        let (a, b) = t(i, j);
        (g.has_edge(i, j) as u8 as f64, vec![1.0, a, b])
    })
    .unwrap();
    let plain = fit_composite(&plain, Family::Probit, &FitOptions::default()).unwrap();
    let restricted = leung_fit(g, &nodes, &recipe, false).unwrap();
    assert!((&restricted.fit.theta - &plain.theta).amax() < 1e-8);
}
