use std::collections::VecDeque;

use proptest::prelude::*;

use irg_core::bounds::{chernoff_rate, cut_bound_small_k, BoundInputs};
use irg_core::graph::components_from_edges;
use irg_core::partition::{build_partition, lower_kernel};
use irg_core::rng::SplitMix64;
use irg_core::{Cell, KernelSpec, Point, SpaceSpec};

fn unit() -> impl Strategy<Value = f64> {
    (0u64..1 << 40).prop_map(|v| v as f64 / (1u64 << 40) as f64)
}

fn kernels() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        (0.0..10.0f64).prop_map(|c| KernelSpec::constant(c).unwrap()),
        (0.1..10.0f64).prop_map(|c| KernelSpec::counterexample(c).unwrap()),
        (0.0..10.0f64, 0.01..0.5f64).prop_map(|(c, r)| KernelSpec::torus_band(c, r).unwrap()),
    ]
}

fn bfs_component_count(n: usize, edges: &[(u32, u32)]) -> usize {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        adj[i as usize - 1].push(j as usize - 1);
        adj[j as usize - 1].push(i as usize - 1);
    }
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    q.push_back(w);
                }
            }
        }
    }
    count
}

fn random_graph(n: usize, m: usize, seed: u64) -> Vec<(u32, u32)> {
    let mut rng = SplitMix64::new(seed);
    (0..m)
        .filter_map(|_| {
            let a = (rng.next_u64() % n as u64) as u32 + 1;
            let b = (rng.next_u64() % n as u64) as u32 + 1;
            (a != b).then(|| (a.min(b), a.max(b)))
        })
        .collect()
}

#[test]
fn union_find_agrees_with_bfs_on_1000_graphs() {
    for seed in 0..1000u64 {
        let n = 1 + (seed % 60) as usize;
        let edges = random_graph(n, (seed % 90) as usize, seed);
        let s = components_from_edges(n, &edges).unwrap();
        assert_eq!(s.component_sizes.len(), bfs_component_count(n, &edges), "seed {seed}");
    }
}

proptest! {
    #[test]
    fn kernels_are_symmetric(k in kernels(), x in unit(), y in unit()) {
        prop_assert_eq!(k.eval(Point::Coord(x), Point::Coord(y)), k.eval(Point::Coord(y), Point::Coord(x)));
    }

    #[test]
    fn block_kernels_are_symmetric(a in 0.0..5.0f64, b in 0.0..5.0f64, c in 0.0..5.0f64, i in 0usize..2, j in 0usize..2) {
        let k = KernelSpec::block(vec![vec![a, b], vec![b, c]]).unwrap();
        prop_assert_eq!(k.eval(Point::Atom(i), Point::Atom(j)), k.eval(Point::Atom(j), Point::Atom(i)));
    }

    #[test]
    fn scaling_is_linear(k in kernels(), f in 0.0..20.0f64, x in unit(), y in unit()) {
        let s = k.clone().scaled(f).unwrap();
        let (px, py) = (Point::Coord(x), Point::Coord(y));
        let expect = f * k.eval(px, py);
        prop_assert!((s.eval(px, py) - expect).abs() <= 1e-12 * expect.abs().max(1.0));
    }

    #[test]
    fn lambda_at_most_lambda2(k in kernels(), x in unit()) {
        let space = k.default_space();
        let l = k.lambda(&space, Point::Coord(x)).unwrap();
        let l2 = k.lambda2(&space, Point::Coord(x)).unwrap();
        prop_assert!(l <= l2 * (1.0 + 1e-12) + 1e-12, "{} > {}", l, l2);
    }

    #[test]
    fn adding_an_edge_never_adds_components(n in 2usize..40, m in 0usize..60, seed: u64, a in 0usize..1000, b in 0usize..1000) {
        let mut edges = random_graph(n, m, seed);
        let before = components_from_edges(n, &edges).unwrap().component_sizes.len();
        let (a, b) = ((a % n) as u32 + 1, (b % n) as u32 + 1);
        if a != b {
            edges.push((a.min(b), a.max(b)));
        }
        let after = components_from_edges(n, &edges).unwrap().component_sizes.len();
        prop_assert!(after <= before && before - after <= 1);
    }

    #[test]
    fn spectrum_accounts_for_every_vertex(n in 1usize..80, m in 0usize..120, seed: u64) {
        let s = components_from_edges(n, &random_graph(n, m, seed)).unwrap();
        let total: usize = s.size_spectrum.iter().map(|(k, c)| k * c).sum();
        prop_assert_eq!(total, n);
    }

    #[test]
    fn cell_measures_add_up(level in 0u32..12, index in 0u64..2048) {
        let index = index % (1u64 << level);
        let space = SpaceSpec::Interval;
        let parent = space.cell_measure(Cell::Dyadic { level, index }).unwrap();
        let left = space.cell_measure(Cell::Dyadic { level: level + 1, index: 2 * index }).unwrap();
        let right = space.cell_measure(Cell::Dyadic { level: level + 1, index: 2 * index + 1 }).unwrap();
        prop_assert!((parent - left - right).abs() < 1e-15);
    }

    #[test]
    fn rate_is_convex_with_minimum_at_one(t in 0.01..10.0f64, h in 0.001..0.5f64) {
        let f = |t| chernoff_rate(t).unwrap();
        prop_assert!(f(t) >= 0.0);
        prop_assert!(f(t - h.min(t / 2.0)) + f(t + h.min(t / 2.0)) >= 2.0 * f(t) - 1e-12);
        prop_assert!(f(1.0).abs() < 1e-15);
    }

    #[test]
    fn small_k_bound_is_a_probability(n in 2usize..100_000, k in 1usize..1000, ls in 0.0..10.0f64, extra in 0.0..10.0f64) {
        let k = 1 + k % (n - 1);
        let v = cut_bound_small_k(&BoundInputs::new(n, k, ls, ls + extra).unwrap());
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn lower_kernel_below_kernel_and_refines(m in 1u32..7, x in unit(), y in unit(), which in 0usize..3) {
        let k = match which {
            0 => KernelSpec::torus_band(4.0, 0.25).unwrap(),
            1 => KernelSpec::counterexample(4.0).unwrap(),
            _ => KernelSpec::torus_profile(vec![0.1, 0.3], vec![3.0, 1.0, 0.0]).unwrap(),
        };
        let space = k.default_space();
        let coarse = build_partition(&space, m).unwrap();
        let fine = build_partition(&space, m + 1).unwrap();
        let (px, py) = (Point::Coord(x), Point::Coord(y));
        let km = lower_kernel(&k, &coarse, coarse.locate(px).unwrap(), coarse.locate(py).unwrap()).unwrap().value;
        let kf = lower_kernel(&k, &fine, fine.locate(px).unwrap(), fine.locate(py).unwrap()).unwrap().value;
        prop_assert!(km <= k.eval(px, py) + 1e-12);
        prop_assert!(kf >= km - 1e-12);
        prop_assert!(kf <= k.eval(px, py) + 1e-12);
    }
}

#[test]
fn every_variant_symmetric_on_10k_pairs() {
    let continuous = [
        KernelSpec::constant(2.0).unwrap(),
        KernelSpec::torus_band(4.0, 0.25).unwrap(),
        KernelSpec::torus_profile(vec![0.1, 0.2], vec![3.0, 2.0, 0.0]).unwrap(),
        KernelSpec::counterexample(4.0).unwrap(),
        KernelSpec::counterexample(4.0).unwrap().scaled(0.3).unwrap(),
    ];
    let mut rng = SplitMix64::new(1);
    for k in &continuous {
        for _ in 0..10_000 {
            let (x, y) = (Point::Coord(rng.next_f64()), Point::Coord(rng.next_f64()));
            assert_eq!(k.evaluate(x, y).unwrap(), k.evaluate(y, x).unwrap(), "{k}");
        }
    }
    let block = KernelSpec::block(vec![vec![3.0, 1.0, 0.5], vec![1.0, 3.0, 0.0], vec![0.5, 0.0, 2.0]]).unwrap();
    for _ in 0..10_000 {
        let (i, j) = ((rng.next_u64() % 3) as usize, (rng.next_u64() % 3) as usize);
        assert_eq!(
            block.evaluate(Point::Atom(i), Point::Atom(j)).unwrap(),
            block.evaluate(Point::Atom(j), Point::Atom(i)).unwrap()
        );
    }
}

proptest! {
    #[test]
    fn large_k_bound_non_increasing_in_lambda_star(n in 4usize..100_000, k in 1usize..50_000, a in 0.0..5.0f64, b in 0.0..5.0f64, l2 in 5.0..20.0f64) {
        let k = 1 + k % (n / 2);
        let (lo, hi) = (a.min(b), a.max(b));
        let at = |ls| irg_core::bounds::cut_bound_large_k(&BoundInputs::new(n, k, ls, l2).unwrap()).unwrap();
        prop_assert!(at(hi) <= at(lo));
    }
}
