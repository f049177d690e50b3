mod common;

use std::collections::BTreeSet;

use actant_core::community::cores_and_peripheries;
use actant_core::coverage::{
    coverage_score, cross_correlate, relative_coverage, BaselineParams, TimeSeries,
};
use actant_core::kmeans::{kmeans, sq_dist, KMeansParams};
use actant_core::louvain::{louvain, UndirectedGraph};
use actant_core::metrics::homogeneity_completeness_v;
use actant_core::news::{cooccur_network, window_count};
use common::*;
use proptest::prelude::*;

fn series(vals: &[f64], offset: i64) -> TimeSeries {
    TimeSeries::new(
        vals.iter()
            .enumerate()
            .map(|(i, &v)| (day(i as i64 + offset), v))
            .collect(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn window_count_matches_enumeration(days in 0i64..400, width in 1i64..30, shift in 1i64..10) {
        let mut n = 0;
        let mut start = 0;
        while start + width <= days {
            n += 1;
            start += shift;
        }
        prop_assert_eq!(window_count(days, width, shift), n);
    }

    #[test]
    fn network_is_symmetric_and_rows_normalised(seed in any::<u64>()) {
        let fx = net_fixture(seed);
        let net = cooccur_network(0, &fx.tuples, &fx.entities, &aliases(), &stop());
        let n = net.entities.len();
        for i in 0..n {
            prop_assert_eq!(net.counts[i][i], 0);
            for j in 0..n {
                prop_assert_eq!(net.counts[i][j], net.counts[j][i]);
            }
            let sum: f64 = net.normalized[i].iter().sum();
            let expect = if net.counts[i].iter().any(|&c| c > 0) { 1.0 } else { 0.0 };
            prop_assert!((sum - expect).abs() < 1e-12);
        }
        let mut reversed = fx.tuples.clone();
        reversed.reverse();
        let again = cooccur_network(0, &reversed, &fx.entities, &aliases(), &stop());
        prop_assert_eq!(net, again);
    }

    #[test]
    fn common_neighbours_are_symmetric(seed in any::<u64>()) {
        let fx = net_fixture(seed);
        let net = cooccur_network(0, &fx.tuples, &fx.entities, &aliases(), &stop());
        for a in &net.entities {
            for b in &net.entities {
                prop_assert_eq!(net.common_neighbors(a, b), net.common_neighbors(b, a));
            }
            let i = net.index_of(a).unwrap();
            prop_assert_eq!(net.common_neighbors(a, a), net.neighbors(i).len());
        }
    }

    #[test]
    fn hcv_matches_oracle_and_swaps(
        pairs in prop::collection::vec((0usize..5, 0usize..5), 1..40),
    ) {
        let (truth, pred): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let (h, c, v) = homogeneity_completeness_v(&truth, &pred);
        let (oh, oc, ov) = oracle_hcv(&truth, &pred);
        prop_assert!((h - oh).abs() < 1e-9 && (c - oc).abs() < 1e-9 && (v - ov).abs() < 1e-9);
        let (h2, c2, v2) = homogeneity_completeness_v(&pred, &truth);
        prop_assert!((h - c2).abs() < 1e-12 && (c - h2).abs() < 1e-12 && (v - v2).abs() < 1e-12);
        for x in [h, c, v] {
            prop_assert!((0.0..=1.0).contains(&x));
        }
        let renamed: Vec<usize> = pred.iter().map(|p| 10 - p).collect();
        let (h3, c3, v3) = homogeneity_completeness_v(&truth, &renamed);
        prop_assert!((h - h3).abs() < 1e-12 && (c - c3).abs() < 1e-12 && (v - v3).abs() < 1e-12);
    }

    #[test]
    fn coverage_is_order_free_and_bounded(seed in any::<u64>(), rot in 0usize..200) {
        let (vocab, tokens) = coverage_fixture(seed);
        let single: Vec<String> = vocab.iter().filter(|w| !w.contains(' ')).cloned().collect();
        prop_assume!(!single.is_empty());
        let s = coverage_score(&single, &tokens).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
        let mut rotated = tokens.clone();
        if !rotated.is_empty() {
            let k = rot % rotated.len();
            rotated.rotate_left(k);
        }
        prop_assert_eq!(coverage_score(&single, &rotated).unwrap(), s);
        let mut doubled = single.clone();
        doubled.extend(single.iter().cloned());
        prop_assert_eq!(coverage_score(&doubled, &tokens).unwrap(), s);
    }

    #[test]
    fn relative_coverage_is_reproducible(seed in any::<u64>(), size in 1usize..10) {
        let (vocab, tokens) = coverage_fixture(seed);
        let pool = ["a", "b", "c", "d", "e", "f", "g", "h"];
        let p = BaselineParams { samples: 5, size, seed };
        let r = relative_coverage(&vocab, &tokens, &pool, &p).unwrap();
        prop_assert_eq!(r, relative_coverage(&vocab, &tokens, &pool, &p).unwrap());
        prop_assert_eq!(r.with_replacement, size > pool.len());
        if r.score > 0.0 && r.baseline > 0.0 {
            prop_assert!((r.ratio - r.score / r.baseline).abs() < 1e-12);
        }
    }

    #[test]
    fn kmeans_objective_never_rises(
        points in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 2), 1..40),
        k in 1usize..6,
        seed in any::<u64>(),
    ) {
        let r = kmeans(&points, &KMeansParams::new(k, seed));
        prop_assert_eq!(r.assignments.len(), points.len());
        prop_assert!(r.centroids.len() <= k.min(points.len()));
        prop_assert!(r.assignments.iter().all(|&a| a < r.centroids.len()));
        for w in r.history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * (1.0 + w[0]));
        }
        let recomputed: f64 = points.iter().zip(&r.assignments).map(|(p, &a)| sq_dist(p, &r.centroids[a])).sum();
        prop_assert!((recomputed - r.objective).abs() < 1e-6 * (1.0 + r.objective));
        prop_assert_eq!(&r, &kmeans(&points, &KMeansParams::new(k, seed)));
    }

    #[test]
    fn louvain_reports_true_modularity(seed in any::<u64>()) {
        let (n, edges) = random_graph(seed, 25);
        let g = UndirectedGraph::from_edges(n, &edges);
        let r = louvain(&g, seed);
        prop_assume!(g.total_weight() > 0.0);
        let mut adj = vec![vec![0.0; n]; n];
        for &(u, v, w) in &edges {
            adj[u][v] += w;
            adj[v][u] += w;
        }
        prop_assert!((oracle_modularity(&adj, &r.partition) - r.modularity).abs() < 1e-9);
        let singletons: Vec<usize> = (0..n).collect();
        prop_assert!(r.modularity >= oracle_modularity(&adj, &singletons) - 1e-12);
        let labels: BTreeSet<usize> = r.partition.iter().copied().collect();
        prop_assert_eq!(labels.len(), r.community_count());
    }

    #[test]
    fn lowering_relax_threshold_only_grows_peripheries(
        upper in prop::collection::vec(0.0f64..=1.0, 66),
        tau_core in 0.6f64..1.0,
        relax in (0.05f64..0.5, 0.0f64..0.3),
    ) {
        let n = 12;
        let mut freq = vec![1.0; n * n];
        let mut it = upper.into_iter();
        for i in 0..n {
            for j in i + 1..n {
                let f = it.next().unwrap();
                freq[i * n + j] = f;
                freq[j * n + i] = f;
            }
        }
        let high = relax.0 + relax.1;
        let strict = cores_and_peripheries(&freq, n, tau_core, high);
        let loose = cores_and_peripheries(&freq, n, tau_core, relax.0);
        let mut seen = BTreeSet::new();
        for (core, _) in &loose {
            for v in core {
                prop_assert!(seen.insert(*v), "cores overlap");
            }
        }
        for (core, per) in strict.iter().filter(|(c, _)| c.len() > 1) {
            let (_, per_loose) = loose.iter().find(|(c, _)| c == core).expect("multi-node core kept");
            prop_assert!(per.iter().all(|v| per_loose.contains(v)));
        }
    }

    #[test]
    fn shifted_copy_peaks_at_its_lag(
        vals in prop::collection::vec(0.0f64..1.0, 30..60),
        lag in -5i64..=5,
    ) {
        let a = series(&vals, 0);
        let b = series(&vals, lag);
        let x = cross_correlate(&a, &b, 6).unwrap();
        prop_assume!(x.best.is_some());
        prop_assert_eq!(x.best_lag, Some(lag));
        prop_assert!((x.best.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn smoothing_keeps_constants_and_dates(v in -5.0f64..5.0, len in 1usize..30, width in 1usize..9) {
        let s = series(&vec![v; len], 0);
        let sm = s.smoothed(width);
        prop_assert_eq!(sm.len(), len);
        for ((d0, _), (d1, x)) in s.points().iter().zip(sm.points()) {
            prop_assert_eq!(d0, d1);
            prop_assert!((x - v).abs() < 1e-12);
        }
        let one = s.smoothed(1);
        prop_assert_eq!(one.points(), s.points());
    }
}
