//! Louvain modularity optimisation on undirected weighted graphs.
//!
//! Modularity is `Q = Σ_c (in_c / m − (tot_c / 2m)²)` with `in_c` the edge
//! weight inside community `c` (each edge once, self-loops included), `tot_c`
//! the summed weighted degree of its nodes (a self-loop adds twice its weight
//! to its node's degree) and `m` the total edge weight. Resolution is fixed at
//! 1.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::seed;

/// Compact undirected graph on nodes `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct UndirectedGraph {
    /// Neighbours (excluding self) with merged weights, sorted by neighbour.
    adj: Vec<Vec<(usize, f64)>>,
    /// Self-loop weight per node.
    loops: Vec<f64>,
    /// Total edge weight `m`.
    total: f64,
}

impl UndirectedGraph {
    /// Builds a graph from `(u, v, w)` triples; parallel edges are merged and
    /// non-positive weights are ignored.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut maps: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        let mut loops = vec![0.0; n];
        let mut total = 0.0;
        for &(u, v, w) in edges {
            assert!(u < n && v < n, "edge ({u}, {v}) out of range for {n} nodes");
            if w <= 0.0 || !w.is_finite() {
                continue;
            }
            total += w;
            if u == v {
                loops[u] += w;
            } else {
                *maps[u].entry(v).or_insert(0.0) += w;
                *maps[v].entry(u).or_insert(0.0) += w;
            }
        }
        UndirectedGraph {
            adj: maps.into_iter().map(|m| m.into_iter().collect()).collect(),
            loops,
            total,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.total
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.adj[i].iter().map(|(_, w)| w).sum::<f64>() + 2.0 * self.loops[i]
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    /// Modularity of `partition` (community label per node). Zero for an
    /// edgeless graph.
    pub fn modularity(&self, partition: &[usize]) -> f64 {
        if self.total <= 0.0 {
            return 0.0;
        }
        let k = partition.iter().copied().max().map_or(0, |m| m + 1);
        let mut inside = vec![0.0; k];
        let mut tot = vec![0.0; k];
        for i in 0..self.node_count() {
            let c = partition[i];
            tot[c] += self.degree(i);
            inside[c] += self.loops[i];
            for &(j, w) in &self.adj[i] {
                if j > i && partition[j] == c {
                    inside[c] += w;
                }
            }
        }
        let m = self.total;
        inside
            .iter()
            .zip(&tot)
            .map(|(&e, &d)| e / m - (d / (2.0 * m)).powi(2))
            .sum()
    }

    fn aggregate(&self, partition: &[usize], k: usize) -> UndirectedGraph {
        let mut edges = Vec::new();
        for i in 0..self.node_count() {
            let ci = partition[i];
            if self.loops[i] > 0.0 {
                edges.push((ci, ci, self.loops[i]));
            }
            for &(j, w) in &self.adj[i] {
                if j > i {
                    edges.push((ci, partition[j], w));
                }
            }
        }
        UndirectedGraph::from_edges(k, &edges)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LouvainResult {
    /// Community per node, numbered by first appearance in node order.
    pub partition: Vec<usize>,
    pub modularity: f64,
    /// Modularity of the singleton partition, then after every pass.
    pub history: Vec<f64>,
}

impl LouvainResult {
    pub fn community_count(&self) -> usize {
        self.partition.iter().copied().max().map_or(0, |m| m + 1)
    }
}

/// Renumbers labels by first appearance; returns the count.
fn relabel(partition: &mut [usize]) -> usize {
    let mut map = BTreeMap::new();
    for c in partition.iter_mut() {
        let next = map.len();
        *c = *map.entry(*c).or_insert(next);
    }
    map.len()
}

/// Local moving phase. Returns the level partition and whether any node
/// moved.
fn move_nodes(g: &UndirectedGraph, order: &[usize]) -> (Vec<usize>, bool) {
    let n = g.node_count();
    let two_m = 2.0 * g.total;
    let mut comm: Vec<usize> = (0..n).collect();
    let mut tot: Vec<f64> = (0..n).map(|i| g.degree(i)).collect();
    let mut weight_to = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut moved_any = false;
    loop {
        let mut moved = false;
        for &i in order {
            let ki = g.degree(i);
            let old = comm[i];
            for &(j, w) in g.neighbors(i) {
                let c = comm[j];
                if weight_to[c] == 0.0 {
                    touched.push(c);
                }
                weight_to[c] += w;
            }
            tot[old] -= ki;
            let gain = |c: usize, w: f64| w - tot[c] * ki / two_m;
            let mut best = old;
            let mut best_gain = gain(old, weight_to[old]);
            for &c in &touched {
                let g_c = gain(c, weight_to[c]);
                if g_c > best_gain + 1e-12 {
                    best = c;
                    best_gain = g_c;
                }
            }
            tot[best] += ki;
            comm[i] = best;
            if best != old {
                moved = true;
                moved_any = true;
            }
            for &c in &touched {
                weight_to[c] = 0.0;
            }
            touched.clear();
        }
        if !moved {
            break;
        }
    }
    (comm, moved_any)
}

/// One Louvain run. Node visit order at every level is shuffled by `seed`.
pub fn louvain(graph: &UndirectedGraph, seed: u64) -> LouvainResult {
    let n = graph.node_count();
    let mut partition: Vec<usize> = (0..n).collect();
    let singleton_q = graph.modularity(&partition);
    let mut history = vec![singleton_q];
    if graph.total <= 0.0 {
        return LouvainResult {
            partition,
            modularity: 0.0,
            history,
        };
    }
    let mut rng = seed::rng(seed);
    let mut level = graph.clone();
    loop {
        let mut order: Vec<usize> = (0..level.node_count()).collect();
        order.shuffle(&mut rng);
        let (mut level_part, moved) = move_nodes(&level, &order);
        if !moved {
            break;
        }
        let k = relabel(&mut level_part);
        for c in partition.iter_mut() {
            *c = level_part[*c];
        }
        history.push(graph.modularity(&partition));
        level = level.aggregate(&level_part, k);
        if k == 1 {
            break;
        }
    }
    relabel(&mut partition);
    let modularity = graph.modularity(&partition);
    LouvainResult {
        partition,
        modularity,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> UndirectedGraph {
        UndirectedGraph::from_edges(
            6,
            &[
                (0, 1, 1.0),
                (1, 2, 1.0),
                (0, 2, 1.0),
                (3, 4, 1.0),
                (4, 5, 1.0),
                (3, 5, 1.0),
                (2, 3, 1.0),
            ],
        )
    }

    #[test]
    fn two_triangles_split_at_the_bridge() {
        for seed in 0..20 {
            let r = louvain(&two_triangles(), seed);
            assert_eq!(r.partition, vec![0, 0, 0, 1, 1, 1]);
            assert!((r.modularity - 2.0 * (3.0 / 7.0 - 0.25)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_edge_is_one_community() {
        let g = UndirectedGraph::from_edges(2, &[(0, 1, 1.0)]);
        let r = louvain(&g, 0);
        assert_eq!(r.partition, vec![0, 0]);
        assert_eq!(r.modularity, 0.0);
    }

    #[test]
    fn edgeless_graph_keeps_singletons() {
        let g = UndirectedGraph::from_edges(3, &[]);
        let r = louvain(&g, 0);
        assert_eq!(r.partition, vec![0, 1, 2]);
        assert_eq!(r.modularity, 0.0);
    }

    #[test]
    fn self_loops_count_twice_in_degree() {
        let g = UndirectedGraph::from_edges(2, &[(0, 0, 2.0), (0, 1, 1.0)]);
        assert_eq!(g.degree(0), 5.0);
        assert_eq!(g.total_weight(), 3.0);
        // all-in-one: 3/3 - (6/6)^2 = 0
        assert_eq!(g.modularity(&[0, 0]), 0.0);
        // split: 2/3 - (5/6)^2 + 0 - (1/6)^2
        let q = g.modularity(&[0, 1]);
        assert!((q - (2.0 / 3.0 - 25.0 / 36.0 - 1.0 / 36.0)).abs() < 1e-12);
    }

    #[test]
    fn history_is_monotone() {
        let r = louvain(&two_triangles(), 3);
        assert!(r.history.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(*r.history.last().unwrap(), r.modularity);
    }
}
