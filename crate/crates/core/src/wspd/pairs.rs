//! Well-separated pair decomposition restricted to bichromatic pairs.

use alloc::vec::Vec;

use crate::geom::Metric;
use crate::wspd::quadtree::QuadTree;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WspdPair {
    pub u: usize,
    pub v: usize,
    /// Minimum distance between the two node regions.
    pub min_dist: f64,
    /// Diameter of the union of the two node regions.
    pub cost: f64,
}

/// Red and blue mass per quadtree node, for a tree built over the reds
/// followed by the blues.
#[derive(Debug, Clone)]
pub struct NodeMass {
    pub red: Vec<u64>,
    pub blue: Vec<u64>,
}

impl NodeMass {
    pub fn compute(tree: &QuadTree, masses: &[u64], red_count: usize) -> Self {
        let order = tree.order();
        let mut red_prefix = Vec::with_capacity(order.len() + 1);
        let mut blue_prefix = Vec::with_capacity(order.len() + 1);
        red_prefix.push(0u64);
        blue_prefix.push(0u64);
        for &i in order {
            let (r, b) = if i < red_count { (masses[i], 0) } else { (0, masses[i]) };
            red_prefix.push(red_prefix.last().unwrap() + r);
            blue_prefix.push(blue_prefix.last().unwrap() + b);
        }
        let red = tree.nodes().iter().map(|n| red_prefix[n.hi] - red_prefix[n.lo]).collect();
        let blue = tree.nodes().iter().map(|n| blue_prefix[n.hi] - blue_prefix[n.lo]).collect();
        NodeMass { red, blue }
    }

    fn bichromatic(&self, u: usize, v: usize) -> bool {
        self.red[u] > 0 && self.blue[v] > 0 || self.red[v] > 0 && self.blue[u] > 0
    }
}

/// Pairs `{u, v}` covering every red-blue point pair exactly once with
/// `max(diam u, diam v) <= (eps / 2) * min_dist(u, v)`. Pairs that cannot
/// carry red-blue traffic are dropped. A leaf holding both colors pairs
/// with itself at cost 0.
pub fn build_wspd(tree: &QuadTree, mass: &NodeMass, metric: Metric, eps: f64) -> Vec<WspdPair> {
    let sep = eps / 2.0;
    let nodes = tree.nodes();
    let diam: Vec<f64> = nodes.iter().map(|n| n.region.diameter(metric)).collect();
    let mut pairs = Vec::new();
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for (id, node) in nodes.iter().enumerate() {
        if node.is_leaf() {
            if mass.red[id] > 0 && mass.blue[id] > 0 {
                pairs.push(WspdPair { u: id, v: id, min_dist: 0.0, cost: diam[id] });
            }
            continue;
        }
        let kids: Vec<usize> = node.child_ids().collect();
        for i in (0..kids.len()).rev() {
            for j in (i + 1..kids.len()).rev() {
                stack.push((kids[i], kids[j]));
            }
        }
        while let Some((u, v)) = stack.pop() {
            if !mass.bichromatic(u, v) {
                continue;
            }
            let (ru, rv) = (&nodes[u].region, &nodes[v].region);
            let min_dist = ru.min_dist(rv, metric);
            let split_u = diam[u] >= diam[v];
            let separated = diam[u].max(diam[v]) <= sep * min_dist;
            let (big, other) = if split_u { (u, v) } else { (v, u) };
            let (big, other) = if nodes[big].is_leaf() { (other, big) } else { (big, other) };
            if separated || nodes[big].is_leaf() {
                pairs.push(WspdPair { u, v, min_dist, cost: ru.union_diameter(rv, metric) });
                continue;
            }
            for c in nodes[big].child_ids() {
                if big == u {
                    stack.push((c, other));
                } else {
                    stack.push((other, c));
                }
            }
        }
    }
    pairs
}
