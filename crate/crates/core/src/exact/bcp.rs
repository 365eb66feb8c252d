//! Dynamic additively weighted bichromatic closest pair.
//!
//! `Q` lives in a kd-tree whose nodes carry their bounding box and the
//! smallest live weight below them; deleted points are tombstoned and the
//! tree is rebuilt once half of it is dead. Every `P` point caches its
//! nearest `Q` partner in a heap; entries are re-validated lazily, which is
//! exact because deletions from `Q` only ever raise a cached value.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use ordered_float::OrderedFloat;

use crate::geom::{Metric, Point, Rect};

const LEAF: usize = 8;
const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
struct KdNode {
    lo: usize,
    hi: usize,
    bbox: Rect,
    min_w: f64,
    left: usize,
    right: usize,
    parent: usize,
}

#[derive(Debug, Clone)]
struct KdTree {
    items: Vec<(usize, Point, f64)>,
    alive: Vec<bool>,
    nodes: Vec<KdNode>,
    leaf_of: Vec<usize>,
    live: usize,
}

impl KdTree {
    fn build(mut items: Vec<(usize, Point, f64)>) -> Self {
        let n = items.len();
        let mut nodes = Vec::with_capacity(2 * n / LEAF + 2);
        let mut leaf_of = vec![NONE; n];
        if n > 0 {
            let mut stack = vec![(0usize, n, NONE, false, 0usize)];
            while let Some((lo, hi, parent, is_right, depth)) = stack.pop() {
                let id = nodes.len();
                if parent != NONE {
                    let p: &mut KdNode = &mut nodes[parent];
                    if is_right {
                        p.right = id;
                    } else {
                        p.left = id;
                    }
                }
                let bbox = Rect::bounding(items[lo..hi].iter().map(|t| t.1)).unwrap();
                let min_w = items[lo..hi].iter().map(|t| t.2).fold(f64::INFINITY, f64::min);
                nodes.push(KdNode { lo, hi, bbox, min_w, left: NONE, right: NONE, parent });
                if hi - lo <= LEAF {
                    leaf_of[lo..hi].fill(id);
                    continue;
                }
                let mid = (lo + hi) / 2;
                let by_x = if depth % 2 == 0 { bbox.width() >= bbox.height() } else { bbox.width() > bbox.height() };
                let slice = &mut items[lo..hi];
                if by_x {
                    slice.select_nth_unstable_by(mid - lo, |a, b| a.1.x.total_cmp(&b.1.x).then(a.0.cmp(&b.0)));
                } else {
                    slice.select_nth_unstable_by(mid - lo, |a, b| a.1.y.total_cmp(&b.1.y).then(a.0.cmp(&b.0)));
                }
                stack.push((mid, hi, id, true, depth + 1));
                stack.push((lo, mid, id, false, depth + 1));
            }
        }
        KdTree { alive: vec![true; n], live: n, items, nodes, leaf_of }
    }

    fn remove(&mut self, slot: usize) {
        if !self.alive[slot] {
            return;
        }
        self.alive[slot] = false;
        self.live -= 1;
        let leaf = self.leaf_of[slot];
        let n = &self.nodes[leaf];
        let mut w = (n.lo..n.hi).filter(|&i| self.alive[i]).map(|i| self.items[i].2).fold(f64::INFINITY, f64::min);
        self.nodes[leaf].min_w = w;
        let mut id = self.nodes[leaf].parent;
        while id != NONE {
            let (l, r) = (self.nodes[id].left, self.nodes[id].right);
            w = self.nodes[l].min_w.min(self.nodes[r].min_w);
            if self.nodes[id].min_w == w {
                break;
            }
            self.nodes[id].min_w = w;
            id = self.nodes[id].parent;
        }
    }

    /// Live item minimising `d(p, q) + w(q)`, ties to the lower id.
    fn nearest(&self, p: Point, metric: Metric) -> Option<(f64, usize)> {
        if self.live == 0 {
            return None;
        }
        let mut best: Option<(f64, usize)> = None;
        let mut stack = vec![0usize];
        let better = |v: f64, id: usize, best: &Option<(f64, usize)>| match best {
            None => true,
            Some((bv, bid)) => v < *bv || v == *bv && id < *bid,
        };
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            let bound = node.bbox.dist_to_point(p, metric) + node.min_w;
            if node.min_w == f64::INFINITY || best.is_some_and(|(bv, _)| bound > bv) {
                continue;
            }
            if node.left == NONE {
                for i in node.lo..node.hi {
                    if self.alive[i] {
                        let (qid, q, w) = self.items[i];
                        let v = metric.dist(p, q) + w;
                        if better(v, qid, &best) {
                            best = Some((v, qid));
                        }
                    }
                }
                continue;
            }
            let (l, r) = (node.left, node.right);
            let bl = self.nodes[l].bbox.dist_to_point(p, metric) + self.nodes[l].min_w;
            let br = self.nodes[r].bbox.dist_to_point(p, metric) + self.nodes[r].min_w;
            if bl <= br {
                stack.push(r);
                stack.push(l);
            } else {
                stack.push(l);
                stack.push(r);
            }
        }
        best
    }
}

/// Point sets `P` and `Q` with weights; reports the pair minimising
/// `w(p) + d(p, q) + w(q)`.
#[derive(Debug, Clone)]
pub struct Bcp {
    metric: Metric,
    tree: KdTree,
    /// Slot of each `Q` id in the tree, or `NONE`.
    q_slot: Vec<usize>,
    p_items: Vec<Option<(Point, f64)>>,
    /// Bumped on every change to a `P` point, invalidating older heap entries.
    p_version: Vec<u32>,
    heap: BinaryHeap<Reverse<(OrderedFloat<f64>, usize, usize, u32)>>,
    pending_q: Vec<(usize, Point, f64)>,
}

impl Bcp {
    /// `q` holds `(id, point, weight)` with ids below `id_bound`; `P` ids
    /// must also stay below `id_bound`.
    pub fn new(metric: Metric, q: Vec<(usize, Point, f64)>, id_bound: usize) -> Self {
        let mut bcp = Bcp {
            metric,
            tree: KdTree::build(Vec::new()),
            q_slot: vec![NONE; id_bound],
            p_items: vec![None; id_bound],
            p_version: vec![0; id_bound],
            heap: BinaryHeap::new(),
            pending_q: q,
        };
        bcp.rebuild();
        bcp
    }

    fn rebuild(&mut self) {
        let mut items: Vec<(usize, Point, f64)> = (0..self.tree.items.len())
            .filter(|&i| self.tree.alive[i])
            .map(|i| self.tree.items[i])
            .collect();
        items.append(&mut self.pending_q);
        self.tree = KdTree::build(items);
        self.q_slot.fill(NONE);
        for (slot, item) in self.tree.items.iter().enumerate() {
            self.q_slot[item.0] = slot;
        }
        self.heap.clear();
        for id in 0..self.p_items.len() {
            self.refresh(id);
        }
    }

    fn refresh(&mut self, p: usize) {
        if let Some((pt, w)) = self.p_items[p] {
            if let Some((v, q)) = self.tree.nearest(pt, self.metric) {
                self.heap.push(Reverse((OrderedFloat(v + w), p, q, self.p_version[p])));
            }
        }
    }

    pub fn insert_p(&mut self, id: usize, point: Point, weight: f64) {
        self.p_items[id] = Some((point, weight));
        self.p_version[id] = self.p_version[id].wrapping_add(1);
        self.refresh(id);
    }

    pub fn delete_p(&mut self, id: usize) {
        self.p_items[id] = None;
        self.p_version[id] = self.p_version[id].wrapping_add(1);
    }

    pub fn insert_q(&mut self, id: usize, point: Point, weight: f64) {
        self.pending_q.push((id, point, weight));
        self.rebuild();
    }

    pub fn delete_q(&mut self, id: usize) {
        let slot = self.q_slot[id];
        if slot == NONE || !self.tree.alive[slot] {
            return;
        }
        self.tree.remove(slot);
        self.q_slot[id] = NONE;
        if self.tree.live * 2 < self.tree.items.len() {
            self.rebuild();
        }
    }

    pub fn contains_q(&self, id: usize) -> bool {
        self.q_slot[id] != NONE
    }

    /// Current closest pair `(value, p, q)`.
    pub fn best(&mut self) -> Option<(f64, usize, usize)> {
        while let Some(&Reverse((OrderedFloat(v), p, q, version))) = self.heap.peek() {
            if self.p_version[p] != version {
                self.heap.pop();
                continue;
            }
            if self.contains_q(q) {
                return Some((v, p, q));
            }
            self.heap.pop();
            self.refresh(p);
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn formula_example() {
        let mut bcp = Bcp::new(Metric::L2, vec![(0, Point::new(3.0, 4.0), 2.0)], 1);
        bcp.insert_p(0, Point::new(0.0, 0.0), 1.0);
        assert_eq!(bcp.best(), Some((8.0, 0, 0)));
    }

    #[test]
    fn matches_brute_force_under_updates() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..20 {
            let metric = [Metric::L1, Metric::L2, Metric::LInf][trial % 3];
            let n = 60;
            let pts: Vec<Point> =
                (0..n).map(|_| Point::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0))).collect();
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
            let mut bcp = Bcp::new(metric, (0..n).map(|i| (i, pts[i], w[i])).collect(), n);
            let mut in_p = vec![false; n];
            let mut in_q = vec![true; n];
            for _ in 0..150 {
                let i = rng.random_range(0..n);
                match rng.random_range(0..4) {
                    0 | 1 => {
                        in_p[i] = true;
                        bcp.insert_p(i, pts[i], w[i]);
                    }
                    2 => {
                        in_q[i] = false;
                        bcp.delete_q(i);
                    }
                    _ => {
                        if !in_q[i] {
                            in_q[i] = true;
                            bcp.insert_q(i, pts[i], w[i]);
                        } else {
                            in_p[i] = false;
                            bcp.delete_p(i);
                        }
                    }
                }
                let mut want: Option<f64> = None;
                for p in (0..n).filter(|&p| in_p[p]) {
                    for q in (0..n).filter(|&q| in_q[q]) {
                        let v = w[p] + metric.dist(pts[p], pts[q]) + w[q];
                        want = Some(want.map_or(v, |b: f64| b.min(v)));
                    }
                }
                let got = bcp.best().map(|t| t.0);
                match (got, want) {
                    (None, None) => {}
                    (Some(g), Some(x)) => assert!((g - x).abs() <= 1e-9, "{g} vs {x}"),
                    _ => panic!("presence mismatch: {got:?} vs {want:?}"),
                }
            }
        }
    }
}
