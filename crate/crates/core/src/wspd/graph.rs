//! Sparse routing graph over the quadtree and flow-to-plan recovery.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mcf::{Arc, Flow, FlowNetwork};
use crate::model::{PlanEntry, TransportPlan};
use crate::wspd::pairs::{NodeMass, WspdPair};
use crate::wspd::quadtree::QuadTree;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossArc {
    /// Quadtree node on the red (up) side.
    pub u: usize,
    /// Quadtree node on the blue (down) side.
    pub v: usize,
    pub cost: f64,
    /// Index into the network's arc list.
    pub arc: usize,
}

/// Up-tree copy of every node holding red mass, down-tree copy of every
/// node holding blue mass, zero-cost tree arcs (child to parent on the up
/// side, parent to child on the down side) and one cross arc per directed
/// WSPD pair.
#[derive(Debug, Clone)]
pub struct SparseGraph {
    pub network: FlowNetwork,
    /// Vertex of each node's up copy.
    pub up: Vec<Option<usize>>,
    /// Vertex of each node's down copy.
    pub down: Vec<Option<usize>>,
    /// Arc from each node's up copy to its parent's up copy.
    pub up_arc: Vec<Option<usize>>,
    /// Arc from the parent's down copy into each node's down copy.
    pub down_arc: Vec<Option<usize>>,
    pub cross: Vec<CrossArc>,
}

pub fn build_graph(tree: &QuadTree, mass: &NodeMass, pairs: &[WspdPair]) -> Result<SparseGraph> {
    let nodes = tree.nodes();
    let mut up = vec![None; nodes.len()];
    let mut down = vec![None; nodes.len()];
    let mut count = 0;
    for id in 0..nodes.len() {
        if mass.red[id] > 0 {
            up[id] = Some(count);
            count += 1;
        }
    }
    for id in 0..nodes.len() {
        if mass.blue[id] > 0 {
            down[id] = Some(count);
            count += 1;
        }
    }
    let mut balances = vec![0i64; count];
    let mut arcs = Vec::new();
    let mut up_arc = vec![None; nodes.len()];
    let mut down_arc = vec![None; nodes.len()];
    let to_i64 = |m: u64| i64::try_from(m).map_err(|_| Error::InvalidInstance("mass exceeds i64".into()));
    for (id, node) in nodes.iter().enumerate() {
        if node.is_leaf() {
            if let Some(x) = up[id] {
                balances[x] = to_i64(mass.red[id])?;
            }
            if let Some(x) = down[id] {
                balances[x] = -to_i64(mass.blue[id])?;
            }
        }
        if let Some(p) = node.parent {
            if let (Some(c), Some(pp)) = (up[id], up[p]) {
                up_arc[id] = Some(arcs.len());
                arcs.push(Arc { tail: c, head: pp, cost: 0.0 });
            }
            if let (Some(c), Some(pp)) = (down[id], down[p]) {
                down_arc[id] = Some(arcs.len());
                arcs.push(Arc { tail: pp, head: c, cost: 0.0 });
            }
        }
    }
    let mut cross = Vec::new();
    for p in pairs {
        let mut add = |u: usize, v: usize| {
            if let (Some(a), Some(b)) = (up[u], down[v]) {
                cross.push(CrossArc { u, v, cost: p.cost, arc: arcs.len() });
                arcs.push(Arc { tail: a, head: b, cost: p.cost });
            }
        };
        add(p.u, p.v);
        if p.u != p.v {
            add(p.v, p.u);
        }
    }
    let network = FlowNetwork::new(count, arcs, balances)?;
    Ok(SparseGraph { network, up, down, up_arc, down_arc, cross })
}

/// Singly linked lists of `(point, amount)` in a shared arena, so that
/// concatenating child lists costs O(1).
struct Lists {
    item: Vec<(usize, u64)>,
    next: Vec<usize>,
}

const NIL: usize = usize::MAX;

#[derive(Clone, Copy)]
struct List {
    head: usize,
    tail: usize,
    total: u64,
}

const EMPTY: List = List { head: NIL, tail: NIL, total: 0 };

impl Lists {
    fn push(&mut self, list: &mut List, point: usize, amount: u64) {
        let id = self.item.len();
        self.item.push((point, amount));
        self.next.push(NIL);
        if list.head == NIL {
            list.head = id;
        } else {
            self.next[list.tail] = id;
        }
        list.tail = id;
        list.total += amount;
    }

    fn append(&mut self, list: &mut List, other: List) {
        if other.head == NIL {
            return;
        }
        if list.head == NIL {
            *list = other;
            return;
        }
        self.next[list.tail] = other.head;
        list.tail = other.tail;
        list.total += other.total;
    }

    /// Moves `amount` units from the front of `list` into `out`.
    fn take(&mut self, list: &mut List, mut amount: u64, out: &mut Vec<(usize, u64)>) -> bool {
        if amount > list.total {
            return false;
        }
        list.total -= amount;
        while amount > 0 {
            let (point, avail) = self.item[list.head];
            let moved = avail.min(amount);
            out.push((point, moved));
            amount -= moved;
            if moved == avail {
                list.head = self.next[list.head];
                if list.head == NIL {
                    list.tail = NIL;
                }
            } else {
                self.item[list.head].1 -= moved;
            }
        }
        true
    }
}

/// Splits a feasible flow on `graph` into red-blue transports: a postorder
/// pass hands each cross arc the red mass (and, on the down side, the blue
/// need) entering it, then each cross arc pairs its two lists greedily.
/// Points are numbered reds first, then blues; `red_count` separates them.
pub fn recover_plan(
    tree: &QuadTree,
    graph: &SparseGraph,
    masses: &[u64],
    red_count: usize,
    flow: &Flow,
) -> Result<TransportPlan> {
    let nodes = tree.nodes();
    let mut out_arcs: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    let mut in_arcs: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (k, c) in graph.cross.iter().enumerate() {
        if flow.amount(c.arc) > 0 {
            out_arcs[c.u].push(k);
            in_arcs[c.v].push(k);
        }
    }
    let mut lists = Lists { item: Vec::new(), next: Vec::new() };
    let mut red_list = vec![EMPTY; nodes.len()];
    let mut blue_list = vec![EMPTY; nodes.len()];
    let mut sent: Vec<Vec<(usize, u64)>> = vec![Vec::new(); graph.cross.len()];
    let mut received: Vec<Vec<(usize, u64)>> = vec![Vec::new(); graph.cross.len()];
    let broken = |what: &str, node: usize| Error::Invariant(format!("flow is not feasible: {what} at quadtree node {node}"));
    // children carry larger ids, so a reverse scan is a postorder
    for id in (0..nodes.len()).rev() {
        let node = &nodes[id];
        let (mut reds, mut blues) = (EMPTY, EMPTY);
        if node.is_leaf() {
            for &i in tree.subtree_points(id) {
                if i < red_count {
                    lists.push(&mut reds, i, masses[i]);
                } else {
                    lists.push(&mut blues, i - red_count, masses[i]);
                }
            }
        } else {
            for c in node.child_ids() {
                lists.append(&mut reds, red_list[c]);
                lists.append(&mut blues, blue_list[c]);
            }
        }
        for &k in &out_arcs[id] {
            if !lists.take(&mut reds, flow.amount(graph.cross[k].arc), &mut sent[k]) {
                return Err(broken("cross flow exceeds red mass", id));
            }
        }
        for &k in &in_arcs[id] {
            if !lists.take(&mut blues, flow.amount(graph.cross[k].arc), &mut received[k]) {
                return Err(broken("cross flow exceeds blue demand", id));
            }
        }
        let up = graph.up_arc[id].map_or(0, |a| flow.amount(a));
        let down = graph.down_arc[id].map_or(0, |a| flow.amount(a));
        if reds.total != up || blues.total != down {
            return Err(broken("tree arc flow does not match leftover mass", id));
        }
        red_list[id] = reds;
        blue_list[id] = blues;
    }
    let mut entries = Vec::new();
    for (a, b) in sent.iter().zip(&received) {
        zip_transfers(a, b, &mut entries);
    }
    Ok(TransportPlan::from_merged(entries))
}

/// Pairs the red units `sent` with the blue units `received` front to
/// front; both must carry the same total.
pub fn zip_transfers(sent: &[(usize, u64)], received: &[(usize, u64)], out: &mut Vec<PlanEntry>) {
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut ba) = (sent.first().map_or(0, |e| e.1), received.first().map_or(0, |e| e.1));
    while i < sent.len() && j < received.len() {
        let m = ra.min(ba);
        out.push(PlanEntry::new(sent[i].0, received[j].0, m));
        ra -= m;
        ba -= m;
        if ra == 0 {
            i += 1;
            ra = sent.get(i).map_or(0, |e| e.1);
        }
        if ba == 0 {
            j += 1;
            ba = received.get(j).map_or(0, |e| e.1);
        }
    }
}
