//! Uncapacitated min-cost flow by successive shortest paths with vertex
//! potentials, plus optimality certification.
//!
//! Conventions: a positive balance is a supply, the imbalance of a vertex
//! is `b(v) + inflow(v) - outflow(v)`, and the reduced cost of an arc is
//! `c(v, w) - y(v) + y(w)`.

use alloc::collections::BinaryHeap;
use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use ordered_float::OrderedFloat;

use crate::error::{Error, Result};
use crate::model::{PlanEntry, TransportInstance, TransportPlan};

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub tail: usize,
    pub head: usize,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowNetwork {
    n: usize,
    arcs: Vec<Arc>,
    balances: Vec<i64>,
}

impl FlowNetwork {
    pub fn new(n: usize, arcs: Vec<Arc>, balances: Vec<i64>) -> Result<Self> {
        if balances.len() != n {
            return Err(Error::InvalidNetwork(format!("{} balances for {n} vertices", balances.len())));
        }
        if balances.iter().map(|&b| b as i128).sum::<i128>() != 0 {
            return Err(Error::InvalidNetwork("balances do not sum to zero".into()));
        }
        for (i, a) in arcs.iter().enumerate() {
            if a.tail >= n || a.head >= n {
                return Err(Error::InvalidNetwork(format!("arc {i} has an endpoint out of range")));
            }
            if a.tail == a.head {
                return Err(Error::InvalidNetwork(format!("arc {i} is a self-loop")));
            }
            if !(a.cost >= 0.0 && a.cost.is_finite()) {
                return Err(Error::InvalidNetwork(format!("arc {i} has cost {}", a.cost)));
            }
        }
        Ok(FlowNetwork { n, arcs, balances })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn balances(&self) -> &[i64] {
        &self.balances
    }

    pub fn max_cost(&self) -> f64 {
        self.arcs.iter().map(|a| a.cost).fold(0.0, f64::max)
    }
}

/// Per-arc flow values, indexed like [`FlowNetwork::arcs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flow {
    amounts: Vec<u64>,
}

impl Flow {
    pub fn zero(net: &FlowNetwork) -> Self {
        Flow { amounts: vec![0; net.arcs.len()] }
    }

    pub fn from_amounts(amounts: Vec<u64>) -> Self {
        Flow { amounts }
    }

    pub fn amounts(&self) -> &[u64] {
        &self.amounts
    }

    pub fn amount(&self, arc: usize) -> u64 {
        self.amounts[arc]
    }

    pub fn cost(&self, net: &FlowNetwork) -> f64 {
        self.amounts.iter().zip(&net.arcs).map(|(&f, a)| f as f64 * a.cost).sum()
    }

    /// `b(v) + inflow(v) - outflow(v)` for every vertex.
    pub fn imbalances(&self, net: &FlowNetwork) -> Vec<i128> {
        let mut e: Vec<i128> = net.balances.iter().map(|&b| b as i128).collect();
        for (a, &f) in net.arcs.iter().zip(&self.amounts) {
            e[a.tail] -= f as i128;
            e[a.head] += f as i128;
        }
        e
    }

    pub fn is_complete(&self, net: &FlowNetwork) -> bool {
        self.amounts.len() == net.arcs.len() && self.imbalances(net).iter().all(|&e| e == 0)
    }
}

pub type Potentials = Vec<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub flow: Flow,
    pub potentials: Potentials,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Reduced costs within `tol * max(1, max arc cost)` of zero count as
    /// tight.
    pub tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: DEFAULT_TOL }
    }
}

/// Snapshot passed to an observer after every augmentation.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    pub flow: &'a [u64],
    pub potentials: &'a [f64],
    pub excess: &'a [i64],
    pub amount: u64,
}

pub fn solve(net: &FlowNetwork) -> Result<Solution> {
    solve_with(net, SolveOptions::default(), |_| {})
}

pub fn solve_with<F: FnMut(&Snapshot<'_>)>(net: &FlowNetwork, opts: SolveOptions, observer: F) -> Result<Solution> {
    Ssp::new(net, opts).run(observer)
}

const DEAD: u32 = u32::MAX;

struct Ssp<'a> {
    net: &'a FlowNetwork,
    /// Residual edges leaving vertex `v` occupy slots `start[v]..start[v + 1]`.
    /// Slot `i` holds residual edge `edge[i]` (`2a` is arc `a` forward,
    /// `2a + 1` its reverse) with head `head[i]` and signed cost `cost[i]`.
    start: Vec<usize>,
    edge: Vec<usize>,
    head: Vec<usize>,
    cost: Vec<f64>,
    flow: Vec<u64>,
    y: Vec<f64>,
    excess: Vec<i64>,
    tight: f64,
    dist: Vec<f64>,
    done: Vec<bool>,
    level: Vec<u32>,
    cursor: Vec<usize>,
}

impl<'a> Ssp<'a> {
    fn new(net: &'a FlowNetwork, opts: SolveOptions) -> Self {
        let n = net.n;
        let mut start = vec![0usize; n + 1];
        for a in &net.arcs {
            start[a.tail + 1] += 1;
            start[a.head + 1] += 1;
        }
        for v in 0..n {
            start[v + 1] += start[v];
        }
        let mut fill = start.clone();
        let slots = 2 * net.arcs.len();
        let (mut edge, mut head, mut cost) = (vec![0usize; slots], vec![0usize; slots], vec![0.0f64; slots]);
        for (i, a) in net.arcs.iter().enumerate() {
            let f = fill[a.tail];
            (edge[f], head[f], cost[f]) = (2 * i, a.head, a.cost);
            fill[a.tail] += 1;
            let r = fill[a.head];
            (edge[r], head[r], cost[r]) = (2 * i + 1, a.tail, -a.cost);
            fill[a.head] += 1;
        }
        Ssp {
            net,
            start,
            edge,
            head,
            cost,
            flow: vec![0; net.arcs.len()],
            y: vec![0.0; n],
            excess: net.balances.clone(),
            tight: opts.tol * net.max_cost().max(1.0),
            dist: vec![f64::INFINITY; n],
            done: vec![false; n],
            level: vec![DEAD; n],
            cursor: vec![0; n],
        }
    }

    #[inline]
    fn has_capacity(&self, slot: usize) -> bool {
        let e = self.edge[slot];
        e % 2 == 0 || self.flow[e / 2] > 0
    }

    #[inline]
    fn reduced_cost(&self, v: usize, slot: usize) -> f64 {
        self.cost[slot] - self.y[v] + self.y[self.head[slot]]
    }

    fn run<F: FnMut(&Snapshot<'_>)>(mut self, mut observer: F) -> Result<Solution> {
        while self.excess.iter().any(|&e| e > 0) {
            self.shortest_paths()?;
            self.blocking_flows(&mut observer);
        }
        Ok(Solution { flow: Flow { amounts: self.flow }, potentials: self.y })
    }

    /// Multi-source Dijkstra from all excess vertices, then
    /// `y(v) -= min(d(v), D)` with `D` the largest distance to a reachable
    /// deficit.
    fn shortest_paths(&mut self) -> Result<()> {
        let n = self.net.n;
        self.dist.fill(f64::INFINITY);
        self.done.fill(false);
        let mut heap = BinaryHeap::new();
        for v in 0..n {
            if self.excess[v] > 0 {
                self.dist[v] = 0.0;
                heap.push(Reverse((OrderedFloat(0.0), v)));
            }
        }
        let mut deficits_left = self.excess.iter().filter(|&&e| e < 0).count();
        let mut reach = f64::NEG_INFINITY;
        while let Some(Reverse((OrderedFloat(d), v))) = heap.pop() {
            if self.done[v] {
                continue;
            }
            self.done[v] = true;
            if self.excess[v] < 0 {
                reach = d;
                deficits_left -= 1;
                if deficits_left == 0 {
                    break;
                }
            }
            for i in self.start[v]..self.start[v + 1] {
                let w = self.head[i];
                if self.done[w] || !self.has_capacity(i) {
                    continue;
                }
                let nd = d + self.reduced_cost(v, i).max(0.0);
                if nd < self.dist[w] {
                    self.dist[w] = nd;
                    heap.push(Reverse((OrderedFloat(nd), w)));
                }
            }
        }
        if reach == f64::NEG_INFINITY {
            let vertex = (0..n).find(|&v| self.excess[v] > 0).unwrap();
            return Err(Error::Infeasible { vertex });
        }
        for v in 0..n {
            self.y[v] -= self.dist[v].min(reach);
        }
        Ok(())
    }

    #[inline]
    fn admissible(&self, v: usize, slot: usize) -> bool {
        self.has_capacity(slot) && self.reduced_cost(v, slot) <= self.tight
    }

    /// BFS layering over admissible edges from every excess vertex.
    fn layer(&mut self) -> bool {
        let n = self.net.n;
        self.level.fill(DEAD);
        let mut queue = VecDeque::new();
        for v in 0..n {
            if self.excess[v] > 0 {
                self.level[v] = 0;
                queue.push_back(v);
            }
        }
        let mut found = false;
        while let Some(v) = queue.pop_front() {
            if self.excess[v] < 0 {
                found = true;
                continue;
            }
            for i in self.start[v]..self.start[v + 1] {
                let w = self.head[i];
                if self.level[w] == DEAD && self.admissible(v, i) {
                    self.level[w] = self.level[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        found
    }

    fn blocking_flows<F: FnMut(&Snapshot<'_>)>(&mut self, observer: &mut F) {
        let mut path = Vec::new();
        while self.layer() {
            self.cursor.copy_from_slice(&self.start[..self.net.n]);
            for s in 0..self.net.n {
                while self.excess[s] > 0 && self.level[s] == 0 && self.find_path(s, &mut path) {
                    self.augment(s, &path, observer);
                }
            }
        }
    }

    /// Depth-first search along the layered admissible graph from `s` to a
    /// deficit vertex, with current-edge pointers and dead-end pruning.
    /// Leaves the slots of the path in `path`.
    fn find_path(&mut self, s: usize, path: &mut Vec<usize>) -> bool {
        path.clear();
        let mut v = s;
        loop {
            if v != s && self.excess[v] < 0 {
                return true;
            }
            let end = self.start[v + 1];
            let mut advanced = false;
            while self.cursor[v] < end {
                let i = self.cursor[v];
                let w = self.head[i];
                if self.level[w] != DEAD && self.level[w] == self.level[v] + 1 && self.admissible(v, i) {
                    path.push(i);
                    v = w;
                    advanced = true;
                    break;
                }
                self.cursor[v] += 1;
            }
            if advanced {
                continue;
            }
            self.level[v] = DEAD;
            let Some(i) = path.pop() else { return false };
            v = path.last().map_or(s, |&j| self.head[j]);
            debug_assert_eq!(self.cursor[v], i);
            self.cursor[v] += 1;
        }
    }

    fn augment<F: FnMut(&Snapshot<'_>)>(&mut self, s: usize, path: &[usize], observer: &mut F) {
        let t = self.head[*path.last().unwrap()];
        let mut amount = self.excess[s].min(-self.excess[t]) as u64;
        for &i in path {
            let e = self.edge[i];
            if e % 2 == 1 {
                amount = amount.min(self.flow[e / 2]);
            }
        }
        for &i in path {
            let e = self.edge[i];
            if e % 2 == 0 {
                self.flow[e / 2] += amount;
            } else {
                self.flow[e / 2] -= amount;
            }
        }
        self.excess[s] -= amount as i64;
        self.excess[t] += amount as i64;
        observer(&Snapshot { flow: &self.flow, potentials: &self.y, excess: &self.excess, amount });
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualArc {
    pub tail: usize,
    pub head: usize,
    /// `None` for the uncapacitated forward copy.
    pub capacity: Option<u64>,
    pub cost: f64,
    /// Index of the underlying network arc.
    pub arc: usize,
    pub reverse: bool,
}

/// Forward copies of every arc, plus a reverse copy of capacity `f(a)` and
/// cost `-c(a)` for every arc carrying flow.
pub fn residual_arcs(net: &FlowNetwork, flow: &Flow) -> Vec<ResidualArc> {
    let mut out = Vec::with_capacity(net.arcs.len());
    for (i, a) in net.arcs.iter().enumerate() {
        out.push(ResidualArc { tail: a.tail, head: a.head, capacity: None, cost: a.cost, arc: i, reverse: false });
        let f = flow.amount(i);
        if f > 0 {
            out.push(ResidualArc { tail: a.head, head: a.tail, capacity: Some(f), cost: -a.cost, arc: i, reverse: true });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimality {
    Certified,
    /// A residual arc with reduced cost below `-tol`.
    Violation { arc: usize, reverse: bool, reduced_cost: f64 },
}

impl Optimality {
    pub fn is_certified(&self) -> bool {
        matches!(self, Optimality::Certified)
    }
}

/// Certifies `(flow, y)` when every residual arc has reduced cost at least
/// `-tol`; reports the most negative one otherwise.
pub fn check_optimality(net: &FlowNetwork, flow: &Flow, y: &[f64], tol: f64) -> Optimality {
    let mut worst = Optimality::Certified;
    let mut worst_rc = -tol;
    for r in residual_arcs(net, flow) {
        let rc = r.cost - y[r.tail] + y[r.head];
        if rc < worst_rc {
            worst_rc = rc;
            worst = Optimality::Violation { arc: r.arc, reverse: r.reverse, reduced_cost: rc };
        }
    }
    worst
}

/// Complete bipartite network: reds are vertices `0..R` with supply,
/// blues are `R..R+B` with demand, one arc per red-blue pair at metric
/// cost. Arc `r * B + b` joins red `r` and blue `b`.
pub fn transport_network(inst: &TransportInstance) -> Result<FlowNetwork> {
    let (nr, nb) = (inst.reds().len(), inst.blues().len());
    let mut arcs = Vec::with_capacity(nr * nb);
    for r in 0..nr {
        for b in 0..nb {
            arcs.push(Arc { tail: r, head: nr + b, cost: inst.dist(r, b) });
        }
    }
    let balances = balances_of(inst)?;
    FlowNetwork::new(nr + nb, arcs, balances)
}

pub(crate) fn balances_of(inst: &TransportInstance) -> Result<Vec<i64>> {
    let to_i64 = |m: u64| i64::try_from(m).map_err(|_| Error::InvalidInstance("mass exceeds i64".into()));
    let mut balances = Vec::with_capacity(inst.len());
    for s in inst.reds() {
        balances.push(to_i64(s.mass)?);
    }
    for s in inst.blues() {
        balances.push(-to_i64(s.mass)?);
    }
    if inst.total_mass() > i64::MAX as u64 {
        return Err(Error::InvalidInstance("total mass exceeds i64".into()));
    }
    Ok(balances)
}

/// Optimal plan via [`solve`] on [`transport_network`]; the reference
/// oracle for the approximate solvers. Quadratic in size.
pub fn solve_transport(inst: &TransportInstance) -> Result<(TransportPlan, Potentials)> {
    let net = transport_network(inst)?;
    let sol = solve(&net)?;
    let nb = inst.blues().len();
    let entries = sol
        .flow
        .amounts()
        .iter()
        .enumerate()
        .filter(|(_, &f)| f > 0)
        .map(|(i, &f)| PlanEntry::new(i / nb, i % nb, f));
    Ok((TransportPlan::from_merged(entries), sol.potentials))
}
