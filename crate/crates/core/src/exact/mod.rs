//! Exact planar transport by excess scaling with arc contraction.
//!
//! The complete bipartite network is never materialised. Shortest paths
//! run a Dijkstra whose red-to-blue relaxations come from a dynamic
//! weighted closest-pair structure, while arcs carrying flow (the support,
//! always a forest) are relaxed explicitly and first. Blue-to-red dummy
//! arcs of cost `M = 2nUC` keep every red reachable.
//!
//! Imbalances are tracked exactly. With scale `D / 2^j`, an arc outside
//! the contracted set carries `k` scale units and a supervertex holds
//! `B + K D / 2^j`, stored as the integers `(B, K)`.

mod bcp;

pub use bcp::Bcp;

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use ordered_float::OrderedFloat;

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::mcf::{self, Arc, FlowNetwork};
use crate::model::{PlanEntry, TransportInstance, TransportPlan};

/// Cost of the blue-to-red dummy arcs: `2 n U C`, with `C` the largest
/// red-blue distance (1 if every pair coincides).
pub fn dummy_cost(n: usize, max_mass: u64, max_dist: f64) -> f64 {
    let c = if max_dist > 0.0 { max_dist } else { 1.0 };
    2.0 * n as f64 * max_mass as f64 * c
}

/// Complete bipartite network plus dummy arcs: arc `r * B + b` joins red
/// `r` to blue `b`, arc `R * B + b * R + r` is the dummy from blue `b` back
/// to red `r`. Vertices are reds `0..R` then blues.
pub fn add_dummies(inst: &TransportInstance) -> Result<FlowNetwork> {
    let (nr, nb) = (inst.reds().len(), inst.blues().len());
    let m = dummy_cost(inst.len(), inst.max_mass(), inst.max_cross_distance());
    let mut arcs = Vec::with_capacity(2 * nr * nb);
    for r in 0..nr {
        for b in 0..nb {
            arcs.push(Arc { tail: r, head: nr + b, cost: inst.dist(r, b) });
        }
    }
    for b in 0..nb {
        for r in 0..nr {
            arcs.push(Arc { tail: nr + b, head: r, cost: m });
        }
    }
    FlowNetwork::new(nr + nb, arcs, mcf::balances_of(inst)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactOptions {
    /// After every augmentation, verify support acyclicity and
    /// complementary slackness over all arcs; verify the excess bound at
    /// every scale change. Quadratic per check.
    pub check_invariants: bool,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions { check_invariants: false }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExactStats {
    pub phases: usize,
    pub augmentations: usize,
    pub contractions: usize,
    pub scale_resets: usize,
    pub augmentations_per_phase: Vec<usize>,
    pub max_support: usize,
    /// Vertices settled through a dummy arc, over all searches.
    pub dummy_settles: usize,
    pub invariant_checks: usize,
    /// Zero-cost support cycles removed after tied augmentations.
    pub cycles_cancelled: usize,
}

#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub plan: TransportPlan,
    /// Potentials certifying the plan (reds then blues).
    pub potentials: Vec<f64>,
    pub stats: ExactStats,
}

impl ExactSolution {
    /// The plan as a flow on [`add_dummies`]; every dummy arc is empty.
    pub fn network_flow(&self, inst: &TransportInstance) -> mcf::Flow {
        let (nr, nb) = (inst.reds().len(), inst.blues().len());
        let mut amounts = vec![0u64; 2 * nr * nb];
        for e in self.plan.entries() {
            amounts[e.red * nb + e.blue] = e.amount;
        }
        mcf::Flow::from_amounts(amounts)
    }
}

pub fn solve(inst: &TransportInstance) -> Result<ExactSolution> {
    solve_with(inst, ExactOptions::default(), |_| {})
}

/// Like [`solve`], calling `observer` with the live state before every
/// shortest-path search.
pub fn solve_with<F: FnMut(&Solver<'_>)>(
    inst: &TransportInstance,
    opts: ExactOptions,
    mut observer: F,
) -> Result<ExactSolution> {
    let mut solver = Solver::new(inst, opts)?;
    solver.run(&mut observer)?;
    let (plan, potentials) = solver.recover_flow()?;
    Ok(ExactSolution { plan, potentials, stats: solver.stats })
}

/// An arc in the flow support: `units` scale units of flow, or an
/// unknown positive amount once contracted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupportArc {
    pub units: i64,
    pub contracted: bool,
}

/// How a shortest-path search reached a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pred {
    Source,
    /// From this red along the red-blue arc.
    Forward(usize),
    /// From this blue against a support arc.
    Reverse(usize),
    /// From this blue along a dummy arc.
    Dummy(usize),
    Unreached,
}

#[derive(Debug, Clone)]
pub struct SearchTree {
    pub dist: Vec<f64>,
    pub pred: Vec<Pred>,
    /// Vertices in settling order.
    pub order: Vec<usize>,
    pub target: Option<usize>,
}

/// Sign-exact comparison value `e * 2^j` of a supervertex imbalance, or a
/// saturated stand-in once `B * 2^j` leaves `i128`.
fn scaled(base: i128, units: i128, d: i128, shift: u32) -> i128 {
    let lifted = if base == 0 {
        Some(0)
    } else if shift >= 126 {
        None
    } else {
        base.checked_mul(1i128 << shift)
    };
    match lifted.and_then(|x| x.checked_add(units.checked_mul(d)?)) {
        Some(v) => v,
        None if base > 0 => i128::MAX / 4,
        None => i128::MIN / 4,
    }
}

/// Mid-run state of the exact solver.
pub struct Solver<'a> {
    inst: &'a TransportInstance,
    nr: usize,
    n: usize,
    points: Vec<Point>,
    balance: Vec<i64>,
    y: Vec<f64>,
    m_cost: f64,
    max_dist: f64,
    support: BTreeMap<(usize, usize), SupportArc>,
    adj: Vec<Vec<usize>>,
    parent: Vec<usize>,
    base: Vec<i128>,
    units: Vec<i128>,
    d: i128,
    shift: u32,
    opts: ExactOptions,
    pub stats: ExactStats,
}

impl<'a> Solver<'a> {
    pub fn new(inst: &'a TransportInstance, opts: ExactOptions) -> Result<Self> {
        let nr = inst.reds().len();
        let n = inst.len();
        let points: Vec<Point> = inst.points().collect();
        let balance = mcf::balances_of(inst)?;
        let max_dist = inst.max_cross_distance();
        Ok(Solver {
            inst,
            nr,
            n,
            points,
            base: balance.iter().map(|&b| b as i128).collect(),
            units: vec![0; n],
            balance,
            y: vec![0.0; n],
            m_cost: dummy_cost(n, inst.max_mass(), max_dist),
            max_dist,
            support: BTreeMap::new(),
            adj: vec![Vec::new(); n],
            parent: (0..n).collect(),
            d: inst.max_mass() as i128,
            shift: 0,
            opts,
            stats: ExactStats::default(),
        })
    }

    pub fn potentials(&self) -> &[f64] {
        &self.y
    }

    pub fn dummy_cost(&self) -> f64 {
        self.m_cost
    }

    pub fn red_count(&self) -> usize {
        self.nr
    }

    /// Support arcs as `(red vertex, blue vertex, arc)`.
    pub fn support(&self) -> impl Iterator<Item = (usize, usize, SupportArc)> + '_ {
        self.support.iter().map(|(&(r, b), &a)| (r, b, a))
    }

    /// Current scale as a float.
    pub fn scale(&self) -> f64 {
        self.d as f64 / libm::pow(2.0, self.shift as f64)
    }

    pub fn supervertex(&self, v: usize) -> usize {
        let mut v = v;
        while self.parent[v] != v {
            v = self.parent[v];
        }
        v
    }

    fn find(&mut self, v: usize) -> usize {
        let root = self.supervertex(v);
        let mut v = v;
        while self.parent[v] != root {
            let next = self.parent[v];
            self.parent[v] = root;
            v = next;
        }
        root
    }

    fn value(&self, root: usize) -> i128 {
        scaled(self.base[root], self.units[root], self.d, self.shift)
    }

    fn active_excess(&self, root: usize) -> bool {
        self.value(root).saturating_mul(3) >= 2 * self.d
    }

    fn active_deficit(&self, root: usize) -> bool {
        self.value(root).saturating_mul(3) <= -2 * self.d
    }

    /// Reduced cost of the red-blue arc `(r, b)` (vertex ids).
    #[inline]
    fn rc(&self, r: usize, b: usize) -> f64 {
        self.inst.metric().dist(self.points[r], self.points[b]) - self.y[r] + self.y[b]
    }

    fn tol(&self) -> f64 {
        let ymax = self.y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        1e-9 * self.max_dist.max(ymax).max(1.0)
    }

    /// Sources and target test for the next augmentation: an active excess
    /// supervertex towards any deficit beyond a third of the scale, or every
    /// excess beyond a third towards an active deficit supervertex. Neither
    /// endpoint can turn into an active vertex of the opposite sign.
    pub fn next_search(&self) -> Option<(Vec<usize>, Vec<bool>)> {
        let roots: Vec<usize> = (0..self.n).map(|v| self.supervertex(v)).collect();
        let third: Vec<i128> = roots.iter().map(|&r| self.value(r).saturating_mul(3)).collect();
        if let Some(s) = (0..self.n).find(|&v| third[v] >= 2 * self.d) {
            let target: Vec<bool> = third.iter().map(|&x| x < -self.d).collect();
            if target.contains(&true) {
                return Some((vec![s], target));
            }
        }
        let t = (0..self.n).find(|&v| third[v] <= -2 * self.d)?;
        let sources: Vec<usize> = (0..self.n).filter(|&v| third[v] > self.d).collect();
        if sources.is_empty() {
            return None;
        }
        let target = roots.iter().map(|&r| r == roots[t]).collect();
        Some((sources, target))
    }

    /// Shortest-path search under reduced costs from `sources`. With
    /// `target` set it stops at the first vertex flagged there; otherwise
    /// it settles every vertex.
    pub fn search(&self, sources: &[usize], target: Option<&[bool]>) -> SearchTree {
        let (nr, n) = (self.nr, self.n);
        let metric = self.inst.metric();
        let mut dist = vec![f64::INFINITY; n];
        let mut tent = vec![f64::INFINITY; n];
        let mut tent_pred = vec![Pred::Unreached; n];
        let mut pred = vec![Pred::Unreached; n];
        let mut settled = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut heap: BinaryHeap<Reverse<(OrderedFloat<f64>, usize)>> = BinaryHeap::new();
        for &s in sources {
            tent[s] = 0.0;
            tent_pred[s] = Pred::Source;
            heap.push(Reverse((OrderedFloat(0.0), s)));
        }
        let blues: Vec<(usize, Point, f64)> = (nr..n).map(|v| (v - nr, self.points[v], self.y[v])).collect();
        let mut bcp = Bcp::new(metric, blues, n.max(1));
        let mut reds_by_y: Vec<usize> = (0..nr).collect();
        reds_by_y.sort_by(|&a, &b| self.y[a].total_cmp(&self.y[b]).then(a.cmp(&b)));
        let mut red_ptr = 0;
        // min over settled blues of d(b) - y(b)
        let mut dead_base: Option<(f64, usize)> = None;
        let mut floor = 0.0f64;
        let mut found = None;
        loop {
            while let Some(&Reverse((_, v))) = heap.peek() {
                if settled[v] {
                    heap.pop();
                } else {
                    break;
                }
            }
            let mut choice: Option<(f64, usize, Pred)> = heap.peek().map(|&Reverse((OrderedFloat(d), v))| (d, v, tent_pred[v]));
            if let Some((val, r, b)) = bcp.best() {
                if choice.is_none_or(|c| val < c.0) {
                    choice = Some((val, nr + b, Pred::Forward(r)));
                }
            }
            if let Some((base, b)) = dead_base {
                while red_ptr < nr && settled[reds_by_y[red_ptr]] {
                    red_ptr += 1;
                }
                if red_ptr < nr {
                    let r = reds_by_y[red_ptr];
                    let val = base + self.m_cost + self.y[r];
                    if choice.is_none_or(|c| val < c.0) {
                        choice = Some((val, r, Pred::Dummy(b)));
                    }
                }
            }
            let Some((d, v, p)) = choice else { break };
            let d = d.max(floor);
            floor = d;
            settled[v] = true;
            dist[v] = d;
            pred[v] = p;
            order.push(v);
            if let Some(t) = target {
                if t[v] {
                    found = Some(v);
                    break;
                }
            }
            if v < nr {
                bcp.insert_p(v, self.points[v], d - self.y[v]);
                for &b in &self.adj[v] {
                    if settled[b] {
                        continue;
                    }
                    let arc = self.support[&(v, b)];
                    let nd = if arc.contracted { d } else { d + self.rc(v, b).max(0.0) };
                    if nd < tent[b] {
                        tent[b] = nd;
                        tent_pred[b] = Pred::Forward(v);
                        heap.push(Reverse((OrderedFloat(nd), b)));
                    }
                }
            } else {
                bcp.delete_q(v - nr);
                let key = d - self.y[v];
                if dead_base.is_none_or(|(k, _)| key < k) {
                    dead_base = Some((key, v));
                }
                for &r in &self.adj[v] {
                    if settled[r] {
                        continue;
                    }
                    let arc = self.support[&(r, v)];
                    let nd = if arc.contracted { d } else { d + (-self.rc(r, v)).max(0.0) };
                    if nd < tent[r] {
                        tent[r] = nd;
                        tent_pred[r] = Pred::Reverse(v);
                        heap.push(Reverse((OrderedFloat(nd), r)));
                    }
                }
            }
        }
        SearchTree { dist, pred, order, target: found }
    }

    fn link(&mut self, r: usize, b: usize, arc: SupportArc) {
        self.support.insert((r, b), arc);
        self.adj[r].push(b);
        self.adj[b].push(r);
    }

    fn unlink(&mut self, r: usize, b: usize) {
        self.support.remove(&(r, b));
        self.adj[r].retain(|&x| x != b);
        self.adj[b].retain(|&x| x != r);
    }

    fn run<F: FnMut(&Solver<'_>)>(&mut self, observer: &mut F) -> Result<()> {
        let phase_limit = 1000 + 200 * self.n;
        let aug_limit = 100 + 50 * self.n;
        loop {
            let roots: Vec<usize> = (0..self.n).filter(|&v| self.parent[v] == v).collect();
            if roots.iter().all(|&r| self.value(r) == 0) {
                return Ok(());
            }
            let idle = roots.iter().all(|&r| !self.active_excess(r) && !self.active_deficit(r));
            if idle && self.support.values().all(|a| a.contracted || a.units == 0) {
                // all explicit flows are zero, so K = 0 and B is the imbalance
                self.d = roots.iter().map(|&r| self.base[r].abs()).max().unwrap();
                self.shift = 0;
                self.stats.scale_resets += 1;
            }
            self.contract();
            if self.opts.check_invariants {
                self.check_excess_bound()?;
            }
            let mut augs = 0;
            while let Some((sources, target)) = self.next_search() {
                observer(self);
                self.augment(&sources, &target)?;
                augs += 1;
                if augs > aug_limit {
                    return Err(Error::Invariant(format!("phase exceeded {aug_limit} augmentations")));
                }
                if self.opts.check_invariants {
                    self.check_invariants()?;
                }
            }
            self.stats.augmentations_per_phase.push(augs);
            self.stats.phases += 1;
            if self.stats.phases > phase_limit {
                return Err(Error::Invariant(format!("exceeded {phase_limit} scaling phases")));
            }
            self.shift += 1;
            for r in 0..self.n {
                self.units[r] *= 2;
            }
            for a in self.support.values_mut() {
                a.units *= 2;
            }
        }
    }

    /// Contracts every explicit arc carrying at least `3n` scale units and
    /// absorbs arcs that end up inside one supervertex.
    fn contract(&mut self) {
        let threshold = 3 * self.n as i64;
        let heavy: Vec<(usize, usize)> =
            self.support.iter().filter(|(_, a)| !a.contracted && a.units >= threshold).map(|(&k, _)| k).collect();
        if heavy.is_empty() {
            return;
        }
        for (r, b) in heavy {
            self.support.get_mut(&(r, b)).unwrap().contracted = true;
            let (x, y) = (self.find(r), self.find(b));
            if x != y {
                self.parent[x.max(y)] = x.min(y);
            }
            self.stats.contractions += 1;
        }
        let keys: Vec<(usize, usize)> = self.support.keys().copied().collect();
        for (r, b) in keys {
            if self.find(r) == self.find(b) {
                self.support.get_mut(&(r, b)).unwrap().contracted = true;
            }
        }
        self.base.fill(0);
        self.units.fill(0);
        for v in 0..self.n {
            let root = self.find(v);
            self.base[root] += self.balance[v] as i128;
        }
        let arcs: Vec<(usize, usize, i64)> =
            self.support.iter().filter(|(_, a)| !a.contracted).map(|(&(r, b), a)| (r, b, a.units)).collect();
        for (r, b, k) in arcs {
            let (x, y) = (self.find(r), self.find(b));
            self.units[x] -= k as i128;
            self.units[y] += k as i128;
        }
    }

    fn augment(&mut self, sources: &[usize], target: &[bool]) -> Result<()> {
        let tree = self.search(sources, Some(target));
        let t = tree.target.ok_or_else(|| Error::Infeasible { vertex: sources[0] })?;
        let cap = tree.dist[t];
        for v in 0..self.n {
            self.y[v] -= tree.dist[v].min(cap);
        }
        self.stats.dummy_settles += tree.pred.iter().filter(|p| matches!(p, Pred::Dummy(_))).count();
        let mut fresh = Vec::new();
        let mut v = t;
        loop {
            match tree.pred[v] {
                Pred::Source => break,
                Pred::Forward(r) => {
                    match self.support.get_mut(&(r, v)) {
                        Some(a) if a.contracted => {}
                        Some(a) => a.units += 1,
                        None => {
                            self.link(r, v, SupportArc { units: 1, contracted: false });
                            fresh.push((r, v));
                        }
                    }
                    v = r;
                }
                Pred::Reverse(b) => {
                    let a = self.support.get_mut(&(v, b)).unwrap();
                    if !a.contracted {
                        a.units -= 1;
                        if a.units == 0 {
                            self.unlink(v, b);
                        }
                    }
                    v = b;
                }
                Pred::Dummy(b) => {
                    return Err(Error::Invariant(format!("augmenting path uses the dummy arc {b} -> {v}")));
                }
                Pred::Unreached => unreachable!("path vertices are settled"),
            }
        }
        for (r, b) in fresh {
            self.cancel_cycle(r, b);
        }
        let (s_root, t_root) = (self.find(v), self.find(t));
        self.units[s_root] -= 1;
        self.units[t_root] += 1;
        self.stats.augmentations += 1;
        self.stats.max_support = self.stats.max_support.max(self.support.len());
        Ok(())
    }

    /// If the fresh support arc `(r, b)` closes a cycle, moves its unit onto
    /// the rest of the cycle. Every cycle arc is tight, so the cost is
    /// unchanged, and the fresh arc leaves the support again.
    fn cancel_cycle(&mut self, r: usize, b: usize) {
        let mut from = vec![usize::MAX; self.n];
        from[b] = b;
        let mut queue = vec![b];
        let mut head = 0;
        while head < queue.len() && from[r] == usize::MAX {
            let u = queue[head];
            head += 1;
            for &w in &self.adj[u] {
                if from[w] == usize::MAX && !(u == b && w == r) {
                    from[w] = u;
                    queue.push(w);
                }
            }
        }
        if from[r] == usize::MAX {
            return;
        }
        let mut u = r;
        while u != b {
            let w = from[u];
            // one unit travels u -> w
            let (key, up) = if u < self.nr { ((u, w), true) } else { ((w, u), false) };
            let a = self.support.get_mut(&key).unwrap();
            if !a.contracted {
                a.units += if up { 1 } else { -1 };
                if a.units == 0 {
                    self.unlink(key.0, key.1);
                }
            }
            u = w;
        }
        self.unlink(r, b);
        self.stats.cycles_cancelled += 1;
    }

    fn check_excess_bound(&mut self) -> Result<()> {
        let total: i128 = (0..self.n)
            .filter(|&v| self.parent[v] == v)
            .map(|r| self.value(r).max(0))
            .fold(0i128, |a, b| a.saturating_add(b));
        if total > 2 * self.n as i128 * self.d {
            return Err(Error::Invariant(format!("total excess exceeds 2n times the scale at phase {}", self.stats.phases)));
        }
        Ok(())
    }

    /// Support acyclicity and complementary slackness over every arc,
    /// dummy arcs included.
    pub fn check_invariants(&mut self) -> Result<()> {
        self.stats.invariant_checks += 1;
        let mut uf: Vec<usize> = (0..self.n).collect();
        fn root(uf: &mut [usize], mut v: usize) -> usize {
            while uf[v] != v {
                uf[v] = uf[uf[v]];
                v = uf[v];
            }
            v
        }
        for &(r, b) in self.support.keys() {
            let (x, y) = (root(&mut uf, r), root(&mut uf, b));
            if x == y {
                return Err(Error::Invariant(format!("support cycle closed by arc ({r}, {b})")));
            }
            uf[x] = y;
        }
        let tol = self.tol();
        for r in 0..self.nr {
            for b in self.nr..self.n {
                let rc = self.rc(r, b);
                if rc < -tol {
                    return Err(Error::Invariant(format!("arc ({r}, {b}) has reduced cost {rc}")));
                }
                if self.support.contains_key(&(r, b)) && rc > tol {
                    return Err(Error::Invariant(format!("support arc ({r}, {b}) is not tight: {rc}")));
                }
                let dummy = self.m_cost - self.y[b] + self.y[r];
                if dummy < -tol {
                    return Err(Error::Invariant(format!("dummy arc ({b}, {r}) has reduced cost {dummy}")));
                }
            }
        }
        Ok(())
    }

    /// Rebuilds an integral optimal flow from the final potentials: a full
    /// search from red 0 gives distances `d` and a shortest-path tree; the
    /// final support forest, joined into a spanning tree by tree arcs,
    /// carries the unique flow meeting every balance. Returns the plan and
    /// the certifying potentials `y - d`.
    pub fn recover_flow(&self) -> Result<(TransportPlan, Vec<f64>)> {
        let (nr, n) = (self.nr, self.n);
        let tree = self.search(&[0], None);
        let mut uf: Vec<usize> = (0..n).collect();
        fn root(uf: &mut [usize], mut v: usize) -> usize {
            while uf[v] != v {
                uf[v] = uf[uf[v]];
                v = uf[v];
            }
            v
        }
        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(n);
        for &(r, b) in self.support.keys() {
            let (x, y) = (root(&mut uf, r), root(&mut uf, b));
            if x == y {
                return Err(Error::Invariant(format!("final support has a cycle through ({r}, {b})")));
            }
            uf[x] = y;
            edges.push((r, b));
        }
        for &v in &tree.order {
            let arc = match tree.pred[v] {
                Pred::Source => continue,
                Pred::Forward(r) => (r, v),
                Pred::Reverse(b) => (v, b),
                Pred::Dummy(b) => {
                    return Err(Error::Invariant(format!("shortest-path tree uses the dummy arc {b} -> {v}")));
                }
                Pred::Unreached => unreachable!(),
            };
            let (x, y) = (root(&mut uf, arc.0), root(&mut uf, arc.1));
            if x != y {
                uf[x] = y;
                edges.push(arc);
            }
        }
        if let Some(v) = (0..n).find(|&v| tree.pred[v] == Pred::Unreached) {
            return Err(Error::Invariant(format!("vertex {v} unreachable in the final search")));
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, &(r, b)) in edges.iter().enumerate() {
            adj[r].push(i);
            adj[b].push(i);
        }
        // BFS from vertex 0, then push subtree balances towards the root
        let mut parent_edge = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut bfs = vec![0usize];
        seen[0] = true;
        let mut head = 0;
        while head < bfs.len() {
            let v = bfs[head];
            head += 1;
            for &i in &adj[v] {
                let (r, b) = edges[i];
                let w = if r == v { b } else { r };
                if !seen[w] {
                    seen[w] = true;
                    parent_edge[w] = i;
                    bfs.push(w);
                }
            }
        }
        let mut sub: Vec<i128> = self.balance.iter().map(|&b| b as i128).collect();
        let mut flow = vec![0i128; edges.len()];
        for &v in bfs.iter().rev() {
            let i = parent_edge[v];
            if i == usize::MAX {
                continue;
            }
            let (r, b) = edges[i];
            // subtree of v ships sub[v] towards its parent
            let (f, up) = if v == r { (sub[v], b) } else { (-sub[v], r) };
            flow[i] = f;
            sub[up] += sub[v];
        }
        if sub[0] != 0 {
            return Err(Error::Invariant("tree flow leaves imbalance at the root".into()));
        }
        let mut entries = Vec::new();
        for (i, &(r, b)) in edges.iter().enumerate() {
            match flow[i] {
                f if f < 0 => {
                    return Err(Error::Invariant(format!("tree flow on arc ({r}, {}) is negative: {f}", b - nr)));
                }
                0 => {}
                f => entries.push(PlanEntry::new(r, b - nr, f as u64)),
            }
        }
        let y = (0..n).map(|v| self.y[v] - tree.dist[v]).collect();
        Ok((TransportPlan::from_merged(entries), y))
    }
}

#[cfg(test)]
mod tests;
