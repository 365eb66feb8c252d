//! `(1 + eps)`-approximate transport through a sparse graph built from a
//! well-separated pair decomposition of a compressed quadtree.
//!
//! Every red-blue pair `(r, b)` is routed through exactly one cross arc
//! `(u, v)` with `d(r, b) <= c(u, v) <= (1 + eps) d(r, b)`, so an optimal
//! flow on the sparse graph is within `1 + eps` of the optimal plan.

mod graph;
mod pairs;
mod quadtree;

pub use graph::{build_graph, recover_plan, zip_transfers, CrossArc, SparseGraph};
pub use pairs::{build_wspd, NodeMass, WspdPair};
pub use quadtree::{Node, QuadTree};

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mcf;
use crate::model::{TransportInstance, TransportPlan};

/// Quadtree, pairs and routing graph for one instance.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub tree: QuadTree,
    pub mass: NodeMass,
    pub pairs: Vec<WspdPair>,
    pub graph: SparseGraph,
    masses: Vec<u64>,
    red_count: usize,
}

impl Decomposition {
    pub fn build(inst: &TransportInstance, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        let points: Vec<_> = inst.points().collect();
        let masses: Vec<u64> = inst.reds().iter().chain(inst.blues()).map(|s| s.mass).collect();
        let red_count = inst.reds().len();
        let tree = QuadTree::build(&points);
        let mass = NodeMass::compute(&tree, &masses, red_count);
        let pairs = build_wspd(&tree, &mass, inst.metric(), eps);
        let graph = build_graph(&tree, &mass, &pairs)?;
        Ok(Decomposition { tree, mass, pairs, graph, masses, red_count })
    }

    pub fn recover(&self, flow: &mcf::Flow) -> Result<TransportPlan> {
        recover_plan(&self.tree, &self.graph, &self.masses, self.red_count, flow)
    }

    /// Cost of the cross arc routing `(red, blue)`, if any.
    pub fn route_cost(&self, red: usize, blue: usize) -> Option<f64> {
        let b = self.red_count + blue;
        self.graph
            .cross
            .iter()
            .find(|c| self.tree.contains(c.u, red) && self.tree.contains(c.v, b))
            .map(|c| c.cost)
    }
}

#[derive(Debug, Clone)]
pub struct WspdSolution {
    pub plan: TransportPlan,
    /// Optimal cost of the flow on the sparse graph; an upper bound on the
    /// plan cost.
    pub flow_cost: f64,
    pub decomposition: Decomposition,
}

pub fn solve(inst: &TransportInstance, eps: f64) -> Result<WspdSolution> {
    let decomposition = Decomposition::build(inst, eps)?;
    let sol = mcf::solve(&decomposition.graph.network)?;
    let plan = decomposition.recover(&sol.flow)?;
    Ok(WspdSolution { plan, flow_cost: sol.flow.cost(&decomposition.graph.network), decomposition })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{generate, Distribution};
    use crate::geom::{Metric, Point};
    use crate::mcf::solve_transport;
    use crate::model::{plan_cost, verify_plan, PlanEntry, Site};
    use alloc::vec;

    fn pair_instance(k: u64) -> TransportInstance {
        TransportInstance::new(
            vec![Site::new(Point::new(0.0, 0.0), k)],
            vec![Site::new(Point::new(3.0, 4.0), k)],
            Metric::L2,
        )
        .unwrap()
    }

    #[test]
    fn single_pair_is_exact() {
        let inst = pair_instance(4);
        let sol = solve(&inst, 0.5).unwrap();
        assert_eq!(sol.decomposition.pairs.len(), 1);
        assert_eq!(sol.plan.entries(), &[PlanEntry::new(0, 0, 4)]);
        assert_eq!(plan_cost(&inst, &sol.plan).unwrap(), 20.0);
        // two singleton cells: cross cost is the exact distance
        assert_eq!(sol.decomposition.graph.cross[0].cost, 5.0);
    }

    #[test]
    fn nonpositive_eps_rejected() {
        let inst = pair_instance(1);
        assert!(solve(&inst, 0.0).is_err());
        assert!(solve(&inst, -1.0).is_err());
        assert!(solve(&inst, 3.0).is_ok());
    }

    #[test]
    fn zip_is_forced() {
        let mut out = Vec::new();
        zip_transfers(&[(0, 5)], &[(1, 2), (2, 3)], &mut out);
        assert_eq!(out, vec![PlanEntry::new(0, 1, 2), PlanEntry::new(0, 2, 3)]);
    }

    #[test]
    fn coincident_pair_costs_nothing() {
        let inst = TransportInstance::new(
            vec![Site::new(Point::new(1.0, 1.0), 2), Site::new(Point::new(5.0, 1.0), 1)],
            vec![Site::new(Point::new(1.0, 1.0), 2), Site::new(Point::new(5.0, 2.0), 1)],
            Metric::L1,
        )
        .unwrap();
        let sol = solve(&inst, 0.1).unwrap();
        assert!(verify_plan(&inst, &sol.plan).is_ok());
        assert_eq!(plan_cost(&inst, &sol.plan).unwrap(), 1.0);
    }

    #[test]
    fn balances_sum_to_zero() {
        let inst = generate(40, 5, Distribution::Uniform, Metric::L2, 3).unwrap();
        let d = Decomposition::build(&inst, 0.5).unwrap();
        assert_eq!(d.graph.network.balances().iter().sum::<i64>(), 0);
    }

    /// Exhaustive W1 uniqueness, W2 separation and route-cost sandwich.
    fn check_structure(inst: &TransportInstance, eps: f64) {
        let d = Decomposition::build(inst, eps).unwrap();
        let metric = inst.metric();
        for p in &d.pairs {
            let (du, dv) = (d.tree.node(p.u).region.diameter(metric), d.tree.node(p.v).region.diameter(metric));
            assert!(du.max(dv) <= eps / 2.0 * p.min_dist, "pair not separated");
        }
        let nr = inst.reds().len();
        for r in 0..nr {
            for b in 0..inst.blues().len() {
                let covering: Vec<&CrossArc> = d
                    .graph
                    .cross
                    .iter()
                    .filter(|c| d.tree.contains(c.u, r) && d.tree.contains(c.v, nr + b))
                    .collect();
                assert_eq!(covering.len(), 1, "pair ({r}, {b}) covered {} times", covering.len());
                let dist = inst.dist(r, b);
                let c = covering[0].cost;
                assert!(dist <= c * (1.0 + 1e-12) && c <= (1.0 + eps) * dist * (1.0 + 1e-12) + 1e-12);
            }
        }
    }

    #[test]
    fn structure_exhaustive() {
        for seed in 0..30 {
            let metric = [Metric::L1, Metric::L2, Metric::LInf][seed as usize % 3];
            let dist = [Distribution::Uniform, Distribution::Clustered, Distribution::HighSpread][seed as usize / 10];
            for eps in [0.1, 0.5, 2.0] {
                let inst = generate(50, 4, dist, metric, seed).unwrap();
                check_structure(&inst, eps);
            }
        }
    }

    #[test]
    fn plan_cost_matches_path_decomposition() {
        for seed in 0..20 {
            let inst = generate(40, 6, Distribution::Clustered, Metric::L2, seed).unwrap();
            let sol = solve(&inst, 0.5).unwrap();
            assert!(verify_plan(&inst, &sol.plan).is_ok());
            let d = &sol.decomposition;
            // every unit rides the one cross arc covering its pair
            let routed: f64 =
                sol.plan.entries().iter().map(|e| e.amount as f64 * d.route_cost(e.red, e.blue).unwrap()).sum();
            assert!((routed - sol.flow_cost).abs() <= 1e-9 * sol.flow_cost.max(1.0));
            assert!(plan_cost(&inst, &sol.plan).unwrap() <= sol.flow_cost * (1.0 + 1e-12));
        }
    }

    #[test]
    fn ratio_within_guarantee() {
        for seed in 0..40 {
            let metric = [Metric::L1, Metric::L2, Metric::LInf][seed as usize % 3];
            let inst = generate(10 + seed as usize, 8, Distribution::Uniform, metric, seed).unwrap();
            let (oracle, _) = solve_transport(&inst).unwrap();
            let opt = plan_cost(&inst, &oracle).unwrap();
            for eps in [0.5, 0.1] {
                let sol = solve(&inst, eps).unwrap();
                let cost = plan_cost(&inst, &sol.plan).unwrap();
                assert!(cost >= opt * (1.0 - 1e-9));
                assert!(cost <= (1.0 + eps) * opt * (1.0 + 1e-9), "seed {seed} eps {eps}: {cost} vs {opt}");
            }
        }
    }

    #[test]
    fn corrupted_flow_is_rejected() {
        let inst = generate(20, 3, Distribution::Uniform, Metric::L2, 8).unwrap();
        let sol = solve(&inst, 0.5).unwrap();
        let d = &sol.decomposition;
        let net = &d.graph.network;
        let mut amounts = mcf::solve(net).unwrap().flow.amounts().to_vec();
        let k = d.graph.cross.iter().find(|c| amounts[c.arc] > 0).unwrap().arc;
        amounts[k] += 1;
        assert!(matches!(d.recover(&mcf::Flow::from_amounts(amounts)), Err(Error::Invariant(_))));
    }
}
