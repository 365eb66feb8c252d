use super::*;
use crate::gen::{generate, Distribution};
use crate::geom::Metric;
use crate::mcf::{check_optimality, solve_transport, Optimality};
use crate::model::{plan_cost, verify_plan, Site};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn inst(reds: &[(f64, f64, u64)], blues: &[(f64, f64, u64)], metric: Metric) -> TransportInstance {
    let site = |&(x, y, m): &(f64, f64, u64)| Site::new(Point::new(x, y), m);
    TransportInstance::new(reds.iter().map(site).collect(), blues.iter().map(site).collect(), metric).unwrap()
}

fn oracle_cost(inst: &TransportInstance) -> f64 {
    plan_cost(inst, &solve_transport(inst).unwrap().0).unwrap()
}

fn random_instance(rng: &mut ChaCha8Rng) -> TransportInstance {
    let n = rng.random_range(2..=40);
    let u = rng.random_range(1..=20);
    let metric = [Metric::L1, Metric::L2, Metric::LInf][rng.random_range(0..3)];
    let dist = [Distribution::Uniform, Distribution::Clustered, Distribution::HighSpread][rng.random_range(0..3)];
    generate(n, u, dist, metric, rng.random()).unwrap()
}

#[test]
fn dummy_cost_example() {
    assert_eq!(dummy_cost(4, 3, 10.0), 240.0);
    assert_eq!(dummy_cost(4, 3, 0.0), 24.0);
}

#[test]
fn dummied_network_shape() {
    let i = inst(&[(0.0, 0.0, 2), (1.0, 0.0, 1)], &[(0.0, 3.0, 3)], Metric::L1);
    let net = add_dummies(&i).unwrap();
    assert_eq!(net.arcs().len(), 4);
    let m = dummy_cost(3, 3, 4.0);
    assert_eq!(net.arcs()[2], Arc { tail: 2, head: 0, cost: m });
    assert_eq!(net.arcs()[1].cost, 4.0);
    let sol = mcf::solve(&net).unwrap();
    assert_eq!(sol.flow.amounts()[2..], [0, 0]);
}

#[test]
fn two_points() {
    let i = inst(&[(0.0, 0.0, 5)], &[(3.0, 4.0, 5)], Metric::L2);
    let sol = solve(&i).unwrap();
    assert_eq!(sol.plan.entries(), &[PlanEntry::new(0, 0, 5)]);
    let net = add_dummies(&i).unwrap();
    let cert = check_optimality(&net, &sol.network_flow(&i), &sol.potentials, 1e-9);
    assert_eq!(cert, Optimality::Certified);
}

#[test]
fn search_on_a_line() {
    let i = inst(&[(0.0, 0.0, 2)], &[(1.0, 0.0, 1), (2.0, 0.0, 1)], Metric::L2);
    let s = Solver::new(&i, ExactOptions::default()).unwrap();
    let tree = s.search(&[0], None);
    assert_eq!(tree.dist, vec![0.0, 1.0, 2.0]);
    assert_eq!(tree.pred, vec![Pred::Source, Pred::Forward(0), Pred::Forward(0)]);
}

#[test]
fn star_recovery() {
    let i = inst(&[(0.0, 0.0, 2)], &[(1.0, 0.0, 1), (0.0, 2.0, 1)], Metric::L1);
    let sol = solve(&i).unwrap();
    assert_eq!(sol.plan.entries(), &[PlanEntry::new(0, 0, 1), PlanEntry::new(0, 1, 1)]);
}

#[test]
fn symmetric_pair_needs_no_dummy() {
    let i = inst(&[(0.0, 0.0, 1), (4.0, 0.0, 1)], &[(1.0, 0.0, 1), (3.0, 0.0, 1)], Metric::L2);
    let sol = solve(&i).unwrap();
    assert_eq!(plan_cost(&i, &sol.plan).unwrap(), 2.0);
    assert_eq!(sol.stats.dummy_settles, 0);
}

#[test]
fn dead_red_is_reached_through_a_dummy() {
    // red 1 has no support arc, so from red 0 it is only reachable via a dummy arc
    let i = inst(&[(0.0, 0.0, 1), (5.0, 0.0, 1)], &[(1.0, 0.0, 1), (6.0, 0.0, 1)], Metric::L1);
    let s = Solver::new(&i, ExactOptions::default()).unwrap();
    let tree = s.search(&[0], None);
    assert_eq!(tree.pred[1], Pred::Dummy(2));
    assert_eq!(tree.dist[1], 1.0 + s.dummy_cost());
}

#[test]
fn scaled_comparison_saturates_by_sign() {
    assert_eq!(scaled(3, -2, 4, 1), -2);
    assert_eq!(scaled(0, 5, 7, 200), 35);
    assert!(scaled(1, -1000, 1, 200) > 0);
    assert!(scaled(-1, 1000, 1, 200) < 0);
}

#[test]
fn matches_oracle_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..80 {
        let i = random_instance(&mut rng);
        let sol = solve(&i).unwrap();
        assert!(verify_plan(&i, &sol.plan).is_ok());
        let got = plan_cost(&i, &sol.plan).unwrap();
        let want = oracle_cost(&i);
        assert!((got - want).abs() <= 1e-6 * want.max(1.0), "instance {k}: {got} vs {want}");
    }
}

#[test]
fn invariants_hold_after_every_augmentation() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..25 {
        let i = random_instance(&mut rng);
        let sol = solve_with(&i, ExactOptions { check_invariants: true }, |_| {}).unwrap();
        assert_eq!(sol.stats.invariant_checks, sol.stats.augmentations);
        let net = add_dummies(&i).unwrap();
        let flow = sol.network_flow(&i);
        assert!(flow.is_complete(&net));
        let tol = 1e-7 * i.max_cross_distance().max(1.0);
        assert_eq!(check_optimality(&net, &flow, &sol.potentials, tol), Optimality::Certified);
    }
}

#[test]
fn augmentations_per_phase_stay_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let i = random_instance(&mut rng);
        let sol = solve(&i).unwrap();
        let worst = sol.stats.augmentations_per_phase.iter().copied().max().unwrap_or(0);
        assert!(worst <= 4 * i.len(), "{worst} augmentations in one phase, n = {}", i.len());
    }
}

#[test]
fn heavy_arc_is_contracted() {
    let mut reds = vec![(0.0, 0.0, 1000)];
    let mut blues = vec![(0.5, 0.0, 1000)];
    for k in 0..6 {
        let x = 10.0 + 3.0 * k as f64;
        reds.push((x, 1.0, 1 + k as u64));
        blues.push((x + 1.0, 2.0, 1 + k as u64));
    }
    let i = inst(&reds, &blues, Metric::L2);
    let sol = solve_with(&i, ExactOptions { check_invariants: true }, |_| {}).unwrap();
    assert!(sol.stats.contractions >= 1);
    let got = plan_cost(&i, &sol.plan).unwrap();
    assert!((got - oracle_cost(&i)).abs() <= 1e-9 * got);
    assert!(sol.plan.entries().contains(&PlanEntry::new(0, 0, 1000)));
}

/// Shortest reduced-cost distances over the explicit residual graph,
/// dummy arcs included, by Bellman-Ford.
fn residual_distances(s: &Solver<'_>, sources: &[usize]) -> Vec<f64> {
    let n = s.potentials().len();
    let nr = s.red_count();
    let y = s.potentials();
    let mut arcs: Vec<(usize, usize, f64)> = Vec::new();
    for r in 0..nr {
        for b in nr..n {
            let rc = s.rc(r, b);
            arcs.push((r, b, rc.max(0.0)));
            arcs.push((b, r, (s.dummy_cost() - y[b] + y[r]).max(0.0)));
        }
    }
    for (r, b, _) in s.support() {
        arcs.push((b, r, (-s.rc(r, b)).max(0.0)));
    }
    let mut dist = vec![f64::INFINITY; n];
    for &v in sources {
        dist[v] = 0.0;
    }
    for _ in 0..n {
        let mut changed = false;
        for &(u, v, c) in &arcs {
            if dist[u] + c < dist[v] {
                dist[v] = dist[u] + c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

#[test]
fn search_matches_dense_relaxation_mid_run() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut states = 0;
    while states < 100 {
        let i = random_instance(&mut rng);
        let sample = rng.random_range(0..6usize);
        let mut calls = 0;
        solve_with(&i, ExactOptions::default(), |s| {
            calls += 1;
            if calls % 6 != sample {
                return;
            }
            let (sources, _) = s.next_search().unwrap();
            let tree = s.search(&sources, None);
            let want = residual_distances(s, &sources);
            for v in 0..want.len() {
                let tol = 1e-7 * want[v].abs().max(s.inst.max_cross_distance()).max(1.0);
                assert!((tree.dist[v] - want[v]).abs() <= tol, "vertex {v}: {} vs {}", tree.dist[v], want[v]);
            }
            states += 1;
        })
        .unwrap();
    }
}

#[test]
fn coincident_points_cost_nothing() {
    let i = inst(&[(1.0, 1.0, 3), (1.0, 1.0, 2)], &[(1.0, 1.0, 4), (1.0, 1.0, 1)], Metric::LInf);
    let sol = solve(&i).unwrap();
    assert!(verify_plan(&i, &sol.plan).is_ok());
    assert_eq!(plan_cost(&i, &sol.plan).unwrap(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn optimal_and_feasible(seed in any::<u64>(), n in 2usize..24, u in 1u64..12, m in 0usize..3) {
        let metric = [Metric::L1, Metric::L2, Metric::LInf][m];
        let i = generate(n, u, Distribution::Uniform, metric, seed).unwrap();
        let sol = solve(&i).unwrap();
        prop_assert!(verify_plan(&i, &sol.plan).is_ok());
        let got = plan_cost(&i, &sol.plan).unwrap();
        let want = oracle_cost(&i);
        prop_assert!((got - want).abs() <= 1e-6 * want.max(1.0));
        prop_assert!(sol.plan.len() < i.len());
    }
}
