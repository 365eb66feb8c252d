//! Transportation instances, transportation plans, plan cost and
//! feasibility verification.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use ordered_float::OrderedFloat;

use crate::error::{Error, Result};
use crate::geom::{Metric, Point};

/// A weighted point: a red supply or a blue demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub point: Point,
    pub mass: u64,
}

impl Site {
    pub const fn new(point: Point, mass: u64) -> Self {
        Site { point, mass }
    }
}

/// Red supplies and blue demands with equal total mass.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportInstance {
    reds: Vec<Site>,
    blues: Vec<Site>,
    metric: Metric,
    total: u64,
}

impl TransportInstance {
    pub fn new(reds: Vec<Site>, blues: Vec<Site>, metric: Metric) -> Result<Self> {
        if reds.is_empty() || blues.is_empty() {
            return Err(Error::InvalidInstance("need at least one red and one blue point".into()));
        }
        for (color, sites) in [("red", &reds), ("blue", &blues)] {
            for (i, s) in sites.iter().enumerate() {
                if !s.point.is_finite() {
                    return Err(Error::InvalidInstance(format!("{color} {i} has a non-finite coordinate")));
                }
                if s.mass == 0 {
                    return Err(Error::InvalidInstance(format!("{color} {i} has zero mass")));
                }
            }
        }
        let supply = checked_total(&reds)?;
        let demand = checked_total(&blues)?;
        if supply != demand {
            return Err(Error::InvalidInstance(format!(
                "unbalanced: total supply {supply} != total demand {demand}"
            )));
        }
        Ok(TransportInstance { reds, blues, metric, total: supply })
    }

    pub fn reds(&self) -> &[Site] {
        &self.reds
    }

    pub fn blues(&self) -> &[Site] {
        &self.blues
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    /// Number of points, `|R| + |B|`.
    pub fn len(&self) -> usize {
        self.reds.len() + self.blues.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn total_mass(&self) -> u64 {
        self.total
    }

    /// Largest supply or demand (`U`).
    pub fn max_mass(&self) -> u64 {
        self.reds.iter().chain(&self.blues).map(|s| s.mass).max().unwrap_or(0)
    }

    #[inline]
    pub fn dist(&self, red: usize, blue: usize) -> f64 {
        self.metric.dist(self.reds[red].point, self.blues[blue].point)
    }

    /// Largest red-blue distance, by exhaustive scan.
    pub fn max_cross_distance(&self) -> f64 {
        let mut best = 0.0f64;
        for r in &self.reds {
            for b in &self.blues {
                best = best.max(self.metric.dist(r.point, b.point));
            }
        }
        best
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.reds.iter().chain(&self.blues).map(|s| s.point)
    }
}

fn checked_total(sites: &[Site]) -> Result<u64> {
    sites
        .iter()
        .try_fold(0u64, |acc, s| acc.checked_add(s.mass))
        .ok_or_else(|| Error::InvalidInstance("total mass overflows u64".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlanEntry {
    pub red: usize,
    pub blue: usize,
    pub amount: u64,
}

impl PlanEntry {
    pub const fn new(red: usize, blue: usize, amount: u64) -> Self {
        PlanEntry { red, blue, amount }
    }
}

/// Sparse transportation map. Entries are kept sorted by `(red, blue)`,
/// are unique per pair and carry positive amounts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TransportPlan {
    entries: Vec<PlanEntry>,
}

impl TransportPlan {
    /// Builds a plan, rejecting zero amounts and repeated pairs.
    pub fn new(mut entries: Vec<PlanEntry>) -> Result<Self> {
        entries.sort_unstable();
        for (i, e) in entries.iter().enumerate() {
            if e.amount == 0 {
                return Err(Error::InvalidPlan(format!("zero amount on ({}, {})", e.red, e.blue)));
            }
            if i > 0 && (entries[i - 1].red, entries[i - 1].blue) == (e.red, e.blue) {
                return Err(Error::InvalidPlan(format!("duplicate pair ({}, {})", e.red, e.blue)));
            }
        }
        Ok(TransportPlan { entries })
    }

    /// Builds a plan by summing repeated pairs and dropping zero amounts.
    pub fn from_merged<I: IntoIterator<Item = PlanEntry>>(entries: I) -> Self {
        let mut entries: Vec<PlanEntry> = entries.into_iter().filter(|e| e.amount > 0).collect();
        entries.sort_unstable();
        let mut merged: Vec<PlanEntry> = Vec::with_capacity(entries.len());
        for e in entries {
            match merged.last_mut() {
                Some(last) if (last.red, last.blue) == (e.red, e.blue) => last.amount += e.amount,
                _ => merged.push(e),
            }
        }
        TransportPlan { entries: merged }
    }

    pub fn entries(&self) -> &[PlanEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_amount(&self) -> u64 {
        self.entries.iter().map(|e| e.amount).sum()
    }
}

/// `sum amount * d(r, b)` over the plan entries.
pub fn plan_cost(inst: &TransportInstance, plan: &TransportPlan) -> Result<f64> {
    let (nr, nb) = (inst.reds().len(), inst.blues().len());
    let mut cost = 0.0;
    for e in plan.entries() {
        if e.red >= nr {
            return Err(Error::RedIndexOutOfRange { index: e.red, len: nr });
        }
        if e.blue >= nb {
            return Err(Error::BlueIndexOutOfRange { index: e.blue, len: nb });
        }
        cost += e.amount as f64 * inst.dist(e.red, e.blue);
    }
    Ok(cost)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    RedIndexOutOfRange { red: usize },
    BlueIndexOutOfRange { blue: usize },
    ZeroAmount { red: usize, blue: usize },
    DuplicatePair { red: usize, blue: usize },
    RedSupply { red: usize, expected: u64, shipped: u64 },
    BlueDemand { blue: usize, expected: u64, received: u64 },
}

impl core::fmt::Display for Violation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Violation::RedIndexOutOfRange { red } => write!(f, "red index {red} out of range"),
            Violation::BlueIndexOutOfRange { blue } => write!(f, "blue index {blue} out of range"),
            Violation::ZeroAmount { red, blue } => write!(f, "zero amount on pair ({red}, {blue})"),
            Violation::DuplicatePair { red, blue } => write!(f, "pair ({red}, {blue}) listed twice"),
            Violation::RedSupply { red, expected, shipped } => {
                write!(f, "red {red} ships {shipped} but supplies {expected}")
            }
            Violation::BlueDemand { blue, expected, received } => {
                write!(f, "blue {blue} receives {received} but demands {expected}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PlanReport {
    pub violations: Vec<Violation>,
}

impl PlanReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks row sums, column sums, index ranges, and entry positivity of
/// `plan` against `inst`.
pub fn verify_plan(inst: &TransportInstance, plan: &TransportPlan) -> PlanReport {
    let (nr, nb) = (inst.reds().len(), inst.blues().len());
    let mut shipped = alloc::vec![0u64; nr];
    let mut received = alloc::vec![0u64; nb];
    let mut violations = Vec::new();
    let mut prev: Option<(usize, usize)> = None;
    for e in plan.entries() {
        if prev == Some((e.red, e.blue)) {
            violations.push(Violation::DuplicatePair { red: e.red, blue: e.blue });
        }
        prev = Some((e.red, e.blue));
        if e.amount == 0 {
            violations.push(Violation::ZeroAmount { red: e.red, blue: e.blue });
        }
        let mut in_range = true;
        if e.red >= nr {
            violations.push(Violation::RedIndexOutOfRange { red: e.red });
            in_range = false;
        }
        if e.blue >= nb {
            violations.push(Violation::BlueIndexOutOfRange { blue: e.blue });
            in_range = false;
        }
        if in_range {
            shipped[e.red] = shipped[e.red].saturating_add(e.amount);
            received[e.blue] = received[e.blue].saturating_add(e.amount);
        }
    }
    for (red, (site, &s)) in inst.reds().iter().zip(&shipped).enumerate() {
        if s != site.mass {
            violations.push(Violation::RedSupply { red, expected: site.mass, shipped: s });
        }
    }
    for (blue, (site, &r)) in inst.blues().iter().zip(&received).enumerate() {
        if r != site.mass {
            violations.push(Violation::BlueDemand { blue, expected: site.mass, received: r });
        }
    }
    PlanReport { violations }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceStats {
    /// Max pairwise distance over min positive pairwise distance.
    pub spread: f64,
    pub diameter: f64,
    pub min_positive_distance: f64,
    pub total_mass: u64,
    /// All points coincide; `spread` is reported as 1.
    pub degenerate: bool,
}

/// Spread, diameter and total mass of `R ∪ B`.
pub fn instance_stats(inst: &TransportInstance) -> Result<InstanceStats> {
    let mut pts: Vec<Point> = inst.points().collect();
    if pts.len() < 2 {
        return Err(Error::InvalidInstance("spread needs at least two points".into()));
    }
    pts.sort_unstable_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    let metric = inst.metric();
    if pts.len() == 1 {
        return Ok(InstanceStats {
            spread: 1.0,
            diameter: 0.0,
            min_positive_distance: 0.0,
            total_mass: inst.total_mass(),
            degenerate: true,
        });
    }
    let diameter = diameter(&pts, metric);
    let min_positive_distance = closest_distinct_pair(&pts, metric);
    Ok(InstanceStats {
        spread: diameter / min_positive_distance,
        diameter,
        min_positive_distance,
        total_mass: inst.total_mass(),
        degenerate: false,
    })
}

/// Closest pair among distinct points sorted by `x`, by a plane sweep.
/// Coordinate differences never exceed the `L_p` distance, so a strip of
/// half-width `best` in both axes suffices for every supported metric.
fn closest_distinct_pair(sorted: &[Point], metric: Metric) -> f64 {
    let mut best = f64::INFINITY;
    let mut active: BTreeMap<(OrderedFloat<f64>, usize), Point> = BTreeMap::new();
    let mut tail = 0;
    for (i, &p) in sorted.iter().enumerate() {
        while tail < i && p.x - sorted[tail].x > best {
            active.remove(&(OrderedFloat(sorted[tail].y), tail));
            tail += 1;
        }
        let lo = (OrderedFloat(p.y - best), 0);
        let hi = (OrderedFloat(p.y + best), usize::MAX);
        for (_, &q) in active.range(lo..=hi) {
            let d = metric.dist(p, q);
            if d > 0.0 && d < best {
                best = d;
            }
        }
        active.insert((OrderedFloat(p.y), i), p);
    }
    best
}

fn diameter(sorted: &[Point], metric: Metric) -> f64 {
    match metric {
        Metric::LInf => {
            let r = crate::geom::Rect::bounding(sorted.iter().copied()).unwrap();
            r.width().max(r.height())
        }
        Metric::L1 => {
            // |dx| + |dy| = max(|du|, |dv|) with u = x + y, v = x - y.
            let (mut umin, mut umax, mut vmin, mut vmax) =
                (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
            for p in sorted {
                umin = umin.min(p.x + p.y);
                umax = umax.max(p.x + p.y);
                vmin = vmin.min(p.x - p.y);
                vmax = vmax.max(p.x - p.y);
            }
            (umax - umin).max(vmax - vmin)
        }
        Metric::L2 => {
            let hull = convex_hull(sorted);
            calipers_diameter(&hull, metric)
        }
    }
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Monotone-chain hull of distinct points sorted by `(x, y)`, CCW without
/// collinear vertices.
fn convex_hull(sorted: &[Point]) -> Vec<Point> {
    if sorted.len() < 3 {
        return sorted.to_vec();
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * sorted.len());
    for &p in sorted {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in sorted.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn calipers_diameter(hull: &[Point], metric: Metric) -> f64 {
    let h = hull.len();
    match h {
        0 | 1 => return 0.0,
        2 => return metric.dist(hull[0], hull[1]),
        _ => {}
    }
    let mut best = 0.0f64;
    let mut j = 1;
    for i in 0..h {
        let ni = (i + 1) % h;
        while cross(hull[i], hull[ni], hull[(j + 1) % h]).abs() > cross(hull[i], hull[ni], hull[j]).abs() {
            j = (j + 1) % h;
        }
        best = best.max(metric.dist(hull[i], hull[j])).max(metric.dist(hull[ni], hull[j]));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn site(x: f64, y: f64, m: u64) -> Site {
        Site::new(Point::new(x, y), m)
    }

    #[test]
    fn forced_plan_cost() {
        let inst = TransportInstance::new(
            vec![site(0.0, 0.0, 2)],
            vec![site(1.0, 0.0, 1), site(2.0, 0.0, 1)],
            Metric::L2,
        )
        .unwrap();
        let plan = TransportPlan::new(vec![PlanEntry::new(0, 0, 1), PlanEntry::new(0, 1, 1)]).unwrap();
        assert_eq!(plan_cost(&inst, &plan).unwrap(), 3.0);
        assert!(verify_plan(&inst, &plan).is_ok());
    }

    #[test]
    fn zero_amount_and_duplicates_rejected() {
        assert!(TransportPlan::new(vec![PlanEntry::new(0, 0, 0)]).is_err());
        assert!(TransportPlan::new(vec![PlanEntry::new(0, 0, 1), PlanEntry::new(0, 0, 2)]).is_err());
        let merged = TransportPlan::from_merged(vec![
            PlanEntry::new(0, 0, 1),
            PlanEntry::new(0, 0, 2),
            PlanEntry::new(1, 0, 0),
        ]);
        assert_eq!(merged.entries(), &[PlanEntry::new(0, 0, 3)]);
    }

    #[test]
    fn instance_validation() {
        assert!(TransportInstance::new(vec![site(0.0, 0.0, 0)], vec![site(1.0, 0.0, 0)], Metric::L2).is_err());
        assert!(TransportInstance::new(vec![site(0.0, 0.0, 2)], vec![site(1.0, 0.0, 1)], Metric::L2).is_err());
        assert!(TransportInstance::new(vec![site(f64::NAN, 0.0, 1)], vec![site(1.0, 0.0, 1)], Metric::L2).is_err());
        assert!(TransportInstance::new(vec![], vec![], Metric::L2).is_err());
    }

    #[test]
    fn out_of_range_cost_is_an_error() {
        let inst = TransportInstance::new(vec![site(0.0, 0.0, 1)], vec![site(1.0, 0.0, 1)], Metric::L2).unwrap();
        let plan = TransportPlan::new(vec![PlanEntry::new(0, 3, 1)]).unwrap();
        assert_eq!(plan_cost(&inst, &plan), Err(Error::BlueIndexOutOfRange { index: 3, len: 1 }));
        let report = verify_plan(&inst, &plan);
        assert!(report.violations.contains(&Violation::BlueIndexOutOfRange { blue: 3 }));
    }

    #[test]
    fn shorted_blue_is_named() {
        let inst = TransportInstance::new(
            vec![site(0.0, 0.0, 2)],
            vec![site(1.0, 0.0, 1), site(2.0, 0.0, 1)],
            Metric::L2,
        )
        .unwrap();
        let plan = TransportPlan::new(vec![PlanEntry::new(0, 0, 1)]).unwrap();
        let report = verify_plan(&inst, &plan);
        assert!(report.violations.contains(&Violation::BlueDemand { blue: 1, expected: 1, received: 0 }));
        assert!(report.violations.contains(&Violation::RedSupply { red: 0, expected: 2, shipped: 1 }));
    }

    #[test]
    fn spread_examples() {
        let inst = TransportInstance::new(
            vec![site(0.0, 0.0, 1), site(4.0, 0.0, 1)],
            vec![site(1.0, 0.0, 2)],
            Metric::L2,
        )
        .unwrap();
        let stats = instance_stats(&inst).unwrap();
        assert_eq!(stats.spread, 4.0);
        assert_eq!(stats.total_mass, 2);

        let two = TransportInstance::new(vec![site(0.0, 0.0, 1)], vec![site(3.0, 4.0, 1)], Metric::L2).unwrap();
        assert_eq!(instance_stats(&two).unwrap().spread, 1.0);

        let same = TransportInstance::new(vec![site(1.0, 1.0, 1)], vec![site(1.0, 1.0, 1)], Metric::L2).unwrap();
        let s = instance_stats(&same).unwrap();
        assert!(s.degenerate);
        assert_eq!(s.spread, 1.0);
    }

    fn brute_force_extremes(inst: &TransportInstance) -> (f64, f64) {
        let pts: Vec<Point> = inst.points().collect();
        let (mut max, mut min) = (0.0f64, f64::INFINITY);
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let d = inst.metric().dist(pts[i], pts[j]);
                max = max.max(d);
                if d > 0.0 {
                    min = min.min(d);
                }
            }
        }
        (max, min)
    }

    #[test]
    fn stats_match_pairwise_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..30 {
            let metric = [Metric::L1, Metric::L2, Metric::LInf][trial % 3];
            let reds: Vec<Site> = (0..25)
                .map(|_| site(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0), 1))
                .collect();
            let mut blues: Vec<Site> = (0..25)
                .map(|_| site(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0), 1))
                .collect();
            // a duplicate location must not count as the minimum distance
            blues[3].point = reds[5].point;
            let inst = TransportInstance::new(reds, blues, metric).unwrap();
            let stats = instance_stats(&inst).unwrap();
            let (max, min) = brute_force_extremes(&inst);
            assert!((stats.diameter - max).abs() <= 1e-9 * max, "{metric:?}: {} vs {max}", stats.diameter);
            assert_eq!(stats.min_positive_distance, min);
            assert!((stats.spread - max / min).abs() <= 1e-9 * stats.spread);
        }
    }

    #[test]
    fn cost_is_order_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let reds: Vec<Site> =
            (0..6).map(|_| site(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0), 3)).collect();
        let blues: Vec<Site> =
            (0..6).map(|_| site(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0), 3)).collect();
        let inst = TransportInstance::new(reds, blues, Metric::L2).unwrap();
        let mut entries: Vec<PlanEntry> = (0..6).map(|i| PlanEntry::new(i, (i * 5) % 6, 3)).collect();
        let a = plan_cost(&inst, &TransportPlan::new(entries.clone()).unwrap()).unwrap();
        entries.reverse();
        entries.swap(1, 4);
        let b = plan_cost(&inst, &TransportPlan::new(entries).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
