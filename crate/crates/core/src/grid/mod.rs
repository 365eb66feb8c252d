//! Randomized near-linear approximate transport on shifted grids.
//!
//! A subproblem is the content of two range stores (reds, blues) inside a
//! rectangle. It is cut by a safe randomly shifted grid with cells of side
//! `l / m^(1/6)`; each nonempty cell becomes a balanced internal
//! subproblem, and each cell's surplus is moved to one merged point at the
//! cell center. The merged points form an external instance, solved
//! recursively (or exactly, under bounded spread), and its plan is spread
//! back over the real points. Subproblems with at most `n^(eps/4)` points,
//! `n` the size of the whole input, and third-level external instances are
//! solved exactly.

mod cells;
mod store;

pub use cells::{enumerate_nonempty_cells, is_safe, sample_safe_grid, sixth_root, ShiftedGrid};
pub use store::RangeStore;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{Metric, Point, Rect};
use crate::mcf;
use crate::model::{PlanEntry, Site, TransportInstance, TransportPlan};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    pub eps: f64,
    /// Solve every external instance exactly instead of recursing.
    pub bounded_spread: bool,
    /// Record redistribution costs and cut lengths. Cut recording is
    /// quadratic in the subproblem size.
    pub instrument: bool,
}

impl GridOptions {
    pub fn new(eps: f64) -> Self {
        GridOptions { eps, bounded_spread: false, instrument: false }
    }
}

/// One spreading of an external plan from cell centers to real points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Redistribution {
    pub merged_cost: f64,
    pub derived_cost: f64,
    pub cell: f64,
    /// Total red mass moved to the external instance.
    pub mass: u64,
    /// `2 h X`, with `h` the largest center-to-point distance of a cell and
    /// `X` the moved mass.
    pub bound: f64,
}

impl Redistribution {
    pub fn holds(&self) -> bool {
        libm::fabs(self.derived_cost - self.merged_cost) <= self.bound * (1.0 + 1e-12) + 1e-12
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GridStats {
    /// `n^(eps/4)`.
    pub base_threshold: f64,
    /// The threshold was below 2 and the whole instance was solved exactly.
    pub fallback_exact: bool,
    pub subproblems: usize,
    pub base_solves: usize,
    pub external_instances: usize,
    /// Merged points over all external instances.
    pub external_points: usize,
    pub rejected_shifts: usize,
    pub deepest_external: usize,
    pub redistributions: Vec<Redistribution>,
    /// For red/blue pairs of the input: cell side of the first grid that
    /// put them in different cells, or 0 if they reached a base
    /// subproblem together. Pairs separated by moving one of them to an
    /// external instance are absent.
    pub cuts: BTreeMap<(usize, usize), f64>,
}

#[derive(Debug, Clone)]
pub struct GridSolution {
    pub plan: TransportPlan,
    pub stats: GridStats,
}

pub fn solve<R: Rng + ?Sized>(inst: &TransportInstance, opts: GridOptions, rng: &mut R) -> Result<GridSolution> {
    if !(opts.eps > 0.0 && opts.eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {}", opts.eps)));
    }
    let n = inst.len();
    let threshold = libm::pow(n as f64, opts.eps / 4.0);
    let mut ctx = Context {
        metric: inst.metric(),
        opts,
        threshold,
        rng,
        stats: GridStats { base_threshold: threshold, ..GridStats::default() },
    };
    let reds: Vec<(Point, u64)> = inst.reds().iter().map(|s| (s.point, s.mass)).collect();
    let blues: Vec<(Point, u64)> = inst.blues().iter().map(|s| (s.point, s.mass)).collect();
    let entries = if threshold < 2.0 {
        ctx.stats.fallback_exact = true;
        exact(inst.metric(), &reds, &blues)?
    } else {
        ctx.solve_level(&reds, &blues, 0)?
    };
    let plan = TransportPlan::from_merged(entries.into_iter().map(|(r, b, a)| PlanEntry::new(r, b, a)));
    Ok(GridSolution { plan, stats: ctx.stats })
}

/// [`solve`] with a ChaCha8 generator seeded from `seed`.
pub fn solve_seeded(inst: &TransportInstance, opts: GridOptions, seed: u64) -> Result<GridSolution> {
    solve(inst, opts, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Optimal plan between weighted point lists, as `(red, blue, amount)`.
pub fn exact(metric: Metric, reds: &[(Point, u64)], blues: &[(Point, u64)]) -> Result<Vec<(usize, usize, u64)>> {
    let site = |&(p, m): &(Point, u64)| Site::new(p, m);
    let inst = TransportInstance::new(reds.iter().map(site).collect(), blues.iter().map(site).collect(), metric)?;
    let (plan, _) = mcf::solve_transport(&inst)?;
    Ok(plan.entries().iter().map(|e| (e.red, e.blue, e.amount)).collect())
}

/// A cell's surplus gathered at its center.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedPoint {
    pub center: Point,
    pub red: bool,
    pub weight: u64,
    /// Real points and the mass each contributes, in store order; at most
    /// the last one is a split copy.
    pub members: Vec<(usize, u64)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Partition {
    /// Rectangles of the balanced internal subproblems.
    pub internal: Vec<Rect>,
    pub external: Vec<MergedPoint>,
}

/// Splits the subproblem `rho` along `cells`: every cell keeps its
/// balanced part in the stores and hands its surplus, removed from the
/// stores, to a merged point at the cell center.
pub fn partition(
    stores: &mut [RangeStore; 2],
    rho: &Rect,
    grid: &ShiftedGrid,
    cells: &[(usize, usize)],
) -> Result<Partition> {
    let mut out = Partition::default();
    for &(i, j) in cells {
        let c = grid.cell_rect(i, j).intersect(*rho);
        let (wr, wb) = (stores[0].wt(&c), stores[1].wt(&c));
        if wr != wb {
            let color = usize::from(wr < wb);
            let surplus = wr.abs_diff(wb);
            let (mut members, next) = stores[color].report(&c, surplus);
            for &(id, _) in &members {
                stores[color].delete(id);
            }
            let rest = surplus - members.iter().map(|m| m.1).sum::<u64>();
            if rest > 0 {
                let (id, _) = next.ok_or_else(|| Error::Invariant(format!("cell ({i}, {j}) cannot supply its surplus")))?;
                stores[color].reduce_wt(id, rest)?;
                members.push((id, rest));
            }
            out.external.push(MergedPoint { center: grid.cell_center(i, j), red: color == 0, weight: surplus, members });
        }
        if wr.min(wb) > 0 {
            out.internal.push(c);
        }
    }
    Ok(out)
}

/// Spreads a plan between merged points over their members, pairing
/// members in order. `plan` indexes `reds` and `blues`.
pub fn redistribute(plan: &[(usize, usize, u64)], reds: &[MergedPoint], blues: &[MergedPoint]) -> Vec<(usize, usize, u64)> {
    let mut red_at = vec![(0usize, 0u64); reds.len()];
    let mut blue_at = vec![(0usize, 0u64); blues.len()];
    let mut out = Vec::new();
    let mut sorted = plan.to_vec();
    sorted.sort_unstable();
    for (r, b, amount) in sorted {
        let mut left = amount;
        while left > 0 {
            let (ri, rused) = red_at[r];
            let (bi, bused) = blue_at[b];
            let (rid, rw) = reds[r].members[ri];
            let (bid, bw) = blues[b].members[bi];
            let step = left.min(rw - rused).min(bw - bused);
            out.push((rid, bid, step));
            left -= step;
            red_at[r] = if rused + step == rw { (ri + 1, 0) } else { (ri, rused + step) };
            blue_at[b] = if bused + step == bw { (bi + 1, 0) } else { (bi, bused + step) };
        }
    }
    out
}

struct Context<'r, R: Rng + ?Sized> {
    metric: Metric,
    opts: GridOptions,
    threshold: f64,
    rng: &'r mut R,
    stats: GridStats,
}

impl<R: Rng + ?Sized> Context<'_, R> {
    /// Solves one instance; `depth` counts external instances above it.
    fn solve_level(
        &mut self,
        reds: &[(Point, u64)],
        blues: &[(Point, u64)],
        depth: usize,
    ) -> Result<Vec<(usize, usize, u64)>> {
        self.stats.deepest_external = self.stats.deepest_external.max(depth);
        let exact_level = depth >= 2 || depth >= 1 && self.opts.bounded_spread;
        if exact_level || (reds.len() + blues.len()) as f64 <= self.threshold {
            self.stats.base_solves += 1;
            return exact(self.metric, reds, blues);
        }
        let mut stores = [RangeStore::new(reds), RangeStore::new(blues)];
        let mut out = Vec::new();
        let mut work = vec![Rect::EVERYTHING];
        while let Some(rho) = work.pop() {
            self.stats.subproblems += 1;
            let m = stores[0].count(&rho) + stores[1].count(&rho);
            if m == 0 {
                continue;
            }
            let bbox = match (stores[0].bbox(&rho), stores[1].bbox(&rho)) {
                (Some(a), Some(b)) => a.union(b),
                _ => return Err(Error::Invariant("unbalanced subproblem".into())),
            };
            let square = bbox.enclosing_square();
            if m as f64 <= self.threshold || square.width() == 0.0 {
                self.base(&stores, &rho, depth, &mut out)?;
                continue;
            }
            let (grid, cells, rejected) = sample_safe_grid(&stores, &rho, square, m, self.rng);
            self.stats.rejected_shifts += rejected;
            if self.opts.instrument && depth == 0 {
                self.record_cuts(&stores, &rho, &grid);
            }
            let part = partition(&mut stores, &rho, &grid, &cells)?;
            work.extend(part.internal.into_iter().rev());
            if part.external.is_empty() {
                continue;
            }
            self.stats.external_instances += 1;
            self.stats.external_points += part.external.len();
            let (red_pts, blue_pts): (Vec<MergedPoint>, Vec<MergedPoint>) = part.external.into_iter().partition(|p| p.red);
            let as_items = |v: &[MergedPoint]| v.iter().map(|p| (p.center, p.weight)).collect::<Vec<_>>();
            let merged = self.solve_level(&as_items(&red_pts), &as_items(&blue_pts), depth + 1)?;
            let spread = redistribute(&merged, &red_pts, &blue_pts);
            if self.opts.instrument {
                let merged_cost: f64 = merged
                    .iter()
                    .map(|&(r, b, a)| a as f64 * self.metric.dist(red_pts[r].center, blue_pts[b].center))
                    .sum();
                let derived_cost: f64 =
                    spread.iter().map(|&(r, b, a)| a as f64 * self.metric.dist(reds[r].0, blues[b].0)).sum();
                let mass: u64 = red_pts.iter().map(|p| p.weight).sum();
                let bound = 2.0 * self.metric.cell_half_diameter(grid.cell) * mass as f64;
                self.stats.redistributions.push(Redistribution { merged_cost, derived_cost, cell: grid.cell, mass, bound });
            }
            out.extend(spread);
        }
        Ok(out)
    }

    fn base(
        &mut self,
        stores: &[RangeStore; 2],
        rho: &Rect,
        depth: usize,
        out: &mut Vec<(usize, usize, u64)>,
    ) -> Result<()> {
        self.stats.base_solves += 1;
        let (rs, _) = stores[0].report(rho, u64::MAX);
        let (bs, _) = stores[1].report(rho, u64::MAX);
        let pts = |s: &RangeStore, v: &[(usize, u64)]| v.iter().map(|&(id, w)| (s.point(id).unwrap(), w)).collect::<Vec<_>>();
        let local = exact(self.metric, &pts(&stores[0], &rs), &pts(&stores[1], &bs))?;
        if self.opts.instrument && depth == 0 {
            for &(r, _) in &rs {
                for &(b, _) in &bs {
                    self.stats.cuts.entry((r, b)).or_insert(0.0);
                }
            }
        }
        out.extend(local.into_iter().map(|(r, b, a)| (rs[r].0, bs[b].0, a)));
        Ok(())
    }

    fn record_cuts(&mut self, stores: &[RangeStore; 2], rho: &Rect, grid: &ShiftedGrid) {
        let (rs, _) = stores[0].report(rho, u64::MAX);
        let (bs, _) = stores[1].report(rho, u64::MAX);
        for &(r, _) in &rs {
            let cr = grid.cell_of(stores[0].point(r).unwrap());
            for &(b, _) in &bs {
                if grid.cell_of(stores[1].point(b).unwrap()) != cr {
                    self.stats.cuts.entry((r, b)).or_insert(grid.cell);
                }
            }
        }
    }
}
