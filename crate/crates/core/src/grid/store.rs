//! Weighted planar point set with orthogonal range queries.
//!
//! A merge-sort range tree: slots are the points in x order, level `l`
//! splits them into blocks of `2^l` slots, each block keeps its points in
//! y order with Fenwick trees of weights and live counts. A rectangle
//! decomposes into `O(log n)` blocks, each answered by two binary searches
//! and two prefix sums. Deleted points stay as zero entries until half of
//! the store is dead, then the store is rebuilt.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::{Point, Rect};

const NONE: usize = usize::MAX;

trait Wrapping: Copy {
    const ZERO: Self;
    fn wadd(self, o: Self) -> Self;
}

impl Wrapping for u64 {
    const ZERO: Self = 0;
    fn wadd(self, o: Self) -> Self {
        self.wrapping_add(o)
    }
}

impl Wrapping for u32 {
    const ZERO: Self = 0;
    fn wadd(self, o: Self) -> Self {
        self.wrapping_add(o)
    }
}

fn fen_add<T: Wrapping>(tree: &mut [T], start: usize, len: usize, i: usize, delta: T) {
    let mut i = i + 1;
    while i <= len {
        tree[start + i - 1] = tree[start + i - 1].wadd(delta);
        i += i & i.wrapping_neg();
    }
}

fn fen_prefix<T: Wrapping>(tree: &[T], start: usize, i: usize) -> T {
    let mut acc = T::ZERO;
    let mut i = i;
    while i > 0 {
        acc = acc.wadd(tree[start + i - 1]);
        i -= i & i.wrapping_neg();
    }
    acc
}

/// Largest local index whose count prefix is below `k`, i.e. the local
/// index of the `k`-th live entry (`k >= 1`).
fn fen_kth(tree: &[u32], start: usize, len: usize, mut k: u32) -> usize {
    let mut idx = 0;
    let mut step = if len == 0 { 0 } else { 1usize << (usize::BITS - 1 - len.leading_zeros()) };
    while step > 0 {
        let next = idx + step;
        if next <= len && tree[start + next - 1] < k {
            idx = next;
            k -= tree[start + next - 1];
        }
        step >>= 1;
    }
    idx
}

#[derive(Debug, Clone)]
struct Level {
    /// y coordinate at each position; each block sorted by (y, slot).
    ys: Vec<f64>,
    /// Slot at each position.
    slot: Vec<u32>,
    /// Position of each slot.
    pos: Vec<u32>,
    weight: Vec<u64>,
    count: Vec<u32>,
}

/// One canonical block with its local y range `[lo, hi)`.
#[derive(Debug, Clone, Copy)]
struct Block {
    level: usize,
    start: usize,
    len: usize,
    lo: usize,
    hi: usize,
}

#[derive(Debug, Clone)]
pub struct RangeStore {
    ids: Vec<usize>,
    points: Vec<Point>,
    weights: Vec<u64>,
    slot_of: Vec<usize>,
    levels: Vec<Level>,
    live: usize,
}

impl RangeStore {
    /// Builds from `(point, weight)` with ids `0..len`; zero weights are
    /// left out.
    pub fn new(items: &[(Point, u64)]) -> Self {
        let entries: Vec<(usize, Point, u64)> =
            items.iter().enumerate().filter(|(_, t)| t.1 > 0).map(|(i, t)| (i, t.0, t.1)).collect();
        Self::build(entries, items.len())
    }

    fn build(mut entries: Vec<(usize, Point, u64)>, id_bound: usize) -> Self {
        entries.sort_by(|a, b| a.1.x.total_cmp(&b.1.x).then(a.0.cmp(&b.0)));
        let n = entries.len();
        let mut slot_of = vec![NONE; id_bound];
        for (s, e) in entries.iter().enumerate() {
            slot_of[e.0] = s;
        }
        let ids: Vec<usize> = entries.iter().map(|e| e.0).collect();
        let points: Vec<Point> = entries.iter().map(|e| e.1).collect();
        let weights: Vec<u64> = entries.iter().map(|e| e.2).collect();
        let by_y = |a: u32, b: u32| {
            let (a, b) = (a as usize, b as usize);
            points[a].y.total_cmp(&points[b].y).then(a.cmp(&b))
        };
        let mut levels: Vec<Level> = Vec::new();
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut l = 0;
        loop {
            let size = 1usize << l;
            if l > 0 {
                let half = size / 2;
                let mut merged = Vec::with_capacity(n);
                let mut s = 0;
                while s < n {
                    let mid = (s + half).min(n);
                    let end = (s + size).min(n);
                    let (mut i, mut j) = (s, mid);
                    while i < mid || j < end {
                        if j >= end || i < mid && by_y(order[i], order[j]).is_le() {
                            merged.push(order[i]);
                            i += 1;
                        } else {
                            merged.push(order[j]);
                            j += 1;
                        }
                    }
                    s = end;
                }
                order = merged;
            }
            let mut level = Level {
                ys: order.iter().map(|&s| points[s as usize].y).collect(),
                slot: order.clone(),
                pos: vec![0; n],
                weight: vec![0; n],
                count: vec![0; n],
            };
            let mut start = 0;
            while start < n {
                let len = size.min(n - start);
                for i in 0..len {
                    let s = order[start + i] as usize;
                    level.pos[s] = (start + i) as u32;
                    fen_add(&mut level.count, start, len, i, 1u32);
                    fen_add(&mut level.weight, start, len, i, weights[s]);
                }
                start += len;
            }
            levels.push(level);
            if size >= n {
                break;
            }
            l += 1;
        }
        RangeStore { live: n, ids, points, weights, slot_of, levels }
    }

    fn rebuild(&mut self) {
        let entries = (0..self.ids.len())
            .filter(|&s| self.weights[s] > 0)
            .map(|s| (self.ids[s], self.points[s], self.weights[s]))
            .collect();
        *self = Self::build(entries, self.slot_of.len());
    }

    /// Number of live points.
    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    pub fn weight(&self, id: usize) -> u64 {
        match self.slot_of.get(id) {
            Some(&s) if s != NONE => self.weights[s],
            _ => 0,
        }
    }

    pub fn point(&self, id: usize) -> Option<Point> {
        match self.slot_of.get(id) {
            Some(&s) if s != NONE => Some(self.points[s]),
            _ => None,
        }
    }

    fn block(&self, level: usize, k: usize, rect: &Rect) -> Block {
        let start = k << level;
        let len = (1usize << level).min(self.ids.len() - start);
        let ys = &self.levels[level].ys[start..start + len];
        let lo = ys.partition_point(|&y| y < rect.y0);
        let hi = ys.partition_point(|&y| y <= rect.y1);
        Block { level, start, len, lo, hi: hi.max(lo) }
    }

    fn block_count(&self, b: &Block) -> u32 {
        let c = &self.levels[b.level].count;
        fen_prefix(c, b.start, b.hi).wrapping_sub(fen_prefix(c, b.start, b.lo))
    }

    fn block_weight(&self, b: &Block) -> u64 {
        let w = &self.levels[b.level].weight;
        fen_prefix(w, b.start, b.hi).wrapping_sub(fen_prefix(w, b.start, b.lo))
    }

    /// Canonical blocks covering `rect`, in x order.
    fn blocks(&self, rect: &Rect) -> Vec<Block> {
        let mut left = Vec::new();
        let mut right = Vec::new();
        if rect.is_empty() || self.ids.is_empty() {
            return left;
        }
        let mut lo = self.points.partition_point(|p| p.x < rect.x0);
        let mut hi = self.points.partition_point(|p| p.x <= rect.x1);
        let mut level = 0;
        while lo < hi {
            if lo & 1 == 1 {
                left.push(self.block(level, lo, rect));
                lo += 1;
            }
            if hi & 1 == 1 {
                hi -= 1;
                right.push(self.block(level, hi, rect));
            }
            lo >>= 1;
            hi >>= 1;
            level += 1;
        }
        left.extend(right.into_iter().rev());
        left
    }

    /// Total live weight in `rect`.
    pub fn wt(&self, rect: &Rect) -> u64 {
        self.blocks(rect).iter().map(|b| self.block_weight(b)).sum()
    }

    /// Number of live points in `rect`.
    pub fn count(&self, rect: &Rect) -> usize {
        self.blocks(rect).iter().map(|b| self.block_count(b) as usize).sum()
    }

    pub fn empty(&self, rect: &Rect) -> bool {
        self.blocks(rect).iter().all(|b| self.block_count(b) == 0)
    }

    /// Slot of the `k`-th live entry (1-based) of a block's y range.
    fn block_kth(&self, b: &Block, k: u32) -> usize {
        let lvl = &self.levels[b.level];
        let before = fen_prefix(&lvl.count, b.start, b.lo);
        let local = fen_kth(&lvl.count, b.start, b.len, before + k);
        lvl.slot[b.start + local] as usize
    }

    /// Descends from a nonempty block to its live slot of least (or
    /// greatest) x inside the y range.
    fn extreme_slot(&self, b: Block, rect: &Rect, leftmost: bool) -> usize {
        let mut b = b;
        while b.level > 0 {
            let k = b.start >> b.level;
            let (first, second) = ((b.level - 1, 2 * k), (b.level - 1, 2 * k + 1));
            let second_ok = (second.1 << second.0) < self.ids.len();
            let (pick, other) = if leftmost { (first, second) } else { (second, first) };
            let candidate = if pick == second && !second_ok { None } else { Some(self.block(pick.0, pick.1, rect)) };
            b = match candidate {
                Some(c) if self.block_count(&c) > 0 => c,
                _ => self.block(other.0, other.1, rect),
            };
        }
        b.start
    }

    /// Bounding box of the live points in `rect`.
    pub fn bbox(&self, rect: &Rect) -> Option<Rect> {
        let blocks: Vec<Block> = self.blocks(rect).into_iter().filter(|b| self.block_count(b) > 0).collect();
        let first = *blocks.first()?;
        let last = *blocks.last()?;
        let x0 = self.points[self.extreme_slot(first, rect, true)].x;
        let x1 = self.points[self.extreme_slot(last, rect, false)].x;
        let mut y0 = f64::INFINITY;
        let mut y1 = f64::NEG_INFINITY;
        for b in &blocks {
            y0 = y0.min(self.points[self.block_kth(b, 1)].y);
            y1 = y1.max(self.points[self.block_kth(b, self.block_count(b))].y);
        }
        Some(Rect::new(x0, y0, x1, y1))
    }

    /// A maximal prefix, in store order, of the live points in `rect`
    /// whose weights sum to at most `budget`, as `(id, weight)`; plus the
    /// first point that did not fit, if any.
    pub fn report(&self, rect: &Rect, budget: u64) -> (Vec<(usize, u64)>, Option<(usize, u64)>) {
        let mut out = Vec::new();
        let mut left = budget;
        for b in self.blocks(rect) {
            for k in 1..=self.block_count(&b) {
                let s = self.block_kth(&b, k);
                let w = self.weights[s];
                if w > left {
                    return (out, Some((self.ids[s], w)));
                }
                left -= w;
                out.push((self.ids[s], w));
            }
        }
        (out, None)
    }

    /// Removes a point; unknown or already removed ids are ignored.
    pub fn delete(&mut self, id: usize) {
        let w = self.weight(id);
        if w == 0 {
            return;
        }
        self.change(self.slot_of[id], w, true);
        self.slot_of[id] = NONE;
        self.live -= 1;
        if 2 * self.live < self.ids.len() {
            self.rebuild();
        }
    }

    /// Lowers the weight of a point by `amount`; reaching zero deletes it.
    pub fn reduce_wt(&mut self, id: usize, amount: u64) -> Result<()> {
        let w = self.weight(id);
        if amount > w {
            return Err(Error::InvalidParameter(format!("cannot reduce weight {w} of point {id} by {amount}")));
        }
        if amount == w {
            self.delete(id);
        } else if amount > 0 {
            self.change(self.slot_of[id], amount, false);
        }
        Ok(())
    }

    fn change(&mut self, slot: usize, amount: u64, remove: bool) {
        self.weights[slot] -= amount;
        for (l, lvl) in self.levels.iter_mut().enumerate() {
            let p = lvl.pos[slot] as usize;
            let start = (slot >> l) << l;
            let len = (1usize << l).min(self.ids.len() - start);
            fen_add(&mut lvl.weight, start, len, p - start, amount.wrapping_neg());
            if remove {
                fen_add(&mut lvl.count, start, len, p - start, u32::MAX);
            }
        }
    }
}
