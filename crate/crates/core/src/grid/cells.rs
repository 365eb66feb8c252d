//! Randomly shifted grids over a bounding square.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::geom::{Metric, Point, Rect};

use super::store::RangeStore;

/// Grid of cell side `cell` whose `2^(levels+1)` cells per side cover the
/// square `[a - extent, a] x [b - extent, b]` moved by `shift`, where
/// `(a, b)` is the upper-right corner of the bounding square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedGrid {
    pub square: Rect,
    pub cell: f64,
    pub shift: Point,
    pub levels: u32,
    pub extent: f64,
    /// Points closer than this to an interior grid line make the grid unsafe.
    pub moat: f64,
}

/// `m^(1/6)` by exact roots where possible.
pub fn sixth_root(m: f64) -> f64 {
    libm::cbrt(libm::sqrt(m))
}

impl ShiftedGrid {
    /// Grid for `m` points in a square of side `l`: cells of side
    /// `l / m^(1/6)` and moat `l / m^3`.
    pub fn for_points(square: Rect, m: usize, shift: Point) -> Self {
        let side = square.width();
        let m = m as f64;
        Self::with_cell(square, side / sixth_root(m), side / (m * m * m), shift)
    }

    pub fn with_cell(square: Rect, cell: f64, moat: f64, shift: Point) -> Self {
        let levels = libm::ceil(libm::log2(1.0 + square.width() / cell)).max(0.0) as u32;
        let extent = libm::ldexp(cell, levels as i32 + 1);
        ShiftedGrid { square, cell, shift, levels, extent, moat }
    }

    pub fn cells_per_side(&self) -> usize {
        1 << (self.levels + 1)
    }

    /// Lower-left corner of the shifted covering square.
    pub fn origin(&self) -> Point {
        Point::new(self.square.x1 - self.extent + self.shift.x, self.square.y1 - self.extent + self.shift.y)
    }

    pub fn shifted_square(&self) -> Rect {
        let o = self.origin();
        Rect::square(o.x, o.y, self.extent)
    }

    pub fn x_line(&self, i: usize) -> f64 {
        self.origin().x + i as f64 * self.cell
    }

    pub fn y_line(&self, j: usize) -> f64 {
        self.origin().y + j as f64 * self.cell
    }

    /// Closed rectangle of cells `[i, i + size) x [j, j + size)`.
    pub fn block_rect(&self, i: usize, j: usize, size: usize) -> Rect {
        Rect::new(self.x_line(i), self.y_line(j), self.x_line(i + size), self.y_line(j + size))
    }

    pub fn cell_rect(&self, i: usize, j: usize) -> Rect {
        self.block_rect(i, j, 1)
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Point {
        self.cell_rect(i, j).center()
    }

    pub fn cell_of(&self, p: Point) -> (usize, usize) {
        let o = self.origin();
        let k = self.cells_per_side() as f64 - 1.0;
        let i = libm::floor((p.x - o.x) / self.cell).clamp(0.0, k);
        let j = libm::floor((p.y - o.y) / self.cell).clamp(0.0, k);
        (i as usize, j as usize)
    }

    /// Whether `p` lies within the moat of an interior grid line.
    pub fn near_line(&self, p: Point) -> bool {
        let o = self.origin();
        let k = self.cells_per_side();
        let close = |v: f64, o: f64| {
            let t = libm::round((v - o) / self.cell);
            t >= 1.0 && t <= (k - 1) as f64 && libm::fabs(v - (o + t * self.cell)) <= self.moat
        };
        close(p.x, o.x) || close(p.y, o.y)
    }

    /// First pair of points closer than the moat that lands in different
    /// cells, by a pairwise scan.
    pub fn separated_close_pair(&self, points: &[Point], metric: Metric) -> Option<(usize, usize)> {
        let cells: Vec<(usize, usize)> = points.iter().map(|&p| self.cell_of(p)).collect();
        for a in 0..points.len() {
            for b in a + 1..points.len() {
                if cells[a] != cells[b] && metric.dist(points[a], points[b]) <= self.moat {
                    return Some((a, b));
                }
            }
        }
        None
    }

    /// Safe if no point lies within the moat of an interior grid line.
    pub fn is_safe_for(&self, points: &[Point]) -> bool {
        !points.iter().any(|&p| self.near_line(p))
    }
}

/// Nonempty cells of `grid` within `rho`, by descending an implicit
/// quadtree over the cells and pruning blocks with no point in either store.
pub fn enumerate_nonempty_cells(stores: &[RangeStore; 2], grid: &ShiftedGrid, rho: &Rect) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut stack = vec![(0usize, 0usize, grid.cells_per_side())];
    while let Some((i, j, size)) = stack.pop() {
        let r = grid.block_rect(i, j, size).intersect(*rho);
        if r.is_empty() || stores.iter().all(|s| s.empty(&r)) {
            continue;
        }
        if size == 1 {
            out.push((i, j));
            continue;
        }
        let h = size / 2;
        stack.push((i + h, j + h, h));
        stack.push((i, j + h, h));
        stack.push((i + h, j, h));
        stack.push((i, j, h));
    }
    out
}

/// Whether no stored point in `rho` lies in the moat strip along an
/// interior side of one of `cells`. A single nonempty cell is always safe.
pub fn is_safe(stores: &[RangeStore; 2], grid: &ShiftedGrid, rho: &Rect, cells: &[(usize, usize)]) -> bool {
    if cells.len() <= 1 {
        return true;
    }
    let k = grid.cells_per_side();
    let h = grid.moat;
    for &(i, j) in cells {
        let c = grid.cell_rect(i, j).intersect(*rho);
        let mut strips = Vec::with_capacity(4);
        if i > 0 {
            strips.push(Rect::new(c.x0, c.y0, grid.x_line(i) + h, c.y1));
        }
        if i + 1 < k {
            strips.push(Rect::new(grid.x_line(i + 1) - h, c.y0, c.x1, c.y1));
        }
        if j > 0 {
            strips.push(Rect::new(c.x0, c.y0, c.x1, grid.y_line(j) + h));
        }
        if j + 1 < k {
            strips.push(Rect::new(c.x0, grid.y_line(j + 1) - h, c.x1, c.y1));
        }
        for s in strips {
            let s = s.intersect(c);
            if !s.is_empty() && stores.iter().any(|st| !st.empty(&s)) {
                return false;
            }
        }
    }
    true
}

/// Draws shifts uniformly from `[0, cell)^2` until the grid is safe for
/// the stored points in `rho`. Returns the grid, its nonempty cells and
/// the number of rejected shifts.
pub fn sample_safe_grid<R: Rng + ?Sized>(
    stores: &[RangeStore; 2],
    rho: &Rect,
    square: Rect,
    m: usize,
    rng: &mut R,
) -> (ShiftedGrid, Vec<(usize, usize)>, usize) {
    let mut rejected = 0;
    loop {
        let probe = ShiftedGrid::for_points(square, m, Point::new(0.0, 0.0));
        let shift = Point::new(rng.random::<f64>() * probe.cell, rng.random::<f64>() * probe.cell);
        let grid = ShiftedGrid { shift, ..probe };
        let cells = enumerate_nonempty_cells(stores, &grid, rho);
        if is_safe(stores, &grid, rho, &cells) {
            return (grid, cells, rejected);
        }
        rejected += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn stores_of(points: &[Point]) -> [RangeStore; 2] {
        let items: Vec<(Point, u64)> = points.iter().map(|&p| (p, 1)).collect();
        [RangeStore::new(&items), RangeStore::new(&[])]
    }

    #[test]
    fn example_dimensions() {
        let g = ShiftedGrid::for_points(Rect::square(0.0, 0.0, 64.0), 64, Point::new(0.0, 0.0));
        assert_eq!(g.cell, 32.0);
        assert_eq!(g.levels, 2);
        assert_eq!(g.extent, 256.0);
        assert_eq!(g.cells_per_side(), 8);
        assert_eq!(g.moat, 64.0 / 262144.0);
    }

    #[test]
    fn shifted_square_covers_bounding_square() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let side = rng.random_range(0.1..100.0);
            let sq = Rect::square(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0), side);
            let m = rng.random_range(2..1000);
            let probe = ShiftedGrid::for_points(sq, m, Point::new(0.0, 0.0));
            let g = ShiftedGrid { shift: Point::new(rng.random::<f64>() * probe.cell, rng.random::<f64>() * probe.cell), ..probe };
            assert!(g.shifted_square().contains_rect(&sq));
        }
    }

    #[test]
    fn single_point_is_always_safe() {
        let p = [Point::new(3.0, 3.0)];
        let st = stores_of(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (_, cells, rejected) = sample_safe_grid(&st, &Rect::EVERYTHING, Rect::square(0.0, 0.0, 10.0), 1, &mut rng);
        assert_eq!(cells.len(), 1);
        assert_eq!(rejected, 0);
    }

    #[test]
    fn one_cell_and_four_corners() {
        let pts = [Point::new(0.0, 0.0), Point::new(1.0, 1.0)];
        let g = ShiftedGrid::with_cell(Rect::square(0.0, 0.0, 1.0), 10.0, 0.0, Point::new(5.0, 5.0));
        assert_eq!(enumerate_nonempty_cells(&stores_of(&pts), &g, &Rect::EVERYTHING).len(), 1);
        let sq = Rect::square(0.0, 0.0, 64.0);
        let g = ShiftedGrid::for_points(sq, 64, Point::new(1.0, 1.0));
        let corners = sq.corners();
        let cells = enumerate_nonempty_cells(&stores_of(&corners), &g, &Rect::EVERYTHING);
        assert_eq!(cells.len(), 4);
    }

    #[test]
    fn enumeration_matches_bucketing() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.random_range(1..300);
            let pts: Vec<Point> =
                (0..n).map(|_| Point::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0))).collect();
            let st = stores_of(&pts);
            let sq = Rect::bounding(pts.iter().copied()).unwrap().enclosing_square();
            let (g, cells, _) = sample_safe_grid(&st, &Rect::EVERYTHING, sq, n, &mut rng);
            let got: BTreeSet<(usize, usize)> = cells.into_iter().collect();
            let want: BTreeSet<(usize, usize)> = pts.iter().map(|&p| g.cell_of(p)).collect();
            assert_eq!(got, want);
            assert!(g.is_safe_for(&pts));
            assert_eq!(g.separated_close_pair(&pts, Metric::LInf), None);
        }
    }

    #[test]
    fn store_check_agrees_with_point_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<Point> = (0..40).map(|_| Point::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0))).collect();
        let st = stores_of(&pts);
        let sq = Rect::square(0.0, 0.0, 10.0);
        for _ in 0..300 {
            let shift = Point::new(rng.random::<f64>() * 3.0, rng.random::<f64>() * 3.0);
            // a wide moat makes unsafe grids common
            let g = ShiftedGrid::with_cell(sq, 3.0, 0.2, shift);
            let cells = enumerate_nonempty_cells(&st, &g, &Rect::EVERYTHING);
            assert_eq!(is_safe(&st, &g, &Rect::EVERYTHING, &cells), cells.len() <= 1 || g.is_safe_for(&pts));
        }
    }
}
