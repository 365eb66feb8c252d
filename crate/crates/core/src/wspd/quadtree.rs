//! Compressed quadtree over a planar point set.

use alloc::vec;
use alloc::vec::Vec;

use crate::geom::{Point, Rect};

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// Quadtree cell after compression.
    pub square: Rect,
    /// Bounding box of the subtree's points, used for separation tests and
    /// cross-arc costs.
    pub region: Rect,
    pub parent: Option<usize>,
    /// Children by quadrant: lower-left, lower-right, upper-left, upper-right.
    pub children: [Option<usize>; 4],
    /// Half-open range into [`QuadTree::order`] holding the subtree's points.
    pub lo: usize,
    pub hi: usize,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.children.iter().all(Option::is_none)
    }

    pub fn child_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.children.iter().flatten().copied()
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi == self.lo
    }
}

/// Every internal node has at least two nonempty children, so there are at
/// most `2k - 1` nodes for `k` distinct locations. Children always have
/// larger ids than their parent.
#[derive(Debug, Clone)]
pub struct QuadTree {
    nodes: Vec<Node>,
    order: Vec<usize>,
    position: Vec<usize>,
    points: Vec<Point>,
}

/// Quadrant of `p` in `sq`; points on a midline go lower/left.
#[inline]
fn quadrant(sq: &Rect, p: Point) -> usize {
    let c = sq.center();
    (p.x > c.x) as usize + 2 * (p.y > c.y) as usize
}

fn quadrant_square(sq: &Rect, q: usize) -> Rect {
    let c = sq.center();
    let (x0, x1) = if q & 1 == 0 { (sq.x0, c.x) } else { (c.x, sq.x1) };
    let (y0, y1) = if q & 2 == 0 { (sq.y0, c.y) } else { (c.y, sq.y1) };
    Rect::new(x0, y0, x1, y1)
}

impl QuadTree {
    /// Builds the tree over `points`; the root square is the smallest
    /// axis-aligned square with the bounding box's lower-left corner that
    /// contains every point.
    pub fn build(points: &[Point]) -> Self {
        assert!(!points.is_empty(), "quadtree needs at least one point");
        let points = points.to_vec();
        let mut order: Vec<usize> = (0..points.len()).collect();
        let root_square = Rect::bounding(points.iter().copied()).unwrap().enclosing_square();
        let mut nodes: Vec<Node> = Vec::with_capacity(2 * points.len());
        let mut scratch: Vec<usize> = Vec::with_capacity(points.len());
        // (parent, quadrant slot, cell, lo, hi)
        let mut stack: Vec<(Option<usize>, usize, Rect, usize, usize)> = vec![(None, 0, root_square, 0, points.len())];
        while let Some((parent, slot, cell, lo, hi)) = stack.pop() {
            let id = nodes.len();
            if let Some(p) = parent {
                nodes[p].children[slot] = Some(id);
            }
            let bbox = Rect::bounding(order[lo..hi].iter().map(|&i| points[i])).unwrap();
            if bbox.width() == 0.0 && bbox.height() == 0.0 {
                nodes.push(Node { square: cell, region: bbox, parent, children: [None; 4], lo, hi });
                continue;
            }
            let square = compress(cell, &bbox);
            // quadrants are monotone in both coordinates, so the corners of
            // the bounding box decide whether the points separate
            let splits = quadrant(&square, Point::new(bbox.x0, bbox.y0)) != quadrant(&square, Point::new(bbox.x1, bbox.y1));
            if !splits {
                nodes.push(Node { square, region: bbox, parent, children: [None; 4], lo, hi });
                continue;
            }
            nodes.push(Node { square, region: bbox, parent, children: [None; 4], lo, hi });
            let mut counts = [0usize; 4];
            for &i in &order[lo..hi] {
                counts[quadrant(&square, points[i])] += 1;
            }
            let mut starts = [lo; 5];
            for q in 0..4 {
                starts[q + 1] = starts[q] + counts[q];
            }
            scratch.clear();
            scratch.extend_from_slice(&order[lo..hi]);
            let mut fill = starts;
            for &i in &scratch {
                let q = quadrant(&square, points[i]);
                order[fill[q]] = i;
                fill[q] += 1;
            }
            // reversed so quadrant 0 is popped, and numbered, first
            for q in (0..4).rev() {
                if counts[q] > 0 {
                    stack.push((Some(id), q, quadrant_square(&square, q), starts[q], starts[q + 1]));
                }
            }
        }
        let mut position = vec![0; points.len()];
        for (pos, &i) in order.iter().enumerate() {
            position[i] = pos;
        }
        QuadTree { nodes, order, position, points }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Input point ids permuted so every subtree is contiguous.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn subtree_points(&self, id: usize) -> &[usize] {
        let n = &self.nodes[id];
        &self.order[n.lo..n.hi]
    }

    /// Whether input point `i` lies in the subtree of `id`.
    pub fn contains(&self, id: usize, i: usize) -> bool {
        let n = &self.nodes[id];
        (n.lo..n.hi).contains(&self.position[i])
    }

    pub fn point(&self, i: usize) -> Point {
        self.points[i]
    }

    /// Descends from the root by quadrant to the leaf holding `p`.
    pub fn locate(&self, p: Point) -> Option<usize> {
        let mut id = 0;
        loop {
            let n = &self.nodes[id];
            if n.is_leaf() {
                return n.region.contains(p).then_some(id);
            }
            id = n.children[quadrant(&n.square, p)]?;
        }
    }
}

/// Shrinks `cell` to the smallest descendant quadrant still containing
/// `bbox`.
fn compress(mut cell: Rect, bbox: &Rect) -> Rect {
    loop {
        let lo = quadrant(&cell, Point::new(bbox.x0, bbox.y0));
        let hi = quadrant(&cell, Point::new(bbox.x1, bbox.y1));
        if lo != hi {
            return cell;
        }
        let next = quadrant_square(&cell, lo);
        if next == cell {
            return cell;
        }
        cell = next;
    }
}
