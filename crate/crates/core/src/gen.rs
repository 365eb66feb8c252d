//! Seeded random instance generators.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};

use crate::error::{Error, Result};
use crate::geom::{Metric, Point};
use crate::model::{Site, TransportInstance};

/// Side of the square the uniform and clustered layouts draw from.
pub const BOX_SIDE: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Distribution {
    /// Uniform in `[0, 1000)^2`.
    Uniform,
    /// Gaussian blobs (sigma 10) around `max(1, n/20)` uniform centers.
    Clustered,
    /// Geometric radii around the origin with a pair at distance
    /// `1000 / (4 n^3)`, so the spread is at least `n^3`.
    HighSpread,
}

impl Distribution {
    pub fn name(self) -> &'static str {
        match self {
            Distribution::Uniform => "uniform",
            Distribution::Clustered => "clustered",
            Distribution::HighSpread => "high-spread",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "uniform" => Some(Distribution::Uniform),
            "clustered" => Some(Distribution::Clustered),
            "high-spread" | "highspread" => Some(Distribution::HighSpread),
            _ => None,
        }
    }
}

/// `n` points split into `n - n/2` reds and `n/2` blues with masses in
/// `[1, max_mass]`; the last blue absorbs whatever keeps the totals equal.
pub fn generate(n: usize, max_mass: u64, dist: Distribution, metric: Metric, seed: u64) -> Result<TransportInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_with(&mut rng, n, max_mass, dist, metric)
}

pub fn generate_with<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    max_mass: u64,
    dist: Distribution,
    metric: Metric,
) -> Result<TransportInstance> {
    if n < 2 {
        return Err(Error::InvalidParameter("need n >= 2 to place one red and one blue".into()));
    }
    if max_mass == 0 {
        return Err(Error::InvalidParameter("max mass must be at least 1".into()));
    }
    let points = match dist {
        Distribution::Uniform => uniform_points(rng, n),
        Distribution::Clustered => clustered_points(rng, n),
        Distribution::HighSpread => high_spread_points(rng, n),
    };
    let nb = n / 2;
    let nr = n - nb;
    let (red_pts, blue_pts): (Vec<Point>, Vec<Point>) = match dist {
        // interleave so the engineered close pair is bichromatic
        Distribution::HighSpread => {
            let reds = points.iter().step_by(2).copied().collect();
            let blues = points.iter().skip(1).step_by(2).copied().collect();
            (reds, blues)
        }
        _ => (points[..nr].to_vec(), points[nr..].to_vec()),
    };
    let supplies: Vec<u64> = (0..nr).map(|_| rng.random_range(1..=max_mass)).collect();
    let demands = split_mass(rng, supplies.iter().sum(), nb, max_mass);
    let reds = red_pts.into_iter().zip(supplies).map(|(p, m)| Site::new(p, m)).collect();
    let blues = blue_pts.into_iter().zip(demands).map(|(p, m)| Site::new(p, m)).collect();
    TransportInstance::new(reds, blues, metric)
}

/// `parts` positive masses summing to `total`, each in `[1, cap]` except
/// possibly the last when `total > parts * cap`.
fn split_mass<R: Rng + ?Sized>(rng: &mut R, total: u64, parts: usize, cap: u64) -> Vec<u64> {
    let mut out = Vec::with_capacity(parts);
    let mut rest = total;
    for i in 0..parts - 1 {
        let after = (parts - 1 - i) as u64;
        let hi = cap.min(rest - after);
        let lo = rest.saturating_sub(after.saturating_mul(cap)).clamp(1, hi);
        let m = rng.random_range(lo..=hi);
        out.push(m);
        rest -= m;
    }
    out.push(rest);
    out
}

fn uniform_points<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Point> {
    (0..n)
        .map(|_| Point::new(rng.random_range(0.0..BOX_SIDE), rng.random_range(0.0..BOX_SIDE)))
        .collect()
}

fn clustered_points<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Point> {
    let centers = uniform_points(rng, (n / 20).max(1));
    let noise = Normal::new(0.0, 10.0).unwrap();
    (0..n)
        .map(|_| {
            let c = centers[rng.random_range(0..centers.len())];
            Point::new(c.x + noise.sample(rng), c.y + noise.sample(rng))
        })
        .collect()
}

fn high_spread_points<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Point> {
    let nf = n as f64;
    let tiny = BOX_SIDE / (4.0 * nf * nf * nf);
    let half = BOX_SIDE / 2.0;
    let mut pts = alloc::vec![Point::new(0.0, 0.0), Point::new(tiny, 0.0)];
    if n > 2 {
        pts.push(Point::new(-half, -half));
    }
    if n > 3 {
        pts.push(Point::new(half, half));
    }
    let rest = n.saturating_sub(4);
    let ratio = tiny / half;
    for k in 0..rest {
        let t = if rest > 1 { k as f64 / (rest - 1) as f64 } else { 0.0 };
        let radius = half * libm::pow(ratio, t);
        let angle = rng.random_range(0.0..core::f64::consts::TAU);
        pts.push(Point::new(radius * libm::cos(angle), radius * libm::sin(angle)));
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::instance_stats;

    #[test]
    fn two_points_balance() {
        for seed in 0..20 {
            let inst = generate(2, 5, Distribution::Uniform, Metric::L2, seed).unwrap();
            assert_eq!(inst.reds().len(), 1);
            assert_eq!(inst.blues().len(), 1);
            let s = inst.reds()[0].mass;
            assert!((1..=5).contains(&s));
            assert_eq!(inst.blues()[0].mass, s);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        for dist in [Distribution::Uniform, Distribution::Clustered, Distribution::HighSpread] {
            let a = generate(50, 7, dist, Metric::L1, 11).unwrap();
            let b = generate(50, 7, dist, Metric::L1, 11).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn too_small_rejected() {
        assert!(generate(1, 5, Distribution::Uniform, Metric::L2, 0).is_err());
        assert!(generate(4, 0, Distribution::Uniform, Metric::L2, 0).is_err());
    }

    #[test]
    fn high_spread_reaches_cube() {
        for n in [3usize, 4, 10, 57, 400] {
            let inst = generate(n, 3, Distribution::HighSpread, Metric::L2, n as u64).unwrap();
            let nf = n as f64;
            assert!(instance_stats(&inst).unwrap().spread >= nf * nf * nf, "n={n}");
        }
    }

    #[test]
    fn masses_mostly_within_cap() {
        for seed in 0..50 {
            let inst = generate(21, 4, Distribution::Clustered, Metric::L2, seed).unwrap();
            assert!(inst.reds().iter().all(|s| (1..=4).contains(&s.mass)));
            let blues = inst.blues();
            assert!(blues[..blues.len() - 1].iter().all(|s| (1..=4).contains(&s.mass)));
        }
    }
}
