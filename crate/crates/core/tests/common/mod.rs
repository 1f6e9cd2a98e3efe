#![allow(dead_code)]

use radar_polygon::geometry::Point2;
use rand::Rng;

/// Star-shaped ring around a random center: sorted distinct angles with
/// random radii, which is always simple.
pub fn random_simple_ring<R: Rng>(rng: &mut R, n: usize) -> Vec<Point2> {
    let center = Point2::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
    let mut angles: Vec<f64> = (0..n)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup();
    angles
        .iter()
        .map(|&a| center + Point2::from_polar(rng.random_range(0.3..6.0), a))
        .collect()
}

pub fn bounding_box(ring: &[Point2]) -> (Point2, Point2) {
    ring.iter().fold(
        (
            Point2::new(f64::INFINITY, f64::INFINITY),
            Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        ),
        |(lo, hi), p| {
            (
                Point2::new(lo.x.min(p.x), lo.y.min(p.y)),
                Point2::new(hi.x.max(p.x), hi.y.max(p.y)),
            )
        },
    )
}

/// Brute-force even-odd test: counts crossings of the rightward ray from
/// `(a, b + 1e-9)` by solving each edge for its intersection abscissa.
/// Points lying exactly on an edge count as inside.
pub fn oracle_inside(ring: &[Point2], a: f64, b: f64) -> bool {
    let n = ring.len();
    for i in 0..n {
        let (p, q) = (ring[i], ring[(i + 1) % n]);
        let cross = (q.x - p.x) * (b - p.y) - (q.y - p.y) * (a - p.x);
        if cross == 0.0
            && a >= p.x.min(q.x)
            && a <= p.x.max(q.x)
            && b >= p.y.min(q.y)
            && b <= p.y.max(q.y)
        {
            return true;
        }
    }
    let y = b + 1e-9;
    let mut crossings = 0;
    for i in 0..n {
        let (p, q) = (ring[i], ring[(i + 1) % n]);
        if p.y.min(q.y) < y && y < p.y.max(q.y) {
            let x = p.x + (y - p.y) * (q.x - p.x) / (q.y - p.y);
            if x > a {
                crossings += 1;
            }
        }
    }
    crossings % 2 == 1
}
