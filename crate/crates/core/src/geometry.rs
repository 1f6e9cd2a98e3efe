//! Shared domain types, sector indexing, rasterization and mask IoU.
//!
//! Coordinates are meters in the sensor frame unless stated otherwise.
//! Azimuth is measured counterclockwise from the sensor boresight (+x).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::collision::CollisionKernel;
use crate::error::{Error, Result};

/// Tolerance, in sector units, applied when flooring azimuths so that
/// azimuths computed as `fov_start + k * delta_theta` land in sector `k`.
const SECTOR_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(self, other: Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn azimuth(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn from_polar(range: f64, azimuth: f64) -> Self {
        Self::new(range * azimuth.cos(), range * azimuth.sin())
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

/// One radar detection in sensor coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Radial velocity in m/s, positive when the target recedes.
    pub doppler: f64,
    /// Linear power ratio.
    pub snr: f64,
}

impl RadarPoint {
    pub fn new(x: f64, y: f64, z: f64, doppler: f64, snr: f64) -> Self {
        Self {
            x,
            y,
            z,
            doppler,
            snr,
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn range(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Global pose of the sensor.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Radians, normalized to (-pi, pi].
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    /// Maps a point from this pose's local frame to the global frame.
    pub fn to_global(&self, local: Point2) -> Point2 {
        let (s, c) = self.heading.sin_cos();
        Point2::new(
            self.x + c * local.x - s * local.y,
            self.y + s * local.x + c * local.y,
        )
    }

    /// Maps a global point into this pose's local frame.
    pub fn to_local(&self, global: Point2) -> Point2 {
        let (s, c) = self.heading.sin_cos();
        let dx = global.x - self.x;
        let dy = global.y - self.y;
        Point2::new(c * dx + s * dy, -s * dx + c * dy)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Angular sampling of the field of view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorConfig {
    /// Sampling interval in radians.
    pub delta_theta: f64,
    pub fov_start: f64,
    pub fov_end: f64,
    /// Detectable range bound in meters.
    pub max_range: f64,
}

impl Default for SectorConfig {
    fn default() -> Self {
        Self::from_degrees(2.0, -65.0, 65.0, 20.0)
    }
}

impl SectorConfig {
    pub fn from_degrees(
        delta_deg: f64,
        fov_start_deg: f64,
        fov_end_deg: f64,
        max_range: f64,
    ) -> Self {
        Self {
            delta_theta: delta_deg.to_radians(),
            fov_start: fov_start_deg.to_radians(),
            fov_end: fov_end_deg.to_radians(),
            max_range,
        }
    }

    /// Full 360 degree coverage starting at -pi.
    pub fn full_circle(delta_deg: f64, max_range: f64) -> Self {
        Self::from_degrees(delta_deg, -180.0, 180.0, max_range)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.delta_theta,
            self.fov_start,
            self.fov_end,
            self.max_range,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidConfig(
                "sector parameters must be finite".into(),
            ));
        }
        if self.delta_theta <= 0.0 {
            return Err(Error::InvalidConfig("delta_theta must be positive".into()));
        }
        if self.fov_end <= self.fov_start {
            return Err(Error::InvalidConfig("fov_end must exceed fov_start".into()));
        }
        if self.span() > 2.0 * PI + 1e-9 {
            return Err(Error::InvalidConfig(
                "field of view wider than a full circle".into(),
            ));
        }
        let ratio = self.span() / self.delta_theta;
        if (ratio - ratio.round()).abs() > 1e-6 {
            return Err(Error::InvalidConfig(format!(
                "field of view ({:.6} rad) is not an integer multiple of delta_theta ({:.6} rad)",
                self.span(),
                self.delta_theta
            )));
        }
        if self.max_range <= 0.0 {
            return Err(Error::InvalidConfig("max_range must be positive".into()));
        }
        Ok(())
    }

    pub fn span(&self) -> f64 {
        self.fov_end - self.fov_start
    }

    pub fn sector_count(&self) -> usize {
        (self.span() / self.delta_theta).round() as usize
    }

    pub fn is_full_circle(&self) -> bool {
        self.span() >= 2.0 * PI - 1e-9
    }

    /// Azimuth of the middle of sector `index`.
    pub fn sector_center(&self, index: usize) -> f64 {
        self.fov_start + (index as f64 + 0.5) * self.delta_theta
    }

    /// Sector containing `azimuth`, or `None` outside the field of view.
    pub fn sector_index(&self, azimuth: f64) -> Option<usize> {
        sector_index(azimuth, self)
    }

    /// Bounding box (min, max) of the sensed wedge including the sensor origin.
    pub fn bounding_box(&self) -> (Point2, Point2) {
        let mut lo = Point2::ORIGIN;
        let mut hi = Point2::ORIGIN;
        let mut grow = |p: Point2| {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        };
        grow(Point2::from_polar(self.max_range, self.fov_start));
        grow(Point2::from_polar(self.max_range, self.fov_end));
        // axis extremes that fall inside the wedge
        for k in -4..=4 {
            let a = k as f64 * PI / 2.0;
            if a >= self.fov_start && a <= self.fov_end {
                grow(Point2::from_polar(self.max_range, a));
            }
        }
        (lo, hi)
    }
}

/// Sector of `azimuth` under `cfg`, or `None` when it is outside the FoV.
///
/// For a full-circle FoV the azimuth is first wrapped into
/// `[fov_start, fov_start + 2pi)`, so every finite azimuth maps to a sector.
pub fn sector_index(azimuth: f64, cfg: &SectorConfig) -> Option<usize> {
    if !azimuth.is_finite() {
        return None;
    }
    let count = cfg.sector_count();
    let mut offset = azimuth - cfg.fov_start;
    if cfg.is_full_circle() {
        offset = offset.rem_euclid(2.0 * PI);
    }
    let k = offset / cfg.delta_theta;
    if k < -SECTOR_EPS {
        return None;
    }
    let idx = (k + SECTOR_EPS).floor().max(0.0) as usize;
    if idx < count {
        Some(idx)
    } else if cfg.is_full_circle() {
        // rem_euclid can round up to exactly 2pi
        Some(0)
    } else {
        None
    }
}

/// A selected (or virtual) polygon vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolygonVertex {
    pub position: Point2,
    pub doppler: f64,
    pub snr: f64,
    /// Log-odds confidence.
    pub confidence: f64,
    pub is_virtual: bool,
    pub sector: usize,
    /// Frames since creation.
    pub age: u32,
}

impl PolygonVertex {
    pub fn real(position: Point2, doppler: f64, snr: f64, confidence: f64, sector: usize) -> Self {
        Self {
            position,
            doppler,
            snr,
            confidence,
            is_virtual: false,
            sector,
            age: 0,
        }
    }

    /// Boundary placeholder at the sector center on the max-range arc.
    pub fn virtual_at(cfg: &SectorConfig, sector: usize) -> Self {
        Self {
            position: Point2::from_polar(cfg.max_range, cfg.sector_center(sector)),
            doppler: 0.0,
            snr: 0.0,
            confidence: 0.0,
            is_virtual: true,
            sector,
            age: 0,
        }
    }
}

/// Ordered vertex ring for one timeslot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarPolygon {
    /// Ascending azimuth, at most one per sector.
    pub vertices: Vec<PolygonVertex>,
    pub sensor_origin: Point2,
    /// The sensor origin closes the ring (FoV narrower than a full circle).
    pub closed_through_origin: bool,
    pub timestamp: f64,
}

impl RadarPolygon {
    pub fn empty(timestamp: f64) -> Self {
        Self {
            vertices: Vec::new(),
            sensor_origin: Point2::ORIGIN,
            closed_through_origin: false,
            timestamp,
        }
    }

    /// Ring of corner positions, including the origin closure when present.
    pub fn ring(&self) -> Vec<Point2> {
        let mut ring: Vec<Point2> = self.vertices.iter().map(|v| v.position).collect();
        if self.closed_through_origin {
            ring.push(self.sensor_origin);
        }
        ring
    }

    pub fn ring_len(&self) -> usize {
        self.vertices.len() + usize::from(self.closed_through_origin)
    }

    pub fn is_degenerate(&self) -> bool {
        self.ring_len() < 3
    }

    pub fn real_vertex_count(&self) -> usize {
        self.vertices.iter().filter(|v| !v.is_virtual).count()
    }

    /// Shoelace area of the ring.
    pub fn area(&self) -> f64 {
        ring_area(&self.ring())
    }
}

pub fn ring_area(ring: &[Point2]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..n {
        let p = ring[i];
        let q = ring[(i + 1) % n];
        twice += p.x * q.y - q.x * p.y;
    }
    0.5 * twice.abs()
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_intersect(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Point2, b: Point2, c: Point2, d: f64| {
        d == 0.0
            && c.x >= a.x.min(b.x)
            && c.x <= a.x.max(b.x)
            && c.y >= a.y.min(b.y)
            && c.y <= a.y.max(b.y)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// True when no two non-adjacent edges of the ring touch. O(n^2).
pub fn is_simple(ring: &[Point2]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a1, a2) = (ring[i], ring[(i + 1) % n]);
        for j in (i + 1)..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (b1, b2) = (ring[j], ring[(j + 1) % n]);
            if segments_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}

/// Metric raster layout. `origin` is the lower-left corner of cell (0, 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Point2,
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
}

impl GridSpec {
    pub fn new(origin: Point2, resolution: f64, width: usize, height: usize) -> Result<Self> {
        let spec = Self {
            origin,
            resolution,
            width,
            height,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::InvalidConfig(
                "grid resolution must be positive".into(),
            ));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidConfig(
                "grid must have at least one cell".into(),
            ));
        }
        Ok(())
    }

    /// Smallest grid aligned to multiples of `resolution` covering the box.
    pub fn covering(lo: Point2, hi: Point2, resolution: f64) -> Result<Self> {
        let x0 = (lo.x / resolution).floor();
        let y0 = (lo.y / resolution).floor();
        let x1 = (hi.x / resolution).ceil();
        let y1 = (hi.y / resolution).ceil();
        let width = ((x1 - x0) as usize).max(1);
        let height = ((y1 - y0) as usize).max(1);
        Self::new(
            Point2::new(x0 * resolution, y0 * resolution),
            resolution,
            width,
            height,
        )
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Point2 {
        Point2::new(
            self.origin.x + (ix as f64 + 0.5) * self.resolution,
            self.origin.y + (iy as f64 + 0.5) * self.resolution,
        )
    }

    /// Cell containing `p`, if inside the grid.
    pub fn cell_of(&self, p: Point2) -> Option<(usize, usize)> {
        let fx = ((p.x - self.origin.x) / self.resolution).floor();
        let fy = ((p.y - self.origin.y) / self.resolution).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }
}

/// Binary free-space raster, row-major (`iy * width + ix`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeSpaceMask {
    pub spec: GridSpec,
    pub cells: Vec<bool>,
}

impl FreeSpaceMask {
    pub fn empty(spec: GridSpec) -> Self {
        Self {
            cells: vec![false; spec.cell_count()],
            spec,
        }
    }

    pub fn get(&self, ix: usize, iy: usize) -> bool {
        self.cells[iy * self.spec.width + ix]
    }

    pub fn set(&mut self, ix: usize, iy: usize, free: bool) {
        let w = self.spec.width;
        self.cells[iy * w + ix] = free;
    }

    pub fn free_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Cell-wise OR, used to fuse masks from several sensors.
    pub fn union(&self, other: &FreeSpaceMask) -> Result<FreeSpaceMask> {
        if self.spec != other.spec {
            return Err(Error::GridMismatch);
        }
        let cells = self
            .cells
            .iter()
            .zip(&other.cells)
            .map(|(a, b)| *a || *b)
            .collect();
        Ok(FreeSpaceMask {
            spec: self.spec,
            cells,
        })
    }
}

/// Result of rasterizing a polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct Rasterization {
    pub mask: FreeSpaceMask,
    /// The polygon had fewer than three ring vertices; the mask is empty.
    pub degenerate: bool,
}

/// Marks a cell free iff its center lies inside the polygon under the
/// collision kernel's even-odd rule.
pub fn rasterize_polygon(poly: &RadarPolygon, spec: &GridSpec) -> Rasterization {
    rasterize_ring(&poly.ring(), spec)
}

pub fn rasterize_ring(ring: &[Point2], spec: &GridSpec) -> Rasterization {
    let mut mask = FreeSpaceMask::empty(*spec);
    let Ok(kernel) = CollisionKernel::from_ring(ring) else {
        return Rasterization {
            mask,
            degenerate: true,
        };
    };
    for iy in 0..spec.height {
        let b = spec.origin.y + (iy as f64 + 0.5) * spec.resolution;
        let row = kernel.row(b);
        if row.is_empty() {
            continue;
        }
        let base = iy * spec.width;
        for ix in 0..spec.width {
            let a = spec.origin.x + (ix as f64 + 0.5) * spec.resolution;
            mask.cells[base + ix] = row.contains(a);
        }
    }
    Rasterization {
        mask,
        degenerate: false,
    }
}

/// |a AND b| / |a OR b|. Two empty masks have IoU 1 by convention.
pub fn mask_iou(a: &FreeSpaceMask, b: &FreeSpaceMask) -> Result<f64> {
    if a.spec != b.spec {
        return Err(Error::GridMismatch);
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.cells.iter().zip(&b.cells) {
        inter += usize::from(x && y);
        union += usize::from(x || y);
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

fn ring_bbox(ring: &[Point2]) -> (Point2, Point2) {
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in ring {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

/// IoU of two rings rasterized on a shared grid covering both bounding boxes.
pub fn ring_iou(p: &[Point2], q: &[Point2], resolution: f64) -> Result<f64> {
    for ring in [p, q] {
        if ring.len() < 3 {
            return Err(Error::DegeneratePolygon(ring.len()));
        }
    }
    let (plo, phi) = ring_bbox(p);
    let (qlo, qhi) = ring_bbox(q);
    let lo = Point2::new(plo.x.min(qlo.x), plo.y.min(qlo.y));
    let hi = Point2::new(phi.x.max(qhi.x), phi.y.max(qhi.y));
    let spec = GridSpec::covering(lo, hi, resolution)?;
    let a = rasterize_ring(p, &spec).mask;
    let b = rasterize_ring(q, &spec).mask;
    mask_iou(&a, &b)
}

pub fn polygon_iou(p: &RadarPolygon, q: &RadarPolygon, resolution: f64) -> Result<f64> {
    ring_iou(&p.ring(), &q.ring(), resolution)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x0: f64, y0: f64, side: f64) -> Vec<Point2> {
        vec![
            Point2::new(x0, y0),
            Point2::new(x0 + side, y0),
            Point2::new(x0 + side, y0 + side),
            Point2::new(x0, y0 + side),
        ]
    }

    fn polygon_from_ring(ring: &[Point2]) -> RadarPolygon {
        RadarPolygon {
            vertices: ring
                .iter()
                .enumerate()
                .map(|(i, p)| PolygonVertex::real(*p, 0.0, 1.0, 0.0, i))
                .collect(),
            sensor_origin: Point2::ORIGIN,
            closed_through_origin: false,
            timestamp: 0.0,
        }
    }

    #[test]
    fn sector_index_boundaries() {
        let cfg = SectorConfig::default();
        assert_eq!(sector_index(cfg.fov_start, &cfg), Some(0));
        assert_eq!(sector_index(0.0, &cfg), Some(32));
        assert_eq!(sector_index(cfg.fov_end + 0.1, &cfg), None);
        assert_eq!(sector_index(cfg.fov_end, &cfg), None);
        assert_eq!(sector_index(cfg.fov_start - 1e-6, &cfg), None);
        for k in 0..cfg.sector_count() {
            let a = cfg.fov_start + k as f64 * cfg.delta_theta;
            assert_eq!(sector_index(a, &cfg), Some(k), "breakpoint {k}");
        }
    }

    #[test]
    fn full_circle_sectors_wrap() {
        let cfg = SectorConfig::full_circle(0.5, 30.0);
        cfg.validate().unwrap();
        assert_eq!(cfg.sector_count(), 720);
        assert_eq!(sector_index(PI, &cfg), Some(0));
        assert_eq!(sector_index(-PI, &cfg), Some(0));
        assert_eq!(sector_index(PI - 1e-6, &cfg), Some(719));
        assert_eq!(sector_index(5.0 * PI, &cfg), Some(0));
    }

    #[test]
    fn sector_config_rejects_non_multiple_span() {
        let cfg = SectorConfig::from_degrees(3.0, -65.0, 65.0, 20.0);
        assert!(cfg.validate().is_err());
        assert!(SectorConfig::from_degrees(2.0, 10.0, 10.0, 20.0)
            .validate()
            .is_err());
        assert!(SectorConfig::from_degrees(2.0, -10.0, 10.0, 0.0)
            .validate()
            .is_err());
    }

    #[test]
    fn pose_normalizes_heading() {
        let p = Pose::new(0.0, 0.0, 3.0 * PI);
        assert!((p.heading - PI).abs() < 1e-12);
        let q = Pose::new(0.0, 0.0, -PI);
        assert!((q.heading - PI).abs() < 1e-12);
    }

    #[test]
    fn unit_square_rasterizes_all_centers() {
        let spec = GridSpec::new(Point2::ORIGIN, 0.5, 2, 2).unwrap();
        let r = rasterize_ring(&square(0.0, 0.0, 1.0), &spec);
        assert!(!r.degenerate);
        assert_eq!(r.mask.free_count(), 4);
    }

    #[test]
    fn degenerate_polygon_gives_empty_flagged_mask() {
        let spec = GridSpec::new(Point2::ORIGIN, 0.5, 2, 2).unwrap();
        let r = rasterize_ring(&[Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)], &spec);
        assert!(r.degenerate);
        assert_eq!(r.mask.free_count(), 0);
    }

    #[test]
    fn disjoint_grid_is_all_zero() {
        let spec = GridSpec::new(Point2::new(10.0, 10.0), 0.25, 8, 8).unwrap();
        let r = rasterize_ring(&square(0.0, 0.0, 1.0), &spec);
        assert_eq!(r.mask.free_count(), 0);
    }

    #[test]
    fn mask_iou_counts() {
        let spec = GridSpec::new(Point2::ORIGIN, 1.0, 10, 10).unwrap();
        let mut left = FreeSpaceMask::empty(spec);
        for iy in 0..10 {
            for ix in 0..5 {
                left.set(ix, iy, true);
            }
        }
        let all = FreeSpaceMask {
            spec,
            cells: vec![true; 100],
        };
        assert_eq!(mask_iou(&left, &all).unwrap(), 0.5);
        assert_eq!(mask_iou(&left, &left).unwrap(), 1.0);
        let mut right = FreeSpaceMask::empty(spec);
        for iy in 0..10 {
            for ix in 5..10 {
                right.set(ix, iy, true);
            }
        }
        assert_eq!(mask_iou(&left, &right).unwrap(), 0.0);
        let empty = FreeSpaceMask::empty(spec);
        assert_eq!(mask_iou(&empty, &empty).unwrap(), 1.0);
        let other = FreeSpaceMask::empty(GridSpec::new(Point2::ORIGIN, 0.5, 10, 10).unwrap());
        assert!(matches!(mask_iou(&left, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn polygon_iou_shifted_square() {
        let p = polygon_from_ring(&square(0.0, 0.0, 1.0));
        let q = polygon_from_ring(&square(0.5, 0.0, 1.0));
        assert_eq!(polygon_iou(&p, &p, 0.1).unwrap(), 1.0);
        let iou = polygon_iou(&p, &q, 0.01).unwrap();
        assert!((iou - 1.0 / 3.0).abs() < 0.01, "iou = {iou}");
        let far = polygon_from_ring(&square(5.0, 5.0, 1.0));
        assert_eq!(polygon_iou(&p, &far, 0.1).unwrap(), 0.0);
        let thin = polygon_from_ring(&square(0.0, 0.0, 1.0)[..2]);
        assert!(matches!(
            polygon_iou(&p, &thin, 0.1),
            Err(Error::DegeneratePolygon(2))
        ));
    }

    #[test]
    fn ring_closure_includes_origin() {
        let mut poly = polygon_from_ring(&[Point2::new(5.0, -1.0), Point2::new(5.0, 1.0)]);
        assert!(poly.is_degenerate());
        poly.closed_through_origin = true;
        assert_eq!(poly.ring().len(), 3);
        assert!((poly.area() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn simplicity_check() {
        assert!(is_simple(&square(0.0, 0.0, 1.0)));
        let bowtie = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ];
        assert!(!is_simple(&bowtie));
    }

    #[test]
    fn fov_bounding_box() {
        let cfg = SectorConfig::default();
        let (lo, hi) = cfg.bounding_box();
        assert_eq!(lo.x, 0.0);
        assert!((hi.x - 20.0).abs() < 1e-12);
        assert!((hi.y - 20.0 * 65f64.to_radians().sin()).abs() < 1e-12);
        assert!((lo.y + hi.y).abs() < 1e-12);
    }
}
