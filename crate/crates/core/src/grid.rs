//! Log-odds occupancy grid used as the comparison baseline.
//!
//! This is a representative Gaussian inverse-sensor-model grid, not a
//! reimplementation of any particular published grid mapper. Each detection
//! deposits Gaussian occupied evidence on the cells within `epsilon1`; cells
//! crossed by the sensor-to-detection line (integer traversal) receive a
//! constant free probability. The grid lives in global coordinates.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formation::{
    detection_probability, gaussian_density, logit, normalize_evidence, FormationConfig,
};
use crate::geometry::{FreeSpaceMask, GridSpec, Point2, Pose, RadarPoint};

pub const GRID_LOG_ODDS_LIMIT: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    /// Cell edge length (meters).
    pub resolution: f64,
    /// Cells per side.
    pub size: usize,
    /// Probability assigned to cells crossed by a detection ray.
    pub free_probability: f64,
    /// Frames accumulated before the grid is cleared and re-centered.
    pub window: usize,
    /// Cells with log-odds strictly below this are free.
    pub free_threshold: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            resolution: 0.3,
            size: 200,
            free_probability: 0.3,
            window: 70,
            free_threshold: 0.0,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::InvalidConfig(
                "grid resolution must be positive".into(),
            ));
        }
        if self.size == 0 {
            return Err(Error::InvalidConfig("grid size must be at least 1".into()));
        }
        if !(self.free_probability > 0.0 && self.free_probability < 0.5) {
            return Err(Error::InvalidConfig(
                "free_probability must lie in (0, 0.5)".into(),
            ));
        }
        if self.window == 0 {
            return Err(Error::InvalidConfig(
                "grid window must be at least 1 frame".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    /// Lower-left corner in global coordinates.
    pub origin: Point2,
    pub resolution: f64,
    pub size: usize,
    /// Row-major, `size * size` values.
    pub log_odds: Vec<f64>,
}

impl OccupancyGrid {
    pub fn new(origin: Point2, resolution: f64, size: usize) -> Self {
        Self {
            origin,
            resolution,
            size,
            log_odds: vec![0.0; size * size],
        }
    }

    /// Grid of `cfg.size` cells per side centered on `center`.
    pub fn centered(center: Point2, cfg: &GridConfig) -> Self {
        let half = cfg.size as f64 * cfg.resolution / 2.0;
        Self::new(
            Point2::new(center.x - half, center.y - half),
            cfg.resolution,
            cfg.size,
        )
    }

    pub fn cell_count(&self) -> usize {
        self.size * self.size
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            origin: self.origin,
            resolution: self.resolution,
            width: self.size,
            height: self.size,
        }
    }

    /// Integer cell coordinates of a point; may lie outside the grid.
    pub fn cell_coords(&self, p: Point2) -> (i64, i64) {
        (
            ((p.x - self.origin.x) / self.resolution).floor() as i64,
            ((p.y - self.origin.y) / self.resolution).floor() as i64,
        )
    }

    pub fn contains_cell(&self, ix: i64, iy: i64) -> bool {
        ix >= 0 && iy >= 0 && (ix as usize) < self.size && (iy as usize) < self.size
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.log_odds[iy * self.size + ix]
    }

    /// Log-odds at a global position, `None` outside the grid.
    pub fn value_at(&self, p: Point2) -> Option<f64> {
        let (ix, iy) = self.cell_coords(p);
        self.contains_cell(ix, iy)
            .then(|| self.get(ix as usize, iy as usize))
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Point2 {
        Point2::new(
            self.origin.x + (ix as f64 + 0.5) * self.resolution,
            self.origin.y + (iy as f64 + 0.5) * self.resolution,
        )
    }
}

/// Bookkeeping of one grid update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridUpdateStats {
    pub used: usize,
    /// Detections whose cell lies outside the grid.
    pub skipped_outside: usize,
    pub occupied_cells: usize,
    pub free_cells: usize,
}

/// Cells on the integer line from `a` to `b`, endpoints included.
fn line_cells(a: (i64, i64), b: (i64, i64), out: &mut Vec<(i64, i64)>) {
    let (mut x, mut y) = a;
    let dx = (b.0 - a.0).abs();
    let dy = -(b.1 - a.1).abs();
    let sx = if a.0 < b.0 { 1 } else { -1 };
    let sy = if a.1 < b.1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        out.push((x, y));
        if (x, y) == b {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// One frame of log-odds updates. `frame` is in the sensor frame and `pose`
/// is the global sensor pose. Detections are processed in a canonical order
/// and evidence is summed per cell, so the result does not depend on the
/// order of points in `frame`.
pub fn grid_update(
    mut grid: OccupancyGrid,
    frame: &[RadarPoint],
    pose: &Pose,
    evidence: &FormationConfig,
    cfg: &GridConfig,
) -> Result<(OccupancyGrid, GridUpdateStats)> {
    let mut stats = GridUpdateStats::default();
    let sensor_cell = grid.cell_coords(pose.position());

    let mut detections: Vec<(Point2, f64)> = Vec::with_capacity(frame.len());
    for p in frame {
        if !(p.z > evidence.z_min && p.z < evidence.z_max) || p.range() == 0.0 {
            continue;
        }
        let pd = detection_probability(p.snr, evidence.p_fa)?;
        let g = pose.to_global(p.position());
        let (ix, iy) = grid.cell_coords(g);
        if !grid.contains_cell(ix, iy) {
            stats.skipped_outside += 1;
            continue;
        }
        detections.push((g, pd));
    }
    detections.sort_by(|a, b| {
        a.0.x
            .total_cmp(&b.0.x)
            .then(a.0.y.total_cmp(&b.0.y))
            .then(a.1.total_cmp(&b.1))
    });
    stats.used = detections.len();

    let res = grid.resolution;
    let eps = evidence.epsilon1;
    let eps_sq = eps * eps;
    let sigma = evidence.evidence_sigma();
    let reach = (eps / res).ceil() as i64 + 1;
    let size = grid.size as i64;

    let mut raw: HashMap<(i64, i64), f64> = HashMap::new();
    let mut free: HashSet<(i64, i64)> = HashSet::new();
    let mut line = Vec::new();
    for &(g, pd) in &detections {
        let (cx, cy) = grid.cell_coords(g);
        for iy in (cy - reach).max(0)..=(cy + reach).min(size - 1) {
            for ix in (cx - reach).max(0)..=(cx + reach).min(size - 1) {
                let d2 = grid.cell_center(ix as usize, iy as usize).distance_sq(g);
                if d2 <= eps_sq {
                    *raw.entry((iy, ix)).or_insert(0.0) += pd * gaussian_density(d2, sigma);
                }
            }
        }
        line.clear();
        line_cells(sensor_cell, (cx, cy), &mut line);
        line.pop();
        for &(ix, iy) in &line {
            if grid.contains_cell(ix, iy) {
                free.insert((iy, ix));
            }
        }
    }

    let free_delta = logit(cfg.free_probability);
    for (&(iy, ix), &e) in &raw {
        let k = iy as usize * grid.size + ix as usize;
        grid.log_odds[k] = (grid.log_odds[k] + logit(normalize_evidence(e, evidence)))
            .clamp(-GRID_LOG_ODDS_LIMIT, GRID_LOG_ODDS_LIMIT);
    }
    for cell in &free {
        if raw.contains_key(cell) {
            continue;
        }
        let k = cell.0 as usize * grid.size + cell.1 as usize;
        grid.log_odds[k] =
            (grid.log_odds[k] + free_delta).clamp(-GRID_LOG_ODDS_LIMIT, GRID_LOG_ODDS_LIMIT);
        stats.free_cells += 1;
    }
    stats.occupied_cells = raw.len();
    Ok((grid, stats))
}

/// Free iff log-odds strictly below `threshold`. Cells that were never
/// observed keep log-odds 0 and are therefore not free for `threshold <= 0`.
pub fn grid_free_mask(grid: &OccupancyGrid, threshold: f64) -> FreeSpaceMask {
    FreeSpaceMask {
        spec: grid.spec(),
        cells: grid.log_odds.iter().map(|&l| l < threshold).collect(),
    }
}

/// Samples the grid at the cell centers of `spec`, a sensor-frame grid, with
/// the sensor at `pose`. Centers outside the occupancy grid are not free.
pub fn grid_free_mask_in_sensor_frame(
    grid: &OccupancyGrid,
    threshold: f64,
    spec: &GridSpec,
    pose: &Pose,
) -> FreeSpaceMask {
    let mut mask = FreeSpaceMask::empty(*spec);
    for iy in 0..spec.height {
        for ix in 0..spec.width {
            let g = pose.to_global(spec.cell_center(ix, iy));
            if grid.value_at(g).is_some_and(|l| l < threshold) {
                mask.set(ix, iy, true);
            }
        }
    }
    mask
}

/// Grid that is cleared and re-centered on the sensor every `window` frames.
#[derive(Debug, Clone)]
pub struct GridAccumulator {
    pub cfg: GridConfig,
    pub evidence: FormationConfig,
    grid: OccupancyGrid,
    frames_in_window: usize,
}

impl GridAccumulator {
    pub fn new(cfg: GridConfig, evidence: FormationConfig) -> Result<Self> {
        cfg.validate()?;
        evidence.validate()?;
        Ok(Self {
            grid: OccupancyGrid::centered(Point2::ORIGIN, &cfg),
            cfg,
            evidence,
            frames_in_window: 0,
        })
    }

    pub fn update(&mut self, frame: &[RadarPoint], pose: &Pose) -> Result<GridUpdateStats> {
        if self.frames_in_window.is_multiple_of(self.cfg.window) {
            self.grid = OccupancyGrid::centered(pose.position(), &self.cfg);
            self.frames_in_window = 0;
        }
        let grid = std::mem::replace(
            &mut self.grid,
            OccupancyGrid::new(Point2::ORIGIN, self.cfg.resolution, 0),
        );
        let (grid, stats) = grid_update(grid, frame, pose, &self.evidence, &self.cfg)?;
        self.grid = grid;
        self.frames_in_window += 1;
        Ok(stats)
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn free_mask(&self) -> FreeSpaceMask {
        grid_free_mask(&self.grid, self.cfg.free_threshold)
    }

    pub fn free_mask_in_sensor_frame(&self, spec: &GridSpec, pose: &Pose) -> FreeSpaceMask {
        grid_free_mask_in_sensor_frame(&self.grid, self.cfg.free_threshold, spec, pose)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (OccupancyGrid, FormationConfig, GridConfig) {
        let cfg = GridConfig::default();
        (
            OccupancyGrid::centered(Point2::ORIGIN, &cfg),
            FormationConfig::default(),
            cfg,
        )
    }

    #[test]
    fn empty_frame_leaves_grid() {
        let (g, e, c) = setup();
        let (next, stats) = grid_update(g.clone(), &[], &Pose::default(), &e, &c).unwrap();
        assert_eq!(next, g);
        assert_eq!(stats, GridUpdateStats::default());
    }

    #[test]
    fn repeated_detection_accumulates() {
        let (g, e, c) = setup();
        let frame = [RadarPoint::new(5.0, 0.0, 0.0, 0.0, 1e4)];
        let (g1, _) = grid_update(g, &frame, &Pose::default(), &e, &c).unwrap();
        let (g2, _) = grid_update(g1.clone(), &frame, &Pose::default(), &e, &c).unwrap();
        let at = Point2::new(5.0, 0.0);
        assert!(g1.value_at(at).unwrap() > 0.0);
        assert!(g2.value_at(at).unwrap() > g1.value_at(at).unwrap());
        let ray = Point2::new(2.5, 0.0);
        assert!(g1.value_at(ray).unwrap() < 0.0);
        let mask = grid_free_mask(&g1, 0.0);
        let (ix, iy) = g1.cell_coords(ray);
        assert!(mask.get(ix as usize, iy as usize));
    }

    #[test]
    fn free_mask_thresholds() {
        let (g, _, _) = setup();
        assert_eq!(grid_free_mask(&g, 0.0).free_count(), 0);
        assert_eq!(grid_free_mask(&g, 20.1).free_count(), g.cell_count());
    }

    #[test]
    fn order_independent() {
        let (g, e, c) = setup();
        let mut frame: Vec<RadarPoint> = (0..40)
            .map(|k| {
                RadarPoint::new(
                    4.0 + 0.13 * k as f64,
                    -2.0 + 0.11 * k as f64,
                    0.0,
                    0.0,
                    3.0 + k as f64,
                )
            })
            .collect();
        let (a, _) = grid_update(g.clone(), &frame, &Pose::new(0.3, 0.2, 0.1), &e, &c).unwrap();
        frame.reverse();
        frame.swap(3, 17);
        let (b, _) = grid_update(g, &frame, &Pose::new(0.3, 0.2, 0.1), &e, &c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn outside_detections_counted() {
        let (g, e, c) = setup();
        let frame = [RadarPoint::new(45.0, 0.0, 0.0, 0.0, 10.0)];
        let (next, stats) = grid_update(g.clone(), &frame, &Pose::default(), &e, &c).unwrap();
        assert_eq!(stats.skipped_outside, 1);
        assert_eq!(next, g);
    }

    #[test]
    fn line_traversal_endpoints() {
        let mut out = Vec::new();
        line_cells((0, 0), (5, 2), &mut out);
        assert_eq!(out.first(), Some(&(0, 0)));
        assert_eq!(out.last(), Some(&(5, 2)));
        assert_eq!(out.len(), 6);
    }

    #[test]
    fn accumulator_resets() {
        let cfg = GridConfig {
            window: 2,
            ..GridConfig::default()
        };
        let mut acc = GridAccumulator::new(cfg, FormationConfig::default()).unwrap();
        let frame = [RadarPoint::new(5.0, 0.0, 0.0, 0.0, 1e4)];
        acc.update(&frame, &Pose::default()).unwrap();
        acc.update(&frame, &Pose::default()).unwrap();
        let two = acc.grid().value_at(Point2::new(5.0, 0.0)).unwrap();
        acc.update(&frame, &Pose::new(1.0, 0.0, 0.0)).unwrap();
        let after_reset = acc.grid().value_at(Point2::new(6.0, 0.0)).unwrap();
        assert!(after_reset < two);
        assert_eq!(acc.grid().origin, Point2::new(-29.0, -30.0));
    }
}
